//! Plain-Rust side of the demo exports.

use freechoice_core::lottery::certainty_equivalent_limits;
use freechoice_core::numeric::linspace;
use freechoice_core::satisficing::{
    fit_exponential_decay, gibbs_vs_max_distance, max_sampling_curve,
};
use freechoice_core::{
    equilibrium, BoundedLottery, DiscreteSource, Error, ProbabilityVector, Result,
};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct LotteryView {
    pub posterior: Vec<f64>,
    pub certainty_equivalent: f64,
    pub expected_utility: f64,
    pub betas: Vec<f64>,
    pub curve: Vec<f64>,
}

/// Weights are normalized here so the page can pass raw slider values.
fn normalize(name: &str, w: &[f64]) -> Result<ProbabilityVector> {
    ProbabilityVector::normalized(w.to_vec()).map_err(|e| Error::Parameter(format!("{name}: {e}")))
}

/// Posterior at `beta`, plus `V(β)` on `points` values of β in `[-beta_span, beta_span]`.
pub fn lottery(
    p0: &[f64],
    utility: &[f64],
    beta: f64,
    beta_span: f64,
    points: usize,
) -> Result<LotteryView> {
    let prior = normalize("p0", p0)?;
    let lot = BoundedLottery::from_parts(prior.into_vec(), utility.to_vec(), beta)?;
    let eq = equilibrium(&lot);
    let betas = linspace(-beta_span.abs(), beta_span.abs(), points.clamp(2, 2001));
    let curve = certainty_equivalent_limits(&lot, &betas)?;
    Ok(LotteryView {
        posterior: eq.posterior.into_vec(),
        certainty_equivalent: eq.certainty_equivalent,
        expected_utility: lot.expected_utility(),
        betas,
        curve,
    })
}

#[derive(Debug, Serialize)]
pub struct SatisficingView {
    pub support: Vec<f64>,
    pub expected_max: Vec<f64>,
    pub penalized_value: Vec<f64>,
    /// Argmax of the penalized value over the scanned range (ties toward fewer draws).
    pub best_extra_draws: usize,
    /// Whether the maximum is interior, i.e. the scan range was long enough.
    pub interior: bool,
    pub pmf_at_best: Vec<f64>,
}

/// Expected maximum of `M+1` draws from Poisson(λ) on `1..=high`, minus `M·cost`.
pub fn satisficing(lambda: f64, high: u32, cost: f64, m_max: usize) -> Result<SatisficingView> {
    let source = DiscreteSource::truncated_poisson(lambda, 1, high.max(1))?;
    let curve = max_sampling_curve(&source, cost, m_max.clamp(1, 5000))?;
    let v = &curve.penalized_value;
    let best = (1..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
    Ok(SatisficingView {
        support: source.support().to_vec(),
        interior: best + 1 < v.len(),
        pmf_at_best: curve.pmf_of_max[best].as_slice().to_vec(),
        best_extra_draws: best,
        expected_max: curve.expected_max,
        penalized_value: curve.penalized_value,
    })
}

#[derive(Debug, Serialize)]
pub struct GibbsView {
    pub alphas: Vec<u32>,
    pub distances: Vec<f64>,
    pub slope: f64,
    pub r_squared: f64,
    /// Fitted envelope per α; `null` when the distances do not decay.
    pub bound: Vec<Option<f64>>,
}

pub fn gibbs_vs_max(prior: &[f64], source: &[f64], alpha_max: u32) -> Result<GibbsView> {
    let q = normalize("prior", prior)?;
    let m = normalize("source", source)?;
    let alphas: Vec<u32> = (1..=alpha_max.clamp(3, 2000)).collect();
    let distances = gibbs_vs_max_distance(&q, &m, &alphas)?;
    let fit = fit_exponential_decay(&alphas, &distances)?;
    Ok(GibbsView {
        bound: alphas
            .iter()
            .map(|&a| fit.decays().then(|| fit.bound(a)))
            .collect(),
        slope: fit.slope,
        r_squared: fit.r_squared,
        alphas,
        distances,
    })
}
