//! Satisficing by random search: the distribution of the maximum of `m`
//! i.i.d. draws, the sample size that balances expected gain against a
//! per-sample cost, and the comparison between Gibbs choice and
//! maximum-of-samples distributions.
//!
//! Sample-count conventions: `m` always counts total draws. The optimal
//! sample size is reported as `M`, the number of extra draws beyond the first
//! (so `m = M + 1`), which is how the classic urn example is usually plotted.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::ProbabilityVector;

/// Distances at or below this are indistinguishable from rounding noise and
/// are excluded from decay fits.
pub const DISTANCE_FLOOR: f64 = 1e-13;

/// A source of utility values with a strictly increasing support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteSource {
    support: Vec<f64>,
    pmf: ProbabilityVector,
}

impl DiscreteSource {
    pub fn new(support: Vec<f64>, pmf: ProbabilityVector) -> Result<Self> {
        if support.len() != pmf.len() {
            return Err(Error::domain(format!(
                "support has {} values but pmf has {}",
                support.len(),
                pmf.len()
            )));
        }
        if support.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("support values must be finite"));
        }
        if let Some(i) = support.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::domain(format!(
                "support must be strictly increasing (violated at index {})",
                i + 1
            )));
        }
        if !pmf.is_strictly_positive() {
            return Err(Error::domain(
                "pmf must be strictly positive on the support",
            ));
        }
        Ok(Self { support, pmf })
    }

    /// Poisson(λ) restricted to the integers `low..=high` and renormalized.
    pub fn truncated_poisson(lambda: f64, low: u32, high: u32) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::parameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if low > high {
            return Err(Error::domain(format!("empty range {low}..={high}")));
        }
        let log_lambda = lambda.ln();
        let log_w: Vec<f64> = (low..=high)
            .map(|v| {
                let log_fact: f64 = (2..=v).map(|k| (k as f64).ln()).sum();
                v as f64 * log_lambda - lambda - log_fact
            })
            .collect();
        let (pmf, _) = ProbabilityVector::from_log_weights(&log_w)?;
        Self::new((low..=high).map(f64::from).collect(), pmf)
    }

    /// `n`-point discretization of a density on `[lo, hi]`: support at the
    /// right edges of `n` equal cells, mass proportional to the density at the
    /// cell midpoint.
    pub fn discretize<F: Fn(f64) -> f64>(density: F, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 || !lo.is_finite() || !hi.is_finite() || hi <= lo {
            return Err(Error::domain(
                "discretization needs n ≥ 1 and finite bounds with hi > lo",
            ));
        }
        let h = (hi - lo) / n as f64;
        let support: Vec<f64> = (1..=n).map(|k| lo + h * k as f64).collect();
        let w: Vec<f64> = (0..n).map(|k| density(lo + h * (k as f64 + 0.5))).collect();
        Self::new(support, ProbabilityVector::normalized(w)?)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn pmf(&self) -> &ProbabilityVector {
        &self.pmf
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Cumulative distribution at each support point; the last entry is exactly 1.
    pub fn cdf(&self) -> Vec<f64> {
        cumulative(self.pmf.as_slice())
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .as_slice()
            .iter()
            .zip(&self.support)
            .map(|(p, v)| p * v)
            .sum()
    }
}

fn cumulative(pmf: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = pmf
        .iter()
        .map(|p| {
            acc += p;
            acc.min(1.0)
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

fn check_draws(m: usize) -> Result<()> {
    if m < 1 {
        return Err(Error::parameter("number of draws must be at least 1"));
    }
    Ok(())
}

fn draws_as_exponent(m: usize) -> Result<i32> {
    i32::try_from(m).map_err(|_| Error::parameter(format!("draw count {m} too large")))
}

/// CDF of the maximum of `m` draws: `F_m(v) = F_0(v)^m`.
pub fn max_cdf(source: &DiscreteSource, m: usize) -> Result<Vec<f64>> {
    check_draws(m)?;
    let e = draws_as_exponent(m)?;
    Ok(source.cdf().into_iter().map(|f| f.powi(e)).collect())
}

/// Pmf of the maximum of `m` draws, recovered as first differences of [`max_cdf`].
pub fn max_pmf(source: &DiscreteSource, m: usize) -> Result<ProbabilityVector> {
    let f = max_cdf(source, m)?;
    Ok(ProbabilityVector::normalized(first_differences(&f))
        .expect("cdf differences are nonnegative"))
}

fn first_differences(cdf: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    cdf.iter()
        .map(|&f| {
            let d = (f - prev).max(0.0);
            prev = f;
            d
        })
        .collect()
}

/// `E[max of m draws]`.
pub fn expected_max(source: &DiscreteSource, m: usize) -> Result<f64> {
    let p = max_pmf(source, m)?;
    Ok(p.as_slice()
        .iter()
        .zip(&source.support)
        .map(|(p, v)| p * v)
        .sum())
}

/// Expected maximum and penalized value for `M = 0..=m_max` extra draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxSamplingResult {
    pub cost_per_sample: f64,
    /// Indexed by `M`; entry `M` describes `M + 1` total draws.
    pub pmf_of_max: Vec<ProbabilityVector>,
    pub expected_max: Vec<f64>,
    /// `expected_max[M] - M · cost_per_sample`.
    pub penalized_value: Vec<f64>,
}

impl MaxSamplingResult {
    pub fn extra_draws(&self) -> std::ops::Range<usize> {
        0..self.expected_max.len()
    }
}

pub fn max_sampling_curve(
    source: &DiscreteSource,
    cost_per_sample: f64,
    m_max: usize,
) -> Result<MaxSamplingResult> {
    if !(cost_per_sample >= 0.0 && cost_per_sample.is_finite()) {
        return Err(Error::parameter(format!(
            "cost per sample must be finite and nonnegative, got {cost_per_sample}"
        )));
    }
    let mut pmf_of_max = Vec::with_capacity(m_max + 1);
    let mut expected = Vec::with_capacity(m_max + 1);
    let mut penalized = Vec::with_capacity(m_max + 1);
    for extra in 0..=m_max {
        let p = max_pmf(source, extra + 1)?;
        let e: f64 = p
            .as_slice()
            .iter()
            .zip(&source.support)
            .map(|(p, v)| p * v)
            .sum();
        expected.push(e);
        penalized.push(e - extra as f64 * cost_per_sample);
        pmf_of_max.push(p);
    }
    Ok(MaxSamplingResult {
        cost_per_sample,
        pmf_of_max,
        expected_max: expected,
        penalized_value: penalized,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSizeChoice {
    /// Optimal number of extra draws `M*` (total draws `M* + 1`).
    pub extra_draws: usize,
    /// Penalized value at `M*`.
    pub value: f64,
    pub curve: MaxSamplingResult,
}

impl SampleSizeChoice {
    pub fn total_draws(&self) -> usize {
        self.extra_draws + 1
    }
}

/// Maximizes `E[max of M+1 draws] - M·c` over `M ∈ {0..=m_max}`, ties toward smaller `M`.
///
/// Fails with a diagnostic when the penalized value is still rising at
/// `m_max`, since the scan would then report a boundary, not a maximum.
pub fn optimal_sample_size(
    source: &DiscreteSource,
    cost_per_sample: f64,
    m_max: usize,
) -> Result<SampleSizeChoice> {
    if !(cost_per_sample > 0.0 && cost_per_sample.is_finite()) {
        return Err(Error::parameter(format!(
            "cost per sample must be positive, got {cost_per_sample}"
        )));
    }
    if m_max < 1 {
        return Err(Error::parameter("m_max must be at least 1"));
    }
    let curve = max_sampling_curve(source, cost_per_sample, m_max)?;
    let v = &curve.penalized_value;
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    if best == m_max || v[m_max] >= v[m_max - 1] {
        return Err(Error::diagnostic(format!(
            "penalized value still nondecreasing at m_max = {m_max}; increase m_max"
        )));
    }
    Ok(SampleSizeChoice {
        extra_draws: best,
        value: v[best],
        curve,
    })
}

/// Empirical pmf of the maximum of `m` draws from `draws` seeded experiments.
///
/// Experiments are split across `streams` independent ChaCha streams of the
/// same seed; counts are summed, so the result depends only on
/// `(seed, streams, draws, m)` and not on scheduling.
pub fn sample_max_pmf(
    source: &DiscreteSource,
    m: usize,
    draws: usize,
    seed: u64,
    streams: usize,
) -> Result<Vec<f64>> {
    check_draws(m)?;
    if draws == 0 || streams == 0 {
        return Err(Error::parameter(
            "need at least one experiment and one stream",
        ));
    }
    let dist = WeightedIndex::new(source.pmf.as_slice())
        .map_err(|e| Error::domain(format!("cannot sample from pmf: {e}")))?;
    let n = source.len();
    let per_stream = |s: usize| draws / streams + usize::from(s < draws % streams);
    let counts = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let mut counts = vec![0u64; n];
            for _ in 0..per_stream(s) {
                let top = (0..m).map(|_| dist.sample(&mut rng)).max().unwrap_or(0);
                counts[top] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts
        .into_iter()
        .map(|c| c as f64 / draws as f64)
        .collect())
}

/// Sup-norm distance between the Gibbs distribution `Q e^{αU} / Z` with
/// `U = log F_M` and the distribution of the maximum of `α` draws from `M`,
/// for each `α`. The order of the outcomes defines the utility ordering.
pub fn gibbs_vs_max_distance(
    prior: &ProbabilityVector,
    source_pmf: &ProbabilityVector,
    alpha_values: &[u32],
) -> Result<Vec<f64>> {
    if prior.len() != source_pmf.len() {
        return Err(Error::domain(format!(
            "prior has {} outcomes but source has {}",
            prior.len(),
            source_pmf.len()
        )));
    }
    if !prior.is_strictly_positive() || !source_pmf.is_strictly_positive() {
        return Err(Error::domain(
            "both distributions must be strictly positive",
        ));
    }
    let cdf = cumulative(source_pmf.as_slice());
    let log_cdf: Vec<f64> = cdf.iter().map(|f| f.ln()).collect();
    let log_prior: Vec<f64> = prior.as_slice().iter().map(|q| q.ln()).collect();
    alpha_values
        .iter()
        .map(|&alpha| {
            if alpha == 0 {
                return Err(Error::parameter("alpha must be a positive integer"));
            }
            let a = f64::from(alpha);
            let lw: Vec<f64> = log_prior
                .iter()
                .zip(&log_cdf)
                .map(|(q, u)| q + a * u)
                .collect();
            let (gibbs, _) = ProbabilityVector::from_log_weights(&lw)?;
            let e = alpha as i32;
            let maxed = first_differences(&cdf.iter().map(|f| f.powi(e)).collect::<Vec<_>>());
            Ok(gibbs
                .as_slice()
                .iter()
                .zip(&maxed)
                .map(|(g, m)| (g - m).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}

/// Log-linear fit `log d(α) ≈ intercept + slope·α` with the exponential
/// envelope `d(α) ≤ exp(-(α - ξ) δ)` derived from it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Decay rate `-slope`.
    pub delta: f64,
    /// Smallest offset for which the envelope with rate `delta` covers every fitted point.
    pub xi: f64,
    /// α values that entered the fit (distance above [`DISTANCE_FLOOR`]).
    pub alphas: Vec<u32>,
}

impl DecayFit {
    /// `exp(-(α - ξ) δ)`; `+inf` when the fit shows no decay.
    pub fn bound(&self, alpha: u32) -> f64 {
        if self.delta <= 0.0 {
            return f64::INFINITY;
        }
        (-(f64::from(alpha) - self.xi) * self.delta).exp()
    }

    pub fn decays(&self) -> bool {
        self.delta > 0.0
    }
}

/// Least-squares fit of `log d` against `α`, skipping distances at or below
/// [`DISTANCE_FLOOR`]. Needs at least three usable points.
pub fn fit_exponential_decay(alpha_values: &[u32], distances: &[f64]) -> Result<DecayFit> {
    if alpha_values.len() != distances.len() {
        return Err(Error::domain("alpha and distance lists differ in length"));
    }
    let pts: Vec<(u32, f64, f64)> = alpha_values
        .iter()
        .zip(distances)
        .filter(|(_, &d)| d > DISTANCE_FLOOR)
        .map(|(&a, &d)| (a, f64::from(a), d.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::diagnostic(format!(
            "only {} distances above the floating-point floor; cannot fit a decay rate",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.2).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.1 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.1 - mx) * (p.2 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.2 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::diagnostic("all fitted alphas coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.2 - intercept - slope * p.1).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    let delta = -slope;
    let xi = if delta > 0.0 {
        pts.iter()
            .map(|p| p.1 + p.2 / delta)
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(DecayFit {
        slope,
        intercept,
        r_squared,
        delta,
        xi,
        alphas: pts.iter().map(|p| p.0).collect(),
    })
}

/// Largest residual between the exact log odds of the maximum of `m` draws
/// and the continuous-form identity
/// `log p_m(v)/p_m(v') ≈ (m-1) log F(v)/F(v') + log μ(v)/μ(v')`.
///
/// Pairs are taken among support points in the upper half of the source,
/// `F(v⁻) ≥ 1/2`, where the maximum concentrates. There the zeroth-order
/// error is `O(μ(v)/F(v))` and vanishes as the discretization is refined; at
/// the very bottom of the support it stays of order `log m` regardless of
/// resolution.
pub fn log_odds_check(source: &DiscreteSource, m: usize) -> Result<f64> {
    log_odds_residual(source, m, 0.5)
}

/// [`log_odds_check`] over support points with `F(v⁻) ≥ min_lower_cdf`.
pub fn log_odds_residual(source: &DiscreteSource, m: usize, min_lower_cdf: f64) -> Result<f64> {
    check_draws(m)?;
    let cdf = source.cdf();
    let pm = max_pmf(source, m)?;
    let mu = source.pmf.as_slice();
    let e = (m - 1) as f64;
    // residual(v, v') = r(v) - r(v') with r(v) = log p_m(v) - (m-1) log F(v) - log μ(v)
    let r: Vec<f64> = (0..source.len())
        .filter(|&i| {
            let lower = if i == 0 { 0.0 } else { cdf[i - 1] };
            lower >= min_lower_cdf
        })
        .map(|i| pm[i].ln() - e * cdf[i].ln() - mu[i].ln())
        .collect();
    if r.is_empty() {
        return Ok(0.0);
    }
    let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(hi - lo)
}
