//! Bounded lotteries: equilibrium choice, certainty equivalents and their
//! limits in the resource parameter.
//!
//! A bounded lottery is a lottery (outcomes, prior `p0`, utility `U`) together
//! with a resource parameter `β`. Its equilibrium choice distribution is
//!
//! ```text
//! p(x) = p0(x) exp(β U(x)) / Z,    Z = Σ p0(x) exp(β U(x))
//! ```
//!
//! and its certainty equivalent is `V = (1/β) log Z`, which moves from
//! `min U` (β → -∞) through `E_p0[U]` (β = 0) to `max U` (β → +∞).
//!
//! `-ΔF[q]` always denotes `E_q[U] - (1/β) KL(q ‖ p0)`, the quantity the
//! equilibrium distribution maximizes (for β > 0) or minimizes (for β < 0).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{FinitePartition, ProbabilityVector};
use crate::numeric::{certainty_equivalent, expectation};

/// Inverse temperature used when a test or a report needs the "β → ±∞" limit.
pub const EXTREME_BETA: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedLottery {
    outcomes: FinitePartition,
    prior: ProbabilityVector,
    utility: Vec<f64>,
    beta: f64,
}

impl BoundedLottery {
    /// The prior must be strictly positive on every outcome.
    pub fn new(
        outcomes: FinitePartition,
        prior: ProbabilityVector,
        utility: Vec<f64>,
        beta: f64,
    ) -> Result<Self> {
        let n = outcomes.len();
        if prior.len() != n {
            return Err(Error::domain(format!(
                "prior has {} entries for {n} outcomes",
                prior.len()
            )));
        }
        if utility.len() != n {
            return Err(Error::domain(format!(
                "utility has {} entries for {n} outcomes",
                utility.len()
            )));
        }
        if let Some(i) = prior.as_slice().iter().position(|&w| w <= 0.0) {
            return Err(Error::domain(format!(
                "prior of outcome `{}` is zero; priors must be strictly positive",
                outcomes.labels()[i]
            )));
        }
        if let Some(i) = utility.iter().position(|u| !u.is_finite()) {
            return Err(Error::domain(format!(
                "utility of outcome `{}` is not finite",
                outcomes.labels()[i]
            )));
        }
        if beta.is_nan() || beta.is_infinite() {
            return Err(Error::parameter(format!("beta must be finite, got {beta}")));
        }
        Ok(Self {
            outcomes,
            prior,
            utility,
            beta,
        })
    }

    /// Lottery over anonymous outcomes `x0, x1, …`.
    pub fn from_parts(prior: Vec<f64>, utility: Vec<f64>, beta: f64) -> Result<Self> {
        let outcomes = FinitePartition::indexed(prior.len())?;
        Self::new(outcomes, ProbabilityVector::new(prior)?, utility, beta)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(
            self.outcomes.clone(),
            self.prior.clone(),
            self.utility.clone(),
            beta,
        )
    }

    pub fn outcomes(&self) -> &FinitePartition {
        &self.outcomes
    }

    pub fn prior(&self) -> &ProbabilityVector {
        &self.prior
    }

    pub fn utility(&self) -> &[f64] {
        &self.utility
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.utility.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utility.is_empty()
    }

    pub fn expected_utility(&self) -> f64 {
        expectation(self.prior.as_slice(), &self.utility)
    }

    pub fn max_utility(&self) -> f64 {
        self.utility
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_utility(&self) -> f64 {
        self.utility.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn log_weights(&self, beta: f64) -> Vec<f64> {
        self.prior
            .as_slice()
            .iter()
            .zip(&self.utility)
            .map(|(p, u)| p.ln() + beta * u)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub posterior: ProbabilityVector,
    /// `log Z` in nats; zero at β = 0.
    pub log_partition: f64,
    pub certainty_equivalent: f64,
    /// `-ΔF` evaluated at the posterior.
    pub neg_free_energy_diff: f64,
}

/// Equilibrium choice distribution and certainty equivalent.
pub fn equilibrium(lot: &BoundedLottery) -> EquilibriumResult {
    let beta = lot.beta;
    if beta == 0.0 {
        let ev = lot.expected_utility();
        return EquilibriumResult {
            posterior: lot.prior.clone(),
            log_partition: 0.0,
            certainty_equivalent: ev,
            neg_free_energy_diff: ev,
        };
    }
    let lw = lot.log_weights(beta);
    // Prior is strictly positive and utilities finite, so the weights are well formed.
    let (posterior, log_partition) =
        ProbabilityVector::from_log_weights(&lw).expect("finite log weights");
    let ce = certainty_equivalent(lot.prior.as_slice(), &lot.utility, beta);
    // log(p/p0) = βU - log Z holds exactly for the Gibbs posterior.
    let neg_free_energy_diff = posterior
        .as_slice()
        .iter()
        .zip(&lot.utility)
        .map(|(&p, &u)| p * (u - (beta * u - log_partition) / beta))
        .sum();
    EquilibriumResult {
        posterior,
        log_partition,
        certainty_equivalent: ce,
        neg_free_energy_diff,
    }
}

/// `-ΔF[q] = E_q[U] - (1/β) KL(q ‖ p0)`.
pub fn neg_free_energy_diff(q: &ProbabilityVector, lot: &BoundedLottery) -> Result<f64> {
    if lot.beta == 0.0 {
        return Err(Error::parameter(
            "free-energy difference undefined at beta = 0; use the expected utility",
        ));
    }
    if q.len() != lot.len() {
        return Err(Error::domain(format!(
            "distribution has {} entries for {} outcomes",
            q.len(),
            lot.len()
        )));
    }
    let gain = expectation(q.as_slice(), &lot.utility);
    let info = q.kl_divergence(&lot.prior);
    Ok(gain - info / lot.beta)
}

/// Certainty equivalent `V(β)` for each β, holding everything else fixed.
pub fn certainty_equivalent_limits(lot: &BoundedLottery, beta_values: &[f64]) -> Result<Vec<f64>> {
    beta_values
        .iter()
        .map(|&b| {
            if !b.is_finite() {
                return Err(Error::parameter(format!("beta value {b} is not finite")));
            }
            Ok(certainty_equivalent(lot.prior.as_slice(), &lot.utility, b))
        })
        .collect()
}

/// Posteriors at the three characteristic points of the β axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorLimits {
    /// β = +[`EXTREME_BETA`]: mass on the maximizers of U.
    pub rational: ProbabilityVector,
    /// β = 0: the prior.
    pub prior: ProbabilityVector,
    /// β = -[`EXTREME_BETA`]: mass on the minimizers of U.
    pub anti_rational: ProbabilityVector,
}

/// Posteriors at β = ±1e6 and β = 0. Exact ties split in proportion to the prior.
pub fn posterior_limits(lot: &BoundedLottery) -> PosteriorLimits {
    let at = |beta: f64| equilibrium(&lot.with_beta(beta).expect("finite beta")).posterior;
    PosteriorLimits {
        rational: at(EXTREME_BETA),
        prior: lot.prior.clone(),
        anti_rational: at(-EXTREME_BETA),
    }
}
