//! Transformation costs, cost potentials and Gibbs measures over finite partitions.

use std::collections::HashSet;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{kl_divergence, log_sum_exp, softmax_with_log_normalizer, xlogx};

/// Total-mass tolerance applied when validating probability vectors.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Finite set of labelled outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct FinitePartition {
    labels: Vec<String>,
}

impl FinitePartition {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::domain("partition must contain at least one outcome"));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::domain(format!("duplicate outcome label `{l}`")));
            }
        }
        Ok(Self { labels })
    }

    /// Outcomes labelled `x0, x1, …`.
    pub fn indexed(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("x{i}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

impl TryFrom<Vec<String>> for FinitePartition {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FinitePartition> for Vec<String> {
    fn from(p: FinitePartition) -> Self {
        p.labels
    }
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    /// Validates without renormalizing: total mass must be within
    /// [`MASS_TOLERANCE`] of one and every weight finite and nonnegative.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("probability vector is empty"));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::domain(format!(
                "weight {i} is {w}; probabilities must be finite and nonnegative"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::domain(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    /// Divides by the total. Meant for computed weights, not for caller input.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::domain("weights cannot be normalized"));
        }
        Ok(Self(weights.into_iter().map(|w| w / total).collect()))
    }

    /// Normalizes `exp(log_weights)`; also returns the log normalizer.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<(Self, f64)> {
        if log_weights.is_empty() {
            return Err(Error::domain("probability vector is empty"));
        }
        let (p, lse) = softmax_with_log_normalizer(log_weights);
        if !lse.is_finite() {
            return Err(Error::diagnostic(format!(
                "log normalizer is {lse}; weights are degenerate"
            )));
        }
        Ok((Self(p), lse))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("probability vector is empty"));
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::domain(format!(
                "index {at} out of range for {n} outcomes"
            )));
        }
        let mut w = vec![0.0; n];
        w[at] = 1.0;
        Ok(Self(w))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.0.iter().all(|&w| w > 0.0)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.0.iter().map(|&w| xlogx(w)).sum::<f64>()
    }

    /// `KL(self ‖ other)` in nats.
    pub fn kl_divergence(&self, other: &ProbabilityVector) -> f64 {
        kl_divergence(&self.0, &other.0)
    }

    /// Largest absolute componentwise difference.
    pub fn sup_distance(&self, other: &ProbabilityVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for ProbabilityVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<'de> Deserialize<'de> for ProbabilityVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        ProbabilityVector::new(v).map_err(serde::de::Error::custom)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta == 0.0 {
        return Err(Error::parameter("conversion factor beta must be nonzero"));
    }
    if !beta.is_finite() {
        return Err(Error::parameter(format!(
            "conversion factor beta is {beta}"
        )));
    }
    Ok(())
}

/// Cost of a transformation that retains probability `prob` of the prior
/// state: `-(1/β) log prob`.
pub fn transformation_cost(prob: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(prob > 0.0 && prob <= 1.0) {
        return Err(Error::domain(format!(
            "conditional probability {prob} outside (0, 1]"
        )));
    }
    if prob == 1.0 {
        return Ok(0.0);
    }
    Ok(-prob.ln() / beta)
}

/// Absolute cost levels `φ(x)` with conversion factor `β` and the reference
/// level `φ0` of the enclosing event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostPotential {
    phi: Vec<f64>,
    beta: f64,
    phi0: f64,
}

impl CostPotential {
    pub fn new(phi: Vec<f64>, beta: f64, phi0: f64) -> Result<Self> {
        check_beta(beta)?;
        if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "potential of outcome {i} is not finite"
            )));
        }
        if !phi0.is_finite() {
            return Err(Error::domain("reference potential is not finite"));
        }
        Ok(Self { phi, beta, phi0 })
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    /// Same potential with every level shifted by `c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(
            self.phi.iter().map(|v| v + c).collect(),
            self.beta,
            self.phi0,
        )
    }

    /// Cost of refining the reference event down to the partition:
    /// `φ(S) - φ0`.
    pub fn refinement_cost(&self, part: &FinitePartition) -> Result<f64> {
        Ok(potential_of_partition(self, part)? - self.phi0)
    }

    fn check_against(&self, part: &FinitePartition) -> Result<()> {
        if part.is_empty() {
            return Err(Error::domain("partition is empty"));
        }
        if self.phi.len() != part.len() {
            return Err(Error::domain(format!(
                "potential has {} levels but partition has {} outcomes",
                self.phi.len(),
                part.len()
            )));
        }
        Ok(())
    }

    fn scaled_levels(&self) -> Vec<f64> {
        self.phi.iter().map(|v| -self.beta * v).collect()
    }
}

/// Potential of the union of the partition's outcomes:
/// `φ(S) = -(1/β) log Σ exp(-β φ(x))`.
pub fn potential_of_partition(pot: &CostPotential, part: &FinitePartition) -> Result<f64> {
    pot.check_against(part)?;
    Ok(-log_sum_exp(&pot.scaled_levels()) / pot.beta)
}

/// Gibbs measure `p(x|S) = exp(-β φ(x)) / Σ exp(-β φ(x'))`.
pub fn gibbs_from_potential(
    pot: &CostPotential,
    part: &FinitePartition,
) -> Result<ProbabilityVector> {
    pot.check_against(part)?;
    ProbabilityVector::from_log_weights(&pot.scaled_levels()).map(|(p, _)| p)
}

/// Free-energy functional `F[q] = Σ q φ + (1/β) Σ q log q`.
///
/// For `β > 0` it is minimized by the Gibbs measure, where it equals
/// [`potential_of_partition`]; for `β < 0` the Gibbs measure maximizes it.
pub fn free_energy(q: &ProbabilityVector, pot: &CostPotential) -> Result<f64> {
    if q.len() != pot.phi.len() {
        return Err(Error::domain(format!(
            "distribution has {} entries but potential has {}",
            q.len(),
            pot.phi.len()
        )));
    }
    let energy: f64 = q.as_slice().iter().zip(&pot.phi).map(|(a, b)| a * b).sum();
    let neg_entropy: f64 = q.as_slice().iter().map(|&w| xlogx(w)).sum();
    Ok(energy + neg_entropy / pot.beta)
}

/// Work to compress a system into a fraction `p` of its volume, in units of
/// `gamma` per bit: `-γ log2 p`.
pub fn isothermal_work(p: f64, gamma: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!("volume fraction {p} outside (0, 1]")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::parameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if p == 1.0 {
        return Ok(0.0);
    }
    Ok(-gamma * p.log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn part(n: usize) -> FinitePartition {
        FinitePartition::indexed(n).unwrap()
    }

    #[test]
    fn cost_examples() {
        assert_eq!(transformation_cost(1.0, 2.0).unwrap(), 0.0);
        assert!((transformation_cost(0.5, 1.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(matches!(
            transformation_cost(0.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            transformation_cost(-0.2, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            transformation_cost(0.5, 0.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn partition_rejects_duplicates_and_empty() {
        assert!(FinitePartition::new(Vec::<String>::new()).is_err());
        assert!(FinitePartition::new(["a", "a"]).is_err());
        assert_eq!(FinitePartition::new(["a", "b"]).unwrap().len(), 2);
    }

    #[test]
    fn probability_vector_is_not_renormalized() {
        assert!(ProbabilityVector::new(vec![0.5, 0.4]).is_err());
        assert!(ProbabilityVector::new(vec![1.5, -0.5]).is_err());
        assert!(ProbabilityVector::new(vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(ProbabilityVector::new(vec![0.5, 0.5 + 1e-11]).is_err());
    }

    #[test]
    fn potential_examples() {
        let c = 3.5;
        for n in [1usize, 2, 7] {
            for beta in [0.3, 2.0, -1.5] {
                let pot = CostPotential::new(vec![c; n], beta, 0.0).unwrap();
                let v = potential_of_partition(&pot, &part(n)).unwrap();
                assert!((v - (c - (n as f64).ln() / beta)).abs() < 1e-12);
            }
        }
        let pot = CostPotential::new(vec![0.0, 0.0], 1.0, 0.0).unwrap();
        assert!((potential_of_partition(&pot, &part(2)).unwrap() + 2f64.ln()).abs() < 1e-15);
        let single = CostPotential::new(vec![-4.25], 17.0, 0.0).unwrap();
        assert!((potential_of_partition(&single, &part(1)).unwrap() + 4.25).abs() < 1e-15);
        assert!(potential_of_partition(&pot, &part(3)).is_err());
    }

    #[test]
    fn gibbs_examples() {
        let pot = CostPotential::new(vec![0.0, 1.0], 1.0, 0.0).unwrap();
        let p = gibbs_from_potential(&pot, &part(2)).unwrap();
        let e = (-1f64).exp();
        assert!((p[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((p[1] - e / (1.0 + e)).abs() < 1e-15);
        assert!((p[0] - 0.7311).abs() < 1e-4);

        let flat = CostPotential::new(vec![2.0; 4], 3.0, 0.0).unwrap();
        let u = gibbs_from_potential(&flat, &part(4)).unwrap();
        assert!(u.as_slice().iter().all(|&w| (w - 0.25).abs() < 1e-15));
    }

    #[test]
    fn free_energy_examples() {
        let pot = CostPotential::new(vec![1.0, 0.2, -0.7], 2.0, 0.0).unwrap();
        let g = gibbs_from_potential(&pot, &part(3)).unwrap();
        let f = free_energy(&g, &pot).unwrap();
        assert!((f - potential_of_partition(&pot, &part(3)).unwrap()).abs() < 1e-12);
        let det = ProbabilityVector::point_mass(3, 1).unwrap();
        assert!((free_energy(&det, &pot).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn refinement_cost_is_offset_by_reference() {
        let pot = CostPotential::new(vec![0.0, 0.0], 1.0, -1.0).unwrap();
        let c = pot.refinement_cost(&part(2)).unwrap();
        assert!((c - (1.0 - 2f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn work_examples() {
        assert_eq!(isothermal_work(1.0, 3.0).unwrap(), 0.0);
        assert!((isothermal_work(0.5, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((isothermal_work(0.25, 2.0).unwrap() - 4.0).abs() < 1e-15);
        assert!(isothermal_work(0.0, 1.0).is_err());
        assert!(isothermal_work(0.5, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn cost_is_additive(p in 1e-6f64..=1.0, q in 1e-6f64..=1.0, beta in 0.01f64..100.0) {
            let lhs = transformation_cost(p * q, beta).unwrap();
            let rhs = transformation_cost(p, beta).unwrap() + transformation_cost(q, beta).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }

        #[test]
        fn cost_is_monotone(p in 1e-6f64..1.0, gap in 1e-6f64..1.0, beta in 0.01f64..100.0) {
            let q = (p + gap * (1.0 - p)).min(1.0);
            prop_assume!(q > p);
            prop_assert!(transformation_cost(p, beta).unwrap() > transformation_cost(q, beta).unwrap());
        }

        #[test]
        fn gibbs_is_normalized_and_shift_invariant(
            phi in prop::collection::vec(-20.0f64..20.0, 1..8),
            beta in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0],
            c in -100.0f64..100.0,
        ) {
            let n = phi.len();
            let pot = CostPotential::new(phi, beta, 0.0).unwrap();
            let g = gibbs_from_potential(&pot, &part(n)).unwrap();
            let total: f64 = g.as_slice().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            let gs = gibbs_from_potential(&pot.shifted(c).unwrap(), &part(n)).unwrap();
            prop_assert!(g.sup_distance(&gs) < 1e-12);
        }

        #[test]
        fn potential_bounded_by_min_level(
            phi in prop::collection::vec(-20.0f64..20.0, 1..8),
            beta in 0.01f64..100.0,
        ) {
            let n = phi.len();
            let min = phi.iter().copied().fold(f64::INFINITY, f64::min);
            let pot = CostPotential::new(phi, beta, 0.0).unwrap();
            prop_assert!(potential_of_partition(&pot, &part(n)).unwrap() <= min + 1e-12);
        }
    }
}
