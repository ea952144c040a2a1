//! Classical finite-horizon controllers and their recovery from the
//! decision-tree recursion.
//!
//! Each controller is solved twice: once by a direct backward pass over
//! states (the oracle), and once by unrolling the MDP into a
//! [`DecisionTree`] with the matching inverse temperatures and calling
//! [`solve_tree`]:
//!
//! | controller        | action β | observation β |
//! |-------------------|----------|---------------|
//! | KL control        | β        | (no observation nodes) |
//! | Bellman optimal   | +1e6     | ±1e-9         |
//! | risk-sensitive    | +1e6     | β_obs ≠ 0     |
//! | robust (minimax)  | +1e6     | -1e6          |

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lottery::EXTREME_BETA;
use crate::measure::MASS_TOLERANCE;
use crate::numeric::{certainty_equivalent, expectation, weighted_log_sum_exp};
use crate::tree::{solve_tree, DecisionTree, NodeKind, TreeBuilder};

/// Observation β standing in for the risk-neutral limit β → 0.
pub const NEUTRAL_BETA: f64 = 1e-9;

/// Finite MDP with state-dependent rewards `r(s')` collected on arrival.
///
/// `transitions[s][a][s']` is `p(s'|s, a)`. A KL-control problem is an MDP
/// with exactly one action per state, whose row is the passive dynamics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMdp {
    transitions: Vec<Vec<Vec<f64>>>,
    rewards: Vec<f64>,
    horizon: usize,
}

impl FiniteMdp {
    pub fn new(transitions: Vec<Vec<Vec<f64>>>, rewards: Vec<f64>, horizon: usize) -> Result<Self> {
        let n = rewards.len();
        if n == 0 {
            return Err(Error::domain("MDP has no states"));
        }
        if transitions.len() != n {
            return Err(Error::domain(format!(
                "{} transition blocks for {n} states",
                transitions.len()
            )));
        }
        if horizon == 0 {
            return Err(Error::domain("horizon must be at least 1"));
        }
        if let Some(s) = rewards.iter().position(|r| !r.is_finite()) {
            return Err(Error::domain(format!("reward of state {s} is not finite")));
        }
        for (s, actions) in transitions.iter().enumerate() {
            if actions.is_empty() {
                return Err(Error::domain(format!("state {s} has no actions")));
            }
            for (a, row) in actions.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::domain(format!(
                        "transition row ({s}, {a}) has {} entries for {n} states",
                        row.len()
                    )));
                }
                if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(Error::domain(format!(
                        "transition row ({s}, {a}) has a negative or non-finite entry"
                    )));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > MASS_TOLERANCE {
                    return Err(Error::domain(format!(
                        "transition row ({s}, {a}) sums to {total}, not 1"
                    )));
                }
            }
        }
        Ok(Self {
            transitions,
            rewards,
            horizon,
        })
    }

    /// KL-control problem from passive dynamics `p0(s'|s)`.
    pub fn passive(dynamics: Vec<Vec<f64>>, rewards: Vec<f64>, horizon: usize) -> Result<Self> {
        Self::new(
            dynamics.into_iter().map(|row| vec![row]).collect(),
            rewards,
            horizon,
        )
    }

    pub fn n_states(&self) -> usize {
        self.rewards.len()
    }

    pub fn n_actions(&self, s: usize) -> usize {
        self.transitions[s].len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn transitions(&self) -> &[Vec<Vec<f64>>] {
        &self.transitions
    }

    pub fn is_passive(&self) -> bool {
        self.transitions.iter().all(|a| a.len() == 1)
    }

    /// `horizon · (max r - min r)`: the scale against which limit tolerances are set.
    pub fn value_range(&self) -> f64 {
        let hi = self
            .rewards
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = self.rewards.iter().copied().fold(f64::INFINITY, f64::min);
        self.horizon as f64 * (hi - lo)
    }

    fn successors(&self, s: usize, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.transitions[s][a]
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
    }
}

/// Values `values[t][s]` for stages `t = 0..=T` (zero at `T`) and policies
/// `policies[t][s]` for `t < T`, over actions or, for KL control, over next states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlSolution {
    pub values: Vec<Vec<f64>>,
    pub policies: Vec<Vec<Vec<f64>>>,
}

impl ControlSolution {
    pub fn initial_values(&self) -> &[f64] {
        &self.values[0]
    }
}

/// Largest score and its index; the lowest index wins ties.
fn argmax(scores: &[f64]) -> (f64, usize) {
    let mut best = 0;
    for (i, &x) in scores.iter().enumerate().skip(1) {
        if x > scores[best] {
            best = i;
        }
    }
    (scores[best], best)
}

fn one_hot(n: usize, at: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[at] = 1.0;
    v
}

/// Backward pass where actions are maximized (lowest index wins ties) and
/// the successor distribution of each action is collapsed by `aggregate`.
fn action_max_pass<F>(mdp: &FiniteMdp, aggregate: F) -> ControlSolution
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let n = mdp.n_states();
    let t_max = mdp.horizon;
    let mut values = vec![vec![0.0; n]; t_max + 1];
    let mut policies = vec![Vec::with_capacity(n); t_max];
    for t in (0..t_max).rev() {
        for s in 0..n {
            let scores: Vec<f64> = (0..mdp.n_actions(s))
                .map(|a| {
                    let (p, u): (Vec<f64>, Vec<f64>) = mdp
                        .successors(s, a)
                        .map(|(s2, p)| (p, mdp.rewards[s2] + values[t + 1][s2]))
                        .unzip();
                    aggregate(&p, &u)
                })
                .collect();
            let (v, a) = argmax(&scores);
            values[t][s] = v;
            policies[t].push(one_hot(scores.len(), a));
        }
    }
    ControlSolution { values, policies }
}

/// `V_t(s) = max_a Σ_s' p(s'|s,a) [r(s') + V_{t+1}(s')]`.
pub fn bellman_value_iteration(mdp: &FiniteMdp) -> ControlSolution {
    action_max_pass(mdp, expectation)
}

/// Actions maximize; successors aggregate through the stress function
/// `(1/β_obs) log Σ p e^{β_obs u}`.
pub fn risk_sensitive_value(mdp: &FiniteMdp, beta_obs: f64) -> Result<ControlSolution> {
    if beta_obs == 0.0 || !beta_obs.is_finite() {
        return Err(Error::parameter(format!(
            "observation beta must be finite and nonzero, got {beta_obs}"
        )));
    }
    Ok(action_max_pass(mdp, |p, u| {
        certainty_equivalent(p, u, beta_obs)
    }))
}

/// Actions maximize; successors take the worst case over the support of the
/// transition kernel, ignoring the probabilities themselves.
pub fn robust_minimax_value(mdp: &FiniteMdp) -> ControlSolution {
    action_max_pass(mdp, |_, u| u.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Actions maximize; successors take the best case over the support.
pub fn optimistic_value(mdp: &FiniteMdp) -> ControlSolution {
    action_max_pass(mdp, |_, u| {
        u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    })
}

/// Finite-horizon z-iteration for KL control.
///
/// With desirability `z_t(s) = exp(β V_t(s))` the recursion is linear,
/// `z_t(s) = Σ_s' p0(s'|s) e^{β r(s')} z_{t+1}(s')`; it is carried out on
/// `log z` to stay finite for large `|β|`. Controlled transitions are
/// `p(s'|s) ∝ p0(s'|s) e^{β r(s')} z_{t+1}(s')`.
pub fn kl_control_z_iteration(mdp: &FiniteMdp, beta: f64) -> Result<ControlSolution> {
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::parameter(format!(
            "beta must be finite and nonzero, got {beta}"
        )));
    }
    if !mdp.is_passive() {
        return Err(Error::domain(
            "KL control needs passive dynamics: exactly one transition row per state",
        ));
    }
    let n = mdp.n_states();
    let t_max = mdp.horizon;
    let mut log_z = vec![vec![0.0; n]; t_max + 1];
    let mut policies = vec![Vec::with_capacity(n); t_max];
    for t in (0..t_max).rev() {
        let exponent: Vec<f64> = (0..n)
            .map(|s2| beta * mdp.rewards[s2] + log_z[t + 1][s2])
            .collect();
        for (s, row) in mdp.transitions.iter().enumerate() {
            let p0 = &row[0];
            let lz = weighted_log_sum_exp(p0, &exponent);
            if !lz.is_finite() {
                return Err(Error::domain(format!(
                    "passive dynamics of state {s} give a degenerate desirability"
                )));
            }
            log_z[t][s] = lz;
            policies[t].push(
                p0.iter()
                    .zip(&exponent)
                    .map(|(&p, &x)| {
                        if p > 0.0 {
                            (p.ln() + x - lz).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            );
        }
    }
    let values = log_z
        .into_iter()
        .map(|row| row.into_iter().map(|lz| lz / beta).collect())
        .collect();
    Ok(ControlSolution { values, policies })
}

/// Unrolls the MDP from `(stage, start)` into a decision tree: action nodes
/// with a uniform prior over actions and inverse temperature `beta_action`,
/// each followed by an observation node over the successors in the support,
/// with `Q = p(s'|s,a)`, reward `r(s')` and inverse temperature `beta_obs`.
pub fn unroll_tree(
    mdp: &FiniteMdp,
    start: usize,
    stage: usize,
    beta_action: f64,
    beta_obs: f64,
) -> Result<DecisionTree> {
    check_start(mdp, start, stage)?;
    fn grow(
        mdp: &FiniteMdp,
        b: &mut TreeBuilder,
        at: usize,
        s: usize,
        remaining: usize,
        beta_obs: f64,
        beta_action: f64,
    ) -> Result<()> {
        let k = mdp.n_actions(s);
        for a in 0..k {
            let obs = b.branch(
                at,
                format!("a{a}"),
                1.0 / k as f64,
                0.0,
                NodeKind::Observation,
                beta_obs,
            )?;
            for (s2, p) in mdp.successors(s, a) {
                let label = format!("s{s2}");
                if remaining == 1 {
                    b.leaf(obs, label, p, mdp.rewards[s2])?;
                } else {
                    let next = b.branch(
                        obs,
                        label,
                        p,
                        mdp.rewards[s2],
                        NodeKind::Action,
                        beta_action,
                    )?;
                    grow(mdp, b, next, s2, remaining - 1, beta_obs, beta_action)?;
                }
            }
        }
        Ok(())
    }
    let mut b = TreeBuilder::new(NodeKind::Action, beta_action);
    grow(
        mdp,
        &mut b,
        0,
        start,
        mdp.horizon - stage,
        beta_obs,
        beta_action,
    )?;
    b.build(0.0)
}

/// Unrolls passive dynamics from `(stage, start)` into a tree of action
/// nodes over next states with `Q = p0(s'|s)`, reward `r(s')` and a single `beta`.
pub fn unroll_passive_tree(
    mdp: &FiniteMdp,
    start: usize,
    stage: usize,
    beta: f64,
) -> Result<DecisionTree> {
    check_start(mdp, start, stage)?;
    if !mdp.is_passive() {
        return Err(Error::domain(
            "passive unrolling needs one transition row per state",
        ));
    }
    fn grow(
        mdp: &FiniteMdp,
        b: &mut TreeBuilder,
        at: usize,
        s: usize,
        remaining: usize,
        beta: f64,
    ) -> Result<()> {
        for (s2, p) in mdp.successors(s, 0) {
            let label = format!("s{s2}");
            if remaining == 1 {
                b.leaf(at, label, p, mdp.rewards[s2])?;
            } else {
                let next = b.branch(at, label, p, mdp.rewards[s2], NodeKind::Action, beta)?;
                grow(mdp, b, next, s2, remaining - 1, beta)?;
            }
        }
        Ok(())
    }
    let mut b = TreeBuilder::new(NodeKind::Action, beta);
    grow(mdp, &mut b, 0, start, mdp.horizon - stage, beta)?;
    b.build(0.0)
}

fn check_start(mdp: &FiniteMdp, start: usize, stage: usize) -> Result<()> {
    if start >= mdp.n_states() {
        return Err(Error::domain(format!("start state {start} out of range")));
    }
    if stage >= mdp.horizon {
        return Err(Error::domain(format!(
            "stage {stage} leaves nothing to unroll before horizon {}",
            mdp.horizon
        )));
    }
    Ok(())
}

/// Solves the MDP through [`solve_tree`] on unrolled trees with the given
/// action and observation temperatures. Policies are the root policies over actions.
pub fn bounded_value_by_tree(
    mdp: &FiniteMdp,
    beta_action: f64,
    beta_obs: f64,
) -> Result<ControlSolution> {
    by_tree(mdp, |s, t| unroll_tree(mdp, s, t, beta_action, beta_obs))
}

/// KL control through [`solve_tree`] on the passive unrolling; policies are
/// over next states.
pub fn kl_value_by_tree(mdp: &FiniteMdp, beta: f64) -> Result<ControlSolution> {
    let n = mdp.n_states();
    by_tree(mdp, |s, t| unroll_passive_tree(mdp, s, t, beta)).map(|mut sol| {
        // root edges cover only the support; spread back over all states
        for stage in &mut sol.policies {
            for (s, row) in stage.iter_mut().enumerate() {
                let mut full = vec![0.0; n];
                for ((s2, _), &p) in mdp.successors(s, 0).zip(row.iter()) {
                    full[s2] = p;
                }
                *row = full;
            }
        }
        sol
    })
}

fn by_tree<B>(mdp: &FiniteMdp, build: B) -> Result<ControlSolution>
where
    B: Fn(usize, usize) -> Result<DecisionTree> + Sync,
{
    let n = mdp.n_states();
    let t_max = mdp.horizon;
    // every (stage, state) tree is independent; collect keeps the order fixed
    let roots = (0..t_max * n)
        .into_par_iter()
        .map(|i| {
            let sol = solve_tree(&build(i % n, i / n)?);
            Ok((
                sol.root_value(),
                sol.policies[0]
                    .clone()
                    .expect("root is internal")
                    .into_vec(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![vec![0.0; n]; t_max + 1];
    let mut policies = vec![Vec::with_capacity(n); t_max];
    for (i, (v, pi)) in roots.into_iter().enumerate() {
        values[i / n][i % n] = v;
        policies[i / n].push(pi);
    }
    Ok(ControlSolution { values, policies })
}

/// Observation temperatures that reproduce each controller through the tree solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// All nodes are action nodes with the same β.
    KlControl { beta: f64 },
    /// Actions at +1e6, observations at `NEUTRAL_BETA`.
    RiskNeutral,
    /// Actions at +1e6, observations at `beta_obs`.
    RiskSensitive { beta_obs: f64 },
    /// Actions at +1e6, observations at -1e6.
    Robust,
}

impl Regime {
    /// Solves the regime through unrolled trees.
    pub fn solve_by_tree(&self, mdp: &FiniteMdp) -> Result<ControlSolution> {
        match *self {
            Regime::KlControl { beta } => kl_value_by_tree(mdp, beta),
            Regime::RiskNeutral => bounded_value_by_tree(mdp, EXTREME_BETA, NEUTRAL_BETA),
            Regime::RiskSensitive { beta_obs } => {
                bounded_value_by_tree(mdp, EXTREME_BETA, beta_obs)
            }
            Regime::Robust => bounded_value_by_tree(mdp, EXTREME_BETA, -EXTREME_BETA),
        }
    }

    /// Solves the regime with its direct oracle.
    pub fn solve_direct(&self, mdp: &FiniteMdp) -> Result<ControlSolution> {
        match *self {
            Regime::KlControl { beta } => kl_control_z_iteration(mdp, beta),
            Regime::RiskNeutral => Ok(bellman_value_iteration(mdp)),
            Regime::RiskSensitive { beta_obs } => risk_sensitive_value(mdp, beta_obs),
            Regime::Robust => Ok(robust_minimax_value(mdp)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_step_bellman() {
        // single state, two actions; both loop back, rewards decided by the
        // second state in a two-state model where action 0 reaches reward 1
        let mdp = FiniteMdp::new(
            vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            vec![0.0, 1.0],
            1,
        )
        .unwrap();
        let sol = bellman_value_iteration(&mdp);
        assert_eq!(sol.values[0][0], 1.0);
        assert_eq!(sol.policies[0][0], vec![1.0, 0.0]);
    }

    #[test]
    fn single_gamble_robust_and_risk_averse() {
        let mdp = FiniteMdp::new(
            vec![
                vec![vec![0.0, 0.5, 0.5]],
                vec![vec![0.0, 1.0, 0.0]],
                vec![vec![0.0, 0.0, 1.0]],
            ],
            vec![0.0, 0.0, 1.0],
            1,
        )
        .unwrap();
        assert_eq!(robust_minimax_value(&mdp).values[0][0], 0.0);
        let averse = risk_sensitive_value(&mdp, -1.0).unwrap().values[0][0];
        let closed = -(0.5 + 0.5 * (-1f64).exp()).ln();
        assert!((averse - closed).abs() < 1e-15);
        assert!((averse - 0.3799).abs() < 1e-4);
        assert!(averse < 0.5);
    }

    #[test]
    fn deterministic_observation_ignores_beta_obs() {
        let mdp = FiniteMdp::new(
            vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![vec![1.0, 0.0]]],
            vec![0.3, 2.0],
            3,
        )
        .unwrap();
        let a = risk_sensitive_value(&mdp, -4.0).unwrap();
        let b = risk_sensitive_value(&mdp, 2.5).unwrap();
        for t in 0..=3 {
            for s in 0..2 {
                assert!((a.values[t][s] - b.values[t][s]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_rewards_leave_passive_dynamics() {
        let p0 = vec![
            vec![0.2, 0.8, 0.0],
            vec![0.3, 0.3, 0.4],
            vec![1.0, 0.0, 0.0],
        ];
        let mdp = FiniteMdp::passive(p0.clone(), vec![0.0; 3], 2).unwrap();
        let sol = kl_control_z_iteration(&mdp, 1.3).unwrap();
        for stage in &sol.policies {
            for (row, expect) in stage.iter().zip(&p0) {
                for (a, b) in row.iter().zip(expect) {
                    assert!((a - b).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn kl_requires_passive_dynamics() {
        let mdp = FiniteMdp::new(vec![vec![vec![1.0], vec![1.0]]], vec![0.0], 1).unwrap();
        assert!(matches!(
            kl_control_z_iteration(&mdp, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mdp_validation() {
        assert!(FiniteMdp::new(
            vec![vec![vec![0.5, 0.4]], vec![vec![0.5, 0.5]]],
            vec![0.0, 0.0],
            1
        )
        .is_err());
        assert!(FiniteMdp::new(vec![vec![]], vec![0.0], 1).is_err());
        assert!(FiniteMdp::new(vec![vec![vec![1.0]]], vec![0.0], 0).is_err());
    }

    #[test]
    fn unrolled_tree_shape() {
        let mdp = FiniteMdp::new(
            vec![vec![vec![0.5, 0.5], vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            vec![1.0, 0.0],
            2,
        )
        .unwrap();
        let t = unroll_tree(&mdp, 0, 0, 1.0, 1.0).unwrap();
        // root action node, 2 obs nodes; obs nodes lead to states with their own subtrees
        assert_eq!(t.height(), 4);
        assert!(unroll_tree(&mdp, 0, 2, 1.0, 1.0).is_err());
    }
}
