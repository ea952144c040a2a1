//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use freechoice_core::tree::{NodeId, NodeKind, TreeBuilder};
use freechoice_core::{DecisionTree, FiniteMdp};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flat Dirichlet draw, bounded away from zero.
pub fn simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n)
        .map(|_| -(rng.gen_range(1e-6..1.0f64)).ln() + 1e-3)
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn uniform_vec(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Log-uniform magnitude in `[lo, hi]`.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

pub struct TreeShape {
    pub max_depth: usize,
    pub max_branching: usize,
}

/// Random tree with mixed node kinds; `beta` picks each node's temperature.
pub fn random_tree(
    rng: &mut ChaCha8Rng,
    shape: &TreeShape,
    mut beta: impl FnMut(&mut ChaCha8Rng) -> f64,
    reward_scale: f64,
) -> DecisionTree {
    let root_kind = random_kind(rng);
    let root_beta = beta(rng);
    let mut b = TreeBuilder::new(root_kind, root_beta);
    grow(rng, &mut b, 0, 1, shape, &mut beta, reward_scale);
    let u0 = rng.gen_range(-1.0..1.0);
    b.build(u0).expect("generated tree is valid")
}

fn random_kind(rng: &mut impl Rng) -> NodeKind {
    if rng.gen_bool(0.5) {
        NodeKind::Action
    } else {
        NodeKind::Observation
    }
}

fn grow(
    rng: &mut ChaCha8Rng,
    b: &mut TreeBuilder,
    parent: NodeId,
    depth: usize,
    shape: &TreeShape,
    beta: &mut impl FnMut(&mut ChaCha8Rng) -> f64,
    reward_scale: f64,
) {
    let k = rng.gen_range(if depth == 1 { 2 } else { 1 }..=shape.max_branching);
    let priors = simplex(rng, k);
    for (i, q) in priors.into_iter().enumerate() {
        let r = rng.gen_range(-reward_scale..reward_scale);
        let label = format!("{depth}.{i}");
        if depth < shape.max_depth && rng.gen_bool(0.6) {
            let kind = random_kind(rng);
            let bt = beta(rng);
            let id = b.branch(parent, label, q, r, kind, bt).unwrap();
            grow(rng, b, id, depth + 1, shape, beta, reward_scale);
        } else {
            b.leaf(parent, label, q, r).unwrap();
        }
    }
}

/// Random finite-horizon MDP; about a third of the transition entries are zero.
pub fn random_mdp(
    rng: &mut ChaCha8Rng,
    max_states: usize,
    max_actions: usize,
    max_horizon: usize,
) -> FiniteMdp {
    let n = rng.gen_range(2..=max_states);
    let horizon = rng.gen_range(1..=max_horizon);
    let transitions = (0..n)
        .map(|_| {
            let a = rng.gen_range(1..=max_actions);
            (0..a).map(|_| sparse_row(rng, n)).collect()
        })
        .collect();
    let rewards = uniform_vec(rng, n, -1.0, 1.0);
    FiniteMdp::new(transitions, rewards, horizon).unwrap()
}

/// Random MDP with a single (passive) action per state.
pub fn random_passive_mdp(
    rng: &mut ChaCha8Rng,
    max_states: usize,
    max_horizon: usize,
) -> FiniteMdp {
    let n = rng.gen_range(2..=max_states);
    let horizon = rng.gen_range(1..=max_horizon);
    let dynamics = (0..n).map(|_| sparse_row(rng, n)).collect();
    FiniteMdp::passive(dynamics, uniform_vec(rng, n, -1.0, 1.0), horizon).unwrap()
}

fn sparse_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.67)).collect();
        if !mask.iter().any(|&m| m) {
            continue;
        }
        let w = simplex(rng, n);
        let row: Vec<f64> = w
            .iter()
            .zip(&mask)
            .map(|(&x, &m)| if m { x } else { 0.0 })
            .collect();
        let s: f64 = row.iter().sum();
        return row.into_iter().map(|x| x / s).collect();
    }
}

/// `(1/β) log Σ p e^{βu}` evaluated the textbook way, for moderate `β`.
pub fn naive_ce(p: &[f64], u: &[f64], beta: f64) -> f64 {
    let z: f64 = p.iter().zip(u).map(|(p, u)| p * (beta * u).exp()).sum();
    z.ln() / beta
}

/// `q ∝ p e^{βu}` evaluated without shifting, for moderate `β`.
pub fn naive_gibbs(p: &[f64], u: &[f64], beta: f64) -> Vec<f64> {
    let w: Vec<f64> = p.iter().zip(u).map(|(p, u)| p * (beta * u).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

pub fn sup_norm(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `KL(q ‖ p)` for the Gibbs posterior `p ∝ p0 e^{βu}`, with `log p` formed
/// directly so that posteriors underflowing at large `β` stay exact.
pub fn kl_to_posterior(q: &[f64], p0: &[f64], u: &[f64], beta: f64) -> f64 {
    let lw: Vec<f64> = p0.iter().zip(u).map(|(p, u)| p.ln() + beta * u).collect();
    let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + lw.iter().map(|w| (w - m).exp()).sum::<f64>().ln();
    q.iter()
        .zip(&lw)
        .map(|(a, w)| a * (a.ln() - (w - lse)))
        .sum()
}
