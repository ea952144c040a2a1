//! One function per subcommand: library call in, result table out.

use freechoice_core::control::{bounded_value_by_tree, ControlSolution};
use freechoice_core::lottery::{certainty_equivalent_limits, equilibrium};
use freechoice_core::numeric::linspace;
use freechoice_core::satisficing::{
    fit_exponential_decay, gibbs_vs_max_distance, optimal_sample_size, sample_max_pmf,
};
use freechoice_core::scenario::MdpScenario;
use freechoice_core::table::Cell;
use freechoice_core::tree::Node;
use freechoice_core::{
    BoundedLottery, DecisionTree, DiscreteSource, Error, ProbabilityVector, Regime, Result,
    ResultTable,
};

use crate::{BetaGrid, Mode};

const MC_DRAWS: usize = 100_000;
const MC_STREAMS: usize = 8;

fn num(x: f64) -> Cell {
    Cell::Num(x)
}

pub fn solve_lottery(lot: &BoundedLottery) -> Result<ResultTable> {
    let eq = equilibrium(lot);
    let mut t = ResultTable::new(["outcome", "p0", "U", "posterior"]);
    for (i, label) in lot.outcomes().labels().iter().enumerate() {
        t.push_row(vec![
            label.as_str().into(),
            num(lot.prior()[i]),
            num(lot.utility()[i]),
            num(eq.posterior[i]),
        ])?;
    }
    t.push_summary("logZ", eq.log_partition);
    t.push_summary("certainty_equivalent", eq.certainty_equivalent);
    t.push_summary("beta", lot.beta());
    Ok(t)
}

pub fn sweep_beta(lot: &BoundedLottery, grid: &BetaGrid) -> Result<ResultTable> {
    let betas = linspace(grid.start, grid.stop, grid.count);
    let values = certainty_equivalent_limits(lot, &betas)?;
    let mut headers = vec!["beta".to_string(), "certainty_equivalent".to_string()];
    headers.extend(
        lot.outcomes()
            .labels()
            .iter()
            .map(|l| format!("posterior[{l}]")),
    );
    let mut t = ResultTable::new(headers);
    for (&beta, &v) in betas.iter().zip(&values) {
        let eq = equilibrium(&lot.with_beta(beta)?);
        let mut row = vec![num(beta), num(v)];
        row.extend(eq.posterior.as_slice().iter().map(|&p| num(p)));
        t.push_row(row)?;
    }
    t.push_summary("min_U", lot.min_utility());
    t.push_summary("expected_U", lot.expected_utility());
    t.push_summary("max_U", lot.max_utility());
    Ok(t)
}

pub fn satisfice(
    source: &DiscreteSource,
    cost: f64,
    m_max: usize,
    seed: Option<u64>,
) -> Result<ResultTable> {
    let choice = optimal_sample_size(source, cost, m_max)?;
    let curve = &choice.curve;
    let mut headers = vec![
        "M".to_string(),
        "draws".to_string(),
        "expected_max".to_string(),
        "penalized_value".to_string(),
    ];
    headers.extend(source.support().iter().map(|v| format!("p_max[{v}]")));
    let mut t = ResultTable::new(headers);
    for m in curve.extra_draws() {
        let mut row = vec![
            Cell::from(m),
            Cell::from(m + 1),
            num(curve.expected_max[m]),
            num(curve.penalized_value[m]),
        ];
        row.extend(curve.pmf_of_max[m].as_slice().iter().map(|&p| num(p)));
        t.push_row(row)?;
    }
    t.push_summary("M_star", choice.extra_draws);
    t.push_summary("value_at_M_star", choice.value);
    t.push_summary("cost_per_sample", cost);
    if let Some(seed) = seed {
        // Monte Carlo check of the expected maximum at the optimum
        let emp = sample_max_pmf(source, choice.total_draws(), MC_DRAWS, seed, MC_STREAMS)?;
        let mean: f64 = emp.iter().zip(source.support()).map(|(p, v)| p * v).sum();
        let second: f64 = emp
            .iter()
            .zip(source.support())
            .map(|(p, v)| p * v * v)
            .sum();
        let se = ((second - mean * mean).max(0.0) / MC_DRAWS as f64).sqrt();
        t.push_summary("mc_expected_max_at_M_star", mean);
        t.push_summary("mc_standard_error", se);
        t.push_summary("mc_draws", MC_DRAWS);
    }
    Ok(t)
}

pub fn gibbs_vs_max(
    prior: &ProbabilityVector,
    source_pmf: &ProbabilityVector,
    alpha_max: u32,
) -> Result<ResultTable> {
    if alpha_max < 3 {
        return Err(Error::Parameter(
            "--mmax must be at least 3 to fit a decay rate".into(),
        ));
    }
    let alphas: Vec<u32> = (1..=alpha_max).collect();
    let d = gibbs_vs_max_distance(prior, source_pmf, &alphas)?;
    let fit = fit_exponential_decay(&alphas, &d)?;
    if !fit.decays() {
        return Err(Error::Diagnostic(format!(
            "distance does not decay over alpha <= {alpha_max} (fitted slope {:e}); try a larger --mmax",
            fit.slope
        )));
    }
    let mut t = ResultTable::new(["alpha", "distance", "bound", "fitted"]);
    for (&a, &di) in alphas.iter().zip(&d) {
        let fitted = i64::from(fit.alphas.contains(&a));
        t.push_row(vec![
            Cell::from(i64::from(a)),
            num(di),
            num(fit.bound(a)),
            Cell::Int(fitted),
        ])?;
    }
    t.push_summary("slope", fit.slope);
    t.push_summary("intercept", fit.intercept);
    t.push_summary("r_squared", fit.r_squared);
    t.push_summary("delta", fit.delta);
    t.push_summary("xi", fit.xi);
    Ok(t)
}

pub fn solve_tree(tree: &DecisionTree) -> Result<ResultTable> {
    let sol = freechoice_core::solve_tree(tree);
    let mut t = ResultTable::new([
        "node",
        "depth",
        "kind",
        "beta",
        "edge",
        "label",
        "child",
        "prior",
        "reward",
        "policy",
        "child_value",
    ]);
    for (id, node) in tree.nodes().iter().enumerate() {
        let Node::Choice { kind, beta, edges } = node else {
            continue;
        };
        let policy = sol.policies[id]
            .as_ref()
            .expect("internal node has a policy");
        for (k, e) in edges.iter().enumerate() {
            t.push_row(vec![
                Cell::from(id),
                Cell::from(tree.depth(id)),
                Cell::from(kind_name(*kind)),
                num(*beta),
                Cell::from(k),
                e.label.as_str().into(),
                Cell::from(e.child),
                num(e.prior),
                num(e.reward),
                num(policy[k]),
                num(sol.values[e.child]),
            ])?;
        }
    }
    t.push_summary("root_value", sol.root_value());
    t.push_summary("root_log_z", sol.log_z[tree.root()]);
    t.push_summary("root_utility", tree.root_utility());
    Ok(t)
}

fn kind_name(kind: freechoice_core::NodeKind) -> &'static str {
    match kind {
        freechoice_core::NodeKind::Action => "action",
        freechoice_core::NodeKind::Observation => "observation",
    }
}

fn require(value: Option<f64>, name: &str, mode: &str) -> Result<f64> {
    value.ok_or_else(|| Error::Parameter(format!("mode `{mode}` needs `{name}` in the scenario")))
}

pub fn solve_mdp(spec: &MdpScenario, mode: Mode) -> Result<ResultTable> {
    let mdp = spec.build()?;
    let regime = match mode {
        Mode::Kl => Some(Regime::KlControl {
            beta: require(spec.beta, "beta", "kl")?,
        }),
        Mode::Bellman => Some(Regime::RiskNeutral),
        Mode::Risk => Some(Regime::RiskSensitive {
            beta_obs: require(spec.beta_obs, "beta_obs", "risk")?,
        }),
        Mode::Robust => Some(Regime::Robust),
        Mode::Bounded => None,
    };
    let (primary, by_tree, tolerance): (ControlSolution, Option<ControlSolution>, f64) =
        match regime {
            Some(r) => {
                // KL control is exact through the tree; the other limits hold up to the finite-β slack
                let tol = match r {
                    Regime::KlControl { .. } => 1e-9 * (1.0 + mdp.value_range()),
                    _ => 1e-3 * mdp.value_range(),
                };
                (r.solve_direct(&mdp)?, Some(r.solve_by_tree(&mdp)?), tol)
            }
            None => {
                let beta_action = require(spec.beta_action, "beta_action", "bounded")?;
                let beta_obs = require(spec.beta_obs, "beta_obs", "bounded")?;
                (
                    bounded_value_by_tree(&mdp, beta_action, beta_obs)?,
                    None,
                    f64::NAN,
                )
            }
        };

    let mut t = ResultTable::new(["stage", "state", "value", "value_by_tree", "policy"]);
    let mut worst = 0.0f64;
    for (stage, row) in primary.values.iter().enumerate().take(mdp.horizon()) {
        for (s, &v) in row.iter().enumerate() {
            let tree_v = by_tree.as_ref().map(|b| b.values[stage][s]);
            if let Some(tv) = tree_v {
                worst = worst.max((tv - v).abs());
            }
            let policy = primary.policies[stage][s]
                .iter()
                .map(|&p| freechoice_core::table::format_float(p))
                .collect::<Vec<_>>()
                .join(";");
            t.push_row(vec![
                Cell::from(stage),
                Cell::from(s),
                num(v),
                tree_v.map_or(Cell::Empty, num),
                Cell::Text(policy),
            ])?;
        }
    }
    t.push_summary("value_range", mdp.value_range());
    if by_tree.is_some() {
        t.push_summary("max_tree_deviation", worst);
        t.push_summary("tolerance", tolerance);
        if worst > tolerance {
            return Err(Error::Diagnostic(format!(
                "tree solution departs from the direct solution by {worst:e}, beyond {tolerance:e}"
            )));
        }
    }
    Ok(t)
}
