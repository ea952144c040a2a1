mod common;

use common::{rng, simplex, sup_norm};
use freechoice_core::satisficing::{
    expected_max, gibbs_vs_max_distance, log_odds_check, max_cdf, max_pmf, optimal_sample_size,
    sample_max_pmf,
};
use freechoice_core::{DiscreteSource, ProbabilityVector};
use rand::Rng;

fn coin() -> DiscreteSource {
    DiscreteSource::new(
        vec![0.0, 1.0],
        ProbabilityVector::new(vec![0.5, 0.5]).unwrap(),
    )
    .unwrap()
}

/// Expected maximum by enumerating every ordered sequence of draws.
fn enumerated_expected_max(support: &[f64], pmf: &[f64], m: u32) -> f64 {
    let n = support.len();
    let mut total = 0.0;
    for code in 0..n.pow(m) {
        let (mut c, mut prob, mut best) = (code, 1.0, f64::NEG_INFINITY);
        for _ in 0..m {
            prob *= pmf[c % n];
            best = best.max(support[c % n]);
            c /= n;
        }
        total += prob * best;
    }
    total
}

#[test]
fn coin_sample_size_matches_enumeration() {
    let cost = 0.26;
    let choice = optimal_sample_size(&coin(), cost, 10).unwrap();
    let oracle: Vec<f64> = (0..=10u32)
        .map(|extra| {
            enumerated_expected_max(&[0.0, 1.0], &[0.5, 0.5], extra + 1) - f64::from(extra) * cost
        })
        .collect();
    let best = (0..oracle.len()).fold(0, |b, i| if oracle[i] > oracle[b] { i } else { b });
    assert_eq!(choice.extra_draws, best);
    assert_eq!(best, 0);
    assert!(sup_norm(&choice.curve.penalized_value, &oracle) < 1e-14);
}

#[test]
fn enumeration_agrees_on_random_sources() {
    let mut r = rng(31);
    for _ in 0..20 {
        let n = r.gen_range(2..=4);
        let mut support: Vec<f64> = (0..n).map(|_| r.gen_range(-5.0..5.0)).collect();
        support.sort_by(f64::total_cmp);
        let pmf = simplex(&mut r, n);
        let src = DiscreteSource::new(
            support.clone(),
            ProbabilityVector::new(pmf.clone()).unwrap(),
        )
        .unwrap();
        for m in 1..=5 {
            let exact = expected_max(&src, m as usize).unwrap();
            assert!((exact - enumerated_expected_max(&support, &pmf, m)).abs() < 1e-12);
        }
    }
}

#[test]
fn expected_maximum_has_diminishing_increments() {
    let mut r = rng(32);
    for _ in 0..50 {
        let n = r.gen_range(2..=12);
        let mut support: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..10.0)).collect();
        support.sort_by(f64::total_cmp);
        support.dedup();
        let src = DiscreteSource::new(
            support.clone(),
            ProbabilityVector::new(simplex(&mut r, support.len())).unwrap(),
        )
        .unwrap();
        let e: Vec<f64> = (1..=200).map(|m| expected_max(&src, m).unwrap()).collect();
        let inc: Vec<f64> = e.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(inc.iter().all(|&d| d >= -1e-12));
        assert!(inc.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        for m in [1, 7, 200] {
            let p = max_pmf(&src, m).unwrap();
            assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // first differences of F_0^m
            let f = max_cdf(&src, m).unwrap();
            assert!((p[0] - f[0]).abs() < 1e-15);
        }
    }
}

#[test]
fn monte_carlo_agrees_within_three_standard_errors() {
    let src = DiscreteSource::truncated_poisson(5.0, 1, 10).unwrap();
    let draws = 100_000;
    for m in [1, 4, 16] {
        let emp = sample_max_pmf(&src, m, draws, 7, 8).unwrap();
        let exact = max_pmf(&src, m).unwrap();
        for (e, &p) in emp.iter().zip(exact.as_slice()) {
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((e - p).abs() <= 3.0 * se + 1e-12, "m={m}: {e} vs {p}");
        }
    }
    // fixed (seed, streams) gives identical counts
    assert_eq!(
        sample_max_pmf(&src, 3, 5000, 42, 4).unwrap(),
        sample_max_pmf(&src, 3, 5000, 42, 4).unwrap()
    );
}

#[test]
fn log_odds_residual_shrinks_under_refinement() {
    let uniform = |_: f64| 1.0;
    let tilted = |x: f64| 1.0 + x;
    for (name, density) in [
        ("uniform", &uniform as &dyn Fn(f64) -> f64),
        ("tilted", &tilted),
    ] {
        for m in [2, 5, 20] {
            let res: Vec<f64> = [10, 100, 1000]
                .iter()
                .map(|&n| {
                    log_odds_check(
                        &DiscreteSource::discretize(density, 0.0, 1.0, n).unwrap(),
                        m,
                    )
                    .unwrap()
                })
                .collect();
            assert!(res[0] > res[1] && res[1] > res[2], "{name}, m={m}: {res:?}");
            assert!(res[2] < 0.05, "{name}, m={m}: {res:?}");
        }
        let fine = DiscreteSource::discretize(density, 0.0, 1.0, 100).unwrap();
        assert!(log_odds_check(&fine, 1).unwrap() < 1e-12);
    }
}

#[test]
fn single_draw_distance_is_direct() {
    let mut r = rng(33);
    for _ in 0..50 {
        let n = r.gen_range(2..=10);
        let m = simplex(&mut r, n);
        let pm = ProbabilityVector::new(m.clone()).unwrap();
        let d = gibbs_vs_max_distance(&pm, &pm, &[1]).unwrap()[0];
        // Q = M, α = 1: Gibbs ∝ M(x) F(x)
        let mut acc = 0.0;
        let f: Vec<f64> = m
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let w: Vec<f64> = m.iter().zip(&f).map(|(a, b)| a * b).collect();
        let z: f64 = w.iter().sum();
        let direct = w
            .iter()
            .zip(&m)
            .map(|(g, p)| (g / z - p).abs())
            .fold(0.0, f64::max);
        assert!((d - direct).abs() < 1e-12);
    }
}

#[test]
fn distance_eventually_decays() {
    // Slow pre-asymptotic humps occur when the second-best outcome already
    // carries almost all of the cumulative mass, so look far out.
    let mut r = rng(34);
    let alphas = [1, 10, 100, 1_000, 10_000, 100_000, 1_000_000];
    for _ in 0..100 {
        let n = r.gen_range(2..=10);
        let q = ProbabilityVector::new(simplex(&mut r, n)).unwrap();
        let m = ProbabilityVector::new(simplex(&mut r, n)).unwrap();
        let d = gibbs_vs_max_distance(&q, &m, &alphas).unwrap();
        assert!(d[6] < 1e-6, "{d:?}");
        assert!(d[6] <= d[5] && d[5] <= d[4], "{d:?}");
    }
}
