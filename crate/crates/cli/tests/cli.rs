use std::fs;
use std::path::{Path, PathBuf};

use freechoice_core::satisficing::optimal_sample_size;
use freechoice_core::Scenario;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn run(args: &[&str]) -> i32 {
    freechoice::run(std::iter::once("freechoice").chain(args.iter().copied()))
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (i32, String) {
    let out = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let out_s = out.to_str().unwrap().to_owned();
    full.extend(["--out", &out_s]);
    let code = run(&full);
    (code, fs::read_to_string(&out).unwrap_or_default())
}

fn summary(csv: &str, key: &str) -> String {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("#{key},")))
        .map(|rest| rest.split(',').next().unwrap().to_owned())
        .unwrap_or_else(|| panic!("no summary `{key}`"))
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn lottery_table_has_the_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let lot = write(
        dir.path(),
        "lot.json",
        r#"{"kind":"lottery","outcomes":["a","b"],"p0":[0.5,0.5],"U":[1,0],"beta":1}"#,
    );
    let (code, csv) = run_to(dir.path(), "res.csv", &["solve-lottery", "--in", &lot]);
    assert_eq!(code, 0);
    assert_eq!(csv.lines().next().unwrap(), "outcome,p0,U,posterior");
    let rows = data_rows(&csv);
    let p: f64 = rows[0][3].parse().unwrap();
    assert!((p - std::f64::consts::E / (1.0 + std::f64::consts::E)).abs() < 1e-15);
    let ce: f64 = summary(&csv, "certainty_equivalent").parse().unwrap();
    assert!((ce - (0.5 + 0.5 * std::f64::consts::E).ln()).abs() < 1e-15);
    summary(&csv, "logZ");
    let hash = summary(&csv, "scenario_sha256");
    assert_eq!(hash, Scenario::load(&lot).unwrap().content_hash());
    assert!(!csv.contains('\r'));
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_sum = write(
        dir.path(),
        "bad.json",
        r#"{"kind":"lottery","outcomes":["a","b"],"p0":[0.5,0.4],"U":[1,0],"beta":1}"#,
    );
    let unknown = write(
        dir.path(),
        "unknown.json",
        r#"{"kind":"lottery","outcomes":["a"],"p0":[1],"U":[1],"beta":1,"gamma":2}"#,
    );
    let lot = scenario("lottery.json");
    let lot = lot.to_str().unwrap();
    assert_eq!(run(&["solve-lottery", "--in", &bad_sum]), 1);
    assert_eq!(run(&["solve-lottery", "--in", &unknown]), 1);
    assert_eq!(run(&["solve-lottery", "--in", "/nonexistent/x.json"]), 1);
    assert_eq!(run(&["solve-tree", "--in", lot]), 1);
    assert_eq!(run(&["sweep-beta", "--in", lot, "--betas", "1:2"]), 1);
    assert_eq!(run(&["satisfice", "--in", lot]), 1);
    assert_eq!(run(&["no-such-command"]), 1);
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn numerical_diagnostics_exit_with_two() {
    let poisson = scenario("poisson.json");
    let poisson = poisson.to_str().unwrap();
    // the penalized value is still rising at M = 5
    assert_eq!(
        run(&[
            "satisfice",
            "--in",
            poisson,
            "--cost",
            "0.02",
            "--mmax",
            "5"
        ]),
        2
    );
    // no decay visible over α ≤ 60 for this source
    assert_eq!(run(&["gibbs-vs-max", "--in", poisson, "--mmax", "60"]), 2);
}

#[test]
fn sweep_rises_from_min_to_max() {
    let dir = tempfile::tempdir().unwrap();
    let lot = scenario("lottery.json");
    let (code, csv) = run_to(
        dir.path(),
        "sweep.csv",
        &[
            "sweep-beta",
            "--in",
            lot.to_str().unwrap(),
            "--betas",
            "-50:50:101",
        ],
    );
    assert_eq!(code, 0);
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 101);
    let betas: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!((betas[0], betas[50], betas[100]), (-50.0, 0.0, 50.0));
    let v: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(v.windows(2).all(|w| w[1] >= w[0]));
    let lo: f64 = summary(&csv, "min_U").parse().unwrap();
    let hi: f64 = summary(&csv, "max_U").parse().unwrap();
    assert!(v[0] > lo && v[0] - lo < 0.1);
    assert!(v[100] < hi && hi - v[100] < 0.1);
    assert_eq!(v[50], summary(&csv, "expected_U").parse::<f64>().unwrap());
}

#[test]
fn satisfice_reports_the_library_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("poisson.json");
    let (code, csv) = run_to(
        dir.path(),
        "fig3.csv",
        &[
            "satisfice",
            "--in",
            path.to_str().unwrap(),
            "--cost",
            "0.02",
            "--mmax",
            "200",
        ],
    );
    assert_eq!(code, 0);
    let Scenario {
        payload: freechoice_core::scenario::Payload::Satisfice(s),
        ..
    } = Scenario::load(&path).unwrap()
    else {
        panic!("wrong kind");
    };
    let choice = optimal_sample_size(&s.source().unwrap(), 0.02, 200).unwrap();
    assert_eq!(summary(&csv, "M_star"), choice.extra_draws.to_string());
    assert_eq!(data_rows(&csv).len(), 201);
    // Monte Carlo estimate at the optimum lies within 4 standard errors
    let mc: f64 = summary(&csv, "mc_expected_max_at_M_star").parse().unwrap();
    let se: f64 = summary(&csv, "mc_standard_error").parse().unwrap();
    assert!((mc - choice.curve.expected_max[choice.extra_draws]).abs() < 4.0 * se);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let poisson = scenario("poisson.json");
    let args = [
        "satisfice",
        "--in",
        poisson.to_str().unwrap(),
        "--cost",
        "0.02",
        "--mmax",
        "200",
        "--seed",
        "9",
    ];
    let (_, a) = run_to(dir.path(), "a.csv", &args);
    let (_, b) = run_to(dir.path(), "b.csv", &args);
    assert_eq!(a, b);
    assert_eq!(summary(&a, "seed"), "9");
    let mdp = scenario("mdp_chain.json");
    let args = ["solve-mdp", "--in", mdp.to_str().unwrap(), "--mode", "risk"];
    assert_eq!(
        run_to(dir.path(), "c.csv", &args).1,
        run_to(dir.path(), "d.csv", &args).1
    );
}

#[test]
fn robust_tree_file_round_trips_and_solves_to_the_minimax_value() {
    let dir = tempfile::tempdir().unwrap();
    let original = scenario("robust_tree.json");
    let first = Scenario::load(&original).unwrap();
    let saved = dir.path().join("saved.json");
    first.save(&saved).unwrap();
    let second = Scenario::load(&saved).unwrap();
    assert_eq!(first, second);
    let resaved = dir.path().join("resaved.json");
    second.save(&resaved).unwrap();
    assert_eq!(fs::read(&saved).unwrap(), fs::read(&resaved).unwrap());

    let (code, csv) = run_to(
        dir.path(),
        "tree.csv",
        &["solve-tree", "--in", original.to_str().unwrap()],
    );
    assert_eq!(code, 0);
    let v: f64 = summary(&csv, "root_value").parse().unwrap();
    assert!((v - 1.0).abs() < 1e-3 * 4.0);
}

#[test]
fn every_mdp_mode_runs_on_the_examples() {
    let dir = tempfile::tempdir().unwrap();
    let chain = scenario("mdp_chain.json");
    let kl = scenario("kl_chain.json");
    for mode in ["bellman", "risk", "robust", "bounded"] {
        let (code, csv) = run_to(
            dir.path(),
            "m.csv",
            &["solve-mdp", "--in", chain.to_str().unwrap(), "--mode", mode],
        );
        assert_eq!(code, 0, "{mode}");
        assert_eq!(data_rows(&csv).len(), 9);
    }
    assert_eq!(
        run(&["solve-mdp", "--in", chain.to_str().unwrap(), "--mode", "kl"]),
        1
    );
    let (code, csv) = run_to(
        dir.path(),
        "kl.csv",
        &["solve-mdp", "--in", kl.to_str().unwrap(), "--mode", "kl"],
    );
    assert_eq!(code, 0);
    let dev: f64 = summary(&csv, "max_tree_deviation").parse().unwrap();
    assert!(dev < 1e-12);
}
