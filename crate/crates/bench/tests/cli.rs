//! End-to-end runs of the `olo-bench` binary.

use std::path::Path;

use assert_cmd::Command;
use predicates::str::contains;

fn bench(out: &Path) -> Command {
    let mut cmd = Command::cargo_bin("olo-bench").unwrap();
    cmd.env_remove("OLO_BENCH_OUT_DIR").arg("--out-dir").arg(out);
    cmd
}

fn body(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

/// Header row and data rows of a CSV, parsed with the `csv` reader.
fn rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = body(path);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let head = rdr.headers().unwrap().iter().map(str::to_string).collect();
    let data = rdr.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect();
    (head, data)
}

fn col(head: &[String], name: &str) -> usize {
    head.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn svg_polylines(path: &Path) -> usize {
    let text = std::fs::read_to_string(path).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("well-formed SVG");
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert_eq!(root.attribute("version"), Some("1.1"));
    assert!(!text.contains("href"), "external reference in SVG");
    root.descendants().filter(|n| n.tag_name().name() == "polyline").count()
}

#[test]
fn regret_faml_within_bound() {
    let dir = tempfile::tempdir().unwrap();
    bench(dir.path())
        .args(["regret", "--learner", "faml", "--adversary", "gaussian", "--m", "4", "--n", "8"])
        .args(["--T", "200", "--D", "1", "--G", "1", "--seed", "0"])
        .assert()
        .success();
    let csv = dir.path().join("regret_faml_gaussian.csv");
    let (head, data) = rows(&csv);
    assert_eq!(
        head,
        ["t", "learner", "inst_loss", "cum_loss", "nuclear_S", "regret", "bound", "feas_margin", "solver_iters"]
    );
    assert_eq!(data.len(), 200);
    for (i, r) in data.iter().enumerate() {
        assert_eq!(f(&r[0]) as usize, i + 1);
        assert!(f(&r[col(&head, "regret")]) <= f(&r[col(&head, "bound")]));
        assert!(f(&r[col(&head, "feas_margin")]) >= -1e-8);
    }
    assert_eq!(svg_polylines(&dir.path().join("regret_faml_gaussian.svg")), 2);
}

#[test]
fn regret_ftl_sign_flip_is_linear() {
    let dir = tempfile::tempdir().unwrap();
    bench(dir.path())
        .args(["regret", "--learner", "ftl", "--adversary", "signflip", "--m", "1", "--n", "1", "--T", "400"])
        .assert()
        .success();
    let (head, data) = rows(&dir.path().join("regret_ftl_signflip.csv"));
    assert_eq!(data.len(), 400);
    let last = data.last().unwrap();
    assert!(f(&last[col(&head, "regret")]) >= 0.4 * 400.0);
    // No bound applies to FTL: the column is present but empty.
    assert!(last[col(&head, "bound")].is_empty());
}

#[test]
fn regret_one_sided_shampoo_below_bound() {
    let dir = tempfile::tempdir().unwrap();
    bench(dir.path())
        .args([
            "regret",
            "--learner",
            "one_sided_shampoo",
            "--adversary",
            "lowrank_burst",
            "--m",
            "3",
            "--n",
            "5",
            "--T",
            "100",
        ])
        .assert()
        .success();
    let (head, data) = rows(&dir.path().join("regret_one_sided_shampoo_lowrank_burst.csv"));
    let last = data.last().unwrap();
    assert!(f(&last[col(&head, "regret")]) <= f(&last[col(&head, "bound")]));
}

#[test]
fn admissibility_hyperbolic_and_regularized_pass() {
    let dir = tempfile::tempdir().unwrap();
    bench(dir.path())
        .args(["admissibility", "--family", "hyperbolic", "--m", "3", "--n", "5", "--trials", "500"])
        .assert()
        .success();
    let (head, data) = rows(&dir.path().join("admissibility_hyperbolic.csv"));
    assert_eq!(
        head,
        ["family", "m", "n", "trials", "seed", "feas_max", "dom_min", "alpha_hat", "beta_hat", "alphabeta_hat"]
    );
    assert!(f(&data[0][col(&head, "alpha_hat")]) <= 1.0 + 1e-6);
    assert!(f(&data[0][col(&head, "beta_hat")]) <= 1.0 + 1e-6);

    bench(dir.path()).args(["admissibility", "--family", "regularized", "--m", "2", "--n", "3"]).assert().success();
    let (head, data) = rows(&dir.path().join("admissibility_regularized.csv"));
    assert!(f(&data[0][col(&head, "alpha_hat")]) <= 0.5 + 1e-6);
}

#[test]
fn admissibility_stochastic_needs_degrees_of_freedom() {
    let dir = tempfile::tempdir().unwrap();
    bench(dir.path())
        .args(["admissibility", "--family", "stochastic", "--m", "2", "--n", "1"])
        .assert()
        .code(2)
        .stderr(contains("requires n ≥ m+2"));
}

#[test]
fn admissibility_stochastic_writes_wishart_table() {
    let dir = tempfile::tempdir().unwrap();
    bench(dir.path())
        .args(["admissibility", "--family", "stochastic", "--m", "1", "--n", "4", "--trials", "40", "--k", "500"])
        .args(["--wishart-samples", "5000"])
        .assert()
        .success();
    let (head, data) = rows(&dir.path().join("wishart.csv"));
    assert_eq!(data.len(), 2);
    assert!(data.iter().all(|r| r[col(&head, "within")] == "true"));
}

#[test]
fn optimize_leon_oscillates_less_than_muon() {
    let dir = tempfile::tempdir().unwrap();
    bench(dir.path())
        .args(["optimize", "--optimizer", "muon,leon", "--d", "20", "--measurements", "100"])
        .args(["--beta1", "0.9", "--beta2", "0.9", "--steps", "300", "--lrs", "0.1", "--seed", "0"])
        .assert()
        .success();
    let (head, data) = rows(&dir.path().join("final_report.csv"));
    assert_eq!(head, ["optimizer", "seed", "lr", "final_loss", "osc_total", "proxy_stationarity"]);
    let osc = |name: &str| f(&data.iter().find(|r| r[0] == name).unwrap()[col(&head, "osc_total")]);
    assert!(osc("leon") < osc("muon"), "leon {} muon {}", osc("leon"), osc("muon"));

    let (head, trace) = rows(&dir.path().join("optimize_leon_lr0.1_seed0.csv"));
    assert_eq!(
        head,
        ["step", "optimizer", "lr_or_D", "loss", "grad_ema_nuc", "direction_opnorm", "osc_partial", "seed"]
    );
    assert_eq!(trace.len(), 300);
    assert!(trace.windows(2).all(|w| f(&w[0][0]) < f(&w[1][0])));
    // One panel per optimizer, one path per learning rate.
    assert_eq!(svg_polylines(&dir.path().join("optimize_paths.svg")), 2);
}

#[test]
fn optimize_from_zero_starts_at_half() {
    let dir = tempfile::tempdir().unwrap();
    bench(dir.path())
        .args(["optimize", "--optimizer", "pion", "--init-scale", "0", "--steps", "3", "--lrs", "0.01", "--no-plot"])
        .assert()
        .success();
    let path = dir.path().join("optimize_pion_lr0.01_seed0.csv");
    assert!(std::fs::read_to_string(&path).unwrap().contains("# initial_loss: 0.5\n"));
    assert!(!dir.path().join("optimize_paths.svg").exists());
}

#[test]
fn kernels_match_oracles_and_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    bench(dir.path()).args(["kernels", "--sizes", "2,4,8,16", "--instances", "3"]).assert().success();
    let (head, data) = rows(&dir.path().join("kernels.csv"));
    let (m, n, it) = (col(&head, "m"), col(&head, "n"), col(&head, "iterations"));
    let mut aug = 0;
    for r in &data {
        assert!(f(&r[col(&head, "residual")]) <= 1e-6);
        if r[0] == "augpolar" {
            let (m, n, k) = (f(&r[m]), f(&r[n]), f(&r[it]));
            let expected = 4.0 * m * m * n + k * (2.0 * m * m * n + 4.0 * m * m * m);
            assert_eq!(f(&r[col(&head, "flops_estimate")]), expected);
            aug += 1;
        }
    }
    // Pairs m ≤ n from {2,4,8,16}, three instances each.
    assert_eq!(aug, 10 * 3);
    let diag = data.iter().find(|r| r[col(&head, "instance")] == "diag(4;9)").unwrap();
    assert!(f(&diag[col(&head, "residual")]) < 1e-9);
}

#[test]
fn kernels_fail_on_impossible_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    bench(dir.path())
        .args([
            "kernels",
            "--kernel",
            "polar",
            "--sizes",
            "4",
            "--instances",
            "2",
            "--tol",
            "1e-30",
            "--max-iters",
            "3",
        ])
        .assert()
        .code(2)
        .stderr(contains("polar"));
}

#[test]
fn csv_bodies_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        bench(dir.path())
            .args(["regret", "--learner", "ftpl", "--m", "2", "--n", "5", "--T", "30", "--k", "16"])
            .assert()
            .success();
        bench(dir.path())
            .args(["optimize", "--optimizer", "pion", "--steps", "20", "--lrs", "0.1,0.01", "--seeds", "2"])
            .assert()
            .success();
    }
    for name in ["regret_ftpl_gaussian.csv", "optimize_pion_lr0.1_seed1.csv", "final_report.csv"] {
        assert_eq!(body(&a.path().join(name)), body(&b.path().join(name)), "{name}");
    }
}

#[test]
fn config_file_is_echoed_and_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.ini");
    std::fs::write(&cfg, "[run]\nseed = 5\n\n[regret]\nlearner = ftrl\nT = 7\nm = 2\nn = 3\n").unwrap();
    bench(dir.path()).args(["regret", "--config"]).arg(&cfg).args(["--T", "9"]).assert().success();
    let path = dir.path().join("regret_ftrl_gaussian.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("# seed: 5\n"));
    assert!(text.contains("# spec | T = 9\n"));
    assert!(text.contains("# spec_sha256: "));
    assert_eq!(rows(&path).1.len(), 9);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    std::fs::write(&cfg, "[regret]\nhorizon = 7\n").unwrap();
    bench(dir.path()).args(["regret", "--config"]).arg(&cfg).assert().code(1).stderr(contains("unknown key"));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    Command::cargo_bin("olo-bench")
        .unwrap()
        .env("OLO_BENCH_OUT_DIR", dir.path())
        .args(["regret", "--T", "3", "--no-plot"])
        .assert()
        .success();
    assert!(dir.path().join("regret_faml_gaussian.csv").exists());
}
