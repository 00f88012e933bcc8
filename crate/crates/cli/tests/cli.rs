use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mmc_core::harness::{write_pgm, PhaseGrid};
use mmc_core::model::io::{load_mask, load_matrix, read_observed, save, write_mask, write_observed};
use mmc_core::{DenseMatrix, Mask, ObservedMixture};

fn mmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmc")).args(args).output().expect("mmc runs")
}

fn ok(args: &[&str]) -> String {
    let out = mmc(args);
    assert!(
        out.status.success(),
        "mmc {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_then_run_recovers_from_true_subspaces() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    ok(&[
        "gen", "--d", "40", "--n", "40", "--r", "2", "--k", "2", "--p", "1", "--seed", "3", "--out-dir", p(&data),
    ]);
    for f in ["truth_1", "truth_2", "basis_1", "init_2", "assignments", "observed"] {
        assert!(data.join(format!("{f}.mtx.txt")).exists(), "{f}");
    }
    let out = tmp.path().join("run");
    let stdout = ok(&[
        "run",
        "--in",
        p(&data.join("observed.mtx.txt")),
        "--k",
        "2",
        "--r",
        "2",
        "--init-dir",
        p(&data),
        "--restarts",
        "10",
        "--out-dir",
        p(&out),
    ]);
    assert!(stdout.contains("converged=true"), "{stdout}");
    let log: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run_log.json")).unwrap()).unwrap();
    assert_eq!(log["converged"], true);
    assert!(log["assignment_changes"].as_array().unwrap().len() >= 2);
    let outliers = load_mask(out.join("outliers.mtx.txt")).unwrap();
    assert_eq!(outliers.count_ones(), 0);
    let m1 = load_mask(out.join("mask_1.mtx.txt")).unwrap();
    let m2 = load_mask(out.join("mask_2.mtx.txt")).unwrap();
    assert!(m1.is_disjoint(&m2));
    assert_eq!(m1.count_ones() + m2.count_ones(), 1600);
    let best = (1..=2)
        .map(|k| {
            let t = load_matrix(data.join(format!("truth_{k}.mtx.txt"))).unwrap();
            (1..=2)
                .map(|l| t.relative_error(&load_matrix(out.join(format!("completion_{l}.mtx.txt"))).unwrap()).unwrap())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    assert!(best < 1e-8, "{best}");
}

#[test]
fn run_with_random_init_writes_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    ok(&["gen", "--d", "12", "--n", "10", "--r", "1", "--k", "2", "--p", "0.8", "--out-dir", p(&data)]);
    let out = tmp.path().join("run");
    ok(&[
        "run",
        "--in",
        p(&data.join("observed.mtx.txt")),
        "--k",
        "2",
        "--r",
        "1",
        "--init",
        "random",
        "--seed",
        "4",
        "--sigma2",
        "1e6",
        "--cap",
        "8",
        "--out-dir",
        p(&out),
    ]);
    for f in ["completion_1", "completion_2", "mask_1", "mask_2", "outliers"] {
        assert!(out.join(format!("{f}.mtx.txt")).exists(), "{f}");
    }
    let bad = mmc(&[
        "run", "--in", p(&data.join("observed.mtx.txt")), "--k", "2", "--r", "1", "--init", "spectral", "--out-dir", p(&out),
    ]);
    assert!(!bad.status.success());
}

#[test]
fn check_pattern_reports_verdict_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let mask_path = tmp.path().join("mask.mtx.txt");
    let good = Mask::from_column_supports(4, &[vec![0, 1], vec![1, 2], vec![2, 3]]).unwrap();
    save(&mask_path, &write_mask(&good)).unwrap();
    for method in ["flow", "exhaustive"] {
        let out = ok(&["check-pattern", "--mask", p(&mask_path), "--r", "1", "--method", method]);
        assert!(out.lines().any(|l| l == format!("PASS method={method} witness=none")), "{out}");
    }
    let bad = Mask::from_column_supports(4, &[vec![0, 1], vec![0, 1], vec![2, 3]]).unwrap();
    save(&mask_path, &write_mask(&bad)).unwrap();
    let out = ok(&["check-pattern", "--mask", p(&mask_path), "--r", "1", "--method", "exhaustive"]);
    assert!(out.lines().any(|l| l.starts_with("FAIL method=exhaustive witness=cols:")), "{out}");
    let unknown = mmc(&["check-pattern", "--mask", p(&mask_path), "--r", "1", "--method", "magic"]);
    assert!(!unknown.status.success());
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("available"));
}

#[test]
fn check_pattern_search_finds_partition() {
    let tmp = tempfile::tempdir().unwrap();
    let mask_path = tmp.path().join("full.mtx.txt");
    let full = Mask::ones(7, 14);
    save(&mask_path, &write_mask(&full)).unwrap();
    let out = ok(&["check-pattern", "--mask", p(&mask_path), "--r", "1", "--search", "--budget", "4", "--seed", "2"]);
    let line = out.lines().last().unwrap();
    assert!(line.starts_with("PASS method=search+flow witness=partition:"), "{out}");
}

#[test]
fn complete_recovers_low_rank_matrix() {
    let tmp = tempfile::tempdir().unwrap();
    let truth = mmc_core::synth::gaussian_low_rank(30, 25, 2, 8, 0);
    let mask = mmc_core::synth::sample_bernoulli(30, 25, 0.6, 8).unwrap();
    let obs = ObservedMixture::full(truth.clone()).restrict_to(&mask).unwrap();
    let input = tmp.path().join("obs.mtx.txt");
    save(&input, &write_observed(&obs)).unwrap();
    assert_eq!(read_observed(&fs::read_to_string(&input).unwrap()).unwrap(), obs);
    for method in ["alt-min", "hard-svt"] {
        let out_path = tmp.path().join(format!("{method}.mtx.txt"));
        let max_iters = if method == "hard-svt" { "5000" } else { "500" };
        let stdout = ok(&[
            "complete", "--in", p(&input), "--r", "2", "--method", method, "--tol", "1e-13", "--max-iters", max_iters,
            "--out", p(&out_path),
        ]);
        assert!(stdout.starts_with(&format!("method={method}")));
        let est = load_matrix(&out_path).unwrap();
        assert!(truth.relative_error(&est).unwrap() < 1e-5, "{method}: {stdout}");
    }
}

#[test]
fn example1_passes_and_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ex1.json");
    let stdout = ok(&["example1", "--out", p(&out)]);
    for clause in ["(a) PASS", "(b) PASS", "(c) PASS", "(d) PASS"] {
        assert!(stdout.contains(clause), "{stdout}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report["clauses"].as_array().unwrap().len(), 4);
    assert_eq!(report["extra_false_agrees"], false);
}

#[test]
fn theorem2_rejects_vacuous_bound() {
    let out = mmc(&["theorem2", "--d", "100", "--r", "5", "--eps", "0.05", "--trials", "2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("increase d or epsilon"));
    let stdout = ok(&["theorem2", "--d", "200", "--r", "2", "--eps", "0.5", "--trials", "2", "--seed", "1"]);
    assert!(stdout.contains("WITHIN BOUND"), "{stdout}");
}

#[test]
fn phase_writes_csv_and_trial_log_with_config_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("phase.cfg");
    fs::write(
        &cfg,
        "# small grid\nd = 30\nn = 30\nr = 2\np = 0.0, 1.0\ndelta = 0\ntrials = 5\nseed = 11\nworkers = 1\n",
    )
    .unwrap();
    let out = tmp.path().join("grid");
    ok(&["phase", "--config", p(&cfg), "--trials", "2", "--out-dir", p(&out)]);
    let csv = fs::read_to_string(out.join("phase.csv")).unwrap();
    let grid = PhaseGrid::from_csv(&csv, 2).unwrap();
    assert_eq!(grid.p_values, vec![0.0, 1.0]);
    assert_eq!(grid.rate(0, 0), 0.0);
    let log = fs::read_to_string(out.join("trials.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 4);
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(first["d"], 30);
    assert!(first.get("wall_time").is_none());
    for key in ["p", "delta", "seed", "per_component_error", "success", "outer_iters"] {
        assert!(first.get(key).is_some(), "{key}");
    }

    let timed = tmp.path().join("timed");
    ok(&["phase", "--config", p(&cfg), "--trials", "1", "--timings", "--out-dir", p(&timed)]);
    let log = fs::read_to_string(timed.join("trials.jsonl")).unwrap();
    assert!(log.lines().all(|l| l.contains("\"wall_time\"")));

    let bad = mmc(&["phase", "--p", "0.5,0.2", "--delta", "0", "--trials", "1", "--out-dir", p(&out)]);
    assert!(!bad.status.success());
}

#[test]
fn mix_images_writes_mixture_and_flags_identical_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = DenseMatrix::from_fn(12, 9, |i, j| ((i * 17 + j * 5) % 256) as f64).unwrap();
    let b = DenseMatrix::from_fn(12, 9, |i, j| (255 - (i * 3 + j * 11) % 256) as f64).unwrap();
    let (pa, pb) = (tmp.path().join("a.pgm"), tmp.path().join("b.pgm"));
    fs::write(&pa, write_pgm(&a)).unwrap();
    fs::write(&pb, write_pgm(&b)).unwrap();
    let out = tmp.path().join("mix");
    ok(&["mix-images", "--a", p(&pa), "--b", p(&pb), "--seed", "5", "--out-dir", p(&out)]);
    let mixed = mmc_core::harness::read_pgm(&fs::read(out.join("mixture.pgm")).unwrap()).unwrap();
    assert_eq!(mixed.shape(), (12, 9));
    assert!((0..12).all(|i| (0..9).all(|j| mixed.get(i, j) == a.get(i, j) || mixed.get(i, j) == b.get(i, j))));
    let same = ok(&["mix-images", "--a", p(&pa), "--b", p(&pa), "--out-dir", p(&out)]);
    assert!(same.contains("identical"));

    let rec = tmp.path().join("rec");
    let stdout = ok(&[
        "mix-images", "--a", p(&pa), "--b", p(&pb), "--recover", "--r", "2", "--out-dir", p(&rec),
    ]);
    assert!(stdout.contains("classification_error="));
    assert!(rec.join("recovered_1.pgm").exists());
    assert!(rec.join("report.json").exists());
}
