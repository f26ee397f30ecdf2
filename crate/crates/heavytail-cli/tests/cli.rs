//! End-to-end tests of the binary: exit codes, output formats,
//! determinism and manifest replay.

use std::path::Path;
use std::process::{Command, Output};

fn heavytail() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_heavytail"));
    cmd.env_remove("HEAVYTAIL_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    heavytail().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn kv_value(text: &str, key: &str) -> f64 {
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix(&format!("{key} = ")) {
            return rest.parse().unwrap_or(f64::NAN);
        }
    }
    panic!("missing key {key} in:\n{text}");
}

#[test]
fn constants_hand_values() {
    let out = run(&[
        "constants",
        "--alpha",
        "0.5",
        "--alpha-prime",
        "0.5",
        "--r",
        "3",
        "--C",
        "0",
        "--nu-alpha",
        "2.5",
        "--delta",
        "0.05",
        "--c",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!((kv_value(&text, "beta") - 0.4166667).abs() < 1e-6);
    assert!((kv_value(&text, "gamma") - 0.3333333).abs() < 1e-6);
    assert!(text.contains("n1 = undefined"));
}

#[test]
fn constants_independent_rate() {
    let out = run(&[
        "constants",
        "--alpha",
        "0.4",
        "--alpha-prime",
        "0.2",
        "--r",
        "inf",
        "--nu-alpha",
        "1.0",
        "--delta",
        "0.05",
        "--c",
        "c0",
        "--json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let beta = json["beta"].as_f64().unwrap();
    let gamma = json["gamma"].as_f64().unwrap();
    assert!((beta - 0.4 / 1.4).abs() < 1e-12);
    assert_eq!(beta, gamma);
    assert!(json["c0"].as_f64().unwrap() > 1.0);
}

#[test]
fn constants_rejects_bad_delta() {
    let out = run(&[
        "constants",
        "--alpha",
        "0.5",
        "--alpha-prime",
        "0.5",
        "--r",
        "3",
        "--nu-alpha",
        "2.5",
        "--delta",
        "1.5",
        "--c",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("delta"));
}

#[test]
fn simulate_is_deterministic_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out_path in [&out_a, &out_b] {
        let out = run(&[
            "simulate",
            "--kind",
            "symmetric_pareto",
            "--tail-exponent",
            "2.5",
            "--n",
            "200",
            "--seed",
            "42",
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with(b"x\n"));

    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["parameters"]["n"], "200");
}

#[test]
fn simulate_manifest_replay_reproduces_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("path.csv");
    let out = run(&[
        "simulate",
        "--kind",
        "pareto",
        "--tail-exponent",
        "3.0",
        "--scale",
        "2.0",
        "--n",
        "64",
        "--seed",
        "7",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let first = std::fs::read(&out_path).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("path.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    // Re-run strictly from manifest contents.
    let p = &manifest["parameters"];
    let replay = dir.path().join("replay.csv");
    let out = run(&[
        "simulate",
        "--kind",
        p["kind"].as_str().unwrap(),
        "--tail-exponent",
        p["tail_exponent"].as_str().unwrap(),
        "--scale",
        p["scale"].as_str().unwrap(),
        "--location",
        p["location"].as_str().unwrap(),
        "--n",
        p["n"].as_str().unwrap(),
        "--seed",
        p["seed"].as_str().unwrap(),
        "--out",
        replay.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(first, std::fs::read(&replay).unwrap());
}

#[test]
fn simulate_seed_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let out_flag = dir.path().join("flag.csv");
    let out_env = dir.path().join("env.csv");
    assert!(run(&[
        "simulate",
        "--kind",
        "symmetric_pareto",
        "--tail-exponent",
        "2.5",
        "--n",
        "50",
        "--seed",
        "1",
        "--out",
        out_flag.to_str().unwrap(),
    ])
    .status
    .success());
    let out = heavytail()
        .env("HEAVYTAIL_SEED", "99")
        .args([
            "simulate",
            "--kind",
            "symmetric_pareto",
            "--tail-exponent",
            "2.5",
            "--n",
            "50",
            "--seed",
            "1",
            "--out",
            out_env.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_ne!(std::fs::read(&out_flag).unwrap(), std::fs::read(&out_env).unwrap());
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("env.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 99);
}

#[test]
fn simulate_rejects_invalid_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.csv");
    let out = run(&[
        "simulate",
        "--kind",
        "symmetric_pareto",
        "--tail-exponent",
        "2.5",
        "--n",
        "0",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Moment condition violated: alpha = 0.9 with tail exponent 1.5.
    let out = run(&[
        "simulate",
        "--kind",
        "pareto",
        "--tail-exponent",
        "1.5",
        "--alpha",
        "0.9",
        "--n",
        "10",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("1+alpha exceeds tail exponent"), "{}", stderr(&out));
}

#[test]
fn simulate_from_descriptor_json() {
    let dir = tempfile::tempdir().unwrap();
    let gen_path = dir.path().join("gen.json");
    std::fs::write(
        &gen_path,
        r#"{"kind":"symmetric_pareto","tail_exponent":2.5,"scale":1.0,"location":0.0,
            "transition":[[0.9,0.1],[0.1,0.9]],"emission_scale":[0.5,1.5],
            "seed":3,"C":75.4884,"r":3.0}"#,
    )
    .unwrap();
    let out_path = dir.path().join("path.csv");
    let out = run(&[
        "simulate",
        "--gen",
        gen_path.to_str().unwrap(),
        "--n",
        "100",
        "--seed",
        "3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn decompose_and_estimate_round() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    std::fs::write(&data, "x\n1.0\n-2.0\n5.0\n").unwrap();

    let parts = dir.path().join("parts.csv");
    let out = run(&[
        "decompose",
        "--data",
        data.to_str().unwrap(),
        "--b",
        "3.0",
        "--out",
        parts.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&parts).unwrap();
    assert!(text.starts_with("x,main,tail\n"));
    assert_eq!(text.lines().count(), 4);
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(summary["centering"], "none");

    let out = run(&["estimate", "--data", data.to_str().unwrap(), "--estimator", "mean"]);
    assert!(out.status.success());
    let rep: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((rep["value"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-12);

    let out =
        run(&["estimate", "--data", data.to_str().unwrap(), "--estimator", "huber", "--h", "1.0"]);
    assert!(out.status.success());
    let rep: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rep["estimator"], "huber");

    let out = run(&["estimate", "--data", data.to_str().unwrap(), "--estimator", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_hill_and_truncated() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let out = run(&[
        "simulate",
        "--kind",
        "student_t",
        "--tail-exponent",
        "3.0",
        "--n",
        "500",
        "--seed",
        "2",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let out = run(&["estimate", "--data", data.to_str().unwrap(), "--estimator", "hill"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rep: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    // Default k = ceil(500^0.6) = 42.
    assert_eq!(rep["parameters"]["k"], "42");
    assert!(rep["value"].as_f64().unwrap() > 0.0);

    let out = run(&[
        "estimate",
        "--data",
        data.to_str().unwrap(),
        "--estimator",
        "truncated",
        "--b-scale",
        "3.0",
        "--delta",
        "0.05",
        "--alpha",
        "0.5",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rep: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rep["estimator"], "truncated");
    assert_eq!(rep["n"], 500);

    // Missing required parameter for the chosen estimator.
    let out = run(&["estimate", "--data", data.to_str().unwrap(), "--estimator", "truncated"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_outputs_do_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
            "generator": {"kind":"symmetric_pareto","tail_exponent":2.5,"scale":1.0,"location":0.0,"seed":1,"C":0.0,"r":"inf"},
            "moments": {"alpha":0.5,"alpha_prime":0.5,"nu_alpha":2.5},
            "delta": 0.05,
            "c": 1.0,
            "n_grid": [100, 400, 1600],
            "replicates": 60,
            "master_seed": 11
        }"#,
    )
    .unwrap();
    let out1 = dir.path().join("run1");
    let out8 = dir.path().join("run8");
    for (dir_out, jobs) in [(&out1, "1"), (&out8, "8")] {
        let out = run(&[
            "experiment",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir_out.to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let report1 = std::fs::read(out1.join("report.json")).unwrap();
    let report8 = std::fs::read(out8.join("report.json")).unwrap();
    assert_eq!(report1, report8);
    let table1 = std::fs::read(out1.join("rate_table.csv")).unwrap();
    let table8 = std::fs::read(out8.join("rate_table.csv")).unwrap();
    assert_eq!(table1, table8);
    assert!(table1.starts_with(b"n,exceedance,bound,main_norm,tail_norm\n"));
    assert!(out1.join("manifest.json").exists());
}

#[test]
fn experiment_error_paths() {
    let dir = tempfile::tempdir().unwrap();
    // Missing config file: environment error.
    let out = run(&[
        "experiment",
        "--config",
        dir.path().join("absent.json").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    // Invalid config: usage error.
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"nope\": true}").unwrap();
    let out = run(&[
        "experiment",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_minimal_and_error_paths() {
    let dir = tempfile::tempdir().unwrap();
    let prices = dir.path().join("prices.csv");
    std::fs::write(
        &prices,
        "date,close\n2020-01-01,100\n2020-01-02,105\n2020-01-03,104\n2020-01-06,108\n",
    )
    .unwrap();
    let out = run(&["analyze", "--prices", prices.to_str().unwrap(), "--max-lag", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rep: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rep["n"], 3);

    let out = run(&["analyze", "--prices", dir.path().join("no.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "date,close\n2020-01-01,-5\n2020-01-02,3\n").unwrap();
    let out = run(&["analyze", "--prices", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["analyze", "--prices", prices.to_str().unwrap(), "--k-grid", "1,zap"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_out_dir_writes_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let prices = dir.path().join("prices.csv");
    let mut text = String::from("date,close\n");
    let mut date = chrono_lite_date(2021, 1, 1);
    let mut close = 100.0f64;
    for i in 0..200 {
        text.push_str(&format!("{date},{close}\n"));
        date = next_date(&date);
        close *= 1.0 + 0.01 * ((i % 7) as f64 - 3.0) / 10.0;
    }
    std::fs::write(&prices, text).unwrap();
    let out_dir = dir.path().join("report");
    let out = run(&[
        "analyze",
        "--prices",
        prices.to_str().unwrap(),
        "--max-lag",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let on_disk = std::fs::read_to_string(out_dir.join("report.json")).unwrap();
    assert_eq!(on_disk, stdout(&out).trim_end_matches('\n'));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "analyze");
    assert_eq!(manifest["parameters"]["max_lag"], "5");
}

#[test]
fn analyze_recovers_pareto_tail_index() {
    // Build a synthetic price file whose log returns are symmetric Pareto
    // with index 2.5, then check the Hill curve is centered near 2.5.
    let dir = tempfile::tempdir().unwrap();
    let path_csv = dir.path().join("returns.csv");
    let out = run(&[
        "simulate",
        "--kind",
        "symmetric_pareto",
        "--tail-exponent",
        "2.5",
        "--n",
        "20000",
        "--seed",
        "5",
        "--out",
        path_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let returns: Vec<f64> = std::fs::read_to_string(&path_csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.parse().unwrap())
        .collect();
    let mut closes = vec![100.0f64];
    for r in &returns {
        let next = closes.last().unwrap() * (r / 100.0).exp();
        closes.push(next);
    }
    let mut text = String::from("date,close\n");
    let mut date = chrono_lite_date(1950, 1, 1);
    for c in &closes {
        text.push_str(&format!("{date},{c:e}\n"));
        date = next_date(&date);
    }
    let prices = dir.path().join("prices.csv");
    std::fs::write(&prices, text).unwrap();

    let out = run(&["analyze", "--prices", prices.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rep: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let hill = rep["hill"].as_array().unwrap();
    assert!(!hill.is_empty());
    for point in hill {
        let idx = point["index"].as_f64().unwrap();
        assert!((2.0..=3.0).contains(&idx), "hill index {idx}");
    }
}

// Minimal Gregorian date stepping for synthetic files (no leap-year
// subtleties needed beyond the standard rule).
fn chrono_lite_date(y: u32, m: u32, d: u32) -> String {
    format!("{y:04}-{m:02}-{d:02}")
}

fn next_date(date: &str) -> String {
    let y: u32 = date[0..4].parse().unwrap();
    let m: u32 = date[5..7].parse().unwrap();
    let d: u32 = date[8..10].parse().unwrap();
    let leap = (y.is_multiple_of(4) && !y.is_multiple_of(100)) || y.is_multiple_of(400);
    let days = match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        _ => {
            if leap {
                29
            } else {
                28
            }
        }
    };
    if d < days {
        chrono_lite_date(y, m, d + 1)
    } else if m < 12 {
        chrono_lite_date(y, m + 1, 1)
    } else {
        chrono_lite_date(y + 1, 1, 1)
    }
}

#[test]
fn shipped_configs_parse_and_are_consistent() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    for name in ["configs/iid_pareto.json", "configs/markov_pareto.json"] {
        let text = std::fs::read_to_string(root.join(name)).unwrap();
        let cfg: heavytail::experiments::ExperimentConfig =
            serde_json::from_str(&text).unwrap_or_else(|e| panic!("{name} does not validate: {e}"));
        assert!(cfg.constants().is_ok(), "{name}");
    }
}
