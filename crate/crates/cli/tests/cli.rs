//! Integration tests against the compiled binary: exit-code taxonomy,
//! machine-readable error output, sensitive-field gating, byte determinism
//! of generated files, and config/flag precedence.

use std::fs;
use std::path::Path;
use std::process::Command;

use r0dp::graph::{serialize_graph, GraphFormat};
use r0dp::mechanisms::{
    calibrate_gaussian, calibrate_laplace, input_perturb, output_perturb, AllocationMode,
    PrivacyBudget,
};
use r0dp::spectral::spectral_radius;
use r0dp::{Matrix, SeededRng, WeightBounds, WeightedGraph};
use r0dp_cli::CliError;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_r0dp"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("failed to spawn the binary");
    (
        out.status.code().expect("binary was killed by a signal"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn error_kind(stderr: &str) -> (String, i64) {
    let v: Value = serde_json::from_str(stderr.trim()).expect("stderr is not a JSON object");
    let e = &v["error"];
    assert!(
        !e["message"].as_str().unwrap_or("").is_empty(),
        "error object carries no message: {stderr}"
    );
    (e["kind"].as_str().unwrap().to_string(), e["exit_code"].as_i64().unwrap())
}

/// Complete 15-node graph with every weight 0.25 and bounds (0.2, 0.3],
/// written to `path` in the edge-list format.
fn write_complete_15(path: &Path) {
    let n = 15;
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, 0.25);
        }
    }
    let g = WeightedGraph::new(m, true).unwrap();
    let bounds = WeightBounds::global(&g, 0.2, 0.3).unwrap();
    fs::write(path, serialize_graph(&g, &bounds, GraphFormat::EdgeListCsv).unwrap()).unwrap();
}

fn collect_keys_and_numbers(v: &Value, keys: &mut Vec<String>, numbers: &mut Vec<f64>) {
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                keys.push(k.clone());
                collect_keys_and_numbers(inner, keys, numbers);
            }
        }
        Value::Array(items) => {
            for inner in items {
                collect_keys_and_numbers(inner, keys, numbers);
            }
        }
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                numbers.push(f);
            }
        }
        _ => {}
    }
}

#[test]
fn exit_codes_follow_the_error_taxonomy() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.csv");

    let (code, stdout, _) = run(&[
        "gen-graph",
        "--n",
        "10",
        "--edges",
        "20",
        "--seed",
        "7",
        "--out",
        graph.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "gen-graph failed: {stdout}");

    let (code, _, stderr) = run(&["release", "--graph", "/nonexistent/graph.csv", "--epsilon", "5"]);
    assert_eq!(code, 1);
    let (kind, reported) = error_kind(&stderr);
    assert_eq!(kind, "io");
    assert_eq!(reported, 1);

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "garbage\nnot,a,graph\n").unwrap();
    let (code, _, stderr) = run(&["release", "--graph", bad.to_str().unwrap(), "--epsilon", "5"]);
    assert_eq!(code, 2);
    let (kind, reported) = error_kind(&stderr);
    assert_eq!(kind, "parse");
    assert_eq!(reported, 2);

    let (code, _, _) = run(&["release", "--graph", graph.to_str().unwrap(), "--no-such-flag"]);
    assert_eq!(code, 2, "argument errors must exit 2");

    let (code, _, stderr) = run(&[
        "simulate",
        "--graph",
        graph.to_str().unwrap(),
        "--gamma",
        "0.5",
        "--step",
        "40",
        "--t-max",
        "400",
    ]);
    assert_eq!(code, 4);
    let (kind, reported) = error_kind(&stderr);
    assert_eq!(kind, "instability");
    assert_eq!(reported, 4);

    let infeasible = CliError::Core(r0dp::Error::InfeasibleBudget("budget too small".into()));
    assert_eq!(infeasible.exit_code(), 3);
    assert_eq!(infeasible.kind(), "infeasible-budget");
    let numeric = CliError::Core(r0dp::Error::NumericDomain("mass underflow".into()));
    assert_eq!(numeric.exit_code(), 4);
    assert_eq!(numeric.kind(), "numeric-domain");
}

#[test]
fn release_hides_sensitive_values_unless_revealed() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("complete15.csv");
    write_complete_15(&graph);
    let args = [
        "release",
        "--graph",
        graph.to_str().unwrap(),
        "--epsilon",
        "5",
        "--seed",
        "11",
    ];

    let (code, stdout, _) = run(&args);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    let mut keys = Vec::new();
    let mut numbers = Vec::new();
    collect_keys_and_numbers(&report, &mut keys, &mut numbers);
    assert!(!keys.iter().any(|k| k == "r0_true"), "default output leaks the r0_true field");
    assert!(
        !keys.iter().any(|k| k == "error_moments"),
        "default output leaks output-mechanism error moments"
    );
    assert!(
        report["input"]["accuracy"]["penetration"].is_null(),
        "default output leaks the penetration bound, which is a function of the true R0"
    );
    for &x in &numbers {
        assert!(
            (x - 3.75).abs() > 1e-9,
            "default output contains a value within 1e-9 of the true R0: {x}"
        );
        assert!(
            (x - 0.25).abs() > 1e-12,
            "default output contains a raw weight value: {x}"
        );
    }

    let mut reveal_args = args.to_vec();
    reveal_args.push("--reveal-true");
    let (code, stdout, _) = run(&reveal_args);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    let r0_true = report["r0_true"].as_f64().expect("--reveal-true must include r0_true");
    assert!((r0_true - 3.75).abs() < 1e-9);
    assert!(
        report["input"]["accuracy"]["penetration"].is_object(),
        "--reveal-true must include the penetration bound"
    );
    let released = report["input"]["r0_released"].as_f64().unwrap();
    assert!(released > 0.0 && (released - r0_true).abs() > 1e-9, "release must be perturbed");
}

#[test]
fn gen_graph_is_deterministic_and_counts_entries() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = ["gen-graph", "--n", "20", "--edges", "100", "--seed", "7", "--out"];

    let (code, out_a, _) = run(&[&base[..], &[a.to_str().unwrap()]].concat());
    assert_eq!(code, 0);
    let (code, _, _) = run(&[&base[..], &[b.to_str().unwrap()]].concat());
    assert_eq!(code, 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "same seed, different bytes");

    let report: Value = serde_json::from_str(&out_a).unwrap();
    assert_eq!(report["n"].as_u64(), Some(20));
    assert_eq!(report["entries"].as_u64(), Some(120), "20 self-loops plus 100 edges");

    let tiny = dir.path().join("tiny.csv");
    let (code, out, _) = run(&[
        "gen-graph",
        "--n",
        "2",
        "--edges",
        "1",
        "--seed",
        "3",
        "--out",
        tiny.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["entries"].as_u64(), Some(3), "2 self-loops plus 1 edge");

    let json_graph = dir.path().join("g.json");
    let (code, _, _) = run(&[
        "gen-graph",
        "--n",
        "6",
        "--edges",
        "8",
        "--seed",
        "5",
        "--out",
        json_graph.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    serde_json::from_str::<Value>(&fs::read_to_string(&json_graph).unwrap())
        .expect("dense format must be valid JSON");
    let (code, _, stderr) =
        run(&["release", "--graph", json_graph.to_str().unwrap(), "--epsilon", "5"]);
    assert_eq!(code, 0, "release on the dense format failed: {stderr}");
}

#[test]
fn experiment_outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d1 = dir.path().join("run1");
    let d2 = dir.path().join("run2");
    let base = [
        "experiment",
        "--n",
        "8",
        "--edges",
        "12",
        "--wmax",
        "1.5",
        "--trials",
        "5",
        "--graphs",
        "2",
        "--epsilons",
        "1,5",
        "--out-dir",
    ];

    let (code, _, stderr) =
        run_env(&[&base[..], &[d1.to_str().unwrap()]].concat(), &[("RAYON_NUM_THREADS", "1")]);
    assert_eq!(code, 0, "experiment failed: {stderr}");
    let (code, _, stderr) =
        run_env(&[&base[..], &[d2.to_str().unwrap()]].concat(), &[("RAYON_NUM_THREADS", "3")]);
    assert_eq!(code, 0, "experiment failed: {stderr}");

    for file in
        ["error_vs_epsilon.csv", "histogram.csv", "penetration_deviation.csv", "sir_validation.csv"]
    {
        let x = fs::read(d1.join(file)).unwrap();
        let y = fs::read(d2.join(file)).unwrap();
        assert_eq!(x, y, "{file} differs between runs with different worker counts");
    }
}

#[test]
fn experiment_config_file_is_loaded_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"n": 6, "edges": 9, "w-max": 1.5, "trials": 3, "graphs": 2, "epsilons": [2.0]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");

    let (code, stdout, stderr) = run(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "4",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "experiment failed: {stderr}");
    let summary: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary["trials"].as_u64(), Some(4), "the --trials flag must override the config");
    assert_eq!(summary["graphs"].as_u64(), Some(2), "graphs must come from the config file");

    let histogram = fs::read_to_string(out.join("histogram.csv")).unwrap();
    let data_rows = histogram.lines().count() - 1;
    assert_eq!(data_rows, 16, "2 graphs x 4 trials x 1 epsilon x 2 mechanisms");

    let bad_cfg = dir.path().join("bad.json");
    fs::write(&bad_cfg, r#"{"trails": 3}"#).unwrap();
    let (code, _, stderr) = run(&[
        "experiment",
        "--config",
        bad_cfg.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "unknown config keys must be rejected: {stderr}");
}

#[test]
fn huge_budget_recovers_the_true_radius() {
    let n = 15;
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, 0.25);
        }
    }
    let g = WeightedGraph::new(m, true).unwrap();
    let bounds = WeightBounds::global(&g, 0.2, 0.3).unwrap();
    let r0 = spectral_radius(g.weights()).unwrap().value;
    let budget = PrivacyBudget::new(1e6, 0.01).unwrap();
    let gauss = calibrate_gaussian(&g, &bounds, budget, AllocationMode::Conservative).unwrap();
    let laplace = calibrate_laplace(budget, 4.5).unwrap();

    for seed in 0..100u64 {
        let mut rng = SeededRng::new(seed, 1);
        let perturbed = input_perturb(&g, &bounds, &gauss, &mut rng).unwrap();
        let released = spectral_radius(perturbed.weights()).unwrap().value;
        assert!(
            (released - r0).abs() < 0.01,
            "seed {seed}: input release {released} not within 0.01 of {r0} at epsilon 1e6"
        );
        let released = output_perturb(r0, &laplace, &mut rng).unwrap();
        assert!(
            (released - r0).abs() < 0.01,
            "seed {seed}: output release {released} not within 0.01 of {r0} at epsilon 1e6"
        );
    }
}

#[test]
fn validate_penetration_is_deterministic_and_the_bound_holds() {
    let args = [
        "validate-penetration",
        "--count",
        "3",
        "--n",
        "8",
        "--edges",
        "12",
        "--wmax",
        "1.5",
        "--epsilon",
        "5",
        "--seed",
        "7",
    ];
    let (code, first, stderr) = run(&args);
    assert_eq!(code, 0, "validate-penetration failed: {stderr}");
    let (code, second, _) = run(&args);
    assert_eq!(code, 0);
    assert_eq!(first, second, "same seed must reproduce the table byte for byte");

    let mut lines = first.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "graph_id,r0,r0_private,inv_r0,inv_r0_private,min_s,holds_true_bound,holds_private_bound"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[6], "true", "penetration inequality failed on: {row}");
    }
}
