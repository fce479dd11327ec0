use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const ANOVA_CSV: &str = "y,g\n1,A\n1,A\n1,A\n3,B\n3,B\n3,B\n5,C\n5,C\n5,C\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_srobust"))
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn fit_exact_anova() {
    let data = scratch("anova_fit.csv", ANOVA_CSV);
    let out = run(&["fit", "--data", data.to_str().unwrap(), "--formula", "y ~ g", "--nsamp", "50"]);
    let v = json_of(&out);
    let beta = floats(&v["beta"]);
    for (b, want) in beta.iter().zip([1.0, 2.0, 4.0]) {
        assert!((b - want).abs() < 1e-12, "beta = {beta:?}");
    }
    assert_eq!(v["sigma"].as_f64(), Some(0.0));
    assert_eq!(v["coefficients"]["gC"].as_f64().map(|b| (b - 4.0).abs() < 1e-12), Some(true));
    assert_eq!(v["config"]["method"], "nonsingular");
    assert_eq!(v["diagnostics"]["candidates_evaluated"], 50);
    assert!(v["timing"]["seconds"].as_f64().unwrap() >= 0.0);
    assert!(floats(&v["weights"]).iter().all(|w| *w == 1.0));
}

#[test]
fn fit_exhaustive_reports_all_nonsingular_subsets() {
    let data = scratch("anova_exhaustive.csv", ANOVA_CSV);
    let out = run(&[
        "fit", "--data", data.to_str().unwrap(), "--formula", "y ~ g", "--method", "exhaustive", "-q",
    ]);
    let v = json_of(&out);
    assert_eq!(v["diagnostics"]["candidates_evaluated"], 27);
    assert_eq!(v["diagnostics"]["candidates_singular_discarded"], 57);
    assert!(out.stderr.is_empty());
}

#[test]
fn malformed_csv_exits_2_without_json() {
    let data = scratch("bad.csv", "y,g\n1,A\n2,B,7\n");
    let out = run(&["fit", "--data", data.to_str().unwrap(), "--formula", "y ~ g"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn input_errors_exit_2() {
    let data = scratch("anova_inputs.csv", ANOVA_CSV);
    let d = data.to_str().unwrap();
    for args in [
        vec!["fit", "--data", "/nonexistent/file.csv", "--formula", "y ~ g"],
        vec!["fit", "--data", d, "--formula", "y ~ h"],
        vec!["fit", "--data", d, "--formula", "y g"],
        vec!["fit", "--data", d, "--formula", "y ~ g", "--method", "magic"],
        vec!["fit", "--data", d, "--formula", "y ~ g", "--kappa", "1.5"],
        vec!["fit", "--data", d, "--formula", "y ~ g", "--nsamp", "zero"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn rank_deficient_design_exits_3() {
    let data = scratch("collinear.csv", "y,a,b\n1,1,2\n2,2,4\n3,3,6\n5,4,8\n4,5,10\n");
    let out = run(&["fit", "--data", data.to_str().unwrap(), "--formula", "y ~ a + b", "-q"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
}

#[test]
fn enumerate_anova_and_continuous() {
    let data = scratch("anova_enum.csv", ANOVA_CSV);
    let v = json_of(&run(&["enumerate", "--data", data.to_str().unwrap(), "--formula", "y ~ g"]));
    assert_eq!(v["total"], 84);
    assert_eq!(v["nonsingular"], 27);
    assert!((v["ratio"].as_f64().unwrap() - 27.0 / 84.0).abs() < 1e-15);

    let data = scratch("line.csv", "y,x\n1,0.3\n2,1.1\n2,2.7\n4,3.2\n5,4.9\n");
    let v = json_of(&run(&["enumerate", "--data", data.to_str().unwrap(), "--formula", "y ~ x"]));
    assert_eq!(v["total"], 10);
    assert_eq!(v["ratio"].as_f64(), Some(1.0));
}

#[test]
fn simulate_then_fit_round_trip() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("sim.csv");
    let config = scratch("sim.conf", "# two factors, one rare level\nn = 40\nfactors = 20,20; 1,39\ncontinuous = 1\nseed = 11\n");
    let out = run(&[
        "simulate", "--config", config.to_str().unwrap(), "--noise-sd", "0", "--out", csv.to_str().unwrap(), "-q",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("y,f1,f2,x1"));
    assert_eq!(text.lines().count(), 41);

    // noise-free data with default coefficients 1..p is fit exactly
    let v = json_of(&run(&[
        "fit", "--data", csv.to_str().unwrap(), "--formula", "y ~ f1 + f2 + x1", "--nsamp", "20", "-q",
    ]));
    assert_eq!(v["p"], 4);
    for (b, want) in floats(&v["beta"]).iter().zip([1.0, 2.0, 3.0, 4.0]) {
        assert!((b - want).abs() < 1e-9, "{b} vs {want}");
    }
    assert_eq!(v["sigma"].as_f64(), Some(0.0));
}

#[test]
fn simulate_to_stdout_and_bad_frequencies() {
    let out = run(&["simulate", "--n", "5", "--factors", "2,3", "--continuous", "0", "-q"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 6);

    let out = run(&["simulate", "--n", "5", "--factors", "2,2", "-q"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_does_not_depend_on_threads() {
    let csv = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli-tests").join("threads.csv");
    fs::create_dir_all(csv.parent().unwrap()).unwrap();
    let out = run(&[
        "simulate", "--n", "60", "--factors", "20,20,20", "--continuous", "2", "--outlier-fraction", "0.2",
        "--outlier-shift", "25", "--seed", "5", "--out", csv.to_str().unwrap(), "-q",
    ]);
    assert!(out.status.success());
    let fit_with = |threads: &str| {
        let mut v = json_of(&run(&[
            "fit", "--data", csv.to_str().unwrap(), "--formula", "y ~ f1 + x1 + x2", "--nsamp", "200",
            "--seed", "9", "--threads", threads, "-q",
        ]));
        v.as_object_mut().unwrap().remove("timing");
        serde_json::to_string_pretty(&v).unwrap()
    };
    assert_eq!(fit_with("1"), fit_with("8"));
}

#[test]
fn bench_anova_scenario() {
    let v = json_of(&run(&["bench", "--scenario", "anova", "--candidates", "100", "-q"]));
    let methods = v["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 2);
    assert_eq!(methods[0]["method"], "nonsingular");
    assert_eq!(methods[0]["singular_discards"], 0);
    assert_eq!(methods[1]["candidates_obtained"], 100);
    assert!(methods[1]["singular_discards"].as_u64().unwrap() > 0);
    assert!(v["timing"]["methods"][0]["subsample_seconds"].as_f64().unwrap() >= 0.0);

    let out = run(&["bench", "--scenario", "nope", "-q"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_documents_defaults() {
    let out = run(&["fit", "--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("(1 − p/n) / 2 clamped to [0.05, 0.5]"));
    assert!(text.contains("p · 2.22e-16"));
    assert!(text.contains("[default: 1000]"));
    assert!(text.contains("[default: 1.54764]"));
}
