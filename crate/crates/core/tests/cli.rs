use std::path::Path;
use std::process::{Command, Output};

fn ksubset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ksubset"))
        .args(args)
        .env_remove("KSUBSET_THREADS")
        .output()
        .unwrap()
}

fn write_params(dir: &Path, body: &str) -> String {
    let path = dir.join("params.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn marginals_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_params(dir.path(), r#"{"theta":[0.0,0.0,0.0,0.0],"k":2}"#);
    let out = ksubset(&["marginals", &input]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for m in v["mu"].as_array().unwrap() {
        assert!((m.as_f64().unwrap() - 0.5).abs() < 1e-12);
    }
    assert!((v["entropy"].as_f64().unwrap() - 6f64.ln()).abs() < 1e-12);
    assert!((v["pr"].as_f64().unwrap() - 6.0 / 16.0).abs() < 1e-12);
}

#[test]
fn sample_lines_have_weight_k() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_params(dir.path(), r#"{"theta":[0.3,-1.0,2.0,0.1,0.0],"k":2}"#);
    for sampler in ["exact", "dc", "pam"] {
        let out = ksubset(&[
            "sample",
            &input,
            "--count",
            "50",
            "--seed",
            "4",
            "--sampler",
            sampler,
        ]);
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 50);
        for l in lines {
            assert_eq!(l.len(), 5);
            assert_eq!(l.chars().filter(|&c| c == '1').count(), 2);
        }
    }
}

#[test]
fn invalid_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_params(dir.path(), r#"{"theta":[0.0,1.0],"k":3}"#);
    assert_eq!(ksubset(&["marginals", &input]).status.code(), Some(1));
    assert_eq!(
        ksubset(&["bench-synthetic", "--n", "4", "--k", "9"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        ksubset(&["bench-synthetic", "--estimators", "nope"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(ksubset(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(ksubset(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_file_is_internal_failure() {
    assert_eq!(
        ksubset(&["marginals", "/no/such/file.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn bench_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let out = ksubset(&[
        "bench-synthetic",
        "--n",
        "6",
        "--k",
        "2",
        "--samples",
        "100",
        "--estimators",
        "simple,softsub,exact",
        "--temperature",
        "0.3",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with(
        "estimator,n,k,samples,bias,variance,mean_error,error_std,wall_time_ms,master_seed"
    ));

    let out = ksubset(&[
        "bench-synthetic",
        "--n",
        "6",
        "--k",
        "2",
        "--samples",
        "100",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 6);
}

#[test]
fn threads_env_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_ksubset"))
        .args(["bench-synthetic", "--samples", "10"])
        .env("KSUBSET_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sparse_regress_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = ksubset(&[
        "sparse-regress",
        "--n",
        "10",
        "--k",
        "2",
        "--m",
        "60",
        "--steps",
        "40",
        "--seed",
        "3",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["selected"].as_array().unwrap().len(), 2);
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("step,rmse,map_overlap_with_planted\n"));
    assert_eq!(text.lines().count(), 41);
}

#[test]
fn selfcheck_passes() {
    let out = ksubset(&["selfcheck", "--instances", "30"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["failures"].as_array().unwrap().is_empty());
}

#[test]
fn symmetric_pair_marginals() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_params(dir.path(), r#"{"theta":[0,0],"k":1}"#);
    let v: serde_json::Value =
        serde_json::from_slice(&ksubset(&["marginals", &input]).stdout).unwrap();
    assert_eq!(v["mu"], serde_json::json!([0.5, 0.5]));
    assert_eq!(v["pr"].as_f64().unwrap(), 0.5);
    assert!((v["entropy"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-15);
    assert!(v["kl_to_uniform"].as_f64().unwrap().abs() < 1e-15);
}

#[test]
fn marginals_round_trip_bit_for_bit() {
    use ksubset_core::inference::{conditional_marginals, entropy, pr_exactly_k};
    let dir = tempfile::tempdir().unwrap();
    let theta = [0.123456789, -2.5, 3.75, 1e-3, -0.3];
    let params = ksubset_core::KSubsetParams::new(theta.to_vec(), 2).unwrap();
    let input = write_params(dir.path(), &serde_json::to_string(&params).unwrap());
    let v: serde_json::Value =
        serde_json::from_slice(&ksubset(&["marginals", &input]).stdout).unwrap();
    let mu: Vec<f64> = serde_json::from_value(v["mu"].clone()).unwrap();
    let want = conditional_marginals(&params);
    for (a, b) in mu.iter().zip(want.iter()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert_eq!(
        v["log_pr"].as_f64().unwrap().to_bits(),
        pr_exactly_k(&params).0.to_bits()
    );
    assert_eq!(
        v["entropy"].as_f64().unwrap().to_bits(),
        entropy(&params).to_bits()
    );
}

#[test]
fn full_subset_samples_are_all_ones() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_params(dir.path(), r#"{"theta":[0.5,-3.0,1.0],"k":3}"#);
    let out = ksubset(&["sample", &input, "--count", "3"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "111\n111\n111\n");
}

#[test]
fn bench_seed_seven_is_pinned() {
    let out = ksubset(&[
        "bench-synthetic",
        "--n",
        "10",
        "--k",
        "5",
        "--samples",
        "10000",
        "--seed",
        "7",
        "--estimators",
        "simple,sfe",
    ]);
    let rows = ksubset_core::experiments::read_reports_csv(out.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 2);
    let pinned = [
        (
            "simple",
            6.304065118589719e-6,
            0.059931635411002854,
            0.059937444190333325,
        ),
        (
            "sfe",
            0.009618751829202021,
            1.0006329009987334,
            1.0018734096051813,
        ),
    ];
    for (row, (name, bias, variance, mean_error)) in rows.iter().zip(pinned) {
        assert_eq!(row.estimator, name);
        assert!((row.bias - bias).abs() < 1e-9);
        assert!((row.variance - variance).abs() < 1e-9);
        assert!((row.mean_error - mean_error).abs() < 1e-9);
    }
}
