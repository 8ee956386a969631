use std::path::Path;
use std::process::Command;

use crtcover::experiments::{
    execute, execute_with_workers, records_jsonl, registry, Experiment, ExperimentConfig, DISTRIBUTION_FILE,
    MANIFEST_FILE, RECORDS_FILE, SUMMARY_FILE,
};
use serde_json::Value;

fn smoke(e: Experiment) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(e);
    c.seed = 99;
    match e {
        Experiment::CoverScaling | Experiment::AldousProbe | Experiment::CoverReturnMoments => {
            c.sizes = vec![20, 40];
            c.replicas = 30;
        }
        Experiment::RayknightMgf => {
            c.sizes = vec![2, 3, 4, 5];
            c.replicas = 2;
        }
        Experiment::Isomorphism => {
            c.sizes = vec![5];
        }
        Experiment::BesqValidate => {
            c.replicas = 200;
            c.grid = 100;
        }
        Experiment::WilliamsStats | Experiment::ComponentPoisson => c.replicas = 200,
        Experiment::SnakeIntegral => {
            c.grid = 64;
            c.replicas = 50;
            c.v_grid = vec![0.5, 1.0, 2.0, 4.0];
        }
        Experiment::CoveringBound => {
            c.sizes = vec![16];
            c.replicas = 2;
            c.walks = 2;
        }
        Experiment::ConcentrationTail => {
            c.sizes = vec![30];
            c.replicas = 1000;
        }
        Experiment::SmallOracleCrosscheck => {
            c.sizes = vec![3, 4, 10];
            c.replicas = 200;
        }
    }
    c
}

#[test]
fn every_experiment_runs_on_a_smoke_config() {
    for &e in registry() {
        let out = execute(&smoke(e)).unwrap_or_else(|err| panic!("{e}: {err}"));
        assert!(!out.records.is_empty(), "{e}");
        assert!(!out.summary.groups.is_empty(), "{e}");
        assert!(out.records.iter().all(|r| r.experiment == e));
    }
}

#[test]
fn stream_ids_are_unique_per_replica() {
    for e in [Experiment::CoverScaling, Experiment::WilliamsStats, Experiment::SnakeIntegral] {
        let out = execute(&smoke(e)).unwrap();
        let ids: std::collections::HashSet<u64> = out.records.iter().map(|r| r.stream).collect();
        assert_eq!(ids.len(), out.records.len(), "{e}");
    }
}

#[test]
fn worker_count_does_not_change_records() {
    for e in [Experiment::CoverScaling, Experiment::BesqValidate, Experiment::SnakeIntegral] {
        let c = smoke(e);
        let one = records_jsonl(&execute_with_workers(&c, 1).unwrap().records).unwrap();
        let eight = records_jsonl(&execute_with_workers(&c, 8).unwrap().records).unwrap();
        assert_eq!(one, eight, "{e}");
    }
}

fn cli(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_crtcover"))
        .args(args)
        .current_dir(dir)
        .env_remove("CRTCOVER_WORKERS")
        .output()
        .unwrap()
}

#[test]
fn cli_outputs_are_byte_identical_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"sizes":[30,60],"replicas":25,"seed":5}"#).unwrap();
    for (w, out) in [("1", "a"), ("8", "b")] {
        let o = cli(&["cover-scaling", "--config", "c.json", "--out", out, "--workers", w], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [RECORDS_FILE, SUMMARY_FILE, DISTRIBUTION_FILE] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let records = std::fs::read_to_string(dir.path().join("a").join(RECORDS_FILE)).unwrap();
    assert_eq!(records.lines().count(), 50);
    for line in records.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["experiment"], "cover-scaling");
    }
    let csv = std::fs::read_to_string(dir.path().join("a").join(DISTRIBUTION_FILE)).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "experiment,n,statistic,count,mean,stderr,q05,q50,q95");
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a").join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 5);
    assert_eq!(manifest["config"]["replicas"], 25);
    assert!(manifest["derived"]["sigma"].as_f64().unwrap() == 1.0);
}

#[test]
fn cli_seed_flag_overrides_and_env_sets_workers() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"replicas":50,"seed":1}"#).unwrap();
    let o = cli(&["williams-stats", "--config", "c.json", "--seed", "2", "--out", "s"], dir.path());
    assert!(o.status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_crtcover"))
        .args(["williams-stats", "--config", "c.json", "--out", "t", "--seed", "2"])
        .current_dir(dir.path())
        .env("CRTCOVER_WORKERS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    let read = |d: &str| std::fs::read(dir.path().join(d).join(RECORDS_FILE)).unwrap();
    assert_eq!(read("s"), read("t"));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("t").join(MANIFEST_FILE)).unwrap())
        .unwrap();
    assert_eq!(m["workers"], 3);
    assert_eq!(m["master_seed"], 2);
}

#[test]
fn cli_reports_errors_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["no-such-experiment"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(v["error"], "config");

    std::fs::write(dir.path().join("bad.json"), r#"{"replicas":3,"colour":"red"}"#).unwrap();
    let o = cli(&["cover-scaling", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert!(v["message"].as_str().unwrap().contains("colour"));

    std::fs::write(dir.path().join("lattice.json"), r#"{"law":"binary-half","sizes":[10],"replicas":1}"#).unwrap();
    let o = cli(&["cover-scaling", "--config", "lattice.json", "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    assert_eq!(v["error"], "unsupported-size");

    let o = cli(&["list"], dir.path());
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), registry().len());
}

#[test]
fn rayknight_smoke_is_exact() {
    let out = execute(&smoke(Experiment::RayknightMgf)).unwrap();
    let d = out.summary.diagnostic("max_abs_diff").unwrap().as_f64().unwrap();
    assert!(d < 1e-8, "{d}");
}
