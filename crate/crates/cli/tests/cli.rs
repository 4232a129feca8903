use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn derand(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_derand"))
        .args(args)
        .current_dir(dir)
        .env_remove("DERAND_MANIFEST")
        .output()
        .unwrap()
}

fn report(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing_ms");
    v
}

fn and2(dir: &Path) {
    std::fs::write(
        dir.join("and2.net"),
        "inputs 2\ng2 = AND2 g0 g1\noutput g2\n",
    )
    .unwrap();
}

#[test]
fn exact_and_gate() {
    let dir = tempfile::tempdir().unwrap();
    and2(dir.path());
    let r = report(&derand(
        &["capp", "exact", "--circuit", "and2.net"],
        dir.path(),
    ));
    assert_eq!(r["result"]["mu_num"], 1);
    assert_eq!(r["result"]["mu_logden"], 2);
    assert_eq!(r["result"]["mode"], "exact");
    assert_eq!(r["manifest_version"], "toy-machine/1");
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn invalid_flag_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    and2(dir.path());
    let out = derand(
        &[
            "capp",
            "exact",
            "--circuit",
            "and2.net",
            "--bogus",
            "--out",
            "r.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(64));
    assert!(!dir.path().join("r.json").exists());
    let out = derand(
        &[
            "capp",
            "exact",
            "--circuit",
            "missing.net",
            "--out",
            "r.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(64));
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn budget_errors_exit_65() {
    let dir = tempfile::tempdir().unwrap();
    let out = derand(&["kolmo", "census", "--m", "13"], dir.path());
    assert_eq!(out.status.code(), Some(65));
    assert!(out.stdout.is_empty());
}

#[test]
fn reports_reproduce_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    and2(dir.path());
    let args = [
        "capp",
        "sample",
        "--circuit",
        "and2.net",
        "--samples",
        "5000",
        "--seed",
        "11",
    ];
    let a = without_timing(report(&derand(
        &[&args[..], &["--workers", "1"]].concat(),
        dir.path(),
    )));
    let b = without_timing(report(&derand(
        &[&args[..], &["--workers", "4"]].concat(),
        dir.path(),
    )));
    assert_eq!(a, b);
    let c = without_timing(report(&derand(
        &[
            "capp",
            "sample",
            "--circuit",
            "and2.net",
            "--samples",
            "5000",
            "--seed",
            "12",
        ],
        dir.path(),
    )));
    assert_ne!(a["config_hash"], c["config_hash"]);
    let construct = ["rkt", "construct", "--n", "16", "--d", "2"];
    assert_eq!(
        without_timing(report(&derand(&construct, dir.path()))),
        without_timing(report(&derand(&construct, dir.path())))
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    and2(dir.path());
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"samples": 700, "seed": 5, "circuit": "and2.net"}"#,
    )
    .unwrap();
    let r = report(&derand(
        &["capp", "sample", "--config", "cfg.json"],
        dir.path(),
    ));
    assert_eq!(r["settings"]["samples"], 700);
    assert_eq!(r["seed"], 5);
    let r = report(&derand(
        &["capp", "sample", "--config", "cfg.json", "--samples", "900"],
        dir.path(),
    ));
    assert_eq!(r["settings"]["samples"], 900);
    assert_eq!(r["seed"], 5);
    let r = report(&derand(
        &["capp", "sample", "--circuit", "and2.net"],
        dir.path(),
    ));
    assert_eq!(r["settings"]["samples"], 100_000);
}

#[test]
fn manifest_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let m = report(&derand(&["manifest"], dir.path()));
    let mut custom = m["result"].clone();
    custom["version"] = "lab-variant/2".into();
    std::fs::write(dir.path().join("m.json"), custom.to_string()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_derand"))
        .args(["primes", "find", "--n", "8"])
        .current_dir(dir.path())
        .env("DERAND_MANIFEST", "m.json")
        .output()
        .unwrap();
    let r = report(&out);
    assert_eq!(r["manifest_version"], "lab-variant/2");
    assert_eq!(r["result"]["prime"], 2);
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = derand(
        &["primes", "find", "--n", "16", "--out", "p.json"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let r: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(r["result"]["prime"], 2);
}

#[test]
fn construct_reports_string_and_complexity() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&derand(
        &["rkt", "construct", "--n", "16", "--d", "2"],
        dir.path(),
    ));
    assert_eq!(r["result"]["fail"], false);
    assert_eq!(r["result"]["string"].as_str().unwrap().len(), 8);
    assert_eq!(r["result"]["canonical"], true);
    assert!(r["result"].get("oracle_rkt").is_some());
}

fn csv(out: &Output) -> Vec<String> {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(String::from)
        .collect()
}

#[test]
fn sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let rows = csv(&derand(
        &["sweep", "diag-verify", "--param", "i=0..8"],
        dir.path(),
    ));
    assert_eq!(rows[0], "i,n,verdict,capp_err");
    assert_eq!(rows.len(), 9);
    let rows = csv(&derand(
        &[
            "sweep",
            "diag-verify",
            "--param",
            "n=16,20,24,28,32,36,40,44",
        ],
        dir.path(),
    ));
    assert_eq!(rows.len(), 9);
    let rows = csv(&derand(
        &["sweep", "fact51", "--param", "ell=1,2,4,8,16"],
        dir.path(),
    ));
    let costs: Vec<u64> = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(costs.windows(2).all(|w| w[0] < w[1]), "{costs:?}");
    let rows = csv(&derand(
        &["sweep", "fact51", "--param", "ell=4..4"],
        dir.path(),
    ));
    assert_eq!(rows, vec!["n,ell,cost,bound".to_string()]);
    let out = derand(
        &["sweep", "fact51", "--param", "ell=1,2", "--param", "n=2,3"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(64));
    let out = derand(&["sweep", "fact51", "--param", "ell=2"], dir.path());
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn diag_sweep_csv_lists_every_index() {
    let dir = tempfile::tempdir().unwrap();
    let rows = csv(&derand(
        &["diag", "sweep", "--n", "32", "--i", "0..8"],
        dir.path(),
    ));
    assert_eq!(rows.len(), 9);
    assert!(rows[1..].iter().all(|r| r.contains(",differs,")));
}
