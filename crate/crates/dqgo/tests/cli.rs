use std::process::Command;

fn dqgo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dqgo"))
}

#[test]
fn gen_run_landscape_and_qasm_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dqgo()
        .args(["gen-instances", "--n", "2", "--count", "2", "--seed", "9"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let listed = String::from_utf8(out.stdout).unwrap();
    let first = listed.lines().next().unwrap().to_string();
    assert!(std::path::Path::new(&first).exists());

    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{"algorithm":"d-qgo","sizes":[2],"T":1.0,"instances":3,"master_seed":5}"#,
    )
    .unwrap();
    let results_dir = dir.path().join("results");
    let out = dqgo()
        .args(["run", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&results_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = std::fs::read_to_string(results_dir.join("results.csv")).unwrap();
    assert!(results.starts_with("algorithm,n,T,delta_c,shots,instances,successes,sp\n"));
    assert_eq!(results.lines().count(), 2);

    let out = dqgo()
        .args(["landscape", "--qubit", "0", "--lo", "-2", "--hi", "2", "--steps", "5"])
        .arg("--instance")
        .arg(&first)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("c,energy\n"));
    assert_eq!(csv.lines().count(), 6);

    let sched_path = dir.path().join("sched.json");
    std::fs::write(&sched_path, r#"{"b":0.7,"c":[1.5,-1.5],"T":1.0,"dt":0.1}"#).unwrap();
    let out = dqgo()
        .args(["export-qasm"])
        .arg("--instance")
        .arg(&first)
        .arg("--schedule")
        .arg(&sched_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("OPENQASM 3.0;\nqubit[2] q;\n"));
}

#[test]
fn calibrate_prints_json() {
    let out = dqgo()
        .args(["calibrate", "--n", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["n"], 2);
    assert!(value["c_opt"].as_f64().unwrap() > 0.1);
}

#[test]
fn bad_config_fails_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.json");
    std::fs::write(&config_path, r#"{"algorithm":"frobnicate"}"#).unwrap();
    let out = dqgo()
        .args(["run", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}
