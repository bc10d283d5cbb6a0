use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use driftlab_core::verifier::{Check, ExperimentReport};

fn driftlab(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftlab"))
        .args(args)
        .arg("--out")
        .arg(root)
        .env_remove("DRIFTLAB_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn only_dir(root: &Path, prefix: &str) -> PathBuf {
    let dirs: Vec<PathBuf> = fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with(prefix))
        .collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs[0].clone()
}

#[test]
fn zero_paths_is_rejected_with_a_field_diagnostic() {
    let root = tempfile::tempdir().unwrap();
    let o = driftlab(&["simulate", "--model", "drifted_bm", "--paths", "0"], root.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("paths: must be at least 1"), "{}", stderr(&o));
    assert!(fs::read_dir(root.path()).map(|mut d| d.next().is_none()).unwrap_or(true));
}

#[test]
fn verify_twice_gives_byte_identical_reports() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["verify", "--suite", "occupation", "--model", "bm", "--paths", "100000", "--seed", "7"];
    let oa = driftlab(&args, a.path());
    let mut seq = args.to_vec();
    seq.push("--sequential");
    let ob = driftlab(&seq, b.path());
    assert!(oa.status.success() && ob.status.success(), "{}{}", stderr(&oa), stderr(&ob));
    let (da, db) = (only_dir(a.path(), "verify-"), only_dir(b.path(), "verify-"));
    assert_eq!(da.file_name(), db.file_name());
    for name in ["occupation.json", "run.json"] {
        assert_eq!(fs::read(da.join(name)).unwrap(), fs::read(db.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn simulate_artifacts_carry_the_config_hash() {
    let root = tempfile::tempdir().unwrap();
    let o = driftlab(&["simulate", "--model", "jump_diffusion", "--paths", "50", "--steps", "20"], root.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = only_dir(root.path(), "simulate-");
    let h = dir.file_name().unwrap().to_str().unwrap().trim_start_matches("simulate-").to_string();
    for f in ["ensemble", "nodes", "jumps"] {
        let ext = if f == "ensemble" { "bin" } else { "csv" };
        assert!(dir.join(format!("{f}.{h}.{ext}")).is_file(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["config_hash"].as_str().unwrap().starts_with(&h));
    assert_eq!(manifest["payload"]["n_paths"], 50);

    // The written ensemble feeds the surface command.
    let bin = dir.join(format!("ensemble.{h}.bin"));
    let o = driftlab(&["surface", "--method", "mc", "--input", bin.to_str().unwrap()], root.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let surf = only_dir(root.path(), "surface-");
    assert!(fs::read_dir(&surf).unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "svg")));
}

#[test]
fn missing_input_is_named() {
    let root = tempfile::tempdir().unwrap();
    let o = driftlab(&["measure", "--model", "bm", "--input", "/no/such/ensemble.bin"], root.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/ensemble.bin"), "{}", stderr(&o));
    let o = driftlab(&["report", root.path().join("nothing-here").to_str().unwrap()], root.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nothing-here"));
}

#[test]
fn config_file_fields_are_validated() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("run.json");
    fs::write(&cfg, r#"{"schema": "driftlab.config/1", "model": "bm", "paths": 10, "stepz": 3}"#).unwrap();
    let o = driftlab(&["simulate", "--config", cfg.to_str().unwrap()], root.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stepz"), "{}", stderr(&o));

    fs::write(&cfg, r#"{"schema": "driftlab.config/1", "model": "wiener", "paths": 10, "horizon": -1}"#).unwrap();
    let o = driftlab(&["simulate", "--config", cfg.to_str().unwrap()], root.path());
    let err = stderr(&o);
    assert!(err.contains("model: unknown model `wiener`") && err.contains("horizon:"), "{err}");
}

#[test]
fn environment_overrides_the_output_root() {
    let root = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_driftlab"))
        .args(["simulate", "--model", "bm", "--paths", "3", "--steps", "4"])
        .env("DRIFTLAB_OUTPUT_ROOT", root.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    only_dir(root.path(), "simulate-");
}

#[test]
fn report_refuses_mixed_hashes_and_flags_failures() {
    let root = tempfile::tempdir().unwrap();
    for seed in ["1", "2"] {
        let o = driftlab(&["verify", "--suite", "backward_residual", "--seed", seed], root.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let o = driftlab(&["report"], root.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("refusing to aggregate"), "{}", stderr(&o));

    // One run with a failing check: report exits 1 and lists it.
    let dir = fs::read_dir(root.path()).unwrap().map(|e| e.unwrap().path()).find(|p| p.is_dir()).unwrap();
    let path = dir.join("backward_residual.json");
    let mut env: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let mut report: ExperimentReport = serde_json::from_value(env["payload"].clone()).unwrap();
    report.push(Check::at_most("injected", 2.0, 1.0, None));
    env["payload"] = serde_json::to_value(&report).unwrap();
    fs::write(&path, serde_json::to_string_pretty(&env).unwrap()).unwrap();
    let o = driftlab(&["report", dir.to_str().unwrap()], root.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("backward_residual/injected"));

    // Editing the provenance breaks the stored hash.
    env["provenance"]["config"]["seed"] = serde_json::json!(99);
    fs::write(&path, serde_json::to_string_pretty(&env).unwrap()).unwrap();
    let o = driftlab(&["report", dir.to_str().unwrap()], root.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("does not match"), "{}", stderr(&o));
}
