use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_strata-lab"))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

fn run(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> i32 {
    bin().arg(sub).arg("--config").arg(cfg).arg("--out").arg(out).args(extra).status().unwrap().code().unwrap()
}

#[test]
fn shift_outside_band_is_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"zeros": {"eps": 1.5}}"#);
    let out = tmp.path().join("out");
    assert_eq!(run("zeros", &cfg, &out, &[]), 2);
    assert!(!out.exists());
}

#[test]
fn unknown_subcommand_and_missing_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "{}");
    assert_eq!(run("nonsense", &cfg, &tmp.path().join("o"), &[]), 2);
    assert_eq!(run("green", &tmp.path().join("absent.json"), &tmp.path().join("o"), &[]), 2);
    let bad = write_config(tmp.path(), r#"{"potential": "amo(x)"}"#);
    assert_eq!(run("green", &bad, &tmp.path().join("o"), &[]), 2);
}

#[test]
fn dry_run_computes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "{}");
    let out = tmp.path().join("out");
    assert_eq!(run("all", &cfg, &out, &["--dry-run"]), 0);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let tasks = m["tasks"].as_array().unwrap();
    assert_eq!(tasks.len(), 11);
    assert!(tasks.iter().all(|t| t["status"] == "planned" && t["estimated_cost"].as_f64().unwrap() > 0.0));
    assert!(m["files"].as_array().unwrap().is_empty());
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn green_suite_and_manifest_index() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "{}");
    let out = tmp.path().join("out");
    assert_eq!(run("green", &cfg, &out, &["--threads", "2"]), 0);
    let acc = fs::read_to_string(out.join("acceptance.csv")).unwrap();
    assert!(acc.lines().nth(1).unwrap().starts_with("4,") && acc.contains(",true,"));
    let green = fs::read_to_string(out.join("green.csv")).unwrap();
    for line in green.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[6] <= 1e-9 && f[7] <= 1e-9 && f[8] <= 1e-9 && f[11] <= 1e-9);
    }
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let listed: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    for entry in fs::read_dir(&out).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        assert!(name == "manifest.json" || listed.contains(&name.as_str()), "{name} not indexed");
    }
    // plot files exist with headers even when nothing fed them
    assert_eq!(fs::read_to_string(out.join("plot_decay.csv")).unwrap(), "eigen_index,energy,site,log_abs_phi\n");
}

#[test]
fn seed_override_changes_random_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"green": {"samples": 5}}"#);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert_eq!(run("green", &cfg, &a, &["--seed", "1"]), 0);
    assert_eq!(run("green", &cfg, &b, &["--seed", "2"]), 0);
    assert_eq!(run("green", &cfg, &c, &["--seed", "1"]), 0);
    let read = |d: &Path| fs::read(d.join("green.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
    assert_eq!(read(&a), read(&c));
}

#[test]
fn ladder_on_default_config() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/amo_default.json");
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run("verify-acc-zeros", &cfg, &out, &[]), 0);
    let t = fs::read_to_string(out.join("zero_count_ladder.csv")).unwrap();
    assert_eq!(t.lines().count(), 4);
    assert!(t.starts_with("n,energy,eps,count,kappa,deviation,tolerance,pass"));
}

#[test]
fn zero_exponent_is_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"potential": "zero", "zeros": {"ladder": [50]}}"#);
    let out = tmp.path().join("out");
    assert_eq!(run("verify-acc-zeros", &cfg, &out, &[]), 3);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["tasks"][0]["status"], "failed");
    assert!(m["tasks"][0]["error"].as_str().unwrap().contains("verify-acc-zeros"));
}
