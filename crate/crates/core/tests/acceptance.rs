//! Acceptance suite: runs `strata-lab all` on the acceptance config three
//! times (8, 8 and 1 threads), prints one pass/fail line per criterion and
//! fails if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

struct Row {
    criterion: u32,
    name: String,
    measured: String,
    threshold: String,
    pass: bool,
    detail: String,
}

fn config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/acceptance.json")
}

fn run_all(out: &Path, threads: usize) {
    let status = Command::new(env!("CARGO_BIN_EXE_strata-lab"))
        .args(["all", "--config"])
        .arg(config_path())
        .arg("--out")
        .arg(out)
        .args(["--threads", &threads.to_string()])
        .status()
        .expect("binary runs");
    assert!(status.code().is_some(), "killed by signal");
}

fn read_rows(dir: &Path) -> Vec<Row> {
    let text = fs::read_to_string(dir.join("acceptance.csv")).expect("acceptance.csv written");
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.splitn(6, ',').collect();
            Row {
                criterion: f[0].parse().unwrap(),
                name: f[1].to_string(),
                measured: f[2].to_string(),
                threshold: f[3].to_string(),
                pass: f[4] == "true",
                detail: f[5].trim_matches('"').to_string(),
            }
        })
        .collect()
}

fn task_seconds(dir: &Path) -> BTreeMap<String, (f64, String)> {
    let text = fs::read_to_string(dir.join("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["tasks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| {
            (
                t["task"].as_str().unwrap().to_string(),
                (t["seconds"].as_f64().unwrap(), t["status"].as_str().unwrap().to_string()),
            )
        })
        .collect()
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension().and_then(|x| x.to_str()) == Some("csv"))
                .then(|| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        })
        .collect()
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    run_all(&a, 8);
    run_all(&b, 8);
    run_all(&c, 1);

    let rows = read_rows(&c);
    let secs = task_seconds(&c);
    for (task, (_, status)) in &secs {
        assert_eq!(status, "ok", "task {task} did not complete");
    }
    // single-threaded runtime budgets in seconds
    let budgets: BTreeMap<u32, (f64, Vec<&str>)> = [
        (1, (600.0, vec!["acceleration"])),
        (2, (900.0, vec!["verify-acc-zeros"])),
        (4, (60.0, vec!["green"])),
        (8, (1200.0, vec!["holder"])),
    ]
    .into_iter()
    .collect();

    let mut stdout = std::io::stdout().lock();
    let mut failed = Vec::new();
    for k in 1..=11u32 {
        let mine: Vec<&Row> = rows.iter().filter(|r| r.criterion == k).collect();
        assert!(!mine.is_empty(), "criterion {k} was not evaluated");
        let mut pass = mine.iter().all(|r| r.pass);
        let mut parts: Vec<String> = mine
            .iter()
            .map(|r| format!("{}: measured {} vs {} ({})", r.name, r.measured, r.threshold, r.detail))
            .collect();
        if let Some((limit, tasks)) = budgets.get(&k) {
            let t: f64 = tasks.iter().map(|n| secs[*n].0).sum();
            pass &= t <= *limit;
            parts.push(format!("runtime {t:.1}s (limit {limit:.0}s)"));
        }
        writeln!(stdout, "[{}] criterion {k:>2}: {}", if pass { "PASS" } else { "FAIL" }, parts.join(" | ")).unwrap();
        if !pass {
            failed.push(k);
        }
    }

    let (fa, fb, fc) = (csv_files(&a), csv_files(&b), csv_files(&c));
    let mut differing: Vec<String> = Vec::new();
    for (name, bytes) in &fa {
        if fb.get(name) != Some(bytes) || fc.get(name) != Some(bytes) {
            differing.push(name.clone());
        }
    }
    let same_set = fa.keys().eq(fb.keys()) && fa.keys().eq(fc.keys());
    let pass12 = differing.is_empty() && same_set && !fa.is_empty();
    writeln!(
        stdout,
        "[{}] criterion 12: determinism: {} CSV files compared across two 8-thread runs and one 1-thread run, differing: {:?}",
        if pass12 { "PASS" } else { "FAIL" },
        fa.len(),
        differing
    )
    .unwrap();
    if !pass12 {
        failed.push(12);
    }
    drop(stdout);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
