use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_3cp");

fn cmd(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .env_remove("THREECP_WORKERS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn worked_example(dir: &Path) -> PathBuf {
    fs::write(
        dir.join("seqs.txt"),
        "1\tabcdcbabcd\n2\tabcbdbabcd\n3\tcbcdbaabcb\n",
    )
    .unwrap();
    let config = dir.join("config.json");
    fs::write(
        &config,
        r#"{"input": "seqs.txt", "discrete_input": true, "alphabet": "abcd",
            "spl": 2, "lerp": 5, "threshold": 0.7, "output": "out"}"#,
    )
    .unwrap();
    config
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn worked_example_clusters() {
    let dir = tempfile::tempdir().unwrap();
    worked_example(dir.path());
    let o = cmd(dir.path(), &["run", "--config", "config.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8_lossy(&o.stdout), "1 2\n3\n");

    let out = dir.path().join("out");
    let clusters = json(out.join("clusters.json"));
    assert_eq!(clusters["clusters"], serde_json::json!([["1", "2"], ["3"]]));
    let report = json(out.join("commonality.json"));
    let scm: Vec<(u64, u64)> = report["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            (
                p["pattern_count"].as_u64().unwrap(),
                p["common_bits"].as_u64().unwrap(),
            )
        })
        .collect();
    assert_eq!(scm, vec![(6, 8), (4, 6), (3, 5)]);
    assert_eq!(report["spi"]["3"], "0111001110");
    let manifest = json(out.join("MANIFEST.json"));
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["stages"][0]["state"], "skipped");
}

#[test]
fn threshold_override_changes_clusters() {
    let dir = tempfile::tempdir().unwrap();
    worked_example(dir.path());
    let o = cmd(
        dir.path(),
        &["run", "--config", "config.json", "--threshold", "0.55"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8_lossy(&o.stdout), "1 2 3\n");
}

#[test]
fn missing_input_is_an_io_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = cmd(dir.path(), &["run", "--input", "no_such_curves.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_curves.csv"), "{}", stderr(&o));
}

#[test]
fn invalid_parameters_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    worked_example(dir.path());
    let o = cmd(
        dir.path(),
        &["run", "--config", "config.json", "--spl", "6"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lerp"), "{}", stderr(&o));

    fs::write(
        dir.path().join("bad.json"),
        r#"{"input": "x", "threshhold": 0.3}"#,
    )
    .unwrap();
    let o = cmd(dir.path(), &["run", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("threshhold"), "{}", stderr(&o));

    assert_eq!(cmd(dir.path(), &["explode"]).status.code(), Some(1));
    assert_eq!(cmd(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn corrupt_index_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    worked_example(dir.path());
    assert!(cmd(dir.path(), &["run", "--config", "config.json"])
        .status
        .success());
    fs::write(
        dir.path().join("out/index/class_000.tsv"),
        "3\t6\tabcb\n3\t5\taabcb\n",
    )
    .unwrap();
    let o = cmd(dir.path(), &["detect", "--config", "config.json"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("class_000.tsv"), "{}", stderr(&o));
    let manifest = json(dir.path().join("out/MANIFEST.json"));
    assert_eq!(manifest["complete"], false);
    assert_eq!(manifest["stages"][3]["state"], "failed");
}

fn write_random_curves(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut text = String::new();
    for c in 0..6 {
        let len = if c % 2 == 0 { 120 } else { 90 };
        let mut x = 0.0f64;
        text.push_str(&format!("curve{c}"));
        for _ in 0..len {
            x += rng.random_range(-1.0..1.0);
            text.push_str(&format!(",{x}"));
        }
        text.push('\n');
    }
    fs::write(dir.join("curves.csv"), text).unwrap();
}

fn artifacts(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![out.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((
                    p.strip_prefix(out).unwrap().display().to_string(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn run_equals_chained_stages() {
    let dir = tempfile::tempdir().unwrap();
    write_random_curves(dir.path());
    let common = [
        "--input",
        "curves.csv",
        "--spl",
        "3",
        "--alphabet-size",
        "8",
        "--expected-length",
        "100",
    ];
    let with = |stage: &str, out: &str| {
        let mut args = vec![stage, "--out", out];
        args.extend(common);
        let o = cmd(dir.path(), &args);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
    };
    with("run", "a");
    for stage in [
        "standardize",
        "discretize",
        "index",
        "detect",
        "analyze",
        "cluster",
    ] {
        with(stage, "b");
    }
    let a = artifacts(&dir.path().join("a"));
    let b = artifacts(&dir.path().join("b"));
    assert_eq!(a.len(), b.len());
    assert!(a.iter().any(|(name, _)| name == "plot_curves.csv"));
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.0, y.0);
        assert!(x.1 == y.1, "{} differs between run and chained stages", x.0);
    }
}

#[test]
fn output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    write_random_curves(dir.path());
    for (workers, out) in [("1", "w1"), ("4", "w4")] {
        let o = cmd(
            dir.path(),
            &[
                "run",
                "--input",
                "curves.csv",
                "--spl",
                "3",
                "--workers",
                workers,
                "--out",
                out,
            ],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(
        artifacts(&dir.path().join("w1")),
        artifacts(&dir.path().join("w4"))
    );
}

#[test]
fn unequal_lengths_are_rejected_before_analysis() {
    let dir = tempfile::tempdir().unwrap();
    write_random_curves(dir.path());
    let o = cmd(dir.path(), &["run", "--input", "curves.csv", "--no-align"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("analyze"), "{}", stderr(&o));
}
