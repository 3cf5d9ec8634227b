use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn tmp(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn samlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_samlab")).args(args).output().unwrap()
}

/// Writes `cfg` and runs `cmd` on it with seed 1.
fn run(name: &str, cmd: &str, cfg: &str) -> (Output, PathBuf) {
    let d = tmp(name);
    let path = d.join("cfg.json");
    fs::write(&path, cfg).unwrap();
    let out = d.join("out");
    let o = samlab(&[cmd, "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "1"]);
    (o, out)
}

fn csv(dir: &PathBuf, file: &str) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join(file))
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn bundle_is_listed_and_valid() {
    let o = samlab(&["bundle-list"]);
    assert!(o.status.success());
    let names: Vec<String> =
        String::from_utf8(o.stdout).unwrap().lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect();
    assert!(names.len() >= 6);
    for n in &names {
        let (o, _) = run(&format!("validate-{n}"), "validate", &format!(r#"{{"bundle":"{n}"}}"#));
        assert!(o.status.success(), "{n}");
    }
    let (o, dir) = run("irr-ratlock", "irrationality", r#"{"bundle":"ratlock"}"#);
    assert!(o.status.success());
    assert_eq!(csv(&dir, "irrationality.csv")[1][0], "VIOLATED");
}

#[test]
fn verify_examples() {
    let (o, dir) = run("verify-bm3", "verify", r#"{"bundle":"bm3"}"#);
    assert!(o.status.success());
    let rows = csv(&dir, "verify.csv");
    assert_eq!(rows.len(), 6);
    assert!(rows[1..].iter().all(|r| r[6] == "PASS"), "{rows:?}");

    let (o, dir) = run("verify-column", "verify", r#"{"bundle":"column","verify":{"thetas":["x",0]}}"#);
    assert!(o.status.success());
    let rows = csv(&dir, "verify.csv");
    assert_eq!(rows[1][0], "x");
    assert_eq!(rows[1][6], "EXPECTED_FAILURE_PRINCIPAL");
}

#[test]
fn equidist_on_selfsim2() {
    let (o, dir) = run("equidist", "equidist", r#"{"bundle":"selfsim2"}"#);
    assert!(o.status.success());
    let rows = csv(&dir, "equidist_summary.csv");
    let tv: f64 = rows[1][3].parse().unwrap();
    assert!(tv < 0.02, "{tv}");
    let series = fs::read_to_string(dir.join("equidist_series.dat")).unwrap();
    assert!(series.starts_with("level,value\n"));
}

#[test]
fn every_row_carries_the_config_hash() {
    let (o, dir) = run("hash", "dim", r#"{"bundle":"cantor","dim":{"target":"x"}}"#);
    assert!(o.status.success());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["config_hash"].as_str().unwrap();
    let rows = csv(&dir, "dim.csv");
    assert_eq!(rows[0].last().unwrap(), "config_hash");
    assert!(rows[1..].iter().all(|r| r.last().unwrap() == hash));
    let (_, other) = run("hash2", "dim", r#"{"bundle":"cantor","dim":{"target":"y"}}"#);
    assert_ne!(csv(&other, "dim.csv")[1].last().unwrap(), hash);
}

#[test]
fn exit_codes() {
    let (o, _) = run("bad-json", "dim", "{\"bundle\":\n  \"bm3\",,}");
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 2") && err.contains("column"), "{err}");

    let (o, _) = run("unknown-bundle", "dim", r#"{"bundle":"nope"}"#);
    assert_eq!(o.status.code(), Some(2));
    let (o, _) = run("bad-rational", "validate", r#"{"maps":[{"l1":"1/0","l2":"1/2","a":["0","0"]}],"weights":["1"]}"#);
    assert_eq!(o.status.code(), Some(2));
    let (o, _) = run("theta-inf", "dim", r#"{"bundle":"bm3","dim":{"target":"proj:inf"}}"#);
    assert_eq!(o.status.code(), Some(2));

    let d = tmp("no-seed");
    fs::write(d.join("c.json"), r#"{"bundle":"bm3"}"#).unwrap();
    let o = samlab(&["dim", "--config", d.join("c.json").to_str().unwrap(), "--out", d.join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
