use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortexlab"))
        .args(args)
        .env("VORTEXLAB_CACHE", cache)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn constants_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run(dir.path(), &["constants", "--p", "3", "--omega", "1"]));
    assert_eq!(v["c"].as_f64().unwrap(), 1.5);
    assert_eq!(v["config"]["p"].as_f64().unwrap(), 3.0);
    let v = json(&run(dir.path(), &["constants", "--p", "3", "--omega", "4"]));
    assert_eq!(v["c"].as_f64().unwrap(), 6.0);
    assert_eq!(run(dir.path(), &["constants", "--p", "1", "--omega", "1"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["constants", "--omega", "1"]).status.code(), Some(2));
    assert_eq!(
        run(dir.path(), &["reduced", "--p", "5", "--omega", "1", "--delta", "0.1"]).status.code(),
        Some(4)
    );
    assert_eq!(run(dir.path(), &["bogus"]).status.code(), Some(2));
}

#[test]
fn config_file_sits_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# constants\np = 2\nomega = 4\n").unwrap();
    let c = conf.to_str().unwrap();
    let v = json(&run(dir.path(), &["--config", c, "constants", "--p", "3"]));
    assert_eq!(v["c"].as_f64().unwrap(), 6.0);
    assert_eq!(v["config"]["p"].as_f64().unwrap(), 3.0);
    assert_eq!(v["config"]["omega"].as_f64().unwrap(), 4.0);
    let v = json(&run(dir.path(), &["reduced", "--config", c, "--delta", "0.1"]));
    assert_eq!(v["config"]["delta"].as_f64().unwrap(), 0.1);
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 4);
    std::fs::write(&conf, "p 3\n").unwrap();
    assert_eq!(run(dir.path(), &["--config", c, "constants"]).status.code(), Some(2));
}

#[test]
fn profile_is_cached_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = dir.path().join("prof.json");
    let o = out.to_str().unwrap();
    let args = ["profile", "--p", "3", "--omega", "1", "--m", "32", "--out", o];
    let first = run(&cache, &args);
    let v = json(&first);
    assert_eq!(v["converged"], Value::Bool(true));
    assert!(v["residual_norm"].as_f64().unwrap() < 1e-8);
    assert!(String::from_utf8_lossy(&first.stderr).contains("miss"));
    let bytes = std::fs::read(&out).unwrap();
    let second = run(&cache, &args);
    assert!(String::from_utf8_lossy(&second.stderr).contains("hit"));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(std::fs::read(&out).unwrap(), bytes);
    let saved: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(saved["schema"], "vortexlab-profile-v1");
    assert_eq!(saved["config"]["m"], 32);
}

#[test]
fn asymptotics_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["asymptotics", "--p", "3", "--omega", "1", "--m-list", "8,16,32"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,h2_err,linf_err,peak_offset");
    assert_eq!(lines.len(), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("rate_h2"));
    let single = run(dir.path(), &["asymptotics", "--p", "3", "--omega", "1", "--m-list", "16"]);
    assert!(single.status.success());
    assert!(String::from_utf8_lossy(&single.stderr).contains("no rate fit"));
    let empty = run(dir.path(), &["asymptotics", "--p", "3", "--omega", "1", "--m-list", ""]);
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn spectrum_scan_and_evolve() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["--p", "3", "--omega", "1", "--m", "32"];
    let with = |extra: &[&str], cmd: &str| {
        let mut a = vec![cmd];
        a.extend_from_slice(&base);
        a.extend_from_slice(extra);
        run(dir.path(), &a)
    };
    let v = json(&with(&["--j", "8", "--k", "3"], "spectrum"));
    let max_re = v["max_re"].as_f64().unwrap();
    assert_eq!(v["in_bracket"], Value::Bool(true));
    assert_eq!(v["config"]["j"], 8);
    let neg = json(&with(&["--j", "-8", "--k", "3"], "spectrum"));
    assert!((neg["max_re"].as_f64().unwrap() - max_re).abs() < 1e-8);
    assert_eq!(with(&["--j", "32"], "spectrum").status.code(), Some(2));

    let scan = with(&["--j-range", "4,8"], "scan");
    assert!(scan.status.success());
    let text = String::from_utf8(scan.stdout).unwrap();
    assert!(text.starts_with("m,j,delta,max_re,predicted,bracket_lo,bracket_hi,in_bracket\n"));
    assert_eq!(text.lines().count(), 3);
    assert_eq!(with(&["--j-range", "30-33"], "scan").status.code(), Some(2));

    let args = ["--j", "8", "--t", "30", "--dt", "0.1", "--seed", "5", "--format", "json"];
    let a = with(&args, "evolve");
    let b = with(&args, "evolve");
    assert_eq!(a.stdout, b.stdout);
    let ev = json(&a);
    let rate = ev["fit"]["rate"].as_f64().unwrap();
    assert!((rate - max_re).abs() < 0.1 * max_re, "{rate} vs {max_re}");
    let csv = with(&["--j", "8", "--t", "10", "--dt", "0.5"], "evolve");
    assert!(String::from_utf8(csv.stdout).unwrap().starts_with("t,norm\n"));
    assert_eq!(with(&["--j", "8", "--dt", "0"], "evolve").status.code(), Some(2));
    assert_eq!(with(&["--j", "8", "--dt", "-0.1"], "evolve").status.code(), Some(2));
}
