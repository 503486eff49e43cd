use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use toml::Value;

fn lyaplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lyaplab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn record(out: &Output) -> Value {
    toml::from_str(&String::from_utf8_lossy(&out.stdout)).expect("record is TOML")
}

const CAT: &str = "operation = \"lyapunov\"\nseed = 1\nsystem = \"cat-map\"\n[params]\nn = 10000\nsample_size = 3\n";

#[test]
fn cat_spectrum_record() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "cat.toml", CAT);
    let out = lyaplab(&["lyapunov", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let rec = record(&out);
    let exps = rec["results"][0]["values"]["exponents"].as_array().unwrap();
    let expected = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    assert!((exps[0].as_float().unwrap() - expected).abs() < 1e-3);
    assert!((exps[1].as_float().unwrap() + expected).abs() < 1e-3);
    assert_eq!(rec["config"]["seed"].as_integer(), Some(1));
}

#[test]
fn reruns_reproduce_results_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "obs.toml",
        "seed = 5\nsystem = \"example-5-5\"\n[params]\nn = 2000\nsample_size = 40\n",
    );
    let a = record(&lyaplab(&["observables", "--config", &cfg, "--threads", "1"]));
    let b = record(&lyaplab(&["observables", "--config", &cfg, "--threads", "3"]));
    assert_eq!(a["results"], b["results"]);

    // the echoed config alone reproduces the run
    let echo = write(dir.path(), "echo.toml", &toml::to_string(&a["config"]).unwrap());
    assert_eq!(a["config"]["operation"].as_str(), Some("observables"));
    let c = record(&lyaplab(&["observables", "--config", &echo]));
    assert_eq!(a["results"], c["results"]);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "cat.toml", CAT);
    let rec = record(&lyaplab(&["lyapunov", "--config", &cfg, "--seed", "9"]));
    assert_eq!(rec["config"]["seed"].as_integer(), Some(9));
}

#[test]
fn isometric_bundle_is_refused() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "iso.toml",
        "operation = \"theorem-a\"\nseed = 1\nsystem = \"isometric-bundle-example\"\n[params]\nn = 500\nsample_size = 20\n",
    );
    let out = lyaplab(&["theorem-a", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(record(&out)["results"][0]["status"].as_str(), Some("refused"));
}

#[test]
fn violated_check_exits_two() {
    // at short horizons the sample's largest Birkhoff fluctuation keeps the
    // ess-sup-limsup well above the typical exponent
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "gap.toml",
        "seed = 2\nsystem = \"remark-4-2\"\n[params]\nn = 200\nsample_size = 100\nmeasure_n = 1000\ntolerance = 0.001\n",
    );
    let out = lyaplab(&["theorem-4-1", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_four() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.toml", "seed = \"one\"\nsystem = \"cat-map\"\n");
    assert_eq!(lyaplab(&["lyapunov", "--config", &bad]).status.code(), Some(4));
    let unknown = write(dir.path(), "unknown.toml", "seed = 1\nsystem = \"no-such-map\"\n");
    assert_eq!(lyaplab(&["lyapunov", "--config", &unknown]).status.code(), Some(4));
    let range = write(dir.path(), "range.toml", "seed = 1\nsystem = \"cat-map\"\n[params]\nepsilon = 2.0\n");
    assert_eq!(lyaplab(&["observables", "--config", &range]).status.code(), Some(4));
    let clash = write(dir.path(), "clash.toml", CAT);
    assert_eq!(lyaplab(&["entropy", "--config", &clash]).status.code(), Some(4));
    assert_eq!(lyaplab(&["no-such-command"]).status.code(), Some(4));
}

#[test]
fn empty_suite_passes() {
    let dir = TempDir::new().unwrap();
    let out = lyaplab(&["suite", "--config", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 runs"));
}

#[test]
fn malformed_config_fails_the_suite() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "a.toml", CAT);
    write(dir.path(), "b.toml", "seed = [\n");
    let records = TempDir::new().unwrap();
    let out = lyaplab(&["suite", "--config", dir.path().to_str().unwrap(), "--out", records.path().to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("a.toml: pass") && stdout.contains("b.toml: error"), "{stdout}");
    assert!(records.path().join("a.toml").exists());
}

#[test]
fn shipped_configs_pass() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let out = lyaplab(&["suite", "--config", configs.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
