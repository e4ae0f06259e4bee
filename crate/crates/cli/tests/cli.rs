use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONFIG: &str = r#"
schema_version = 1
seed = 3

[system]
dim = 2
triangular = true
a = { kind = "constant", matrix = [[-0.5, 1.0], [0.0, 0.5]] }
c = { kind = "constant", matrix = [[0.1, 0.0], [0.0, -0.1]] }

[driver]
kind = "fbm"
hurst = 0.7
dt = 0.0625
horizon = 24.0

[numerics]
p = 1.5
q = 2.5
horizon = 20.0
"#;

struct Scratch(tempfile::TempDir);

impl Scratch {
    fn new() -> Self {
        Scratch(tempfile::tempdir().unwrap())
    }

    fn dir(&self) -> &Path {
        self.0.path()
    }

    fn config(&self, text: &str) -> PathBuf {
        let p = self.dir().join("experiment.toml");
        std::fs::write(&p, text).unwrap();
        p
    }
}

fn ylyap(args: &[&str], config: &Path, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ylyap"));
    cmd.args(args).arg("--config").arg(config).env_remove("YLYAP_OUT_DIR").env("RUST_LOG", "warn");
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().unwrap()
}

#[test]
fn spectrum_writes_series_and_estimate() {
    let s = Scratch::new();
    let cfg = s.config(CONFIG);
    let out = s.dir().join("out");
    let run = ylyap(&["spectrum"], &cfg, Some(&out));
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let series = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series.starts_with("t,lambda_1,lambda_2,logdet"));
    let est: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("spectrum.json")).unwrap()).unwrap();
    let lambdas = est["estimate"]["lambdas"].as_array().unwrap();
    assert_eq!(lambdas.len(), 2);
    assert!((lambdas[0].as_f64().unwrap() - 0.4).abs() < 0.2);
    assert!(est["within_bound"].as_bool().unwrap());
}

#[test]
fn invalid_config_lists_fields_and_exits_2() {
    let s = Scratch::new();
    let cfg = s.config(&CONFIG.replace("hurst = 0.7", "hurst = 1.4").replace("p = 1.5", "p = 2.5"));
    let run = ylyap(&["solve"], &cfg, Some(s.dir()));
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("driver.hurst") && err.contains("numerics.p"), "{err}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let s = Scratch::new();
    let cfg = s.config(&CONFIG.replace("seed = 3", "seed = 3\nsed = 4"));
    assert_eq!(ylyap(&["solve"], &cfg, Some(s.dir())).status.code(), Some(2));
}

#[test]
fn missing_csv_is_reported() {
    let s = Scratch::new();
    let text = CONFIG.replace(
        "kind = \"fbm\"\nhurst = 0.7\ndt = 0.0625\nhorizon = 24.0",
        "kind = \"csv\"\npath = \"nowhere.csv\"",
    );
    let run = ylyap(&["solve"], &s.config(&text), Some(s.dir()));
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("nowhere.csv"));
}

#[test]
fn seed_flag_overrides_config() {
    let s = Scratch::new();
    let cfg = s.config(CONFIG);
    let (a, b, c) = (s.dir().join("a"), s.dir().join("b"), s.dir().join("c"));
    assert!(ylyap(&["solve"], &cfg, Some(&a)).status.success());
    assert!(ylyap(&["solve", "--seed", "3"], &cfg, Some(&b)).status.success());
    assert!(ylyap(&["solve", "--seed", "99"], &cfg, Some(&c)).status.success());
    let read = |d: &Path| std::fs::read(d.join("solution.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let resolved = std::fs::read_to_string(c.join("config.resolved.toml")).unwrap();
    assert!(resolved.contains("seed = 99"));
}

#[test]
fn out_dir_from_environment() {
    let s = Scratch::new();
    let cfg = s.config(CONFIG);
    let out = s.dir().join("from-env");
    let run = Command::new(env!("CARGO_BIN_EXE_ylyap"))
        .args(["assumptions", "--config"])
        .arg(&cfg)
        .env("YLYAP_OUT_DIR", &out)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("assumptions.json").exists());
}

#[test]
fn oracle_needs_triangular_system() {
    let s = Scratch::new();
    let cfg = s.config(&CONFIG.replace("triangular = true", "triangular = false"));
    assert_eq!(ylyap(&["oracle"], &cfg, Some(s.dir())).status.code(), Some(2));
}
