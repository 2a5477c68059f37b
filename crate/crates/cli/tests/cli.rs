use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fy")).args(args).output().unwrap()
}

fn config(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    path.display().to_string()
}

fn scratch(name: &str, contents: &str) -> String {
    let dir = std::env::temp_dir().join(format!("fy-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.display().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_records(out: &Output) -> Vec<Value> {
    stdout(out).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn summary<'a>(records: &'a [Value], name: &str) -> &'a Value {
    records.iter().find(|r| r["record"] == name).unwrap()
}

#[test]
fn missing_config_names_path() {
    let out = fy(&["--config", "/nonexistent/run.toml", "solve3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/run.toml"));
}

#[test]
fn unknown_config_key_is_usage_error() {
    let path = scratch("bad.toml", "[model]\npreset = \"tiny3\"\nradius = 2\n");
    assert_eq!(fy(&["--config", &path, "oracle"]).status.code(), Some(2));
}

#[test]
fn wrong_particle_count_is_usage_error() {
    assert_eq!(fy(&["--config", &config("tiny4.toml"), "solve3"]).status.code(), Some(2));
}

#[test]
fn header_echoes_version_and_config() {
    let out = fy(&["--config", &config("tiny3.toml"), "--seed", "5", "oracle", "--k", "2"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("# fy {} oracle", env!("CARGO_PKG_VERSION")));
    let config_line = lines.next().unwrap().strip_prefix("# config: ").unwrap();
    let echoed: Value = serde_json::from_str(config_line).unwrap();
    assert_eq!(echoed["model"]["N"], 3);
    assert_eq!(echoed["model"]["potential"]["kind"], "gaussian");
    assert_eq!(echoed["seed"], 5);
}

#[test]
fn chains_tables() {
    let four = json_records(&fy(&["--format", "json", "chains", "--n", "4"]));
    let rows: Vec<&Value> = four.iter().filter(|r| r["record"] == "chains").collect();
    assert_eq!(rows.len(), 18);
    let mut orbits: Vec<i64> = rows.iter().map(|r| r["orbit"].as_i64().unwrap()).collect();
    orbits.sort_unstable();
    orbits.dedup();
    assert_eq!(orbits, [0, 1]);

    let three = json_records(&fy(&["--format", "json", "chains", "--n", "3"]));
    assert_eq!(three.iter().filter(|r| r["record"] == "chains").count(), 3);
}

#[test]
fn yak_pattern_has_90_cells() {
    let records = json_records(&fy(&["--format", "json", "yak-pattern"]));
    assert_eq!(summary(&records, "summary")["filled_off_diagonal"], 90);
    let rows: Vec<&Value> = records.iter().filter(|r| r["record"] == "pattern").collect();
    assert_eq!(rows.len(), 18);
    let filled: usize = rows
        .iter()
        .enumerate()
        .map(|(r, row)| (0..18).filter(|c| *c != r && row[c.to_string()] != ".").count())
        .sum();
    assert_eq!(filled, 90);
}

#[test]
fn spectrum_check_runs() {
    let out = fy(&["--format", "json", "spectrum-check", "--n", "3", "--dim", "4", "--seeds", "50"]);
    assert!(out.status.success());
    let records = json_records(&out);
    assert_eq!(records.iter().filter(|r| r["record"] == "instances").count(), 50);
    assert_eq!(summary(&records, "summary")["verdict"], "PASS");

    let scalars = json_records(&fy(&["--format", "json", "spectrum-check", "--n", "2", "--dim", "1", "--seeds", "1"]));
    assert!(summary(&scalars, "summary")["worst_distance"].as_f64().unwrap() < 1e-14);

    let six = fy(&["spectrum-check", "--n", "6", "--dim", "3", "--seeds", "20"]);
    assert!(six.status.success());
    assert!(stdout(&six).contains("verdict: PASS"));
}

#[test]
fn spectrum_check_failure_exits_3() {
    let path = scratch("strict.toml", "[check]\ntol = 1e-300\n");
    let out = fy(&["--config", &path, "spectrum-check", "--n", "3", "--dim", "4", "--seeds", "3"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("verdict: FAIL"));
}

#[test]
fn spectrum_check_rejects_bad_args() {
    assert_eq!(fy(&["spectrum-check", "--n", "1"]).status.code(), Some(2));
    assert_eq!(fy(&["spectrum-check", "--dim", "0"]).status.code(), Some(2));
}

#[test]
fn solve3_matches_oracle_command() {
    let cfg = config("tiny3.toml");
    let oracle = json_records(&fy(&["--config", &cfg, "--format", "json", "oracle", "--k", "1"]));
    let ground = summary(&oracle, "summary")["ground"].as_f64().unwrap();
    let out = fy(&["--config", &cfg, "--format", "json", "solve3"]);
    assert!(out.status.success());
    let solved = json_records(&out);
    let z = summary(&solved, "result")["eigenvalue"].as_f64().unwrap();
    assert!((z - ground).abs() <= 1e-8, "{z} vs {ground}");
}

#[test]
fn solve4_chain_residuals() {
    let out = fy(&["--config", &config("tiny4.toml"), "--format", "json", "solve4"]);
    assert!(out.status.success());
    let records = json_records(&out);
    let residuals: Vec<f64> = records
        .iter()
        .filter(|r| r["record"] == "chains")
        .map(|r| r["residual"].as_f64().unwrap())
        .collect();
    assert_eq!(residuals.len(), 18);
    assert!(residuals.iter().all(|&r| r <= 1e-9), "{residuals:?}");
    assert!(summary(&records, "result")["max_chain_sum_defect"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn hardcore3_sweep_is_ordered() {
    let out = fy(&["--config", &config("tiny3.toml"), "--format", "json", "hardcore3", "--sweep", "1,-1,0"]);
    assert!(out.status.success());
    let records = json_records(&out);
    let rows: Vec<&Value> = records.iter().filter(|r| r["record"] == "sweep").collect();
    let cores: Vec<i64> = rows.iter().map(|r| r["core"].as_i64().unwrap()).collect();
    assert_eq!(cores, [-1, 0, 1]);
    assert!(rows.iter().all(|r| r["accepted"] == true));
    assert_eq!(summary(&records, "summary")["oracle_monotone"], true);
}

#[test]
fn output_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("fy-cli-output-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("chains.txt");
    let out = fy(&["--output", path.to_str().unwrap(), "chains"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().contains("chains: 18"));
}

#[test]
fn dump_matrix_writes_operator() {
    let dir = std::env::temp_dir().join(format!("fy-cli-dump-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("h.txt");
    let out = fy(&["--config", &config("tiny3.toml"), "--dump-matrix", path.to_str().unwrap(), "oracle"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let m = fy_core::blockops::read_matrix(&text).unwrap();
    assert_eq!(m.shape(), (216, 216));
}

#[test]
fn repeated_runs_identical() {
    let cfg = config("tiny3.toml");
    let args = ["--config", cfg.as_str(), "--format", "json", "solve3"];
    assert_eq!(fy(&args).stdout, fy(&args).stdout);
}
