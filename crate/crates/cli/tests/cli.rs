use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_firmcomp"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn meta(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn duopoly_nash_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["nash", "--firms", "2", "--alpha", "1", "--p-max", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("nash.csv"));
    assert_eq!(rows.len(), 1);
    let get = |name: &str| rows[0][column(&header, name)].parse::<f64>().unwrap();
    assert!((get("q_nash") - 0.24).abs() < 1e-12);
    assert!((get("p_nash") - 0.4).abs() < 1e-12);
    assert!((get("q_numeric") - 0.24).abs() < 1e-6);
    assert!((get("p_numeric") - 0.4).abs() < 1e-6);
    assert_eq!(rows[0][column(&header, "converged")], "true");

    let m = meta(&dir.path().join("nash.meta.json"));
    for key in ["tool", "version", "schema", "schema_version", "arguments", "config", "diagnostics", "timestamp"] {
        assert!(m.get(key).is_some(), "sidecar lacks {key}");
    }
    assert_eq!(m["schema"], "nash");
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["config"]["population"]["alpha"], 1.0);
}

#[test]
fn fig2_header_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["figure", "fig2", "--grid", "alpha=0:1:0.5"]);
    assert_eq!(code(&out), 0);
    let (header, rows) = read_csv(&dir.path().join("fig2.csv"));
    assert_eq!(header, ["alpha", "n", "q_nash", "p_nash", "x_nash", "rho", "xi", "marginal"]);
    assert_eq!(rows.len(), 3 * 4);
}

#[test]
fn fig4_peaks_at_the_quoted_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["figure", "fig4", "--alpha", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("fig4.csv"));
    let (tau, xi) = (column(&header, "tau"), column(&header, "xi_farsighted"));
    let best = rows
        .iter()
        .map(|r| (r[tau].parse::<f64>().unwrap(), r[xi].parse::<f64>().unwrap()))
        .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    assert!((best.0 - 0.92).abs() <= 0.01, "argmax at {}", best.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["figure", "fig9"])), 64);
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 64);
    assert_eq!(code(&run(dir.path(), &["nash", "--alpha", "-1"])), 65);
    assert_eq!(code(&run(dir.path(), &["nash", "--max-iterations", "2", "--alpha", "2"])), 2);
    assert!(dir.path().join("nash.csv").exists(), "outputs are written before exit 2");

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[population]\nalpha = \"two\"\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["--config", bad.to_str().unwrap(), "nash"])), 65);
    fs::write(&bad, "[population]\nbeta = 2.0\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["--config", bad.to_str().unwrap(), "nash"])), 65);
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&run(dir.path(), &["--config", missing.to_str().unwrap(), "nash"])), 65);

    let help = Command::new(env!("CARGO_BIN_EXE_firmcomp")).arg("--help").output().unwrap();
    assert_eq!(code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("figure"));
}

#[test]
fn validate_passes_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["validate", "--consumers", "200000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let (header, rows) = read_csv(&dir.path().join("validate.csv"));
    assert_eq!(header, ["check", "passed", "value", "tolerance", "detail"]);
    assert!(rows.iter().all(|r| r[1] == "true"));

    let starved = run(dir.path(), &["validate", "--consumers", "200000", "--max-iterations", "3"]);
    assert_eq!(code(&starved), 1);
}

#[test]
fn reruns_are_identical_up_to_the_timestamp() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["figure", "fig6", "--grid", "eta=0.8:1:0.05"];
    assert_eq!(code(&run(a.path(), &args)), 0);
    assert_eq!(code(&run(b.path(), &args)), 0);
    assert_eq!(fs::read(a.path().join("fig6.csv")).unwrap(), fs::read(b.path().join("fig6.csv")).unwrap());
    let strip = |dir: &Path| {
        let mut m = meta(&dir.join("fig6.meta.json"));
        let obj = m.as_object_mut().unwrap();
        obj.remove("timestamp");
        // the output directory differs by construction
        obj.remove("arguments");
        obj["config"]["output"].as_object_mut().unwrap().remove("dir");
        m
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "symmetric_firms = 3\n\n[population]\nalpha = 4.0\np_max = 2.0\n").unwrap();
    let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "nash", "--alpha", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("nash.csv"));
    let get = |name: &str| rows[0][column(&header, name)].parse::<f64>().unwrap();
    assert_eq!(get("alpha"), 1.0);
    assert_eq!(get("n"), 3.0);
    // p_N = n p_max / (3n - 1) with p_max from the file
    assert!((get("p_nash") - 3.0 * 2.0 / 8.0).abs() < 1e-12);
}

#[test]
fn simulate_a_configured_roster() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("roster.toml");
    fs::write(
        &cfg,
        "[population]\nalpha = 1.0\np_max = 1.0\n\n\
         [montecarlo]\nnum_consumers = 500000\nseed = 9\n\n\
         [[firms]]\nquality = 0.24\nprice = 0.4\n\n\
         [[firms]]\nquality = 0.24\nprice = 0.4\n",
    )
    .unwrap();
    let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("simulate.csv"));
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let analytic: f64 = r[column(&header, "analytic_profit")].parse().unwrap();
        let z: f64 = r[column(&header, "z_score")].parse().unwrap();
        assert!((analytic - 0.0288).abs() < 1e-12);
        assert!(z.abs() < 4.0);
    }
    let again = run(dir.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(code(&again), 0);
    assert_eq!(out.stdout, again.stdout);
}
