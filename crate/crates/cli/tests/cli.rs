use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wronski_cli::presets;

fn wronski(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wronski"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn preset_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in presets::NAMES {
        let out = wronski(&["preset", name], dir.path());
        assert_eq!(code(&out), 0);
        assert_eq!(String::from_utf8(out.stdout).unwrap(), presets::preset(name).unwrap());
    }
    let out = wronski(&["preset", "fourier"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("fourier"));
}

#[test]
fn build_writes_manifest_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "legendre.toml", presets::LEGENDRE);
    let out = wronski(&["build", "legendre.toml", "--out-dir", "out"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let csv = fs::read_to_string(dir.path().join("out/samples.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(csv.lines().next(), Some("x,f1,f2,f3,f4,f5,f6"));
    assert_eq!(rows.len(), 201);
    assert!(rows.iter().all(|r| r.len() == 7));
    assert_eq!(rows[0][0], -1.0);
    assert_eq!(rows[200][0], 1.0);
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));
    assert!((rows[200][3] - 1.0 / 3.0).abs() <= 1e-9);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/system.json")).unwrap()).unwrap();
    for key in ["config", "coefficients", "norms", "gram", "schema_version"] {
        assert!(manifest.get(key).is_some(), "missing {key}");
    }
    let c3 = manifest["coefficients"][2].as_array().unwrap();
    assert!((c3[0].as_f64().unwrap() + 1.0 / 6.0).abs() < 1e-9);
}

#[test]
fn single_function_config() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "one.toml", &presets::EXP_SEED.replace("N = 4", "N = 1").replace("h = \"1\"\n", ""));
    let out = wronski(&["build", "one.toml"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,f1"));
}

#[test]
fn formats_limit_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = presets::EXP_SEED.replace("formats = [\"csv\", \"json\"]", "formats = [\"json\"]");
    write(dir.path(), "exp.toml", &text);
    assert_eq!(code(&wronski(&["build", "exp.toml"], dir.path())), 0);
    assert!(dir.path().join("system.json").exists());
    assert!(!dir.path().join("samples.csv").exists());
}

#[test]
fn builds_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "h.toml", presets::NONCONSTANT_H);
    for out_dir in ["a", "b"] {
        assert_eq!(code(&wronski(&["build", "h.toml", "--out-dir", out_dir], dir.path())), 0);
    }
    for file in ["system.json", "samples.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn validate_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "legendre.toml", presets::LEGENDRE);
    let out = wronski(&["validate", "legendre.toml"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["report"]["orthogonality"]["max_residual"].as_f64().unwrap() <= 1e-8);
    assert!(report["report"]["ode"]["max_residual"].as_f64().unwrap() <= 1e-7);
    assert!(report["report"]["base_point"]["convention"].as_str().unwrap().starts_with("F(x0) = 0"));

    let out = wronski(&["validate", "legendre.toml", "--grid-points", "17"], dir.path());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["report"]["grid_points"], 17);

    let out = wronski(&["validate", "legendre.toml", "--inject-perturbation", "0.1"], dir.path());
    assert_eq!(code(&out), 1);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["failures"], serde_json::json!(["orthogonality"]));
    assert!(stderr(&out).contains("orthogonality"));

    assert_eq!(code(&wronski(&["validate", "missing.toml"], dir.path())), 4);
}

#[test]
fn vanishing_weight_is_a_build_failure() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "hx.toml", &presets::LEGENDRE.replace("h = \"1\"", "h = \"x\""));
    let out = wronski(&["build", "hx.toml"], dir.path());
    assert_eq!(code(&out), 3);
    let msg = stderr(&out);
    assert!(msg.contains("required to have no zeros"), "{msg}");
    assert!(msg.contains("x = 0"), "{msg}");
    assert!(msg.contains("stage 2"), "{msg}");

    write(dir.path(), "seed.toml", &presets::LEGENDRE.replace("seed = \"1\"", "seed = \"x - 0.5\""));
    let out = wronski(&["build", "seed.toml"], dir.path());
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("required to be nonzero"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        presets::LEGENDRE.replace("normalize = false", "normalise = false"),
        presets::LEGENDRE.replace("seed = \"1\"", "seed = \"2x\""),
        presets::NONCONSTANT_H.replace("N = 4", "N = 5"),
        presets::LEGENDRE.replace("x0 = 0.0", "x0 = 3.0"),
        "[space]\na = 0\n".to_string(),
    ];
    for (i, text) in cases.iter().enumerate() {
        let name = format!("bad{i}.toml");
        write(dir.path(), &name, text);
        let out = wronski(&["build", &name], dir.path());
        assert_eq!(code(&out), 2, "case {i}: {}", stderr(&out));
    }
    assert_eq!(code(&wronski(&["frobnicate"], dir.path())), 2);
}

#[test]
fn compare_with_gram_schmidt() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "legendre.toml", presets::LEGENDRE);
    let out = wronski(&["compare-gs", "legendre.toml"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0][2], "1");
    for row in &rows {
        assert!(row[2].parse::<f64>().unwrap() >= 1.0 - 1e-10);
    }

    let dependent = presets::LEGENDRE.replace("N = 6", "N = 3") + "\n[compare]\nbasis = [\"1\", \"x\", \"2*x\"]\n";
    write(dir.path(), "dep.toml", &dependent);
    let out = wronski(&["compare-gs", "dep.toml"], dir.path());
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("dependent"));

    write(dir.path(), "exp.toml", presets::EXP_SEED);
    assert_eq!(code(&wronski(&["compare-gs", "exp.toml"], dir.path())), 2);

    // the exp seed against Gram-Schmidt of exp(x) times monomials
    let supplied = presets::EXP_SEED.to_string()
        + "\n[compare]\nbasis = [\"exp(x)\", \"x*exp(x)\", \"x^2*exp(x)\", \"x^3*exp(x)\"]\n";
    write(dir.path(), "exp_basis.toml", &supplied);
    let out = wronski(&["compare-gs", "exp_basis.toml"], dir.path());
    assert_eq!(code(&out), 1);
}
