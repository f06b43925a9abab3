//! Config-driven front end for building, validating and comparing Wronski systems.

pub mod config;
pub mod presets;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;
use wronski_core::{
    build_system, gram_schmidt, validate_system, Expression, OrthoSystem, SmoothMap, Thresholds, ValidationReport,
};

pub use config::{parse_config, LoadedConfig, ResolvedConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "system.json";
pub const SAMPLES_FILE: &str = "samples.csv";
/// Minimum `|<f_k, g_k>|` (unit-normalized) for `compare-gs` to succeed.
pub const ALIGNMENT_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("config error: {0}")]
    Config(String),
    #[error("build failed: {0}")]
    Build(#[from] wronski_core::Error),
    #[error("unknown preset '{0}' (available: legendre, exp-seed, nonconstant-h)")]
    UnknownPreset(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::UnknownPreset(_) => 2,
            CliError::Build(_) => 3,
            CliError::Read { .. } | CliError::Write { .. } => 4,
        }
    }
}

fn stdout_error(source: io::Error) -> CliError {
    CliError::Write {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out_dir: PathBuf,
    pub grid_points: Option<usize>,
    /// Adds `eps * f1` to `f2` after the build.
    pub perturbation: Option<f64>,
}

pub fn load(path: &Path, opts: &Options) -> Result<LoadedConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut loaded = parse_config(&text)?;
    if let Some(k) = opts.grid_points {
        if k == 0 {
            return Err(CliError::Config("--grid-points must be positive".into()));
        }
        loaded.build.grid_points = k;
    }
    Ok(loaded)
}

pub fn build(loaded: &LoadedConfig, opts: &Options) -> Result<OrthoSystem, CliError> {
    let sys = build_system(&loaded.build)?;
    match opts.perturbation {
        Some(eps) => Ok(sys.perturbed(eps)?),
        None => Ok(sys),
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema_version: u32,
    pub config: &'a ResolvedConfig,
    pub coefficients: Vec<Vec<f64>>,
    pub norms: &'a [f64],
    pub gram: &'a [Vec<f64>],
}

pub fn manifest_json(loaded: &LoadedConfig, sys: &OrthoSystem) -> String {
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        config: &loaded.resolved,
        coefficients: sys.coefficients(),
        norms: sys.norms(),
        gram: sys.gram(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    text
}

/// Sample abscissae from `a` to `b` inclusive.
pub fn sample_points(a: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            if i + 1 == count {
                b
            } else {
                a + (b - a) * i as f64 / (count - 1) as f64
            }
        })
        .collect()
}

pub fn samples_csv(loaded: &LoadedConfig, sys: &OrthoSystem) -> Result<String, CliError> {
    let (a, b) = loaded.build.ip.interval();
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("x".to_string())
        .chain((1..=sys.len()).map(|k| format!("f{k}")))
        .collect();
    let csv_error = |e: csv::Error| CliError::Write {
        path: PathBuf::from(SAMPLES_FILE),
        source: io::Error::other(e),
    };
    writer.write_record(&header).map_err(csv_error)?;
    for x in sample_points(a, b, loaded.resolved.output.sample_points) {
        let mut row = vec![x.to_string()];
        for f in sys.functions() {
            row.push(f.value(x)?.to_string());
        }
        writer.write_record(&row).map_err(csv_error)?;
    }
    let bytes = writer.into_inner().map_err(|e| csv_error(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Builds the system and writes the manifest and sample table into `opts.out_dir`.
pub fn cmd_build(path: &Path, opts: &Options) -> Result<Vec<PathBuf>, CliError> {
    let loaded = load(path, opts)?;
    let sys = build(&loaded, opts)?;
    let mut written = Vec::new();
    let manifest = loaded.wants("json").then(|| manifest_json(&loaded, &sys));
    let samples = if loaded.wants("csv") {
        Some(samples_csv(&loaded, &sys)?)
    } else {
        None
    };
    fs::create_dir_all(&opts.out_dir).map_err(|source| CliError::Write {
        path: opts.out_dir.clone(),
        source,
    })?;
    if let Some(text) = manifest {
        written.push(write_file(opts.out_dir.join(MANIFEST_FILE), &text)?);
    }
    if let Some(text) = samples {
        written.push(write_file(opts.out_dir.join(SAMPLES_FILE), &text)?);
    }
    Ok(written)
}

#[derive(Debug, Serialize)]
pub struct ValidateOutput<'a> {
    pub pass: bool,
    pub failures: Vec<&'static str>,
    pub report: &'a ValidationReport,
}

pub fn validate_loaded(loaded: &LoadedConfig, opts: &Options) -> Result<ValidationReport, CliError> {
    let sys = build(loaded, opts)?;
    Ok(validate_system(&sys, loaded.build.grid_points, &Thresholds::default()))
}

/// Prints the validation report as JSON; exit code 0 when every check passes, 1 otherwise.
pub fn cmd_validate(path: &Path, opts: &Options, out: &mut dyn Write) -> Result<u8, CliError> {
    let loaded = load(path, opts)?;
    let report = validate_loaded(&loaded, opts)?;
    let output = ValidateOutput {
        pass: report.pass,
        failures: report.failures(),
        report: &report,
    };
    let text = serde_json::to_string_pretty(&output).expect("report serializes");
    writeln!(out, "{text}").map_err(stdout_error)?;
    if report.pass {
        Ok(0)
    } else {
        eprintln!("validation failed: {}", output.failures.join(", "));
        Ok(1)
    }
}

/// `|<f_k, g_k>| / (‖f_k‖ ‖g_k‖)` between the Wronski system and Gram-Schmidt of `basis`.
pub fn alignments(sys: &OrthoSystem, basis: &[Expression]) -> Result<Vec<f64>, CliError> {
    let ip = &sys.config().ip;
    let inputs: Vec<Arc<dyn SmoothMap>> = basis
        .iter()
        .map(|e| Arc::new(e.clone()) as Arc<dyn SmoothMap>)
        .collect();
    let gs = gram_schmidt(&inputs, ip)?;
    sys.functions()
        .iter()
        .zip(&gs)
        .map(|(f, g)| {
            let fg = ip.inner(f.as_ref(), g.as_ref())?;
            let ff = ip.inner(f.as_ref(), f.as_ref())?;
            let gg = ip.inner(g.as_ref(), g.as_ref())?;
            Ok(fg.abs() / (ff * gg).sqrt())
        })
        .collect()
}

/// Basis for `compare-gs`: `[compare] basis`, or monomials when the system is polynomial.
pub fn comparison_basis(loaded: &LoadedConfig) -> Result<Vec<Expression>, CliError> {
    let n = loaded.build.n;
    let basis = match &loaded.compare_basis {
        Some(basis) => basis.clone(),
        None => {
            let polynomial = loaded.build.seed.root().is_constant()
                && loaded.build.h_specs.iter().all(|h| h.root().is_constant());
            if !polynomial {
                return Err(CliError::Config(
                    "compare-gs needs a [compare] basis unless the seed and every h are constant".into(),
                ));
            }
            (0..n)
                .map(|k| Expression::parse(&format!("x^{k}")).expect("monomial parses"))
                .collect()
        }
    };
    if basis.len() != n {
        return Err(CliError::Config(format!(
            "compare.basis has {} entries but N = {n}",
            basis.len()
        )));
    }
    Ok(basis)
}

pub fn cmd_compare_gs(path: &Path, opts: &Options, out: &mut dyn Write) -> Result<u8, CliError> {
    let loaded = load(path, opts)?;
    let basis = comparison_basis(&loaded)?;
    let sys = build(&loaded, opts)?;
    let aligned = alignments(&sys, &basis)?;
    let ok = aligned.iter().all(|&a| a >= 1.0 - ALIGNMENT_TOL);
    let mut text = String::from("k,basis,alignment\n");
    for (k, (a, g)) in aligned.iter().zip(&basis).enumerate() {
        text.push_str(&format!("{},{},{}\n", k + 1, g.source(), a));
    }
    write!(out, "{text}").map_err(stdout_error)?;
    if ok {
        Ok(0)
    } else {
        eprintln!("alignment below 1 - {ALIGNMENT_TOL:e}");
        Ok(1)
    }
}

pub fn cmd_preset(name: &str, out: &mut dyn Write) -> Result<u8, CliError> {
    let text = presets::preset(name).ok_or_else(|| CliError::UnknownPreset(name.to_string()))?;
    write!(out, "{text}").map_err(stdout_error)?;
    Ok(0)
}
