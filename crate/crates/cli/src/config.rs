use serde::{Deserialize, Serialize};
use wronski_core::{BuildConfig, Expression, InnerProduct};

use crate::CliError;

pub const DEFAULT_SAMPLE_POINTS: usize = 201;
pub const KNOWN_FORMATS: [&str; 2] = ["csv", "json"];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub space: SpaceSection,
    pub build: BuildSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub compare: Option<CompareSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub a: f64,
    pub b: f64,
    #[serde(default = "unit_weight")]
    pub weight: String,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildSection {
    pub seed: String,
    #[serde(rename = "N", alias = "n")]
    pub n: usize,
    #[serde(default)]
    pub x0: Option<f64>,
    #[serde(default)]
    pub h: HSpec,
    #[serde(default)]
    pub normalize: bool,
}

/// One expression for every stage, or one per stage.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum HSpec {
    Broadcast(String),
    PerStage(Vec<String>),
}

impl Default for HSpec {
    fn default() -> Self {
        HSpec::Broadcast(unit_weight())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_sample_points")]
    pub sample_points: usize,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            sample_points: DEFAULT_SAMPLE_POINTS,
            formats: default_formats(),
        }
    }
}

/// Basis handed to Gram-Schmidt by `compare-gs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub basis: Vec<String>,
}

fn unit_weight() -> String {
    "1".into()
}

fn default_quad_tol() -> f64 {
    wronski_core::analysis::DEFAULT_QUAD_TOL
}

fn default_sample_points() -> usize {
    DEFAULT_SAMPLE_POINTS
}

fn default_formats() -> Vec<String> {
    KNOWN_FORMATS.iter().map(|s| s.to_string()).collect()
}

/// The config with every default filled in, echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedBuild {
    pub seed: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub x0: f64,
    pub h: Vec<String>,
    pub normalize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub space: SpaceSection,
    pub build: ResolvedBuild,
    pub output: OutputSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSection>,
}

/// A validated config, ready to build.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub resolved: ResolvedConfig,
    pub build: BuildConfig,
    pub compare_basis: Option<Vec<Expression>>,
}

impl LoadedConfig {
    pub fn wants(&self, format: &str) -> bool {
        self.resolved.output.formats.iter().any(|f| f == format)
    }
}

fn expression(field: &str, text: &str) -> Result<Expression, CliError> {
    Expression::parse(text).map_err(|e| CliError::Config(format!("{field} = \"{text}\": {e}")))
}

pub fn parse_config(text: &str) -> Result<LoadedConfig, CliError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    resolve(file)
}

pub fn resolve(file: ConfigFile) -> Result<LoadedConfig, CliError> {
    let ConfigFile {
        space,
        build,
        output,
        compare,
    } = file;
    let weight = expression("space.weight", &space.weight)?;
    let ip = InnerProduct::new(space.a, space.b, weight, space.quad_tol)
        .map_err(|e| CliError::Config(format!("[space]: {e}")))?;

    if build.n == 0 {
        return Err(CliError::Config("build.N must be at least 1".into()));
    }
    let h_texts = match build.h {
        HSpec::Broadcast(text) => vec![text; build.n - 1],
        HSpec::PerStage(list) => {
            if list.len() != build.n - 1 {
                return Err(CliError::Config(format!(
                    "build.h lists {} expressions but N = {} needs {}",
                    list.len(),
                    build.n,
                    build.n - 1
                )));
            }
            list
        }
    };
    let h_specs = h_texts
        .iter()
        .enumerate()
        .map(|(i, t)| expression(&format!("build.h[{}]", i + 1), t))
        .collect::<Result<Vec<_>, _>>()?;

    let seed = expression("build.seed", &build.seed)?;
    let mut config = BuildConfig::new(seed, build.n, ip);
    config.h_specs = h_specs;
    if let Some(x0) = build.x0 {
        config.x0 = x0;
    }
    config.normalize = build.normalize;
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;

    if output.sample_points < 2 {
        return Err(CliError::Config(format!(
            "output.sample_points must be at least 2, got {}",
            output.sample_points
        )));
    }
    for format in &output.formats {
        if !KNOWN_FORMATS.contains(&format.as_str()) {
            return Err(CliError::Config(format!(
                "unknown output format '{format}' (expected one of {KNOWN_FORMATS:?})"
            )));
        }
    }

    let compare_basis = compare
        .as_ref()
        .map(|c| {
            c.basis
                .iter()
                .enumerate()
                .map(|(i, t)| expression(&format!("compare.basis[{}]", i + 1), t))
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;

    let resolved = ResolvedConfig {
        space,
        build: ResolvedBuild {
            seed: build.seed,
            n: build.n,
            x0: config.x0,
            h: h_texts,
            normalize: build.normalize,
        },
        output,
        compare,
    };
    Ok(LoadedConfig {
        resolved,
        build: config,
        compare_basis,
    })
}
