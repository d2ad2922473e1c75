use std::path::{Path, PathBuf};

use concat_fec::concat::{CodeSource, EnsembleRef};
use concat_fec::ensemble::StaircaseSpec;
use concat_fec::exit::{DEFAULT_GRID_POINTS, DEFAULT_SAMPLES};
use concat_fec::optimizer::DesignSpace;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u64 = 1;

/// Reads a JSON config, checks and strips its `version`, then parses the rest.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::usage(format!("{}: config must be a JSON object", path.display())))?;
    match obj.remove("version").and_then(|v| v.as_u64()) {
        Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(CliError::usage(format!("unsupported config version {v}"))),
        None => return Err(CliError::usage("config needs \"version\": 1".to_string())),
    }
    serde_json::from_value(value).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn five_sixths() -> f64 {
    5.0 / 6.0
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_max_degree() -> usize {
    concat_fec::ensemble::DEFAULT_MAX_VARIABLE_DEGREE
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitGenConfig {
    #[serde(default)]
    pub snr_db: Vec<f64>,
    /// Gaps to the constrained limit at `r_cat`.
    #[serde(default)]
    pub gap_db: Vec<f64>,
    #[serde(default = "five_sixths")]
    pub r_cat: f64,
    pub dc_bar: Vec<f64>,
    pub nu: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_max_degree")]
    pub max_degree: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum OuterTable {
    File(PathBuf),
    Rows(Vec<StaircaseSpec>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default = "five_sixths")]
    pub r_cat: f64,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub gap_db: Vec<f64>,
    /// `example1` or `example2`: adds the example's gap and narrows the
    /// grid to its check degree and `ν`.
    pub preset: Option<String>,
    pub outer_table: Option<OuterTable>,
    #[serde(default)]
    pub space: DesignSpace,
    /// Chart cache directory; defaults to `<out>/charts`.
    pub chart_cache: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructConfig {
    pub ensemble: EnsembleRef,
    pub code: CodeSource,
    pub seed: Option<u64>,
}
