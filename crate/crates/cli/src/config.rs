use std::fs;
use std::path::Path;

use qrf_core::groups::GroupPreset;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Largest group order accepted by the frame-change suites (total space `|G|³`).
pub const MAX_FRAME_CHANGE_ORDER: usize = 6;

/// Suite configuration; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub group: String,
    pub seed: u64,
    pub batch: usize,
    pub tol: f64,
    pub dims: Vec<usize>,
    pub grid: usize,
    pub timings: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            group: "Z3".into(),
            seed: 7,
            batch: 20,
            tol: 1e-9,
            dims: vec![2, 4, 8, 16, 32],
            grid: 64,
            timings: false,
        }
    }
}

impl SuiteConfig {
    /// Read a JSON config; errors name the offending field.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            CliError::config(if field == "." { "<root>".into() } else { field }, e.into_inner().to_string())
        })
    }

    pub fn preset(&self) -> Result<GroupPreset> {
        self.group.parse().map_err(|e: qrf_core::Error| CliError::config("group", e.to_string()))
    }

    pub fn validate(&self) -> Result<GroupPreset> {
        let preset = self.preset()?;
        qrf_core::groups::make_preset(preset).map_err(|e| CliError::config("group", e.to_string()))?;
        if self.batch == 0 {
            return Err(CliError::config("batch", "must be positive"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(CliError::config("tol", format!("must be a positive number, got {}", self.tol)));
        }
        if self.dims.is_empty() {
            return Err(CliError::config("dims", "must list at least one truncation"));
        }
        if let Some(i) = self.dims.iter().position(|&d| d == 0) {
            return Err(CliError::config(format!("dims[{i}]"), "truncation must be positive"));
        }
        if self.grid < 4 {
            return Err(CliError::config("grid", "needs at least 4 cells"));
        }
        Ok(preset)
    }
}
