//! Report output. JSON for reports, CSV for curves and check tables.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use qrf_core::phaselab::LocalizationCurve;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::suite::SuiteReport;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Anything the harness can print.
pub trait Emit {
    fn to_json(&self) -> Result<Vec<u8>>;
    fn to_csv(&self) -> Result<Vec<u8>>;
}

fn json_bytes<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| CliError::config("<output>", e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::config("<output>", e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::config("<output>", e.to_string()))
}

impl Emit for LocalizationCurve {
    fn to_json(&self) -> Result<Vec<u8>> {
        json_bytes(self)
    }

    /// Columns: `d, n, set_id, probability, deviation, ball_radius, ball_probability, set_measure`.
    fn to_csv(&self) -> Result<Vec<u8>> {
        csv_bytes(&self.records)
    }
}

#[derive(Serialize)]
struct CheckRow<'a> {
    suite: String,
    group: &'a str,
    seed: u64,
    id: &'a str,
    anchor: &'a str,
    cases: usize,
    residual: f64,
    threshold: f64,
    bound: crate::suite::Bound,
    pass: bool,
}

/// A batch of suite reports, emitted together by `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn new(suites: Vec<SuiteReport>) -> Self {
        VerifyReport { pass: suites.iter().all(|s| s.pass), suites }
    }
}

impl Emit for VerifyReport {
    fn to_json(&self) -> Result<Vec<u8>> {
        json_bytes(self)
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        csv_bytes(self.suites.iter().flat_map(|s| {
            s.checks.iter().map(move |c| CheckRow {
                suite: s.suite.to_string(),
                group: &s.group,
                seed: s.seed,
                id: &c.id,
                anchor: &c.anchor,
                cases: c.cases,
                residual: c.residual,
                threshold: c.threshold,
                bound: c.bound,
                pass: c.pass,
            })
        }))
    }
}

/// JSON-only payloads; CSV is refused with a config error.
pub struct JsonOnly<T>(pub T);

impl<T: Serialize> Emit for JsonOnly<T> {
    fn to_json(&self) -> Result<Vec<u8>> {
        json_bytes(&self.0)
    }

    fn to_csv(&self) -> Result<Vec<u8>> {
        Err(CliError::config("format", "this output is only available as JSON"))
    }
}

pub fn render(item: &dyn Emit, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => item.to_json(),
        Format::Csv => item.to_csv(),
    }
}

/// Write to `out`, or stdout when absent.
pub fn emit(item: &dyn Emit, format: Format, out: Option<&Path>) -> Result<()> {
    let bytes = render(item, format)?;
    let (path, written) = match out {
        Some(path) => (path, File::create(path).and_then(|mut f| f.write_all(&bytes))),
        None => (Path::new("<stdout>"), io::stdout().lock().write_all(&bytes)),
    };
    written.map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}
