//! Run directory layout: `metadata.json`, one CSV per table and
//! `summary.txt`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::CliError;

pub const METADATA: &str = "metadata.json";
pub const SUMMARY: &str = "summary.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    /// Pass when `value <= threshold`.
    AtMost,
    /// Pass when `value >= threshold`.
    AtLeast,
}

/// One pass/fail judgement against a declared tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    /// Written as `null` when the measurement is undefined.
    #[serde(deserialize_with = "nan_from_null")]
    pub value: f64,
    pub bound: Bound,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), value, bound: Bound::AtMost, threshold, pass: value <= threshold, detail: detail.into() }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), value, bound: Bound::AtLeast, threshold, pass: value >= threshold, detail: detail.into() }
    }

    /// A verdict that holds without a measurement, e.g. for zero data.
    pub fn trivial(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { name: name.into(), value: 0.0, bound: Bound::AtMost, threshold: 0.0, pass: true, detail: detail.into() }
    }
}

fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// A CSV file of the run.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub file: String,
    pub header: String,
    pub rows: Vec<String>,
}

impl CsvTable {
    pub fn new(file: &str, header: &str) -> Self {
        Self { file: file.into(), header: header.into(), rows: vec![] }
    }

    fn render(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(&self.header);
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<CsvTable>,
    pub verdicts: Vec<Verdict>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub passed: bool,
    pub files: Vec<String>,
    pub verdicts: Vec<Verdict>,
    /// The resolved configuration, defaults included.
    pub config: serde_json::Value,
}

/// Writes the tables and metadata, then the summary rendered from them.
pub fn write_run(cfg: &Config, outcome: &Outcome) -> Result<String, CliError> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    for t in &outcome.tables {
        fs::write(dir.join(&t.file), t.render())?;
    }
    let meta = Metadata {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: cfg.scenario.name().into(),
        passed: outcome.passed(),
        files: outcome.tables.iter().map(|t| t.file.clone()).collect(),
        verdicts: outcome.verdicts.clone(),
        config: serde_json::to_value(cfg).map_err(|e| CliError::Run(e.to_string()))?,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Run(e.to_string()))?;
    fs::write(dir.join(METADATA), json + "\n")?;
    crate::report::emit_report(dir)
}

pub fn read_metadata(dir: &Path) -> Result<Metadata, CliError> {
    let path = dir.join(METADATA);
    let text = fs::read_to_string(&path).map_err(|_| CliError::Usage(format!("{} is not a run directory: no {METADATA}", dir.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
