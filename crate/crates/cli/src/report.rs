//! One-page text summary of a run directory.

use std::fmt::Write;
use std::fs;
use std::path::Path;

use crate::error::CliError;
use crate::output::{read_metadata, Bound, SUMMARY};

/// Tables short enough to print in full.
const SHOWN: [&str; 5] = ["fits.csv", "iterations.csv", "convergence.csv", "constants.csv", "kernel_fit.csv"];

fn aligned(csv: &str) -> String {
    let rows: Vec<Vec<&str>> = csv.lines().filter(|l| !l.is_empty()).map(|l| l.split(',').collect()).collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let width: Vec<usize> = (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r.iter().enumerate().map(|(c, s)| format!("{s:<w$}", w = width[c])).collect();
        out.push_str("  ");
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Renders the summary of a completed run, writes it to `summary.txt` and
/// returns it. Rerunning on the same directory gives the same text.
pub fn emit_report(dir: &Path) -> Result<String, CliError> {
    let meta = read_metadata(dir)?;
    let mut tables = Vec::with_capacity(meta.files.len());
    for f in &meta.files {
        let text = fs::read_to_string(dir.join(f)).map_err(|_| CliError::Usage(format!("run artifact {f} is missing from {}", dir.display())))?;
        tables.push((f, text));
    }
    let passed = meta.verdicts.iter().filter(|v| v.pass).count();
    let mut s = String::new();
    let _ = writeln!(s, "scenario {} ({} {})", meta.scenario, meta.tool, meta.version);
    let _ = writeln!(
        s,
        "result   {} ({passed} of {} checks pass)\n",
        if meta.passed { "PASS" } else { "FAIL" },
        meta.verdicts.len()
    );
    let _ = writeln!(s, "checks");
    for v in &meta.verdicts {
        let op = match v.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        let _ = writeln!(
            s,
            "  {} {}: {:.4e} {op} {:.4e}{}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.value,
            v.threshold,
            if v.detail.is_empty() { String::new() } else { format!("  ({})", v.detail) }
        );
    }
    for (f, text) in &tables {
        if SHOWN.contains(&f.as_str()) {
            let _ = write!(s, "\n{f}\n{}", aligned(text));
        }
    }
    let others: Vec<String> = tables
        .iter()
        .filter(|(f, _)| !SHOWN.contains(&f.as_str()))
        .map(|(f, t)| format!("{f} ({} rows)", t.lines().count().saturating_sub(1)))
        .collect();
    if !others.is_empty() {
        let _ = writeln!(s, "\nother data: {}", others.join(", "));
    }
    fs::write(dir.join(SUMMARY), &s)?;
    Ok(s)
}
