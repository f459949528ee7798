//! Experiment reports and their CSV, JSON and plot renderings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentKind, OutputFormat, OutputSection};
use crate::error::Result;

/// One horizon of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub delta: f64,
    pub nonlocal: f64,
    pub local: f64,
    /// `nonlocal − local`.
    pub gap: f64,
    pub sol_err: Option<f64>,
    pub iters: Option<usize>,
}

impl Row {
    pub fn new(delta: f64, nonlocal: f64, local: f64) -> Self {
        Row { delta, nonlocal, local, gap: nonlocal - local, sol_err: None, iters: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Verdict {
    /// Passes iff `value ≥ threshold`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Verdict { name: name.into(), value, threshold, passed: value >= threshold }
    }

    /// Passes iff `value ≤ threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Verdict { name: name.into(), value, threshold, passed: value <= threshold }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub dim: usize,
    /// Node counts and spacing of the grid at the smallest horizon.
    pub n_per_axis: Vec<usize>,
    pub spacing: f64,
    pub kernel: String,
    pub p: f64,
    pub coefficient: String,
    pub load: String,
    pub field: String,
    /// Factor multiplying `∫ h |∇u|^p` in the local column.
    pub limit_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub name: String,
    pub metadata: Metadata,
    pub rows: Vec<Row>,
    pub verdicts: Vec<Verdict>,
    /// Least-squares slope of `log|gap|` against `log δ`.
    pub order: Option<f64>,
    pub tol_ineq: Option<f64>,
    /// Largest nonlocal energy over the sweep.
    pub energy_bound: Option<f64>,
}

pub const CSV_HEADER: &str = "delta,nonlocal,local,gap,sol_err,iters";

impl Report {
    pub fn new(experiment: ExperimentKind, name: impl Into<String>, metadata: Metadata) -> Self {
        Report {
            experiment,
            name: name.into(),
            metadata,
            rows: Vec::new(),
            verdicts: Vec::new(),
            order: None,
            tol_ineq: None,
            energy_bound: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let err = r.sol_err.map(|e| e.to_string()).unwrap_or_default();
            let it = r.iters.map(|e| e.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},{},{}", r.delta, r.nonlocal, r.local, r.gap, err, it);
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Report> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_plot(&self) -> String {
        let mut s = String::from("delta gap\n");
        for r in &self.rows {
            let _ = writeln!(s, "{} {}", r.delta, r.gap);
        }
        s
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => Ok(self.to_csv()),
            OutputFormat::Json => self.to_json(),
            OutputFormat::Plot => Ok(self.to_plot()),
        }
    }

    /// Human-readable table and verdict lines.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} ({})", self.name, self.experiment.id());
        if !self.rows.is_empty() {
            let _ = writeln!(
                s,
                "  {:>8} {:>14} {:>14} {:>12} {:>11} {:>6}",
                "delta", "nonlocal", "local", "gap", "sol_err", "iters"
            );
            for r in &self.rows {
                let err = r.sol_err.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into());
                let it = r.iters.map(|e| e.to_string()).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    s,
                    "  {:>8} {:>14.8} {:>14.8} {:>12.3e} {:>11} {:>6}",
                    r.delta, r.nonlocal, r.local, r.gap, err, it
                );
            }
        }
        if let Some(o) = self.order {
            let _ = writeln!(s, "  fitted order {o:.3}");
        }
        if let Some(b) = self.energy_bound {
            let _ = writeln!(s, "  max nonlocal energy {b:.6}");
        }
        for v in &self.verdicts {
            let tag = if v.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "  [{tag}] {} (value {:.6e}, threshold {:.6e})", v.name, v.value, v.threshold);
        }
        s
    }
}

/// Writes `report` in `format` to `path`.
pub fn emit_report(report: &Report, format: OutputFormat, path: &Path) -> Result<()> {
    fs::write(path, report.render(format)?)?;
    Ok(())
}

fn extension(format: OutputFormat) -> &'static str {
    match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
        OutputFormat::Plot => "dat",
    }
}

/// Writes every configured format into the output directory, creating it if
/// needed; returns the written paths.
pub fn write_outputs(report: &Report, out: &OutputSection) -> Result<Vec<PathBuf>> {
    let Some(dir) = &out.dir else {
        return Ok(Vec::new());
    };
    fs::create_dir_all(dir)?;
    let stem = out.stem.clone().unwrap_or_else(|| report.name.clone());
    let mut written = Vec::new();
    for &format in &out.formats {
        let path = dir.join(format!("{stem}.{}", extension(format)));
        emit_report(report, format, &path)?;
        written.push(path);
    }
    Ok(written)
}

/// Least-squares slope of `log|y|` against `log x`, skipping zero entries;
/// `None` with fewer than two usable points.
pub fn fit_order(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && b.abs() > 0.0)
        .map(|(a, b)| (a.ln(), b.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}
