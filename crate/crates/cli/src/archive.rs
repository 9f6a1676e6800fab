//! Run archives: `metadata.json`, `reports.json`, one CSV per check and a
//! plain-text summary.
//!
//! Nothing time- or host-dependent is written in deterministic mode, so two
//! runs of the same config produce identical bytes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use coupling_lab::report::{BoundReport, ReportRow};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::runner::CheckOutcome;

pub const CSV_HEADER: [&str; 6] = ["check", "k", "lhs", "rhs", "fitted_constant", "status"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: String,
    pub name: String,
    pub status: String,
    pub lhs: f64,
    pub rhs: f64,
    pub fitted_constant: Option<f64>,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool_version: String,
    pub name: String,
    pub model: Option<String>,
    pub seed: u64,
    pub config_hash: String,
    pub config: ScenarioConfig,
    pub checks: Vec<CheckSummary>,
    /// Largest step-refinement level among the reports, when recorded.
    pub max_refinement: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

/// SHA-256 of the canonical TOML form of the config.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn finite(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-f64::MAX, f64::MAX)
    }
}

/// JSON has no NaN or infinity: such values are clamped and noted.
pub fn sanitize(mut r: BoundReport) -> BoundReport {
    let bad = !r.lhs.is_finite() || !r.rhs.is_finite() || r.rows.iter().any(|w| !(w.param.is_finite() && w.lhs.is_finite() && w.rhs.is_finite()));
    if bad {
        r.lhs = finite(r.lhs);
        r.rhs = finite(r.rhs);
        r.rows = r.rows.iter().map(|w| ReportRow { param: finite(w.param), lhs: finite(w.lhs), rhs: finite(w.rhs) }).collect();
        r.notes.push("non-finite values clamped for serialization".into());
    }
    r.fitted_constant = r.fitted_constant.map(finite);
    r.tail_estimate = r.tail_estimate.map(finite);
    r
}

fn csv_name(i: usize, check: &str) -> String {
    format!("{:02}_{check}.csv", i + 1)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Rows of one report, then an aggregate row with an empty `k`.
pub fn write_report_csv<W: io::Write>(w: &mut csv::Writer<W>, r: &BoundReport) -> csv::Result<()> {
    let status = r.status.as_str();
    for row in &r.rows {
        w.write_record([r.name.as_str(), &row.param.to_string(), &row.lhs.to_string(), &row.rhs.to_string(), "", status])?;
    }
    w.write_record([r.name.as_str(), "", &r.lhs.to_string(), &r.rhs.to_string(), &fmt_opt(r.fitted_constant), status])
}

pub fn summary_text(cfg: &ScenarioConfig, outcomes: &[CheckOutcome]) -> String {
    let mut s = format!("scenario {} ({})\n", cfg.name, cfg.model.as_ref().map_or("no model", |m| m.id()));
    for o in outcomes {
        let r = &o.report;
        s.push_str(&format!("  {:<14} {:<28} lhs {:>13.6e}  rhs {:>13.6e}\n", r.status.as_str(), o.check, r.lhs, r.rhs));
        for n in &r.notes {
            s.push_str(&format!("      {n}\n"));
        }
    }
    s
}

/// Writes the archive into `dir` (created if needed) and returns its path.
pub fn write_archive(dir: &Path, cfg: &ScenarioConfig, outcomes: &[CheckOutcome], wall_time_s: Option<f64>) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let reports: Vec<BoundReport> = outcomes.iter().map(|o| sanitize(o.report.clone())).collect();
    let mut checks = Vec::new();
    for (i, (o, r)) in outcomes.iter().zip(&reports).enumerate() {
        let name = csv_name(i, &o.check);
        let mut w = csv::Writer::from_path(dir.join(&name)).map_err(io::Error::other)?;
        w.write_record(CSV_HEADER).map_err(io::Error::other)?;
        write_report_csv(&mut w, r).map_err(io::Error::other)?;
        w.flush()?;
        checks.push(CheckSummary {
            check: o.check.clone(),
            name: r.name.clone(),
            status: r.status.as_str().to_string(),
            lhs: r.lhs,
            rhs: r.rhs,
            fitted_constant: r.fitted_constant,
            csv: name,
        });
    }
    let meta = Metadata {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        name: cfg.name.clone(),
        model: cfg.model.as_ref().map(|m| m.id().to_string()),
        seed: cfg.seed,
        config_hash: config_hash(cfg),
        config: cfg.clone(),
        checks,
        max_refinement: None,
        wall_time_s,
    };
    fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    fs::write(dir.join("reports.json"), serde_json::to_string_pretty(&reports)? + "\n")?;
    fs::write(dir.join("summary.txt"), summary_text(cfg, outcomes))?;
    Ok(dir.to_path_buf())
}

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ArchiveError> {
    let text = fs::read_to_string(path).map_err(|source| ArchiveError::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|source| ArchiveError::Json { path: path.display().to_string(), source })
}

pub fn read_archive(dir: &Path) -> Result<(Metadata, Vec<BoundReport>), ArchiveError> {
    Ok((read_json(&dir.join("metadata.json"))?, read_json(&dir.join("reports.json"))?))
}

/// Relative paths and contents of every file under `dir`, sorted.
pub fn snapshot(dir: &Path) -> io::Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).expect("inside dir").display().to_string();
                out.push((rel, fs::read(&p)?));
            }
        }
    }
    out.sort();
    Ok(out)
}
