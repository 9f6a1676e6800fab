//! Verdicts of the bound checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of one check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    /// The finite-time surrogate of a limit is too noisy or too short to decide.
    Inconclusive,
    /// Recorded without a claim.
    Informational,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
            Status::Informational => "INFORMATIONAL",
        }
    }

    /// Combination of two sub-verdicts: any failure fails, then any
    /// inconclusive part makes the whole inconclusive.
    pub fn and(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            (Pass, _) | (_, Pass) => Pass,
            _ => Informational,
        }
    }

    pub fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// Discretization metadata carried by every report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub k_max: Option<f64>,
    pub n_max: Option<usize>,
    pub t_max: Option<f64>,
    pub tolerances: BTreeMap<String, f64>,
}

/// One sampled point of a check: a `k` value, a time or a scale parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub param: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for two points.
    pub slope_stderr: f64,
    pub points: usize,
}

impl ExponentFit {
    /// Fits `y ≈ e^{intercept} x^{slope}`; needs two positive points or more.
    pub fn log_log(xs: &[f64], ys: &[f64]) -> Option<Self> {
        let pts: Vec<(f64, f64)> =
            xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
        Self::linear(&pts)
    }

    /// Ordinary least squares on already transformed points.
    pub fn linear(pts: &[(f64, f64)]) -> Option<Self> {
        let n = pts.len();
        if n < 2 {
            return None;
        }
        let nf = n as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let slope_stderr = if n > 2 {
            let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
            (rss / (nf - 2.0) / sxx).sqrt()
        } else {
            0.0
        };
        Some(Self { slope, intercept, slope_stderr, points: n })
    }
}

/// Result of one theorem check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub fitted_constant: Option<f64>,
    pub status: Status,
    pub meta: GridMeta,
    /// `I(K) − I(K/2)` for truncated k-integrals.
    pub tail_estimate: Option<f64>,
    pub fit: Option<ExponentFit>,
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, status: Status) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            fitted_constant: None,
            status,
            meta: GridMeta::default(),
            tail_estimate: None,
            fit: None,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// `lhs ≤ rhs`.
    pub fn upper(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, rhs, Status::from_bool(lhs <= rhs))
    }

    /// `lhs ≥ rhs`.
    pub fn lower(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, rhs, Status::from_bool(lhs >= rhs))
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_rows(mut self, rows: Vec<ReportRow>) -> Self {
        self.rows = rows;
        self
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.fitted_constant = Some(c);
        self
    }

    pub fn with_tolerance(mut self, key: &str, v: f64) -> Self {
        self.meta.tolerances.insert(key.to_string(), v);
        self
    }

    /// Folds sub-checks into one report: the worst status wins and the
    /// sub-verdicts are kept as notes.
    pub fn combine(name: impl Into<String>, parts: Vec<BoundReport>) -> Self {
        let mut status = Status::Informational;
        let mut out = BoundReport::new(name, 0.0, 0.0, Status::Pass);
        for p in &parts {
            status = status.and(p.status);
            out.notes.push(format!("{}: {} (lhs {:.6e}, rhs {:.6e})", p.name, p.status.as_str(), p.lhs, p.rhs));
            out.notes.extend(p.notes.iter().map(|n| format!("{}: {n}", p.name)));
        }
        if let Some(first) = parts.first() {
            out.lhs = first.lhs;
            out.rhs = first.rhs;
            out.fitted_constant = first.fitted_constant;
            out.meta = first.meta.clone();
            out.tail_estimate = first.tail_estimate;
        }
        out.rows = parts.iter().flat_map(|p| p.rows.iter().copied()).collect();
        out.fit = parts.iter().find_map(|p| p.fit);
        out.status = status;
        out
    }
}

/// Scale below which a Cauchy increment is treated as exactly zero.
const EXACT_ZERO: f64 = 1e-20;

/// Classifies a sequence of Cauchy increments `d_1, d_2, …`: each step may
/// exceed its predecessor by at most `noise` (relative) and the last must be
/// below `ratio · d_1`. Monotone but not small enough is `Inconclusive`.
pub fn cauchy_status(seq: &[f64], noise: f64, ratio: f64) -> Status {
    if seq.len() < 2 {
        return Status::Inconclusive;
    }
    let scale = seq.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if scale == 0.0 {
        return Status::Pass;
    }
    let zero = EXACT_ZERO * scale.max(1.0);
    let clean: Vec<f64> = seq.iter().map(|d| if d.abs() <= zero { 0.0 } else { *d }).collect();
    let monotone = clean.windows(2).all(|w| w[1] <= w[0] * (1.0 + noise));
    if !monotone {
        return Status::Fail;
    }
    let last = *clean.last().expect("nonempty");
    if last <= ratio * clean[0] {
        Status::Pass
    } else {
        Status::Inconclusive
    }
}

/// Verdict for a "≲" bound whose constant was calibrated elsewhere: passes
/// when `lhs ≤ budget · c_cal · rhs`.
pub fn within_calibrated(lhs: f64, rhs: f64, c_cal: f64, budget: f64) -> Status {
    if lhs <= 0.0 {
        return Status::Pass;
    }
    Status::from_bool(lhs <= budget * c_cal * rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-1.5)).collect();
        let f = ExponentFit::log_log(&xs, &ys).unwrap();
        assert!((f.slope + 1.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
    }

    #[test]
    fn cauchy_classes() {
        assert_eq!(cauchy_status(&[1.0, 0.5, 1e-4], 0.1, 1e-3), Status::Pass);
        assert_eq!(cauchy_status(&[1.0, 1.05, 1e-4], 0.1, 1e-3), Status::Pass);
        assert_eq!(cauchy_status(&[1.0, 2.0, 1e-4], 0.1, 1e-3), Status::Fail);
        assert_eq!(cauchy_status(&[1.0, 0.5, 0.25], 0.1, 1e-3), Status::Inconclusive);
        assert_eq!(cauchy_status(&[1.0, 0.0, 0.0], 0.1, 1e-3), Status::Pass);
        assert_eq!(cauchy_status(&[0.0, 0.0], 0.1, 1e-3), Status::Pass);
    }

    #[test]
    fn combine_takes_worst() {
        let a = BoundReport::upper("a", 1.0, 2.0);
        let b = BoundReport::new("b", 0.0, 0.0, Status::Inconclusive);
        assert_eq!(BoundReport::combine("ab", vec![a.clone(), b]).status, Status::Inconclusive);
        let c = BoundReport::upper("c", 3.0, 2.0);
        assert_eq!(BoundReport::combine("ac", vec![a, c]).status, Status::Fail);
    }
}
