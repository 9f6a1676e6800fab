//! `report` output: a combined CSV, JSON mirroring the reports, and one SVG
//! per check with rows.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use coupling_lab::report::BoundReport;

use crate::archive::{write_report_csv, CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

pub fn to_csv(reports: &[BoundReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in reports {
        write_report_csv(&mut w, r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn to_json(reports: &[BoundReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize") + "\n"
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64> + Clone) -> Self {
        let log = values.clone().all(|v| v > 0.0);
        let t: Vec<f64> = values.map(|v| if log { v.log10() } else { v }).filter(|v| v.is_finite()).collect();
        let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        };
        Axis { log, lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        let x = if self.log { v.log10() } else { v };
        ((x - self.lo) / (self.hi - self.lo)).clamp(-0.05, 1.05)
    }

    fn label(&self, f: f64) -> String {
        let x = self.lo + f * (self.hi - self.lo);
        if self.log {
            format!("1e{x:.1}")
        } else {
            format!("{x:.3e}")
        }
    }
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const M: f64 = 64.0;

/// `lhs` and `rhs` against the row parameter, log axes when all values are
/// positive, with the fitted slope written in the title when there is one.
pub fn to_svg(r: &BoundReport) -> String {
    let xs = Axis::new(r.rows.iter().map(|w| w.param));
    let ys = Axis::new(r.rows.iter().flat_map(|w| [w.lhs, w.rhs]));
    let px = |v: f64| M + xs.frac(v) * (W - 2.0 * M);
    let py = |v: f64| H - M - ys.frac(v) * (H - 2.0 * M);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let mut title = format!("{} [{}]", r.name, r.status.as_str());
    if let Some(f) = r.fit {
        let _ = write!(title, "  fitted slope {:.3} ± {:.3}", f.slope, f.slope_stderr);
    }
    let _ = writeln!(s, r#"<text x="{M}" y="24" font-size="14">{}</text>"#, escape(&title));
    let _ = writeln!(
        s,
        r#"<polyline points="{M},{} {M},{} {},{}" fill="none" stroke="black"/>"#,
        M,
        H - M,
        W - M,
        H - M
    );
    for f in [0.0, 0.5, 1.0] {
        let x = M + f * (W - 2.0 * M);
        let y = H - M - f * (H - 2.0 * M);
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, H - M + 18.0, xs.label(f));
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#, M - 4.0, ys.label(f));
    }
    for (field, color) in [(0usize, "#1f77b4"), (1, "#d62728")] {
        let pts: Vec<String> = r
            .rows
            .iter()
            .map(|w| {
                let v = if field == 0 { w.lhs } else { w.rhs };
                format!("{:.2},{:.2}", px(w.param), py(v))
            })
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        }
    }
    let _ = writeln!(s, r##"<text x="{}" y="44" fill="#1f77b4">lhs</text><text x="{}" y="44" fill="#d62728">rhs</text>"##, W - M - 60.0, W - M - 24.0);
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes the requested format into `out` and returns the files written.
pub fn render(reports: &[BoundReport], format: Format, out: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    match format {
        Format::Csv => {
            let p = out.join("report.csv");
            fs::write(&p, to_csv(reports))?;
            Ok(vec![p])
        }
        Format::Json => {
            let p = out.join("report.json");
            fs::write(&p, to_json(reports))?;
            Ok(vec![p])
        }
        Format::Svg => {
            let mut files = Vec::new();
            for (i, r) in reports.iter().enumerate().filter(|(_, r)| !r.rows.is_empty()) {
                let p = out.join(format!("{:02}_{}.svg", i + 1, r.name));
                fs::write(&p, to_svg(r))?;
                files.push(p);
            }
            Ok(files)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use coupling_lab::report::{ExponentFit, ReportRow, Status};

    #[test]
    fn empty_report_list_gives_headers_only() {
        assert_eq!(to_csv(&[]), "check,k,lhs,rhs,fitted_constant,status\n");
    }

    #[test]
    fn svg_carries_the_slope() {
        let xs = [2.0, 4.0, 8.0];
        let ys = [0.25, 0.0625, 0.015625];
        let mut r = BoundReport::new("sn_lp_2", -2.0, -1.0, Status::Fail);
        r.fit = ExponentFit::log_log(&xs, &ys);
        r.rows = xs.iter().zip(&ys).map(|(x, y)| ReportRow { param: *x, lhs: *y, rhs: *y }).collect();
        let svg = to_svg(&r);
        assert!(svg.contains("fitted slope -2.000"), "{svg}");
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn json_round_trips() {
        let r = BoundReport::upper("x", 1.0, 2.0).with_rows(vec![ReportRow { param: 0.5, lhs: 1.0, rhs: 2.0 }]).with_constant(0.5);
        let back: Vec<BoundReport> = serde_json::from_str(&to_json(std::slice::from_ref(&r))).unwrap();
        assert_eq!(back, vec![r]);
    }
}
