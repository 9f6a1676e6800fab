//! `suite paper-acceptance`: the acceptance scenarios embedded in the binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use coupling_lab::report::Status;

use crate::archive;
use crate::config::{ConfigError, ScenarioConfig, TOLERANCES};
use crate::runner::{run_scenario, CheckOutcome};

macro_rules! scenarios {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../scenarios/", $name, ".toml")))),*]
    };
}

/// Scenario file stem and its TOML text.
pub const SCENARIOS: &[(&str, &str)] = scenarios![
    "c01_unitarity_suite",
    "c02_rotation",
    "c03_trace_power",
    "c03_trace_exp",
    "c03_trace_oscillating",
    "c04_plancherel",
    "c05_instructive_j0",
    "c06_complex_k",
    "c07_nxn_flow",
    "c07_degenerate_pair",
    "c07_column_tail",
    "c07_weak_l1",
    "c08_adjugate",
    "c09_corrected_limit",
    "c10_sobolev",
    "c10_analyticity",
    "c11_sn_lp",
    "c12_exponents",
    "c13_halfline",
    "c14_h_half",
];

pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub scenarios: &'static [&'static str],
}

pub const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "unitarity and symmetry on random scenarios", scenarios: &["c01_unitarity_suite"] },
    Criterion { id: 2, title: "rotation closed form", scenarios: &["c02_rotation"] },
    Criterion { id: 3, title: "trace formula on three potentials", scenarios: &["c03_trace_power", "c03_trace_exp", "c03_trace_oscillating"] },
    Criterion { id: 4, title: "transport Plancherel per mode", scenarios: &["c04_plancherel"] },
    Criterion { id: 5, title: "instructive case and J0", scenarios: &["c05_instructive_j0"] },
    Criterion { id: 6, title: "1/y expansion at large imaginary k", scenarios: &["c06_complex_k"] },
    Criterion {
        id: 7,
        title: "N×N limits, bounds and calibrated constants",
        scenarios: &["c07_nxn_flow", "c07_degenerate_pair", "c07_column_tail", "c07_weak_l1"],
    },
    Criterion { id: 8, title: "adjugate of contractions", scenarios: &["c08_adjugate"] },
    Criterion { id: 9, title: "corrected limit on the circle", scenarios: &["c09_corrected_limit"] },
    Criterion { id: 10, title: "short-range Sobolev bound and analyticity", scenarios: &["c10_sobolev", "c10_analyticity"] },
    Criterion { id: 11, title: "S_N Lp exponents", scenarios: &["c11_sn_lp"] },
    Criterion { id: 12, title: "WKB and oscillatory exponents", scenarios: &["c12_exponents"] },
    Criterion { id: 13, title: "half-line localization", scenarios: &["c13_halfline"] },
    Criterion { id: 14, title: "H^1/2 equivalence and exponential map", scenarios: &["c14_h_half"] },
];

pub const DETERMINISM_ID: u32 = 15;

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("unknown suite `{0}` (available: paper-acceptance)")]
    UnknownSuite(String),
    #[error("scenario {name}: {source}")]
    Config { name: String, source: ConfigError },
    #[error("unknown tolerance `{0}`")]
    UnknownTolerance(String),
    #[error("unknown criterion {0}")]
    UnknownCriterion(u32),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub out: Option<PathBuf>,
    pub overrides: BTreeMap<String, f64>,
    /// Criterion ids to run; all when empty.
    pub only: Vec<u32>,
    /// Run everything a second time and compare archives byte for byte.
    pub verify_determinism: bool,
    pub record_wall_time: bool,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub name: String,
    pub outcomes: Vec<CheckOutcome>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub title: String,
    pub status: Status,
    pub scenarios: Vec<ScenarioResult>,
    pub seconds: f64,
    pub detail: Option<String>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let mut s = format!("criterion {:>2} {:<13} {} ({:.1} s)", self.id, self.status.as_str(), self.title, self.seconds);
        if let Some(d) = &self.detail {
            s.push_str(&format!(": {d}"));
        }
        s
    }

    pub fn failing_checks(&self) -> Vec<String> {
        self.scenarios
            .iter()
            .flat_map(|sc| {
                sc.outcomes
                    .iter()
                    .filter(|o| !matches!(o.report.status, Status::Pass | Status::Informational))
                    .map(move |o| format!("{}/{} [{}]", sc.name, o.check, o.report.status.as_str()))
            })
            .collect()
    }
}

pub fn scenario_config(name: &str, overrides: &BTreeMap<String, f64>) -> Result<ScenarioConfig, SuiteError> {
    let text = SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).expect("criteria name embedded scenarios");
    let mut cfg = ScenarioConfig::from_toml(text).map_err(|source| SuiteError::Config { name: name.into(), source })?;
    for (k, v) in overrides {
        cfg.tolerances.insert(k.clone(), *v);
    }
    Ok(cfg)
}

fn run_criteria(opts: &SuiteOptions, out: Option<&Path>, mut progress: impl FnMut(&CriterionResult)) -> Result<Vec<CriterionResult>, SuiteError> {
    let mut results = Vec::new();
    for c in CRITERIA.iter().filter(|c| opts.only.is_empty() || opts.only.contains(&c.id)) {
        let start = Instant::now();
        let mut status = Status::Pass;
        let mut scenarios = Vec::new();
        for name in c.scenarios {
            let cfg = scenario_config(name, &opts.overrides)?;
            let t0 = Instant::now();
            let outcomes = run_scenario(&cfg);
            let seconds = t0.elapsed().as_secs_f64();
            for o in &outcomes {
                if o.report.status != Status::Informational {
                    status = status.and(o.report.status);
                }
            }
            if let Some(dir) = out {
                archive::write_archive(&dir.join(name), &cfg, &outcomes, opts.record_wall_time.then_some(seconds))?;
            }
            scenarios.push(ScenarioResult { name: name.to_string(), outcomes, seconds });
        }
        let r = CriterionResult { id: c.id, title: c.title.into(), status, scenarios, seconds: start.elapsed().as_secs_f64(), detail: None };
        progress(&r);
        results.push(r);
    }
    Ok(results)
}

/// Budget for the whole suite.
pub const WALL_BUDGET_S: f64 = 30.0 * 60.0;

/// Runs the suite, calling `progress` after each criterion.
pub fn run_suite(name: &str, opts: &SuiteOptions, mut progress: impl FnMut(&CriterionResult)) -> Result<Vec<CriterionResult>, SuiteError> {
    if name != "paper-acceptance" {
        return Err(SuiteError::UnknownSuite(name.into()));
    }
    for k in opts.overrides.keys() {
        if !TOLERANCES.iter().any(|(t, _)| t == k) {
            return Err(SuiteError::UnknownTolerance(k.clone()));
        }
    }
    for id in &opts.only {
        if !CRITERIA.iter().any(|c| c.id == *id) && *id != DETERMINISM_ID {
            return Err(SuiteError::UnknownCriterion(*id));
        }
    }
    let start = Instant::now();
    let tmp;
    let first = match &opts.out {
        Some(p) => Some(p.clone()),
        None if opts.verify_determinism => {
            tmp = std::env::temp_dir().join(format!("coupling-lab-suite-{}", std::process::id()));
            Some(tmp.join("a"))
        }
        None => None,
    };
    let mut results = run_criteria(opts, first.as_deref(), &mut progress)?;
    if let Some(dir) = &first {
        std::fs::write(dir.join("suite.txt"), suite_text(&results))?;
    }
    if opts.verify_determinism {
        let first = first.expect("set above");
        let second = first.with_file_name(format!("{}.rerun", first.file_name().and_then(|s| s.to_str()).unwrap_or("suite")));
        let rerun_opts = SuiteOptions { record_wall_time: false, ..opts.clone() };
        let again = run_criteria(&rerun_opts, Some(&second), |_| {})?;
        std::fs::write(second.join("suite.txt"), suite_text(&again))?;
        let total = start.elapsed().as_secs_f64();
        let (a, b) = (archive::snapshot(&first)?, archive::snapshot(&second)?);
        let differing: Vec<String> = if opts.record_wall_time {
            vec!["wall time recorded, archives not comparable".into()]
        } else {
            let names: std::collections::BTreeSet<&String> = a.iter().chain(&b).map(|(n, _)| n).collect();
            names.into_iter().filter(|n| a.iter().find(|(m, _)| m == *n) != b.iter().find(|(m, _)| m == *n)).cloned().collect()
        };
        // Each pass is one full suite run.
        let per_run = total / 2.0;
        let status = Status::from_bool(differing.is_empty() && per_run < WALL_BUDGET_S);
        let detail = if differing.is_empty() {
            format!("{} files identical, one run {per_run:.0} s of {WALL_BUDGET_S:.0} s", a.len())
        } else {
            format!("differing: {}", differing.join(", "))
        };
        let _ = std::fs::remove_dir_all(&second);
        let r = CriterionResult {
            id: DETERMINISM_ID,
            title: "determinism and wall time".into(),
            status,
            scenarios: vec![],
            seconds: total,
            detail: Some(detail),
        };
        progress(&r);
        results.push(r);
        if opts.out.is_none() {
            let _ = std::fs::remove_dir_all(first.parent().expect("temp root"));
        }
    }
    Ok(results)
}

/// Deterministic text summary: statuses and check names, no timings.
pub fn suite_text(results: &[CriterionResult]) -> String {
    let mut s = String::new();
    for r in results {
        s.push_str(&format!("criterion {:>2} {:<13} {}\n", r.id, r.status.as_str(), r.title));
        for sc in &r.scenarios {
            for o in &sc.outcomes {
                s.push_str(&format!("    {:<13} {}/{}\n", o.report.status.as_str(), sc.name, o.check));
            }
        }
    }
    s
}

pub fn all_passed(results: &[CriterionResult]) -> bool {
    results.iter().all(|r| r.status == Status::Pass)
}
