use std::path::Path;
use std::process::{Command, Output};

use coupling_lab::report::BoundReport;
use coupling_lab_cli::archive::{read_archive, snapshot, write_archive};
use coupling_lab_cli::config::ScenarioConfig;

const FREE: &str = r#"
schema_version = 1
name = "free"

[model]
kind = "model2x2"
q = { kind = "zero" }

[kgrid]
kind = "symmetric"
k_max = 4.0
dk = 0.5

[time]
t_max = 2.0

[[checks]]
check = "unitarity"

[[checks]]
check = "trace_formula"
"#;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coupling-lab")).args(args).env_remove("COUPLING_LAB_DETERMINISTIC").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn zero_potential_run_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "free.toml", FREE);
    let out = tmp.path().join("out");
    let o = bin(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["metadata.json", "reports.json", "summary.txt", "01_unitarity.csv", "02_trace_formula.csv"] {
        assert!(out.join("free").join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(out.join("free/01_unitarity.csv")).unwrap();
    assert!(csv.starts_with("check,k,lhs,rhs,fitted_constant,status\n"));
}

#[test]
fn missing_gamma_is_a_usage_error_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
schema_version = 1
name = "sr"
[model]
kind = "shortrange"
v = { kind = "power_decay", amp = [1.0, 0.0], power = 0.8 }
alpha = 0.25
n_max = 8
[time]
t_max = 10.0
[[checks]]
check = "analyticity"
k = 1.0
l_list = [2, 3]
"#;
    let cfg = write(tmp.path(), "sr.toml", text);
    let o = bin(&["run", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("model") && stderr(&o).contains("gamma"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_exit_with_one() {
    assert_eq!(bin(&["report", "nowhere", "--format", "pdf"]).status.code(), Some(1));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bin(&["suite", "nonsense"]).status.code(), Some(1));
    assert_eq!(bin(&["suite", "paper-acceptance", "--tolerance", "nope=1"]).status.code(), Some(1));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn failing_check_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
schema_version = 1
name = "tight"
[tolerances]
equivalence_band = 0.002
[[checks]]
check = "h_half_equivalence"
samples = 256
"#;
    let cfg = write(tmp.path(), "t.toml", text);
    let o = bin(&["run", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn json_report_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "free.toml", FREE);
    let out = tmp.path().join("out");
    assert_eq!(bin(&["run", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let arch = out.join("free");
    let rendered = tmp.path().join("rendered");
    let o = bin(&["report", arch.to_str().unwrap(), "--format", "json", "--out", rendered.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let back: Vec<BoundReport> = serde_json::from_str(&std::fs::read_to_string(rendered.join("report.json")).unwrap()).unwrap();
    let (meta, reports) = read_archive(&arch).unwrap();
    assert_eq!(back, reports);
    assert_eq!(meta.checks.len(), 2);
    assert_eq!(meta.config, ScenarioConfig::from_toml(FREE).unwrap());

    let o = bin(&["report", arch.to_str().unwrap(), "--format", "svg", "--out", rendered.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(rendered.join("01_unitarity.svg").exists());
}

#[test]
fn archive_without_checks_reports_headers_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig::from_toml(FREE).unwrap();
    let arch = tmp.path().join("empty");
    write_archive(&arch, &cfg, &[], None).unwrap();
    let o = bin(&["report", arch.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(arch.join("report.csv")).unwrap(), "check,k,lhs,rhs,fitted_constant,status\n");
}

#[test]
fn runs_are_byte_identical_and_worker_count_independent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "free.toml", FREE);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(bin(&["run", &cfg, "--out", a.to_str().unwrap()]).status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_coupling-lab"))
        .args(["run", &cfg, "--out", b.to_str().unwrap()])
        .env("COUPLING_LAB_WORKERS", "3")
        .env_remove("COUPLING_LAB_DETERMINISTIC")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(snapshot(&a).unwrap(), snapshot(&b).unwrap());
}

#[test]
fn non_deterministic_mode_records_wall_time() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "free.toml", FREE);
    let out = tmp.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_coupling-lab"))
        .args(["run", &cfg, "--out", out.to_str().unwrap()])
        .env("COUPLING_LAB_DETERMINISTIC", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let (meta, _) = read_archive(&out.join("free")).unwrap();
    assert!(meta.wall_time_s.is_some());
}

#[test]
fn sweep_replaces_the_k_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "free.toml", FREE);
    let out = tmp.path().join("out");
    let o = bin(&["sweep", &cfg, "--kmax", "2", "--samples", "8", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, reports) = read_archive(&out.join("free")).unwrap();
    let ks: Vec<f64> = reports[0].rows.iter().map(|r| r.param).collect();
    assert_eq!(ks.len(), 8);
    assert!(ks.iter().all(|k| k.abs() < 2.0));
}

#[test]
fn tightened_tolerance_gives_a_controlled_failure() {
    let o = bin(&["suite", "paper-acceptance", "--only", "14", "--tolerance", "equivalence_band=0.002"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("criterion 14 FAIL"));
    assert!(stderr(&o).contains("c14_h_half/h_half_equivalence"), "{}", stderr(&o));
}
