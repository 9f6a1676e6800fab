use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use coupling_lab_cli::config::{KGridSpec, ScenarioConfig};
use coupling_lab_cli::render::{self, Format};
use coupling_lab_cli::suite::{self, SuiteOptions};
use coupling_lab_cli::{archive, deterministic, init_workers, runner};

const USAGE: u8 = 1;
const FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "coupling-lab", version, about = "Numerical checks for oscillatory ODE systems with a coupling constant")]
struct Cli {
    /// Worker threads (overrides COUPLING_LAB_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the checks of a scenario file and write an archive.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Render an archive as csv, json or svg.
    Report {
        archive: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        /// Output directory; defaults to the archive itself.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named suite (`paper-acceptance`).
    Suite {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tolerance override `key=value`, repeatable.
        #[arg(long = "tolerance", value_parser = parse_override)]
        tolerances: Vec<(String, f64)>,
        /// Only these criteria, comma separated.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        /// Run twice and compare the archives (criterion 15).
        #[arg(long)]
        verify_determinism: bool,
    },
    /// Run a scenario on a symmetric k grid with `samples` cells on [-kmax, kmax].
    Sweep {
        config: PathBuf,
        #[arg(long)]
        kmax: f64,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected key=value")?;
    let v: f64 = v.trim().parse().map_err(|_| format!("not a number: {v}"))?;
    Ok((k.trim().to_string(), v))
}

fn run_config(cfg: &ScenarioConfig, out: &std::path::Path) -> Result<ExitCode, String> {
    let start = Instant::now();
    let outcomes = runner::run_scenario(cfg);
    let wall = (!deterministic()).then(|| start.elapsed().as_secs_f64());
    let dir = out.join(&cfg.name);
    archive::write_archive(&dir, cfg, &outcomes, wall).map_err(|e| format!("{}: {e}", dir.display()))?;
    print!("{}", archive::summary_text(cfg, &outcomes));
    println!("archive: {}", dir.display());
    Ok(if runner::succeeded(&outcomes) { ExitCode::SUCCESS } else { ExitCode::from(FAILED) })
}

fn dispatch(cli: Cli) -> Result<ExitCode, String> {
    init_workers(cli.workers)?;
    match cli.cmd {
        Cmd::Run { config, out } => {
            let cfg = ScenarioConfig::from_path(&config).map_err(|e| e.to_string())?;
            run_config(&cfg, &out)
        }
        Cmd::Sweep { config, kmax, samples, out } => {
            if !(kmax > 0.0) || samples == 0 {
                return Err("--kmax must be positive and --samples at least 1".into());
            }
            let mut cfg = ScenarioConfig::from_path(&config).map_err(|e| e.to_string())?;
            cfg.kgrid = Some(KGridSpec::Symmetric { k_max: kmax, dk: 2.0 * kmax / samples as f64 });
            cfg.validate().map_err(|e| e.to_string())?;
            run_config(&cfg, &out)
        }
        Cmd::Report { archive: dir, format, out } => {
            let (_, reports) = archive::read_archive(&dir).map_err(|e| e.to_string())?;
            let files = render::render(&reports, format, out.as_deref().unwrap_or(&dir)).map_err(|e| e.to_string())?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Suite { name, out, tolerances, only, verify_determinism } => {
            let opts = SuiteOptions {
                out,
                overrides: tolerances.into_iter().collect(),
                only,
                verify_determinism,
                record_wall_time: !deterministic(),
            };
            let results = suite::run_suite(&name, &opts, |r| println!("{}", r.line())).map_err(|e| e.to_string())?;
            if suite::all_passed(&results) {
                return Ok(ExitCode::SUCCESS);
            }
            eprintln!("failing checks:");
            for r in &results {
                for c in r.failing_checks() {
                    eprintln!("  {c}");
                }
                if r.id == suite::DETERMINISM_ID && r.status != coupling_lab::report::Status::Pass {
                    eprintln!("  determinism: {}", r.detail.as_deref().unwrap_or(""));
                }
            }
            Ok(ExitCode::from(FAILED))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
    }
}
