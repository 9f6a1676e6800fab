//! Command-line front end of `coupling-lab`: scenario configs, run archives,
//! report rendering and the acceptance suite.

pub mod archive;
pub mod config;
pub mod render;
pub mod runner;
pub mod suite;

/// `COUPLING_LAB_DETERMINISTIC=0` lets archives carry wall times.
pub fn deterministic() -> bool {
    std::env::var("COUPLING_LAB_DETERMINISTIC").map_or(true, |v| v != "0")
}

/// Sizes the global rayon pool from `COUPLING_LAB_WORKERS` (or `workers`).
pub fn init_workers(workers: Option<usize>) -> Result<(), String> {
    let n = match workers {
        Some(n) => Some(n),
        None => match std::env::var("COUPLING_LAB_WORKERS") {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| format!("COUPLING_LAB_WORKERS: not a count: {v:?}"))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err("worker count must be positive".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}
