//! Scenario orchestration: configuration, time integration, sweeps and
//! output files.

pub mod config;
pub mod hysteresis;
pub mod output;
pub mod simulation;
pub mod spectrum;
pub mod verification;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::vec3::Vec3;
use config::{Scenario, SimulationConfig};
use hysteresis::LoopSummary;
use simulation::{run_dynamics, AuditStats, Simulation, SnapshotPlan, SteadyRule};
use verification::SweepResult;

pub use config::{load_config, parse_config};

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const HYSTERESIS_FILE: &str = "hysteresis.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const AUDIT_FILE: &str = "audit.txt";

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub steps: usize,
    pub reached_steady: Option<bool>,
    pub final_mean: Option<Vec3>,
    /// Final LL and total energy, J.
    pub final_energy: Option<(f64, f64)>,
    pub audit: Option<AuditStats>,
    pub hysteresis: Option<LoopSummary>,
    pub sweeps: Vec<SweepResult>,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Checks the audit maxima and writes them to `audit.txt` in `dir`.
fn finish_audit(stats: &AuditStats, tol: f64, dir: &Path) -> Result<()> {
    let v = stats.violations(tol);
    let text = format!(
        "steps {}\nmax_norm_defect {:e}\nmax_identity_defect {:e}\nmax_gmres_iterations {}\ndirect_solves {}\nstatus {}\n",
        stats.steps,
        stats.max_norm_defect,
        stats.max_identity_defect,
        stats.max_gmres_iterations,
        stats.direct_solves,
        if v.is_empty() { "ok" } else { "violated" }
    );
    let p = dir.join(AUDIT_FILE);
    std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Audit(v))
    }
}

/// Relaxation or pulse: integrate for the configured duration, writing
/// `timeseries.csv` and snapshots.
pub fn run_dynamics_scenario(cfg: &SimulationConfig, dir: &Path, audit: bool) -> Result<RunSummary> {
    create_dir(dir)?;
    let mut sim = Simulation::from_config(cfg)?;
    let steady = match (cfg.scenario, cfg.steady_rel_tol) {
        (Scenario::Relax, Some(tol)) => Some(SteadyRule {
            rel_tol: tol,
            interval: cfg.steady_check_interval,
        }),
        _ => None,
    };
    let plan = SnapshotPlan {
        dir,
        every: cfg.output.snapshot_every,
    };
    let out = run_dynamics(&mut sim, cfg.total_steps(), cfg.output.cadence, steady, Some(plan))?;
    output::write_csv(&dir.join(TIMESERIES_FILE), &out.records)?;
    if audit {
        finish_audit(&sim.audit, cfg.krylov.tol, dir)?;
    }
    let last = out.records.last().copied();
    Ok(RunSummary {
        output_dir: dir.to_path_buf(),
        steps: out.steps_taken,
        reached_steady: steady.map(|_| out.reached_steady),
        final_mean: last.map(|r| r.mean()),
        final_energy: last.map(|r| (r.f, r.j)),
        audit: Some(sim.audit),
        ..Default::default()
    })
}

/// Field sweep, writing `hysteresis.csv`.
pub fn run_hysteresis_scenario(cfg: &SimulationConfig, dir: &Path, audit: bool) -> Result<RunSummary> {
    create_dir(dir)?;
    let mut csv = output::CsvAppender::create(&dir.join(HYSTERESIS_FILE))?;
    let mut write_err = None;
    let out = hysteresis::run_sweep(cfg, |row| {
        if write_err.is_none() {
            write_err = csv.push(row).err();
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    if audit {
        finish_audit(&out.audit, cfg.krylov.tol, dir)?;
    }
    Ok(RunSummary {
        output_dir: dir.to_path_buf(),
        steps: out.audit.steps,
        final_mean: out.rows.last().map(|r| r.mean()),
        audit: Some(out.audit),
        hysteresis: Some(out.summary),
        ..Default::default()
    })
}

/// Manufactured-solution studies, writing `convergence.csv`.
pub fn run_verification_scenario(cfg: &SimulationConfig, dir: &Path) -> Result<RunSummary> {
    create_dir(dir)?;
    let sweeps = verification::run_all(&cfg.verify, cfg.krylov, |_| {})?;
    let rows: Vec<_> = sweeps.iter().flat_map(|s| s.records()).collect();
    output::write_csv(&dir.join(CONVERGENCE_FILE), &rows)?;
    Ok(RunSummary {
        output_dir: dir.to_path_buf(),
        sweeps,
        ..Default::default()
    })
}

/// Runs `cfg.scenario`, writing outputs to `dir`. With `audit`, relaxation,
/// pulse and sweep runs also check the per-step invariants and fail if any
/// is violated.
pub fn run_scenario(cfg: &SimulationConfig, dir: &Path, audit: bool) -> Result<RunSummary> {
    match cfg.scenario {
        Scenario::Relax | Scenario::Pulse => run_dynamics_scenario(cfg, dir, audit),
        Scenario::Hysteresis => run_hysteresis_scenario(cfg, dir, audit),
        Scenario::Verify => run_verification_scenario(cfg, dir),
    }
}
