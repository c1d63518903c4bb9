//! Time integration of a configured sample with recording, steady-state
//! detection and invariant auditing.

use std::path::Path;

use rand::{Rng, SeedableRng};

use super::config::{InitialState, SimulationConfig};
use super::output::{self, TimeSeriesRecord};
use crate::demag::build_demag_kernel;
use crate::energy::{ll_energy, total_energy, EnergyModel, EnergyReport};
use crate::error::{Error, Result};
use crate::grid::{spatial_average, Grid, VectorField};
use crate::physics::{nondimensionalize, AppliedFieldSpec, DimensionlessParams, FieldModel};
use crate::stepper::{self, Mode, SolverState, StepReport, StepperConfig};
use crate::vec3::{self, Vec3};

/// Largest `| |m| - 1 |` accepted by the audit.
pub const AUDIT_NORM_TOL: f64 = 1e-13;

/// Running maxima of the per-step invariants.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AuditStats {
    pub steps: usize,
    pub max_norm_defect: f64,
    pub max_identity_defect: f64,
    pub max_gmres_iterations: usize,
    pub direct_solves: usize,
}

impl AuditStats {
    fn absorb(&mut self, rep: &StepReport) {
        self.steps += 1;
        self.max_norm_defect = self.max_norm_defect.max(rep.norm_defect);
        self.max_identity_defect = self.max_identity_defect.max(rep.identity_defect);
        self.max_gmres_iterations = self.max_gmres_iterations.max(rep.solve.iterations);
        self.direct_solves += rep.direct_solve as usize;
    }

    /// Violations of the unit-norm and dot-product invariants.
    pub fn violations(&self, krylov_tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.max_norm_defect > AUDIT_NORM_TOL {
            out.push(format!("max | |m| - 1 | = {:e} exceeds {:e}", self.max_norm_defect, AUDIT_NORM_TOL));
        }
        let bound = 100.0 * krylov_tol;
        if self.max_identity_defect > bound {
            out.push(format!("max dot-product identity defect {:e} exceeds {:e}", self.max_identity_defect, bound));
        }
        out
    }
}

/// Reduced-unit grid for the configured geometry.
pub fn build_grid(cfg: &SimulationConfig) -> Result<Grid> {
    let g = &cfg.geometry;
    let l = g.length_scale;
    Grid::new(g.counts[0], g.counts[1], g.counts[2], g.cell[0] / l, g.cell[1] / l, g.cell[2] / l)?.with_length_scale(l)
}

/// Initial magnetization described by `cfg.initial`.
pub fn initial_field(cfg: &SimulationConfig, grid: Grid) -> Result<VectorField> {
    match &cfg.initial {
        InitialState::Uniform(d) => Ok(VectorField::uniform(grid, *d)),
        InitialState::Random => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            let data = (0..grid.len())
                .map(|_| loop {
                    let v: Vec3 = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                    let n = vec3::norm(v);
                    if n > 1e-3 && n <= 1.0 {
                        break vec3::scale(1.0 / n, v);
                    }
                })
                .collect();
            VectorField::from_vec(grid, data)
        }
        InitialState::Snapshot(p) => output::read_snapshot(p)?.into_field(grid),
    }
}

/// A configured sample being integrated in time.
#[derive(Debug)]
pub struct Simulation {
    pub reduced: DimensionlessParams,
    pub stepper: StepperConfig,
    pub fields: FieldModel,
    pub energy: EnergyModel,
    pub state: SolverState,
    pub audit: AuditStats,
    pub last_iterations: usize,
}

impl Simulation {
    /// Builds the sample from `cfg`, starting at rest from `m0`.
    pub fn new(cfg: &SimulationConfig, m0: VectorField) -> Result<Self> {
        let grid = *m0.grid();
        let (reduced, dt) = nondimensionalize(&cfg.material, cfg.geometry.length_scale, cfg.dt_phys)?;
        let stepper = StepperConfig {
            epsilon: reduced.epsilon,
            alpha: reduced.alpha,
            eta: reduced.eta,
            dt,
            krylov: cfg.krylov,
            mode: Mode::FullIllg,
            backend: cfg.backend,
            guess: cfg.guess,
        };
        stepper.validate()?;
        let demag = if cfg.stray_field_enabled { Some(build_demag_kernel(&grid)?) } else { None };
        let fields = FieldModel {
            q: reduced.q,
            axis: cfg.easy_axis,
            applied: cfg.applied,
            t_unit: reduced.t_unit,
            demag,
        };
        let energy = EnergyModel {
            epsilon: reduced.epsilon,
            q: reduced.q,
            axis: cfg.easy_axis,
            density_scale: cfg.material.energy_density_scale(),
        };
        Ok(Simulation {
            reduced,
            stepper,
            fields,
            energy,
            state: stepper::initialize(m0, dt)?,
            audit: AuditStats::default(),
            last_iterations: 0,
        })
    }

    pub fn from_config(cfg: &SimulationConfig) -> Result<Self> {
        let grid = build_grid(cfg)?;
        Simulation::new(cfg, initial_field(cfg, grid)?)
    }

    pub fn grid(&self) -> &Grid {
        self.state.grid()
    }

    /// Physical time of the current level, s.
    pub fn t_phys(&self) -> f64 {
        self.state.time() * self.reduced.t_unit
    }

    pub fn set_applied(&mut self, applied: AppliedFieldSpec) {
        self.fields.applied = applied;
    }

    /// Restarts the dynamics from the current magnetization (both levels set
    /// to it), keeping the step counter.
    pub fn rest(&mut self) {
        self.state.m_prev = self.state.m_curr.clone();
    }

    pub fn step(&mut self) -> Result<StepReport> {
        let n = self.state.step;
        let rep = stepper::step(&mut self.state, &self.fields, &self.stepper).map_err(|e| Error::Step {
            step: n,
            source: Box::new(e),
        })?;
        self.audit.absorb(&rep);
        self.last_iterations = rep.solve.iterations;
        Ok(rep)
    }

    /// LL energy of the current level.
    pub fn ll_energy(&self) -> Result<EnergyReport> {
        let m = &self.state.m_curr;
        let hs = self.fields.stray(m)?;
        ll_energy(m, &self.energy, self.fields.applied_at(self.state.time()), hs.as_ref())
    }

    /// LL and total energy of the current level.
    pub fn energies(&self) -> Result<EnergyReport> {
        let f = self.ll_energy()?;
        total_energy(&f, &self.state.m_curr, &self.state.m_prev, self.stepper.dt, self.stepper.alpha, self.stepper.eta)
    }

    pub fn mean(&self) -> Vec3 {
        spatial_average(&self.state.m_curr).unwrap_or(vec3::ZERO)
    }

    pub fn record(&self) -> Result<TimeSeriesRecord> {
        let e = self.energies()?;
        let [mx, my, mz] = self.mean();
        Ok(TimeSeriesRecord {
            step: self.state.step,
            t: self.t_phys(),
            mx,
            my,
            mz,
            f: e.F_joules,
            j: e.J_joules,
            gmres_iters: self.last_iterations,
        })
    }
}

/// Stopping rule: relative LL-energy change between checks every
/// `interval` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyRule {
    pub rel_tol: f64,
    pub interval: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsOutcome {
    pub records: Vec<TimeSeriesRecord>,
    pub steps_taken: usize,
    pub reached_steady: bool,
}

/// Where and how often to write snapshots.
#[derive(Debug, Clone, Copy)]
pub struct SnapshotPlan<'a> {
    pub dir: &'a Path,
    /// 0: initial and final only.
    pub every: usize,
}

/// Advances `sim` by up to `max_steps`, recording every `cadence` steps
/// (plus the first and last level) and stopping early under `steady`.
pub fn run_dynamics(
    sim: &mut Simulation,
    max_steps: usize,
    cadence: usize,
    steady: Option<SteadyRule>,
    snapshots: Option<SnapshotPlan<'_>>,
) -> Result<DynamicsOutcome> {
    let cadence = cadence.max(1);
    let mut records = vec![sim.record()?];
    if let Some(s) = snapshots {
        output::write_snapshot(&sim.state.m_curr, sim.t_phys(), &output::snapshot_path(s.dir, sim.state.step))?;
    }
    let mut last_f: Option<f64> = None;
    let mut reached_steady = false;
    let mut taken = 0;
    while taken < max_steps {
        sim.step()?;
        taken += 1;
        let recorded = taken % cadence == 0;
        if recorded {
            records.push(sim.record()?);
        }
        if let Some(s) = snapshots {
            if s.every > 0 && taken % s.every == 0 {
                output::write_snapshot(&sim.state.m_curr, sim.t_phys(), &output::snapshot_path(s.dir, sim.state.step))?;
            }
        }
        if let Some(rule) = steady {
            if taken % rule.interval.max(1) == 0 {
                let f = sim.ll_energy()?.F;
                if let Some(prev) = last_f {
                    if (f - prev).abs() <= rule.rel_tol * f.abs().max(f64::MIN_POSITIVE) {
                        reached_steady = true;
                    }
                }
                last_f = Some(f);
                if reached_steady {
                    break;
                }
            }
        }
    }
    if records.last().map(|r| r.step) != Some(sim.state.step) {
        records.push(sim.record()?);
    }
    if let Some(s) = snapshots {
        let p = output::snapshot_path(s.dir, sim.state.step);
        if !p.exists() {
            output::write_snapshot(&sim.state.m_curr, sim.t_phys(), &p)?;
        }
    }
    Ok(DynamicsOutcome {
        records,
        steps_taken: taken,
        reached_steady,
    })
}
