//! Quasi-static field sweeps.

use super::config::{LoopAxis, SimulationConfig};
use super::output::HysteresisRecord;
use super::simulation::{build_grid, run_dynamics, AuditStats, Simulation, SteadyRule};
use crate::error::Result;
use crate::grid::VectorField;
use crate::physics::AppliedFieldSpec;
use crate::vec3::{self, Vec3};

/// Unit field direction: the loop axis canted toward the other in-plane axis.
pub fn loop_direction(cfg: &SimulationConfig) -> (Vec3, Vec3) {
    let ((_, long), (_, short)) = cfg.in_plane_axes();
    let (axis, other) = match cfg.hysteresis.axis {
        LoopAxis::Long => (long, short),
        LoopAxis::Short => (short, long),
    };
    let c = cfg.hysteresis.canting_deg.to_radians();
    (vec3::add(vec3::scale(c.cos(), axis), vec3::scale(c.sin(), other)), axis)
}

/// Field values (T) of the descending then ascending branch.
pub fn field_schedule(cfg: &SimulationConfig) -> Vec<f64> {
    let h = &cfg.hysteresis;
    let n = h.n_field_steps.max(2);
    let at = |i: usize| h.field_max + (h.field_min - h.field_max) * i as f64 / (n - 1) as f64;
    let down: Vec<f64> = (0..n).map(at).collect();
    let up = down.iter().rev().skip(1).copied();
    down.iter().copied().chain(up).collect()
}

/// Loop characteristics derived from the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSummary {
    /// Zero crossing of the loop-axis projection on the descending branch, T.
    pub coercive_down: Option<f64>,
    /// Zero crossing on the ascending branch, T.
    pub coercive_up: Option<f64>,
    /// Mean magnetization at the field closest to zero on the descending branch.
    pub remanence: Vec3,
    pub unconverged_fields: usize,
    /// Largest component difference of the first and last rows, both at
    /// the saturating field.
    pub closure: f64,
}

impl LoopSummary {
    /// Mean of the two branch coercive fields in magnitude, T.
    pub fn coercive_field(&self) -> Option<f64> {
        match (self.coercive_down, self.coercive_up) {
            (Some(a), Some(b)) => Some(0.5 * (a.abs() + b.abs())),
            (Some(a), None) | (None, Some(a)) => Some(a.abs()),
            _ => None,
        }
    }
}

fn zero_crossing(rows: &[HysteresisRecord], axis: Vec3) -> Option<f64> {
    rows.windows(2).find_map(|w| {
        let a = vec3::dot(w[0].mean(), axis);
        let b = vec3::dot(w[1].mean(), axis);
        if a == 0.0 {
            Some(w[0].field_t)
        } else if a * b < 0.0 || b == 0.0 {
            Some(w[0].field_t + (w[1].field_t - w[0].field_t) * a / (a - b))
        } else {
            None
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<HysteresisRecord>,
    pub summary: LoopSummary,
    pub audit: AuditStats,
}

/// Coercive fields and remanence of a descending-then-ascending loop of
/// `n_branch` points per branch.
pub fn summarize_loop(rows: &[HysteresisRecord], n_branch: usize, axis: Vec3) -> LoopSummary {
    let split = n_branch.min(rows.len());
    let down = &rows[..split];
    let up = &rows[split.saturating_sub(1)..];
    let remanence = down
        .iter()
        .min_by(|a, b| a.field_t.abs().total_cmp(&b.field_t.abs()))
        .map(|r| r.mean())
        .unwrap_or(vec3::ZERO);
    LoopSummary {
        coercive_down: zero_crossing(down, axis),
        coercive_up: zero_crossing(up, axis),
        remanence,
        unconverged_fields: rows.iter().filter(|r| !r.converged).count(),
        closure: match (rows.first(), rows.last()) {
            (Some(a), Some(b)) => (0..3).map(|c| (a.mean()[c] - b.mean()[c]).abs()).fold(0.0, f64::max),
            _ => 0.0,
        },
    }
}

/// Sweeps the field down from saturation and back, relaxing to a steady
/// state at each value. The sample starts uniformly along the field.
/// `on_point` sees each row as it is produced.
pub fn run_sweep(cfg: &SimulationConfig, mut on_point: impl FnMut(&HysteresisRecord)) -> Result<SweepOutcome> {
    let (dir, axis) = loop_direction(cfg);
    let grid = build_grid(cfg)?;
    let mut sim = Simulation::new(cfg, VectorField::uniform(grid, dir))?;
    let rule = SteadyRule {
        rel_tol: cfg.hysteresis.steady_rel_tol,
        interval: cfg.steady_check_interval,
    };
    let mut rows = Vec::new();
    for b in field_schedule(cfg) {
        let h = cfg.material.tesla_to_reduced(b);
        sim.set_applied(AppliedFieldSpec {
            constant: vec3::axpy(cfg.applied.constant, h, dir),
            canting_deg: Some(cfg.hysteresis.canting_deg),
            ..cfg.applied
        });
        let out = run_dynamics(&mut sim, cfg.hysteresis.max_steps_per_field, usize::MAX, Some(rule), None)?;
        let [mx, my, mz] = sim.mean();
        let row = HysteresisRecord {
            field_t: b,
            mx,
            my,
            mz,
            steps_to_steady: out.steps_taken,
            converged: out.reached_steady,
        };
        on_point(&row);
        rows.push(row);
    }
    let summary = summarize_loop(&rows, cfg.hysteresis.n_field_steps.max(2), axis);
    Ok(SweepOutcome {
        rows,
        summary,
        audit: sim.audit,
    })
}
