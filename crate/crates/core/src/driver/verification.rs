//! Manufactured-solution refinement studies.

use super::config::{SweepPlan, VerifyConfig, VerifyDims};
use super::output::ConvergenceRecord;
use crate::error::Result;
use crate::krylov::KrylovConfig;
use crate::verify::{spatial_sweep, temporal_sweep, ConvergenceTable, Dimensionality, ManufacturedCase};

/// One finished sweep with the case it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub dims: VerifyDims,
    pub alpha: f64,
    pub eta: f64,
    pub table: ConvergenceTable,
    /// Box edge over which resolutions are counted.
    pub box_len: f64,
    pub final_time: f64,
}

impl SweepResult {
    pub fn records(&self) -> Vec<ConvergenceRecord> {
        let dims = match self.dims {
            VerifyDims::One => "1d",
            VerifyDims::Three => "3d",
        };
        let span = match self.table.kind {
            crate::verify::SweepKind::Temporal => self.final_time,
            crate::verify::SweepKind::Spatial => self.box_len,
        };
        self.table
            .resolutions
            .iter()
            .zip(&self.table.errors)
            .map(|(&n, &e)| ConvergenceRecord {
                sweep: self.table.kind.as_str().to_string(),
                dims: dims.to_string(),
                alpha: self.alpha,
                eta: self.eta,
                resolution: n,
                step_size: span / n as f64,
                error: e,
                order: self.table.order,
            })
            .collect()
    }
}

fn case(cfg: &VerifyConfig, dims: VerifyDims, alpha: f64, eta: f64, box_len: f64, final_time: f64) -> ManufacturedCase {
    ManufacturedCase {
        dims: match dims {
            VerifyDims::One => Dimensionality::One,
            VerifyDims::Three => Dimensionality::Three,
        },
        damping: cfg.damping,
        alpha,
        eta,
        final_time,
        box_len,
    }
}

/// Temporal and spatial sweeps for one `(alpha, eta)` pair.
pub fn run_case(
    cfg: &VerifyConfig,
    dims: VerifyDims,
    plan: &SweepPlan,
    alpha: f64,
    eta: f64,
    krylov: KrylovConfig,
) -> Result<[SweepResult; 2]> {
    let tc = case(cfg, dims, alpha, eta, plan.box_len, plan.final_time);
    let time = temporal_sweep(&tc, plan.time_cells, &plan.time_steps, krylov)?;
    let sc = case(cfg, dims, alpha, eta, plan.space_box_len, plan.space_final_time);
    let space = spatial_sweep(&sc, &plan.space_cells, plan.space_dt, krylov)?;
    Ok([
        SweepResult {
            dims,
            alpha,
            eta,
            table: time,
            box_len: plan.box_len,
            final_time: plan.final_time,
        },
        SweepResult {
            dims,
            alpha,
            eta,
            table: space,
            box_len: plan.space_box_len,
            final_time: plan.space_final_time,
        },
    ])
}

/// Every configured case, in order: 1D cases then 3D cases.
pub fn run_all(cfg: &VerifyConfig, krylov: KrylovConfig, mut on_sweep: impl FnMut(&SweepResult)) -> Result<Vec<SweepResult>> {
    let mut out = Vec::new();
    for &dims in &cfg.dims {
        let (cases, plan) = match dims {
            VerifyDims::One => (&cfg.cases_1d, &cfg.plan_1d),
            VerifyDims::Three => (&cfg.cases_3d, &cfg.plan_3d),
        };
        for &(alpha, eta) in cases {
            for r in run_case(cfg, dims, plan, alpha, eta, krylov)? {
                on_sweep(&r);
                out.push(r);
            }
        }
    }
    Ok(out)
}
