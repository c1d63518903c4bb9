//! Three-time-level semi-implicit integrator.
//!
//! Given `m^{n-1}` and `m^n`, one step solves
//!
//! ```text
//! (I + eps dt m^n x Lap - alpha (1 + 2 eta/dt) m^n x) mt
//!     = m^{n-1} - eps dt m^n x Lap m^{n-1}
//!       - alpha (1 - 2 eta/dt) m^n x m^{n-1} - 2 dt m^n x f(m^n)
//! ```
//!
//! for the provisional `mt` and sets `m^{n+1} = mt / |mt|` cellwise. The
//! nonlinear coefficient `m^n` and the local field `f(m^n)` are frozen at the
//! current level, so every step is a single linear solve.

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::grid::{laplacian_into, Grid, VectorField};
use crate::krylov::{gmres_solve, FnOperator, KrylovConfig, SolveReport};
use crate::physics::FieldModel;
use crate::vec3::{self, Vec3};

/// Smallest provisional norm accepted by the projection.
pub const PROJECTION_FLOOR: f64 = 1e-8;
/// Tolerance on `| |m0| - 1 |` accepted by [`initialize`].
pub const INITIAL_NORM_TOL: f64 = 1e-10;
/// Condition estimate above which [`SolverBackend::Auto`] skips GMRES.
pub const AUTO_DIRECT_KAPPA: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Inertial LLG: `dm/dt = -m x h + alpha m x (dm/dt + eta d2m/dt2)`.
    #[default]
    FullIllg,
    /// Test equation `dm/dt = -eps m x Lap m + alpha (dm/dt + eta d2m/dt2) + g`.
    Verification,
    /// Test equation `dm/dt = -eps m x Lap m + alpha m x (dm/dt + eta d2m/dt2) + g`.
    GyroVerification,
}

/// How the per-step linear system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverBackend {
    /// Matrix-free restarted GMRES only.
    #[default]
    Gmres,
    /// Banded LU of the assembled operator, followed by one refinement sweep.
    Direct,
    /// Banded solve when the estimated condition number exceeds
    /// [`AUTO_DIRECT_KAPPA`], otherwise GMRES with the banded solve as fallback.
    Auto,
}

/// Starting vector for GMRES.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialGuess {
    /// The current level `m^n`.
    #[default]
    Current,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub eta: f64,
    /// Reduced time step.
    pub dt: f64,
    pub krylov: KrylovConfig,
    pub mode: Mode,
    pub backend: SolverBackend,
    pub guess: InitialGuess,
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = self.krylov.violations();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            bad.push(format!("dt must be positive, got {}", self.dt));
        }
        for (name, v) in [("epsilon", self.epsilon), ("alpha", self.alpha), ("eta", self.eta)] {
            if !(v >= 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be >= 0, got {v}"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(bad.join("; ")))
        }
    }

    /// Coefficient of `m^n x mt` in the full operator.
    fn gilbert_implicit(&self) -> f64 {
        self.alpha * (1.0 + 2.0 * self.eta / self.dt)
    }

    /// Coefficient of `m^n x m^{n-1}` on the right-hand side.
    fn gilbert_explicit(&self) -> f64 {
        self.alpha * (1.0 - 2.0 * self.eta / self.dt)
    }

    /// Closed-form condition estimate of the per-step operator on `grid`.
    pub fn condition_estimate(&self, grid: &Grid) -> f64 {
        let stiffness: f64 = [(grid.nx, grid.dx), (grid.ny, grid.dy), (grid.nz, grid.dz)]
            .into_iter()
            .filter(|(n, _)| *n > 1)
            .map(|(_, h)| 1.0 / (h * h))
            .sum();
        let exchange = 4.0 * self.epsilon * self.dt * stiffness;
        match self.mode {
            Mode::Verification => {
                let d = self.verification_diagonal().abs().max(f64::MIN_POSITIVE);
                (d + exchange) / d
            }
            _ => crate::krylov::ConditionEstimate::from_lambda(exchange + self.gilbert_implicit()).kappa,
        }
    }

    /// Diagonal of the verification-mode operator.
    fn verification_diagonal(&self) -> f64 {
        1.0 - self.alpha - 2.0 * self.alpha * self.eta / self.dt
    }
}

/// Two consecutive magnetization levels. `m_curr` sits at time `step * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub m_prev: VectorField,
    pub m_curr: VectorField,
    pub step: usize,
    pub dt: f64,
}

impl SolverState {
    /// Builds a state from explicit levels `m^{step-1}` and `m^{step}`.
    pub fn from_levels(m_prev: VectorField, m_curr: VectorField, step: usize, dt: f64) -> Result<Self> {
        m_prev.ensure_same_grid(&m_curr)?;
        if step == 0 {
            return Err(Error::InvalidParameter("step index must be >= 1".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        Ok(SolverState {
            m_prev: checked_unit(m_prev)?,
            m_curr: checked_unit(m_curr)?,
            step,
            dt,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.m_curr.grid()
    }

    /// Reduced time of `m_curr`.
    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }
}

fn checked_unit(m: VectorField) -> Result<VectorField> {
    for (cell, v) in m.values().iter().enumerate() {
        let n = vec3::norm(*v);
        if !((n - 1.0).abs() <= INITIAL_NORM_TOL) {
            return Err(Error::NonUnitMagnetization { cell, norm: n });
        }
    }
    m.normalized()
}

/// Starts from rest: `m^0 = m^1 = m0`, step 1.
pub fn initialize(m0: VectorField, dt: f64) -> Result<SolverState> {
    SolverState::from_levels(m0.clone(), m0, 1, dt)
}

/// Diagnostics of one completed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub solve: SolveReport,
    /// `max | mt . m^n - m^n . m^{n-1} |` over cells (full mode only; zero
    /// in verification mode where no such identity holds).
    pub identity_defect: f64,
    /// `max | |m^{n+1}| - 1 |` after projection.
    pub norm_defect: f64,
    /// True when the banded direct solve produced the provisional state.
    pub direct_solve: bool,
}

/// Supplies `f(m^n)` to the integrator.
pub trait FieldProvider {
    /// Local (non-exchange) field at reduced time `t`.
    fn local_field(&self, m: &VectorField, t: f64) -> Result<VectorField>;
}

impl FieldProvider for FieldModel {
    fn local_field(&self, m: &VectorField, t: f64) -> Result<VectorField> {
        self.local_field_at(m, t)
    }
}

/// Supplies the manufactured source `g` on the grid.
pub trait SourceProvider {
    fn source(&self, grid: &Grid, t: f64) -> Result<VectorField>;
}

impl<F: Fn(&Grid, f64) -> Result<VectorField>> SourceProvider for F {
    fn source(&self, grid: &Grid, t: f64) -> Result<VectorField> {
        self(grid, t)
    }
}

/// Operator application on interleaved slices.
fn operator_into(grid: &Grid, m: &[Vec3], cfg: &StepperConfig, v: &[Vec3], out: &mut [Vec3]) {
    laplacian_into(grid, v, out);
    match cfg.mode {
        Mode::FullIllg | Mode::GyroVerification => {
            let (ed, g) = (cfg.epsilon * cfg.dt, cfg.gilbert_implicit());
            for ((o, mi), vi) in out.iter_mut().zip(m).zip(v) {
                // v + m x (eps dt Lap v - g v)
                let s = vec3::axpy(vec3::scale(ed, *o), -g, *vi);
                *o = vec3::add(*vi, vec3::cross(*mi, s));
            }
        }
        Mode::Verification => {
            let (ed, c) = (cfg.epsilon * cfg.dt, cfg.verification_diagonal());
            for ((o, mi), vi) in out.iter_mut().zip(m).zip(v) {
                *o = vec3::axpy(vec3::scale(c, *vi), ed, vec3::cross(*mi, *o));
            }
        }
    }
}

/// Applies the per-step system matrix built around `m_n` to `v`.
pub fn apply_system_operator(m_n: &VectorField, v: &VectorField, cfg: &StepperConfig) -> Result<VectorField> {
    m_n.ensure_same_grid(v)?;
    let mut out = VectorField::zeros(*m_n.grid());
    operator_into(m_n.grid(), m_n.values(), cfg, v.values(), out.values_mut());
    Ok(out)
}

/// Right-hand side of the full-mode system.
pub fn assemble_rhs(state: &SolverState, f_local: &VectorField, cfg: &StepperConfig) -> Result<VectorField> {
    state.m_curr.ensure_same_grid(f_local)?;
    let grid = *state.grid();
    let mut lap_prev = VectorField::zeros(grid);
    laplacian_into(&grid, state.m_prev.values(), lap_prev.values_mut());
    let (ed, g) = (cfg.epsilon * cfg.dt, cfg.gilbert_explicit());
    let data = state
        .m_prev
        .values()
        .iter()
        .zip(state.m_curr.values())
        .zip(lap_prev.values())
        .zip(f_local.values())
        .map(|(((mp, mc), lp), f)| {
            // m^{n-1} - m^n x (eps dt Lap m^{n-1} + g m^{n-1} + 2 dt f)
            let inner = vec3::axpy(vec3::axpy(vec3::scale(ed, *lp), g, *mp), 2.0 * cfg.dt, *f);
            vec3::sub(*mp, vec3::cross(*mc, inner))
        })
        .collect();
    VectorField::from_vec(grid, data)
}

/// Right-hand side of the verification-mode system.
fn assemble_verification_rhs(state: &SolverState, g: &VectorField, cfg: &StepperConfig) -> Result<VectorField> {
    state.m_curr.ensure_same_grid(g)?;
    let grid = *state.grid();
    let mut lap_prev = VectorField::zeros(grid);
    laplacian_into(&grid, state.m_prev.values(), lap_prev.values_mut());
    let ed = cfg.epsilon * cfg.dt;
    let c_prev = 1.0 - cfg.alpha + 2.0 * cfg.alpha * cfg.eta / cfg.dt;
    let c_curr = -4.0 * cfg.alpha * cfg.eta / cfg.dt;
    let data = state
        .m_prev
        .values()
        .iter()
        .zip(state.m_curr.values())
        .zip(lap_prev.values())
        .zip(g.values())
        .map(|(((mp, mc), lp), gi)| {
            let mut r = vec3::axpy(vec3::scale(c_prev, *mp), c_curr, *mc);
            r = vec3::axpy(r, -ed, vec3::cross(*mc, *lp));
            vec3::axpy(r, 2.0 * cfg.dt, *gi)
        })
        .collect();
    VectorField::from_vec(grid, data)
}

/// Assembles the per-step operator in band form. Unknowns are interleaved
/// `3 * cell + component`, so the bandwidth is three times the largest
/// active cell stride plus two.
pub fn assemble_banded(m_n: &VectorField, cfg: &StepperConfig) -> BandedMatrix {
    let grid = *m_n.grid();
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    let stride = if nz > 1 {
        nx * ny
    } else if ny > 1 {
        nx
    } else {
        1
    };
    let half = 3 * stride + 2;
    let mut a = BandedMatrix::zeros(3 * grid.len(), half, half);
    let ed = cfg.epsilon * cfg.dt;
    let (diag, gyro) = match cfg.mode {
        Mode::FullIllg | Mode::GyroVerification => (1.0, -cfg.gilbert_implicit()),
        Mode::Verification => (cfg.verification_diagonal(), 0.0),
    };
    let axes = [
        (nx, 1, grid.dx),
        (ny, nx, grid.dy),
        (nz, nx * ny, grid.dz),
    ];
    // Adds `w [m]x` to block (row, col).
    let put = |a: &mut BandedMatrix, row: usize, col: usize, m: Vec3, w: f64| {
        let (r, c) = (3 * row, 3 * col);
        a.add(r, c + 1, -w * m[2]);
        a.add(r, c + 2, w * m[1]);
        a.add(r + 1, c, w * m[2]);
        a.add(r + 1, c + 2, -w * m[0]);
        a.add(r + 2, c, -w * m[1]);
        a.add(r + 2, c + 1, w * m[0]);
    };
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let idx = grid.index(i, j, k);
                let m = m_n.values()[idx];
                for d in 0..3 {
                    a.add(3 * idx + d, 3 * idx + d, diag);
                }
                let mut self_weight = gyro;
                for (axis, (n, s, h)) in axes.into_iter().enumerate() {
                    if n < 2 {
                        continue;
                    }
                    let pos = [i, j, k][axis];
                    let w = ed / (h * h);
                    if pos > 0 {
                        put(&mut a, idx, idx - s, m, w);
                        self_weight -= w;
                    }
                    if pos + 1 < n {
                        put(&mut a, idx, idx + s, m, w);
                        self_weight -= w;
                    }
                }
                put(&mut a, idx, idx, m, self_weight);
            }
        }
    }
    a
}

fn residual_norm(grid: &Grid, m: &[Vec3], cfg: &StepperConfig, x: &[f64], rhs: &[f64], r: &mut [f64]) -> f64 {
    let (xv, _) = x.as_chunks::<3>();
    let (rv, _) = r.as_chunks_mut::<3>();
    operator_into(grid, m, cfg, xv, rv);
    let mut acc = 0.0;
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
        acc += *ri * *ri;
    }
    acc.sqrt()
}

fn direct_solve(state: &SolverState, rhs: &[f64], cfg: &StepperConfig, gmres_iterations: usize) -> Result<(Vec<f64>, SolveReport)> {
    let grid = *state.grid();
    let m = state.m_curr.values();
    let lu = assemble_banded(&state.m_curr, cfg).factorize()?;
    let mut x = rhs.to_vec();
    lu.solve_in_place(&mut x);
    let mut r = vec![0.0; rhs.len()];
    let first = residual_norm(&grid, m, cfg, &x, rhs, &mut r);
    lu.solve_in_place(&mut r);
    for (xi, ci) in x.iter_mut().zip(&r) {
        *xi += ci;
    }
    let fin = residual_norm(&grid, m, cfg, &x, rhs, &mut r);
    let target = cfg.krylov.tol * rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((
        x,
        SolveReport {
            iterations: gmres_iterations,
            final_residual: fin,
            converged: fin <= target.max(f64::MIN_POSITIVE),
            residual_history: vec![first, fin],
        },
    ))
}

fn solve(state: &SolverState, rhs: &VectorField, cfg: &StepperConfig) -> Result<(VectorField, SolveReport, bool)> {
    let grid = *state.grid();
    let m = state.m_curr.values();
    let target = cfg.krylov.tol * rhs.as_flat().iter().map(|v| v * v).sum::<f64>().sqrt();
    let go_direct = match cfg.backend {
        SolverBackend::Direct => true,
        SolverBackend::Auto => cfg.condition_estimate(&grid) > AUTO_DIRECT_KAPPA,
        SolverBackend::Gmres => false,
    };
    let (x, report, direct) = if go_direct {
        let (x, r) = direct_solve(state, rhs.as_flat(), cfg, 0)?;
        (x, r, true)
    } else {
        let op = FnOperator::new(3 * grid.len(), |x: &[f64], y: &mut [f64]| {
            let (xv, _) = x.as_chunks::<3>();
            let (yv, _) = y.as_chunks_mut::<3>();
            operator_into(&grid, m, cfg, xv, yv);
        });
        let zero;
        let x0 = match cfg.guess {
            InitialGuess::Current => state.m_curr.as_flat(),
            InitialGuess::Zero => {
                zero = vec![0.0; rhs.as_flat().len()];
                &zero[..]
            }
        };
        let (x, report) = gmres_solve(&op, rhs.as_flat(), x0, &cfg.krylov)?;
        if !report.converged && cfg.backend == SolverBackend::Auto {
            let (x, r) = direct_solve(state, rhs.as_flat(), cfg, report.iterations)?;
            (x, r, true)
        } else {
            (x, report, false)
        }
    };
    // The direct path is accepted at round-off level even if it misses the
    // relative target on very stiff systems; the GMRES path is not.
    if !report.converged && !(direct && report.final_residual <= 1e3 * target) {
        return Err(Error::KrylovNotConverged {
            iterations: report.iterations,
            residual: report.final_residual,
            target,
        });
    }
    Ok((VectorField::from_flat(grid, &x)?, report, direct))
}

/// Normalizes every cell of `provisional`.
pub fn project(provisional: VectorField) -> Result<VectorField> {
    let mut m = provisional;
    for (cell, v) in m.values_mut().iter_mut().enumerate() {
        let n = vec3::norm(*v);
        if !(n >= PROJECTION_FLOOR) {
            return Err(Error::DegenerateProjection { cell, norm: n });
        }
        *v = vec3::scale(1.0 / n, *v);
    }
    Ok(m)
}

fn advance(state: &mut SolverState, provisional: VectorField, solve: SolveReport, identity_defect: f64, direct_solve: bool) -> Result<StepReport> {
    let next = project(provisional)?;
    let norm_defect = next.max_norm_defect();
    let prev = std::mem::replace(&mut state.m_curr, next);
    state.m_prev = prev;
    state.step += 1;
    Ok(StepReport {
        solve,
        identity_defect,
        norm_defect,
        direct_solve,
    })
}

fn identity_defect(state: &SolverState, provisional: &VectorField) -> f64 {
    provisional
        .values()
        .iter()
        .zip(state.m_curr.values())
        .zip(state.m_prev.values())
        .map(|((mt, mc), mp)| (vec3::dot(*mt, *mc) - vec3::dot(*mc, *mp)).abs())
        .fold(0.0, f64::max)
}

/// Advances `state` by one step of the full inertial scheme.
pub fn step(state: &mut SolverState, fields: &dyn FieldProvider, cfg: &StepperConfig) -> Result<StepReport> {
    debug_assert_eq!(cfg.mode, Mode::FullIllg);
    let f = fields.local_field(&state.m_curr, state.time())?;
    let rhs = assemble_rhs(state, &f, cfg)?;
    let (provisional, report, direct) = solve(state, &rhs, cfg)?;
    let defect = identity_defect(state, &provisional);
    advance(state, provisional, report, defect, direct)
}

/// Advances `state` by one step of the test equation with source `g(t_n)`.
pub fn step_verification(state: &mut SolverState, source: &dyn SourceProvider, cfg: &StepperConfig) -> Result<StepReport> {
    let g = source.source(state.grid(), state.time())?;
    let rhs = match cfg.mode {
        Mode::Verification => assemble_verification_rhs(state, &g, cfg)?,
        Mode::GyroVerification => {
            let mut rhs = assemble_rhs(state, &VectorField::zeros(*state.grid()), cfg)?;
            for (r, gi) in rhs.values_mut().iter_mut().zip(g.values()) {
                *r = vec3::axpy(*r, 2.0 * cfg.dt, *gi);
            }
            rhs
        }
        Mode::FullIllg => {
            return Err(Error::InvalidParameter("full mode has no source term".into()));
        }
    };
    let (provisional, report, direct) = solve(state, &rhs, cfg)?;
    advance(state, provisional, report, 0.0, direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{AppliedFieldSpec, EasyAxis};
    use crate::vec3::{E1, E2, E3};
    use rand::{Rng, SeedableRng};

    fn cfg(epsilon: f64, alpha: f64, eta: f64, dt: f64) -> StepperConfig {
        StepperConfig {
            epsilon,
            alpha,
            eta,
            dt,
            krylov: KrylovConfig::default(),
            mode: Mode::FullIllg,
            backend: SolverBackend::Gmres,
            guess: Default::default(),
        }
    }

    fn random_unit(grid: Grid, seed: u64) -> VectorField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        VectorField::from_vec(
            grid,
            (0..grid.len())
                .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect(),
        )
        .unwrap()
        .normalized()
        .unwrap()
    }

    fn random_field(grid: Grid, seed: u64) -> VectorField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        VectorField::from_vec(
            grid,
            (0..grid.len())
                .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn initialize_duplicates_level() {
        let g = Grid::new(3, 2, 1, 1.0, 1.0, 1.0).unwrap();
        let s = initialize(VectorField::uniform(g, E1), 0.1).unwrap();
        assert_eq!(s.m_prev, s.m_curr);
        assert_eq!(s.step, 1);
        assert!((s.time() - 0.1).abs() < 1e-15);

        let mut bad = VectorField::uniform(g, E1);
        bad.values_mut()[2] = [2.0, 0.0, 0.0];
        assert!(matches!(initialize(bad, 0.1), Err(Error::NonUnitMagnetization { cell: 2, .. })));

        let r = initialize(random_unit(g, 3), 0.1).unwrap();
        assert!(r.m_curr.max_norm_defect() <= 1e-15);
    }

    #[test]
    fn operator_examples() {
        let g = Grid::line(2, 1.0).unwrap();
        let m = VectorField::uniform(g, E1);
        let c = cfg(0.0, 0.5, 0.0, 1.0);
        assert_eq!(apply_system_operator(&m, &m, &c).unwrap(), m);

        // alpha (1 + 2 eta / dt) = 1
        let c = cfg(0.0, 0.5, 0.5, 1.0);
        let v = VectorField::uniform(g, E2);
        let out = apply_system_operator(&m, &v, &c).unwrap();
        assert_eq!(out.values()[0], [0.0, 1.0, -1.0]);
    }

    #[test]
    fn rhs_examples() {
        let g = Grid::line(2, 1.0).unwrap();
        let zero = VectorField::zeros(g);
        let s = initialize(VectorField::uniform(g, E1), 0.3).unwrap();
        let rhs = assemble_rhs(&s, &zero, &cfg(2.0, 0.7, 5.0, 0.3)).unwrap();
        assert_eq!(rhs, VectorField::uniform(g, E1));

        // alpha (1 - 2 eta / dt) = 1 with alpha = 2, eta = 0.25, dt = 1
        let s = SolverState::from_levels(VectorField::uniform(g, E2), VectorField::uniform(g, E1), 1, 1.0).unwrap();
        let rhs = assemble_rhs(&s, &zero, &cfg(0.0, 2.0, 0.25, 1.0)).unwrap();
        assert_eq!(rhs.values()[1], [0.0, 1.0, -1.0]);
    }

    /// Scalar re-evaluation of the right-hand side, component by component.
    #[test]
    fn rhs_matches_scalar_formula() {
        let g = Grid::line(4, 0.5).unwrap();
        let (eps, alpha, eta, dt) = (0.3, 0.2, 1.5, 0.05);
        let mp = random_unit(g, 1);
        let mc = random_unit(g, 2);
        let f = random_field(g, 3);
        let s = SolverState::from_levels(mp.clone(), mc.clone(), 4, dt).unwrap();
        let rhs = assemble_rhs(&s, &f, &cfg(eps, alpha, eta, dt)).unwrap();
        let n = g.len();
        for i in 0..n {
            let at = |k: isize| mp.values()[k.clamp(0, n as isize - 1) as usize];
            let mut lap = [0.0; 3];
            for d in 0..3 {
                lap[d] = (at(i as isize + 1)[d] - 2.0 * at(i as isize)[d] + at(i as isize - 1)[d]) / 0.25;
            }
            let a = mc.values()[i];
            let p = mp.values()[i];
            let fi = f.values()[i];
            let cx = |u: [f64; 3]| [a[1] * u[2] - a[2] * u[1], a[2] * u[0] - a[0] * u[2], a[0] * u[1] - a[1] * u[0]];
            let (c1, c2, c3) = (cx(lap), cx(p), cx(fi));
            for d in 0..3 {
                let want = p[d] - eps * dt * c1[d] - alpha * (1.0 - 2.0 * eta / dt) * c2[d] - 2.0 * dt * c3[d];
                assert!((rhs.values()[i][d] - want).abs() < 1e-14 * want.abs().max(1.0));
            }
        }
    }

    fn probe_dense(m: &VectorField, c: &StepperConfig) -> nalgebra::DMatrix<f64> {
        let n = 3 * m.len();
        let mut a = nalgebra::DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let v = VectorField::from_flat(*m.grid(), &e).unwrap();
            let col = apply_system_operator(m, &v, c).unwrap();
            for (i, x) in col.as_flat().iter().enumerate() {
                a[(i, j)] = *x;
            }
        }
        a
    }

    #[test]
    fn dense_probe_reproduces_operator() {
        let g = Grid::line(3, 0.4).unwrap();
        let m = random_unit(g, 9);
        let c = cfg(0.8, 0.3, 2.0, 0.1);
        let a = probe_dense(&m, &c);
        for seed in 0..20 {
            let v = random_field(g, 100 + seed);
            let x = nalgebra::DVector::from_column_slice(v.as_flat());
            let dense = &a * x;
            let free = apply_system_operator(&m, &v, &c).unwrap();
            for (p, q) in dense.iter().zip(free.as_flat()) {
                assert!((p - q).abs() <= 1e-13 * q.abs().max(1.0));
            }
        }
    }

    #[test]
    fn grid_condition_number_matches_singular_values() {
        use crate::krylov::condition_number_on_grid;
        let cases = [
            (Grid::line(6, 1.0 / 6.0).unwrap(), cfg(1.0, 0.01, 1000.0, 1e-2)),
            (Grid::line(5, 0.2).unwrap(), cfg(0.5, 0.1, 0.0, 0.3)),
            (Grid::new(3, 3, 2, 0.3, 0.3, 0.5).unwrap(), cfg(1.0, 0.02, 10.0, 0.05)),
        ];
        for (g, c) in cases {
            let a = probe_dense(&VectorField::uniform(g, E1), &c);
            let sv = a.singular_values();
            let kappa = sv.max() / sv.min();
            let want = condition_number_on_grid(c.epsilon, c.dt, &g, c.alpha, c.eta).kappa;
            assert!((kappa - want).abs() <= 1e-9 * want, "{kappa} vs {want}");
        }
    }

    #[test]
    fn operator_is_nonsingular() {
        let g = Grid::new(2, 2, 2, 0.5, 0.5, 0.5).unwrap();
        for (seed, dt) in [(1, 1e-3), (2, 1.0), (3, 1e3)] {
            let m = random_unit(g, seed);
            let a = probe_dense(&m, &cfg(1.0, 0.1, 10.0, dt));
            let sv = a.singular_values();
            assert!(sv.min() > 1e-12, "{}", sv.min());
        }
    }

    fn model(q: f64) -> FieldModel {
        FieldModel {
            q,
            axis: EasyAxis::X,
            applied: AppliedFieldSpec::default(),
            t_unit: 1.0,
            demag: None,
        }
    }

    #[test]
    fn easy_axis_state_is_stationary() {
        let g = Grid::new(3, 2, 1, 0.5, 0.5, 0.5).unwrap();
        let mut s = initialize(VectorField::uniform(g, E1), 0.05).unwrap();
        let c = cfg(0.1, 0.1, 1.0, 0.05);
        for _ in 0..5 {
            step(&mut s, &model(0.5), &c).unwrap();
        }
        let dev = s.m_curr.lincomb(1.0, &VectorField::uniform(g, E1), -1.0).unwrap().max_abs();
        assert!(dev < 1e-12);
        assert_eq!(s.step, 6);
    }

    #[test]
    fn step_keeps_unit_norm_and_dot_identity() {
        let g = Grid::new(4, 3, 2, 0.3, 0.3, 0.3).unwrap();
        let m0 = random_unit(g, 21);
        let mut s = SolverState::from_levels(m0.clone(), random_unit(g, 22).lincomb(0.05, &m0, 1.0).unwrap().normalized().unwrap(), 1, 0.02).unwrap();
        let c = cfg(0.5, 0.05, 0.3, 0.02);
        let mut fm = model(0.2);
        fm.applied = AppliedFieldSpec::constant([0.1, -0.2, 0.05]);
        for _ in 0..10 {
            let rep = step(&mut s, &fm, &c).unwrap();
            assert!(rep.norm_defect <= 1e-13);
            assert!(rep.identity_defect <= 100.0 * c.krylov.tol, "{}", rep.identity_defect);
        }
    }

    #[test]
    fn verification_uniform_state_without_source_is_stationary() {
        let g = Grid::line(8, 0.125).unwrap();
        let mut s = initialize(VectorField::uniform(g, E3), 0.01).unwrap();
        let c = StepperConfig {
            mode: Mode::Verification,
            backend: SolverBackend::Gmres,
            ..cfg(1.0, 0.01, 100.0, 0.01)
        };
        let src = |grid: &Grid, _t: f64| Ok(VectorField::zeros(*grid));
        for _ in 0..5 {
            step_verification(&mut s, &src, &c).unwrap();
        }
        assert!(s.m_curr.lincomb(1.0, &VectorField::uniform(g, E3), -1.0).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn projection_rejects_vanishing_cells() {
        let g = Grid::line(2, 1.0).unwrap();
        let f = VectorField::from_vec(g, vec![E1, [1e-9, 0.0, 0.0]]).unwrap();
        assert!(matches!(project(f), Err(Error::DegenerateProjection { cell: 1, .. })));
    }

    #[test]
    fn banded_assembly_matches_matrix_free_operator() {
        for (grid, mode) in [
            (Grid::line(9, 0.1).unwrap(), Mode::FullIllg),
            (Grid::new(3, 4, 1, 0.2, 0.3, 1.0).unwrap(), Mode::Verification),
            (Grid::new(3, 2, 4, 0.2, 0.3, 0.5).unwrap(), Mode::FullIllg),
            (Grid::new(1, 1, 5, 1.0, 1.0, 0.5).unwrap(), Mode::Verification),
        ] {
            let m = random_unit(grid, 21);
            let mut c = cfg(0.7, 0.2, 0.5, 0.3);
            c.mode = mode;
            let a = assemble_banded(&m, &c);
            let v = random_field(grid, 22);
            let want = apply_system_operator(&m, &v, &c).unwrap();
            let mut got = vec![0.0; 3 * grid.len()];
            a.mul_vec(v.as_flat(), &mut got);
            for (g, w) in got.iter().zip(want.as_flat()) {
                assert!((g - w).abs() < 1e-13, "{mode:?}");
            }
        }
    }

    #[test]
    fn direct_backend_agrees_with_gmres() {
        let g = Grid::new(4, 3, 2, 0.5, 0.5, 0.5).unwrap();
        let m0 = random_unit(g, 31);
        let mut a = initialize(m0.clone(), 0.2).unwrap();
        let mut b = initialize(m0, 0.2).unwrap();
        let mut c = cfg(1.0, 0.1, 0.5, 0.2);
        let fm = model(0.3);
        for _ in 0..3 {
            c.backend = SolverBackend::Gmres;
            let ra = step(&mut a, &fm, &c).unwrap();
            c.backend = SolverBackend::Direct;
            let rb = step(&mut b, &fm, &c).unwrap();
            assert!(!ra.direct_solve && rb.direct_solve);
            assert!(rb.identity_defect <= 100.0 * c.krylov.tol);
        }
        let diff = a.m_curr.as_flat().iter().zip(b.m_curr.as_flat()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn auto_backend_rescues_stiff_system() {
        // dt / dx^2 = 1e6: far beyond what unpreconditioned GMRES(30) resolves.
        let g = Grid::line(200, 1e-3).unwrap();
        let m0 = VectorField::from_fn(g, |p| {
            let s = (6.0 * p[0]).sin();
            [0.3 * s, 0.2, 1.0].map(|v| v / (0.09 * s * s + 1.04).sqrt())
        });
        let mut c = cfg(1.0, 0.0, 0.0, 1.0);
        c.krylov.max_iters = 60;
        let mut s = initialize(m0.clone(), 1.0).unwrap();
        assert!(step(&mut s, &model(0.0), &c).unwrap_err().is_solver_failure());
        c.backend = SolverBackend::Auto;
        let rep = step(&mut s, &model(0.0), &c).unwrap();
        assert!(rep.direct_solve);
        assert!(rep.norm_defect < 1e-14);
        assert!(rep.identity_defect <= 100.0 * c.krylov.tol, "{}", rep.identity_defect);
    }

    #[test]
    fn gmres_failure_surfaces_as_error() {
        let g = Grid::line(16, 0.01).unwrap();
        let m0 = random_unit(g, 5);
        let mut s = initialize(m0, 1.0).unwrap();
        let mut c = cfg(1.0, 0.1, 1.0, 1.0);
        c.krylov = KrylovConfig {
            tol: 1e-14,
            restart: 2,
            max_iters: 3,
        };
        let err = step(&mut s, &model(0.0), &c).unwrap_err();
        assert!(err.is_solver_failure());
        assert_eq!(s.step, 1);
    }
}
