//! Manufactured-solution verification of the integrator.
//!
//! The exact solutions are
//! `m_e = (cos(phi) sin t, sin(phi) sin t, cos t)` with
//! `phi = x^2 (1-x)^2` in 1D and `phi = xb(x) xb(y) xb(z)` in 3D. Both have
//! zero normal derivative on the unit box, so they satisfy the Neumann
//! closure used by the stencil.

use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use crate::krylov::KrylovConfig;
use crate::stepper::{self, Mode, SolverBackend, SolverState, StepperConfig};
use crate::vec3::{self, Vec3};

/// `x^2 (1 - x)^2` and its first two derivatives.
fn bump(x: f64) -> (f64, f64, f64) {
    let u = x * (1.0 - x);
    (u * u, 2.0 * u * (1.0 - 2.0 * x), 2.0 * (1.0 - 6.0 * x + 6.0 * x * x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimensionality {
    One,
    Three,
}

/// Phase `phi`, `|grad phi|^2`, and `Lap phi` at a point.
fn phase(dim: Dimensionality, p: Vec3) -> (f64, f64, f64) {
    match dim {
        Dimensionality::One => {
            let (b, b1, b2) = bump(p[0]);
            (b, b1 * b1, b2)
        }
        Dimensionality::Three => {
            let (bx, bx1, bx2) = bump(p[0]);
            let (by, by1, by2) = bump(p[1]);
            let (bz, bz1, bz2) = bump(p[2]);
            let grad = [bx1 * by * bz, bx * by1 * bz, bx * by * bz1];
            (bx * by * bz, vec3::dot(grad, grad), bx2 * by * bz + bx * by2 * bz + bx * by * bz2)
        }
    }
}

/// Exact solution and its derivatives at one space-time point.
#[derive(Debug, Clone, Copy)]
pub struct ExactSample {
    pub m: Vec3,
    pub dt: Vec3,
    pub dtt: Vec3,
    pub lap: Vec3,
}

fn exact_sample(dim: Dimensionality, p: Vec3, t: f64) -> ExactSample {
    let (phi, grad2, lap_phi) = phase(dim, p);
    let (c, s) = (phi.cos(), phi.sin());
    let (ct, st) = (t.cos(), t.sin());
    ExactSample {
        m: [c * st, s * st, ct],
        dt: [c * ct, s * ct, -st],
        dtt: [-c * st, -s * st, -ct],
        lap: [st * (-c * grad2 - s * lap_phi), st * (-s * grad2 + c * lap_phi), 0.0],
    }
}

/// 1D exact solution at `(x, t)`.
pub fn exact_solution_1d(x: f64, t: f64) -> Vec3 {
    exact_sample(Dimensionality::One, [x, 0.0, 0.0], t).m
}

/// 3D exact solution at `(x, y, z, t)`.
pub fn exact_solution_3d(x: f64, y: f64, z: f64, t: f64) -> Vec3 {
    exact_sample(Dimensionality::Three, [x, y, z], t).m
}

/// Form of the damping term in the test equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DampingForm {
    /// `alpha m x (dm/dt + eta d2m/dt2)`, as in the full inertial model.
    #[default]
    Gyro,
    /// `alpha (dm/dt + eta d2m/dt2)` without the cross product. For `eta > 0`
    /// the resulting equation is ill-posed: high wavenumbers grow like
    /// `exp(k t / sqrt(2 alpha eta))`, so refinement studies diverge.
    Linear,
}

/// One manufactured problem for
/// `dm/dt = -m x Lap m + (damping) + g` with the exact solution above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub dims: Dimensionality,
    pub damping: DampingForm,
    pub alpha: f64,
    pub eta: f64,
    pub final_time: f64,
    /// Edge length of the cubic (or 1D) domain `[0, box_len]`.
    pub box_len: f64,
}

impl ManufacturedCase {
    pub fn exact(&self, p: Vec3, t: f64) -> Vec3 {
        exact_sample(self.dims, p, t).m
    }

    pub fn derivatives(&self, p: Vec3, t: f64) -> ExactSample {
        exact_sample(self.dims, p, t)
    }

    /// `g = dm/dt + m x Lap m - (damping)` evaluated on the exact solution.
    pub fn source(&self, p: Vec3, t: f64) -> Vec3 {
        let e = exact_sample(self.dims, p, t);
        let mut damping = vec3::axpy(e.dt, self.eta, e.dtt);
        if self.damping == DampingForm::Gyro {
            damping = vec3::cross(e.m, damping);
        }
        vec3::axpy(vec3::add(e.dt, vec3::cross(e.m, e.lap)), -self.alpha, damping)
    }

    /// Grid with `n` cells per active axis.
    pub fn grid(&self, n: usize) -> Result<Grid> {
        let h = self.box_len / n as f64;
        match self.dims {
            Dimensionality::One => Grid::line(n, h),
            Dimensionality::Three => Grid::new(n, n, n, h, h, h),
        }
    }

    pub fn exact_field(&self, grid: &Grid, t: f64) -> VectorField {
        VectorField::from_fn(*grid, |p| self.exact(p, t))
    }

    pub fn source_field(&self, grid: &Grid, t: f64) -> VectorField {
        VectorField::from_fn(*grid, |p| self.source(p, t))
    }

    /// Integrates to `final_time` with `n_cells` per axis and `n_steps` time
    /// levels after the initial one. The first two levels are exact.
    pub fn run(&self, n_cells: usize, n_steps: usize, krylov: KrylovConfig) -> Result<RunOutcome> {
        if n_steps < 1 {
            return Err(Error::InvalidParameter("at least one time step is required".into()));
        }
        let grid = self.grid(n_cells)?;
        let dt = self.final_time / n_steps as f64;
        let cfg = StepperConfig {
            epsilon: 1.0,
            alpha: self.alpha,
            eta: self.eta,
            dt,
            krylov,
            mode: match self.damping {
                DampingForm::Gyro => Mode::GyroVerification,
                DampingForm::Linear => Mode::Verification,
            },
            backend: SolverBackend::Auto,
            guess: Default::default(),
        };
        cfg.validate()?;
        let mut state = SolverState::from_levels(self.exact_field(&grid, 0.0), self.exact_field(&grid, dt), 1, dt)?;
        let source = |g: &Grid, t: f64| Ok(self.source_field(g, t));
        let mut max_iterations = 0;
        let mut max_norm_defect: f64 = 0.0;
        while state.step < n_steps {
            let rep = stepper::step_verification(&mut state, &source, &cfg)
                .map_err(|e| Error::Step { step: state.step, source: Box::new(e) })?;
            max_iterations = max_iterations.max(rep.solve.iterations);
            max_norm_defect = max_norm_defect.max(rep.norm_defect);
        }
        let exact = self.exact_field(&grid, state.time());
        Ok(RunOutcome {
            error: linf_error(&state.m_curr, &exact)?,
            max_iterations,
            max_norm_defect,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub error: f64,
    pub max_iterations: usize,
    pub max_norm_defect: f64,
}

/// Max over cells and components of `|numeric - exact|`.
pub fn linf_error(numeric: &VectorField, exact: &VectorField) -> Result<f64> {
    numeric.ensure_same_grid(exact)?;
    Ok(numeric
        .as_flat()
        .iter()
        .zip(exact.as_flat())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Least-squares slope of `log(error)` against `log(step)`.
pub fn convergence_order(errors: &[f64], steps: &[f64]) -> Result<f64> {
    if errors.len() != steps.len() {
        return Err(Error::InvalidParameter("errors and steps differ in length".into()));
    }
    if errors.len() < 2 {
        return Err(Error::InvalidParameter("a convergence order needs at least two resolutions".into()));
    }
    if errors.iter().chain(steps).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("errors and steps must be positive".into()));
    }
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("steps must not all coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Temporal,
    Spatial,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::Temporal => "time",
            SweepKind::Spatial => "space",
        }
    }
}

/// One refinement study at fixed `(alpha, eta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub label: String,
    pub kind: SweepKind,
    /// Cell counts (spatial) or step counts (temporal).
    pub resolutions: Vec<usize>,
    pub errors: Vec<f64>,
    pub order: f64,
}

/// Temporal refinement at `n_cells` per axis: one run per entry in `n_steps`.
pub fn temporal_sweep(case: &ManufacturedCase, n_cells: usize, n_steps: &[usize], krylov: KrylovConfig) -> Result<ConvergenceTable> {
    let mut errors = Vec::with_capacity(n_steps.len());
    for &nt in n_steps {
        errors.push(case.run(n_cells, nt, krylov)?.error);
    }
    let steps: Vec<f64> = n_steps.iter().map(|&nt| case.final_time / nt as f64).collect();
    Ok(ConvergenceTable {
        label: format!("alpha={} eta={}", case.alpha, case.eta),
        kind: SweepKind::Temporal,
        resolutions: n_steps.to_vec(),
        order: convergence_order(&errors, &steps)?,
        errors,
    })
}

/// Spatial refinement at fixed `dt`: one run per entry in `n_cells`.
pub fn spatial_sweep(case: &ManufacturedCase, n_cells: &[usize], dt: f64, krylov: KrylovConfig) -> Result<ConvergenceTable> {
    let nt = (case.final_time / dt).round() as usize;
    let mut errors = Vec::with_capacity(n_cells.len());
    for &n in n_cells {
        errors.push(case.run(n, nt, krylov)?.error);
    }
    let steps: Vec<f64> = n_cells.iter().map(|&n| case.box_len / n as f64).collect();
    Ok(ConvergenceTable {
        label: format!("alpha={} eta={}", case.alpha, case.eta),
        kind: SweepKind::Spatial,
        resolutions: n_cells.to_vec(),
        order: convergence_order(&errors, &steps)?,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn case(dims: Dimensionality, alpha: f64, eta: f64) -> ManufacturedCase {
        ManufacturedCase {
            dims,
            damping: DampingForm::Gyro,
            alpha,
            eta,
            final_time: 0.5,
            box_len: 1.0,
        }
    }

    #[test]
    fn exact_solution_examples() {
        for x in [0.0, 0.3, 0.9] {
            assert_eq!(exact_solution_1d(x, 0.0), [0.0, 0.0, 1.0]);
        }
        let t = 0.7_f64;
        assert_eq!(exact_solution_1d(0.0, t), [t.sin(), 0.0, t.cos()]);
        assert_eq!(exact_solution_3d(0.2, 0.4, 0.6, 0.0), [0.0, 0.0, 1.0]);
        let m = exact_solution_3d(0.5, 0.5, 0.5, 1.2);
        assert!((m[0] - 1.2_f64.sin()).abs() < 3e-8);
        let (phi, _, _) = phase(Dimensionality::Three, [0.5, 0.5, 0.5]);
        assert!((phi - (1.0f64 / 16.0).powi(3)).abs() < 1e-18);
    }

    #[test]
    fn exact_solutions_are_unit() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let (x, y, z, t) = (rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>(), rng.random_range(0.0..2.0));
            assert!((vec3::norm(exact_solution_1d(x, t)) - 1.0).abs() < 1e-12);
            assert!((vec3::norm(exact_solution_3d(x, y, z, t)) - 1.0).abs() < 1e-12);
        }
    }

    fn central<F: Fn(f64) -> Vec3>(f: F, x: f64, h: f64) -> (Vec3, Vec3) {
        let (p, c, m) = (f(x + h), f(x), f(x - h));
        let d1 = vec3::scale(0.5 / h, vec3::sub(p, m));
        let d2 = vec3::scale(1.0 / (h * h), vec3::add(vec3::sub(p, vec3::scale(2.0, c)), m));
        (d1, d2)
    }

    fn max_diff(a: Vec3, b: Vec3) -> f64 {
        vec3::norm(vec3::sub(a, b))
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let p = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            let t = rng.random_range(0.0..1.0);
            for dims in [Dimensionality::One, Dimensionality::Three] {
                let e = exact_sample(dims, p, t);
                let (dt, _) = central(|s| exact_sample(dims, p, s).m, t, 1e-5);
                let (_, dtt) = central(|s| exact_sample(dims, p, s).m, t, 1e-4);
                assert!(max_diff(dt, e.dt) < 1e-6);
                assert!(max_diff(dtt, e.dtt) < 1e-6);
                let mut lap = [0.0; 3];
                let axes = if dims == Dimensionality::One { 1 } else { 3 };
                for a in 0..axes {
                    let (_, d2) = central(
                        |s| {
                            let mut q = p;
                            q[a] = s;
                            exact_sample(dims, q, t).m
                        },
                        p[a],
                        1e-4,
                    );
                    lap = vec3::add(lap, d2);
                }
                assert!(max_diff(lap, e.lap) < 1e-6, "{dims:?} {lap:?} {:?}", e.lap);
            }
        }
    }

    #[test]
    fn source_at_midpoint_has_exchange_torque() {
        // phi'(1/2) = 0 but phi''(1/2) = -1, so m x d2m/dx2 survives.
        let c = case(Dimensionality::One, 0.0, 0.0);
        let t = 0.8;
        let e = c.derivatives([0.5, 0.0, 0.0], t);
        let g = c.source([0.5, 0.0, 0.0], t);
        let torque = vec3::sub(g, e.dt);
        assert!(vec3::norm(torque) > 1e-3);
        let (_, d2) = central(|s| c.exact([s, 0.0, 0.0], t), 0.5, 1e-4);
        assert!(max_diff(torque, vec3::cross(e.m, d2)) < 1e-6);
    }

    #[test]
    fn source_at_initial_time() {
        let c = ManufacturedCase {
            damping: DampingForm::Linear,
            ..case(Dimensionality::One, 0.1, 2.0)
        };
        let x = 0.3;
        let (phi, _, _) = phase(Dimensionality::One, [x, 0.0, 0.0]);
        let dt = [phi.cos(), phi.sin(), 0.0];
        // m = e3 and Lap m = 0 at t = 0, so g = dt - alpha (dt + eta (0, 0, -1)).
        let want = [0.9 * dt[0], 0.9 * dt[1], 0.1 * 2.0];
        let got = c.source([x, 0.0, 0.0], 0.0);
        assert!(max_diff(got, want) < 1e-15);
    }

    #[test]
    fn manufactured_source_satisfies_equation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let dims = if rng.random::<bool>() { Dimensionality::One } else { Dimensionality::Three };
            let c = ManufacturedCase {
                damping: DampingForm::Linear,
                ..case(dims, 0.01, 1000.0)
            };
            let p = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            let t = rng.random_range(0.1..1.0);
            // Derivatives by finite differences, independent of the closed forms.
            let (dt, _) = central(|s| c.exact(p, s), t, 1e-5);
            let (_, dtt) = central(|s| c.exact(p, s), t, 1e-4);
            let axes = if dims == Dimensionality::One { 1 } else { 3 };
            let mut lap = [0.0; 3];
            for a in 0..axes {
                let (_, d2) = central(
                    |s| {
                        let mut q = p;
                        q[a] = s;
                        c.exact(q, t)
                    },
                    p[a],
                    1e-4,
                );
                lap = vec3::add(lap, d2);
            }
            let m = c.exact(p, t);
            let rhs = vec3::add(
                vec3::axpy(vec3::scale(-1.0, vec3::cross(m, lap)), c.alpha, vec3::axpy(dt, c.eta, dtt)),
                c.source(p, t),
            );
            assert!(max_diff(dt, rhs) < 1e-4, "{}", max_diff(dt, rhs));
        }
    }

    #[test]
    fn linf_error_examples() {
        let g = Grid::line(3, 1.0).unwrap();
        let a = VectorField::uniform(g, [0.0, 0.0, 1.0]);
        assert_eq!(linf_error(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b.values_mut()[1][0] += 1e-5;
        assert!((linf_error(&b, &a).unwrap() - 1e-5).abs() < 1e-20);
        assert!(linf_error(&a, &VectorField::zeros(Grid::line(4, 1.0).unwrap())).is_err());
    }

    #[test]
    fn order_examples() {
        let steps = [0.1, 0.05, 0.025, 0.0125];
        let errors: Vec<f64> = steps.iter().map(|h| 3.0 * h * h).collect();
        assert!((convergence_order(&errors, &steps).unwrap() - 2.0).abs() < 1e-12);

        let nt = [20.0, 40.0, 80.0, 160.0];
        let h: Vec<f64> = nt.iter().map(|n| 0.5 / n).collect();
        let temporal = convergence_order(&[4.56e-05, 1.15e-05, 2.96e-06, 8.23e-07], &h).unwrap();
        assert!((temporal - 1.93).abs() < 0.005, "{temporal}");
        let hx: Vec<f64> = nt.iter().map(|n| 1.0 / n).collect();
        let spatial = convergence_order(&[2.74e-4, 6.98e-05, 1.88e-05, 6.07e-06], &hx).unwrap();
        assert!((spatial - 1.84).abs() < 0.005, "{spatial}");

        assert!(convergence_order(&[1e-3], &[0.1]).is_err());
        assert!(convergence_order(&[1e-3, 0.0], &[0.1, 0.05]).is_err());
        assert!(convergence_order(&[1e-3, 1e-4], &[0.1, -0.05]).is_err());
    }

    #[test]
    fn coarse_1d_run_is_second_order_in_space() {
        let c = case(Dimensionality::One, 0.01, 100.0);
        let table = spatial_sweep(&c, &[10, 20, 40], 5e-3, KrylovConfig::default()).unwrap();
        assert!(table.order > 1.7 && table.order < 2.2, "{table:?}");
    }

    #[test]
    fn coarse_1d_run_is_second_order_in_time() {
        let c = case(Dimensionality::One, 0.01, 1000.0);
        let table = temporal_sweep(&c, 1000, &[10, 20, 40], KrylovConfig::default()).unwrap();
        assert!(table.order > 1.8 && table.order < 2.1, "{table:?}");
    }

    #[test]
    fn gyro_source_satisfies_gyro_equation() {
        let c = case(Dimensionality::Three, 0.05, 10.0);
        let e = c.derivatives([0.3, 0.6, 0.2], 0.4);
        let damping = vec3::cross(e.m, vec3::axpy(e.dt, c.eta, e.dtt));
        let rhs = vec3::add(vec3::axpy(vec3::scale(-1.0, vec3::cross(e.m, e.lap)), c.alpha, damping), c.source([0.3, 0.6, 0.2], 0.4));
        assert!(max_diff(e.dt, rhs) < 1e-14);
    }

    #[test]
    fn linear_damping_with_inertia_diverges_under_refinement() {
        let gyro = case(Dimensionality::One, 0.01, 100.0);
        let linear = ManufacturedCase {
            damping: DampingForm::Linear,
            ..gyro
        };
        let ok = gyro.run(80, 100, KrylovConfig::default()).unwrap();
        let bad = linear.run(80, 100, KrylovConfig::default()).unwrap();
        assert!(ok.error < 1e-5, "{ok:?}");
        assert!(bad.error > 1e3 * ok.error, "{bad:?}");
        // Without inertia both forms are well posed.
        let lin0 = ManufacturedCase { eta: 0.0, ..linear };
        assert!(lin0.run(40, 100, KrylovConfig::default()).unwrap().error < 1e-4);
    }
}
