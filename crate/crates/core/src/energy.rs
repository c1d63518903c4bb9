//! Discrete Landau-Lifshitz energy and the inertia-augmented total energy.
//!
//! All values are dimensionless (energy density `mu0 Ms^2`, length `L`)
//! unless suffixed `_joules`.

use crate::error::{Error, Result};
use crate::grid::VectorField;
use crate::physics::EasyAxis;
use crate::vec3::{self, Vec3};

#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    pub exchange: f64,
    pub anisotropy: f64,
    pub zeeman: f64,
    pub stray: f64,
    pub kinetic: f64,
    /// LL energy: exchange + anisotropy + zeeman + stray.
    pub F: f64,
    /// Total energy: `F + kinetic`.
    pub J: f64,
    pub F_joules: f64,
    pub J_joules: f64,
    /// Joules per dimensionless energy unit, `mu0 Ms^2 L^3`.
    pub joule_scale: f64,
}

/// Material coefficients entering the LL energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub epsilon: f64,
    pub q: f64,
    pub axis: EasyAxis,
    /// Energy density scale `mu0 Ms^2` in J/m^3.
    pub density_scale: f64,
}

/// Exchange energy `eps/2 sum_faces |m_j - m_i|^2 / h^2 * vol`. Mirror faces
/// carry no difference, so this equals `-eps/2 sum m . Lap m * vol`.
fn exchange_energy(m: &VectorField, epsilon: f64) -> f64 {
    let g = *m.grid();
    let v = m.values();
    let mut acc = 0.0;
    let axes = [(g.nx, 1, g.dx), (g.ny, g.nx, g.dy), (g.nz, g.nx * g.ny, g.dz)];
    for (idx, mi) in v.iter().enumerate() {
        let (i, j, k) = g.coords(idx);
        for (axis, (n, stride, h)) in axes.into_iter().enumerate() {
            let pos = [i, j, k][axis];
            if pos + 1 < n {
                let d = vec3::sub(v[idx + stride], *mi);
                acc += vec3::dot(d, d) / (h * h);
            }
        }
    }
    0.5 * epsilon * acc * g.cell_volume()
}

/// LL energy of `m` in the uniform applied field `h_applied` and the optional
/// stray field `h_stray` (the field induced by `m` itself).
pub fn ll_energy(
    m: &VectorField,
    model: &EnergyModel,
    h_applied: Vec3,
    h_stray: Option<&VectorField>,
) -> Result<EnergyReport> {
    if let Some(hs) = h_stray {
        m.ensure_same_grid(hs)?;
    }
    let g = *m.grid();
    let vol = g.cell_volume();
    let exchange = exchange_energy(m, model.epsilon);
    let mut anis = 0.0;
    let mut zee = 0.0;
    for v in m.values() {
        let t = model.axis.transverse(*v);
        anis += vec3::dot(t, t);
        zee += vec3::dot(h_applied, *v);
    }
    let stray = match h_stray {
        Some(hs) => -0.5 * m.dot(hs)? * vol,
        None => 0.0,
    };
    let anisotropy = 0.5 * model.q * anis * vol;
    let zeeman = -zee * vol;
    let f = exchange + anisotropy + zeeman + stray;
    let scale = model.density_scale * g.length_scale.powi(3);
    Ok(EnergyReport {
        exchange,
        anisotropy,
        zeeman,
        stray,
        kinetic: 0.0,
        F: f,
        J: f,
        F_joules: f * scale,
        J_joules: f * scale,
        joule_scale: scale,
    })
}

/// `(alpha eta / 2) sum |(m_curr - m_prev)/dt|^2 vol`.
fn kinetic_energy(m_curr: &VectorField, m_prev: &VectorField, dt: f64, alpha: f64, eta: f64) -> Result<f64> {
    m_curr.ensure_same_grid(m_prev)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let s: f64 = m_curr
        .values()
        .iter()
        .zip(m_prev.values())
        .map(|(a, b)| {
            let d = vec3::sub(*a, *b);
            vec3::dot(d, d)
        })
        .sum();
    Ok(0.5 * alpha * eta * s / (dt * dt) * m_curr.grid().cell_volume())
}

/// Completes `report` (from [`ll_energy`]) with the kinetic term built from
/// the backward difference `(m_curr - m_prev) / dt`.
pub fn total_energy(
    report: &EnergyReport,
    m_curr: &VectorField,
    m_prev: &VectorField,
    dt: f64,
    alpha: f64,
    eta: f64,
) -> Result<EnergyReport> {
    let kinetic = kinetic_energy(m_curr, m_prev, dt, alpha, eta)?;
    let j = report.F + kinetic;
    Ok(EnergyReport {
        kinetic,
        J: j,
        J_joules: j * report.joule_scale,
        ..*report
    })
}

/// Residual of the continuum energy law `dJ/dt = -alpha int |dm/dt|^2` at
/// the middle of three consecutive levels, for constant applied field.
///
/// `f` holds the LL energies of the three levels. The kinetic part of `dJ/dt`
/// is differenced between the two half-steps, everything else is centered.
pub fn energy_law_residual(f: &[f64], states: &[&VectorField], dt: f64, alpha: f64, eta: f64) -> Result<f64> {
    if f.len() < 3 || states.len() < 3 || f.len() != states.len() {
        return Err(Error::InvalidParameter(
            "energy law residual needs three consecutive levels with matching energies".into(),
        ));
    }
    let n = states.len() / 2;
    let (prev, mid, next) = (states[n - 1], states[n], states[n + 1]);
    prev.ensure_same_grid(mid)?;
    mid.ensure_same_grid(next)?;
    let k_hi = kinetic_energy(next, mid, dt, alpha, eta)?;
    let k_lo = kinetic_energy(mid, prev, dt, alpha, eta)?;
    let dj = (f[n + 1] - f[n - 1]) / (2.0 * dt) + (k_hi - k_lo) / dt;
    let rate: f64 = next
        .values()
        .iter()
        .zip(prev.values())
        .map(|(a, b)| {
            let d = vec3::scale(0.5 / dt, vec3::sub(*a, *b));
            vec3::dot(d, d)
        })
        .sum();
    Ok(dj + alpha * rate * mid.grid().cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{apply_laplacian, Grid};
    use crate::krylov::KrylovConfig;
    use crate::physics::FieldModel;
    use crate::stepper::{self, Mode, SolverBackend, StepperConfig};
    use crate::vec3::{E1, E2, E3};
    use proptest::prelude::*;

    fn model(epsilon: f64, q: f64) -> EnergyModel {
        EnergyModel {
            epsilon,
            q,
            axis: EasyAxis::X,
            density_scale: 1.0,
        }
    }

    fn unit_field(grid: Grid, seed: u64) -> VectorField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..grid.len())
            .map(|_| {
                let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                vec3::scale(1.0 / vec3::norm(v), v)
            })
            .collect();
        VectorField::from_vec(grid, data).unwrap()
    }

    #[test]
    fn uniform_easy_axis_state_has_zero_energy() {
        let g = Grid::new(4, 3, 2, 0.1, 0.1, 0.1).unwrap();
        let r = ll_energy(&VectorField::uniform(g, E1), &model(1.0, 0.5), [0.0; 3], None).unwrap();
        assert_eq!(r.F, 0.0);
        assert_eq!(r.J, 0.0);
    }

    #[test]
    fn single_cube_stray_energy() {
        let g = Grid::line(1, 1.0).unwrap();
        let m = VectorField::uniform(g, E1);
        let hs = VectorField::uniform(g, [-1.0 / 3.0, 0.0, 0.0]);
        let r = ll_energy(&m, &model(1.0, 0.0), [0.0; 3], Some(&hs)).unwrap();
        assert!((r.stray - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn zeeman_and_anisotropy_terms() {
        let g = Grid::new(2, 1, 1, 0.5, 0.2, 0.1).unwrap();
        let vol = 0.5 * 0.2 * 0.1;
        let m = VectorField::uniform(g, E2);
        let r = ll_energy(&m, &model(0.0, 0.4), [0.3, 0.7, 0.0], None).unwrap();
        assert!((r.anisotropy - 0.5 * 0.4 * 2.0 * vol).abs() < 1e-16);
        assert!((r.zeeman + 0.7 * 2.0 * vol).abs() < 1e-16);
        let r2 = ll_energy(&m, &model(0.0, 0.4), [0.6, 1.4, 0.0], None).unwrap();
        assert!((r2.zeeman - 2.0 * r.zeeman).abs() < 1e-16);
    }

    #[test]
    fn joule_conversion() {
        let g = Grid::new(1, 1, 1, 2.0, 1.0, 1.0).unwrap().with_length_scale(1e-7).unwrap();
        let m = VectorField::uniform(g, E3);
        let em = EnergyModel {
            density_scale: 8.0e5,
            ..model(0.0, 1.0)
        };
        let r = ll_energy(&m, &em, [0.0; 3], None).unwrap();
        assert!((r.F - 1.0).abs() < 1e-15);
        assert!((r.F_joules - 8.0e5 * 1e-21).abs() < 1e-30);
    }

    #[test]
    fn exchange_matches_summation_by_parts() {
        for g in [
            Grid::line(17, 0.1).unwrap(),
            Grid::new(5, 4, 3, 0.2, 0.3, 0.1).unwrap(),
            Grid::new(1, 6, 1, 1.0, 0.05, 1.0).unwrap(),
        ] {
            let m = unit_field(g, 3);
            let lap = apply_laplacian(&g, &m).unwrap();
            let want = -0.5 * 0.7 * m.dot(&lap).unwrap() * g.cell_volume();
            let got = exchange_energy(&m, 0.7);
            assert!((got - want).abs() < 1e-12 * want.abs(), "{got} {want}");
            assert!(got > 0.0);
        }
    }

    #[test]
    fn kinetic_examples() {
        let g = Grid::line(1, 1.0).unwrap();
        let a = VectorField::uniform(g, E1);
        let b = VectorField::uniform(g, [-1.0, 0.0, 0.0]);
        let base = ll_energy(&a, &model(1.0, 0.0), [0.0; 3], None).unwrap();
        // |dm/dt| = 2, alpha eta / 2 = 0.5
        let r = total_energy(&base, &b, &a, 1.0, 0.5, 2.0).unwrap();
        assert!((r.kinetic - 2.0).abs() < 1e-15);
        assert_eq!(r.J, r.F + 2.0);
        assert_eq!(total_energy(&base, &a, &a, 1.0, 0.5, 2.0).unwrap().J, base.F);
        assert_eq!(total_energy(&base, &b, &a, 1.0, 0.0, 2.0).unwrap().J, base.F);
        assert_eq!(total_energy(&base, &b, &a, 1.0, 0.5, 0.0).unwrap().J, base.F);
    }

    #[test]
    fn stationary_state_has_zero_law_residual() {
        let g = Grid::line(4, 0.1).unwrap();
        let m = unit_field(g, 9);
        let f = ll_energy(&m, &model(1.0, 0.1), [0.0; 3], None).unwrap().F;
        let r = energy_law_residual(&[f, f, f], &[&m, &m, &m], 0.1, 0.1, 1.0).unwrap();
        assert_eq!(r, 0.0);
        assert!(energy_law_residual(&[f, f], &[&m, &m], 0.1, 0.1, 1.0).is_err());
    }

    /// Full-scheme run on a line; returns the law residual at reduced time 0.2.
    fn law_residual_at(dt: f64) -> f64 {
        let g = Grid::line(32, 1.0 / 32.0).unwrap();
        let m0 = VectorField::from_fn(g, |p| {
            let a = 0.8 * (std::f64::consts::PI * p[0]).cos();
            [a.cos(), a.sin(), 0.3].map(|v| v / 1.09f64.sqrt())
        });
        let (alpha, eta, epsilon, q) = (0.2, 0.05, 0.02, 0.5);
        let cfg = StepperConfig {
            epsilon,
            alpha,
            eta,
            dt,
            krylov: KrylovConfig::default(),
            mode: Mode::FullIllg,
            backend: SolverBackend::Gmres,
            guess: Default::default(),
        };
        let fm = FieldModel {
            q,
            axis: EasyAxis::X,
            applied: Default::default(),
            t_unit: 1.0,
            demag: None,
        };
        let mut s = stepper::initialize(m0, dt).unwrap();
        let target = (0.2 / dt).round() as usize;
        let mut levels = Vec::new();
        while s.step <= target + 1 {
            if s.step + 1 >= target {
                levels.push(s.m_curr.clone());
            }
            stepper::step(&mut s, &fm, &cfg).unwrap();
        }
        let em = model(epsilon, q);
        let f: Vec<f64> = levels.iter().map(|m| ll_energy(m, &em, [0.0; 3], None).unwrap().F).collect();
        let refs: Vec<&VectorField> = levels.iter().collect();
        energy_law_residual(&f, &refs, dt, alpha, eta).unwrap()
    }

    #[test]
    fn law_residual_is_second_order_in_dt() {
        let dts = [4e-3, 2e-3, 1e-3];
        let res: Vec<f64> = dts.iter().map(|&dt| law_residual_at(dt).abs()).collect();
        let order = crate::verify::convergence_order(&res, &dts).unwrap();
        assert!(order > 1.7 && order < 2.3, "{res:?} {order}");
    }

    proptest! {
        #[test]
        fn total_energy_bounds_ll_energy(seed in 0u64..500, dt in 1e-3f64..1.0, alpha in 0.0f64..1.0, eta in 0.0f64..10.0) {
            let g = Grid::new(3, 2, 2, 0.3, 0.2, 0.1).unwrap();
            let a = unit_field(g, seed);
            let b = unit_field(g, seed + 1);
            let base = ll_energy(&a, &model(0.5, 0.2), [0.1, 0.0, 0.2], None).unwrap();
            let r = total_energy(&base, &a, &b, dt, alpha, eta).unwrap();
            prop_assert!(r.kinetic >= 0.0);
            prop_assert!(r.J >= r.F);
            let sum = r.exchange + r.anisotropy + r.zeeman + r.stray;
            prop_assert!((r.F - sum).abs() <= 1e-14 * sum.abs().max(1.0));
        }

        #[test]
        fn exchange_vanishes_only_for_uniform(seed in 0u64..500) {
            let g = Grid::new(3, 3, 1, 0.2, 0.2, 0.2).unwrap();
            let m = unit_field(g, seed);
            prop_assert!(exchange_energy(&m, 1.0) > 0.0);
            prop_assert_eq!(exchange_energy(&VectorField::uniform(g, m.values()[0]), 1.0), 0.0);
        }
    }
}
