//! Material parameters, nondimensionalization, the local part of the
//! effective field, and time-dependent applied fields.
//!
//! Everything past [`nondimensionalize`] works in reduced units: lengths in
//! units of the sample size `L`, fields in units of `Ms`, and time in units
//! of `1 / (mu0 * gamma * Ms)`.

use serde::{Deserialize, Serialize};

use crate::demag::DemagKernel;
use crate::error::{Error, Result};
use crate::grid::{self, VectorField};
use crate::vec3::{self, Vec3};

/// Electron gyromagnetic ratio, 1/(s T).
pub const GAMMA_ELECTRON: f64 = 1.76086e11;
/// Vacuum permeability, T m / A.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

/// SI material parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Saturation magnetization, A/m.
    pub ms: f64,
    /// Exchange stiffness, J/m.
    pub a_ex: f64,
    /// Uniaxial anisotropy constant, J/m^3.
    pub ku: f64,
    /// Gilbert damping.
    pub alpha: f64,
    /// Inertial relaxation time, s.
    pub tau: f64,
    /// Gyromagnetic ratio, 1/(s T).
    pub gamma: f64,
    /// Vacuum permeability, T m / A.
    pub mu0: f64,
}

impl MaterialParams {
    /// Permalloy-like parameters used throughout the experiments.
    pub fn permalloy(alpha: f64, tau: f64) -> Self {
        MaterialParams {
            ms: 8.0e5,
            a_ex: 1.3e-11,
            ku: 5.0e2,
            alpha,
            tau,
            gamma: GAMMA_ELECTRON,
            mu0: MU0,
        }
    }

    /// Returns every violated invariant.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                out.push(msg.to_string());
            }
        };
        need(self.ms > 0.0 && self.ms.is_finite(), "material.ms must be > 0");
        need(self.a_ex >= 0.0 && self.a_ex.is_finite(), "material.a_ex must be >= 0");
        need(self.ku >= 0.0 && self.ku.is_finite(), "material.ku must be >= 0");
        need(self.alpha >= 0.0 && self.alpha.is_finite(), "material.alpha must be >= 0");
        need(self.tau >= 0.0 && self.tau.is_finite(), "material.tau must be >= 0");
        need(self.gamma > 0.0 && self.gamma.is_finite(), "material.gamma must be > 0");
        need(self.mu0 > 0.0 && self.mu0.is_finite(), "material.mu0 must be > 0");
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }

    /// Energy density scale `mu0 Ms^2`, J/m^3.
    pub fn energy_density_scale(&self) -> f64 {
        self.mu0 * self.ms * self.ms
    }

    /// Seconds per reduced time unit.
    pub fn time_unit(&self) -> f64 {
        1.0 / (self.mu0 * self.gamma * self.ms)
    }

    /// Converts a flux density `mu0 H` in tesla to a reduced field.
    pub fn tesla_to_reduced(&self, b: f64) -> f64 {
        b / (self.mu0 * self.ms)
    }

    pub fn reduced_to_tesla(&self, h: f64) -> f64 {
        h * self.mu0 * self.ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams {
    pub epsilon: f64,
    pub q: f64,
    pub eta: f64,
    pub alpha: f64,
    /// Seconds per reduced time unit.
    pub t_unit: f64,
}

/// Reduces SI parameters with sample size `length` (m) and a physical time
/// step `dt_phys` (s). Returns the reduced parameters and reduced step.
pub fn nondimensionalize(
    params: &MaterialParams,
    length: f64,
    dt_phys: f64,
) -> Result<(DimensionlessParams, f64)> {
    params.validate()?;
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "length scale must be positive, got {length}"
        )));
    }
    let rate = params.mu0 * params.gamma * params.ms;
    let density = params.energy_density_scale();
    let reduced = DimensionlessParams {
        epsilon: params.a_ex / (density * length * length),
        q: params.ku / density,
        eta: params.tau * rate,
        alpha: params.alpha,
        t_unit: 1.0 / rate,
    };
    Ok((reduced, dt_phys * rate))
}

/// Uniaxial easy axis. The anisotropy field is `-q` times the components of
/// `m` transverse to this axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EasyAxis {
    #[default]
    X,
    Y,
    Z,
}

impl EasyAxis {
    pub fn index(self) -> usize {
        match self {
            EasyAxis::X => 0,
            EasyAxis::Y => 1,
            EasyAxis::Z => 2,
        }
    }

    /// `v` with its easy-axis component removed.
    #[inline]
    pub fn transverse(self, v: Vec3) -> Vec3 {
        let mut t = v;
        t[self.index()] = 0.0;
        t
    }
}

/// Applied field: a constant part plus a windowed sinusoidal pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppliedFieldSpec {
    /// Reduced units of `Ms`.
    pub constant: Vec3,
    /// Reduced amplitude.
    pub pulse_amplitude: f64,
    /// Hz.
    pub pulse_frequency: f64,
    pub pulse_direction: Vec3,
    /// `[start, end)` in seconds.
    pub pulse_window: [f64; 2],
    /// In-plane canting angle in degrees, informational for sweeps.
    pub canting_deg: Option<f64>,
}

impl Default for AppliedFieldSpec {
    fn default() -> Self {
        AppliedFieldSpec {
            constant: vec3::ZERO,
            pulse_amplitude: 0.0,
            pulse_frequency: 0.0,
            pulse_direction: vec3::E2,
            pulse_window: [0.0, 0.0],
            canting_deg: None,
        }
    }
}

impl AppliedFieldSpec {
    pub fn constant(h: Vec3) -> Self {
        AppliedFieldSpec {
            constant: h,
            ..Default::default()
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let [t0, t1] = self.pulse_window;
        if !(t0 <= t1) {
            out.push(format!("pulse window [{t0}, {t1}] is not ordered"));
        }
        if self.pulse_amplitude != 0.0 && (vec3::norm(self.pulse_direction) - 1.0).abs() > 1e-12 {
            out.push("pulse direction must be a unit vector".to_string());
        }
        if !(self.pulse_frequency >= 0.0) {
            out.push("pulse frequency must be >= 0".to_string());
        }
        out
    }

    /// True when the field does not depend on time.
    pub fn is_static(&self) -> bool {
        self.pulse_amplitude == 0.0 || self.pulse_window[0] >= self.pulse_window[1]
    }
}

/// Applied field at physical time `t` (s). The pulse indicator is closed on
/// the left and open on the right.
pub fn applied_field_at(t: f64, spec: &AppliedFieldSpec) -> Vec3 {
    let [t0, t1] = spec.pulse_window;
    if spec.pulse_amplitude != 0.0 && t >= t0 && t < t1 {
        let s = spec.pulse_amplitude * (2.0 * std::f64::consts::PI * spec.pulse_frequency * t).sin();
        vec3::axpy(spec.constant, s, spec.pulse_direction)
    } else {
        spec.constant
    }
}

/// `f(m) = -q * transverse(m) + h_applied + h_stray`, per cell.
pub fn local_field(
    m: &VectorField,
    h_applied: Vec3,
    h_stray: Option<&VectorField>,
    q: f64,
    axis: EasyAxis,
) -> Result<VectorField> {
    if let Some(hs) = h_stray {
        m.ensure_same_grid(hs)?;
    }
    let mut out = VectorField::zeros(*m.grid());
    for (idx, (o, v)) in out.values_mut().iter_mut().zip(m.values()).enumerate() {
        let mut f = vec3::axpy(h_applied, -q, axis.transverse(*v));
        if let Some(hs) = h_stray {
            f = vec3::add(f, hs.values()[idx]);
        }
        *o = f;
    }
    Ok(out)
}

/// `h = epsilon * Laplacian(m) + local`.
pub fn effective_field(m: &VectorField, epsilon: f64, local: &VectorField) -> Result<VectorField> {
    m.ensure_same_grid(local)?;
    let lap = grid::apply_laplacian(m.grid(), m)?;
    lap.lincomb(epsilon, local, 1.0)
}

/// Everything needed to evaluate `f(m)` at a given time: anisotropy, the
/// applied field, and (optionally) the stray-field kernel.
#[derive(Debug)]
pub struct FieldModel {
    pub q: f64,
    pub axis: EasyAxis,
    pub applied: AppliedFieldSpec,
    /// Seconds per reduced time unit, used to sample the applied field.
    pub t_unit: f64,
    pub demag: Option<DemagKernel>,
}

impl FieldModel {
    /// Applied field at reduced time `t`.
    pub fn applied_at(&self, t: f64) -> Vec3 {
        applied_field_at(t * self.t_unit, &self.applied)
    }

    pub fn stray(&self, m: &VectorField) -> Result<Option<VectorField>> {
        self.demag.as_ref().map(|k| k.stray_field(m)).transpose()
    }

    /// `f(m)` at reduced time `t`.
    pub fn local_field_at(&self, m: &VectorField, t: f64) -> Result<VectorField> {
        let hs = self.stray(m)?;
        local_field(m, self.applied_at(t), hs.as_ref(), self.q, self.axis)
    }
}
