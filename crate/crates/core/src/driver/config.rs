//! TOML configuration schema and validation.
//!
//! SI units throughout. A minimal relaxation run:
//!
//! ```toml
//! scenario = "relax"
//!
//! [material]
//! ms = 8.0e5
//! a_ex = 1.3e-11
//! ku = 5.0e2
//! alpha = 0.02
//! tau = 1.0e-12
//!
//! [geometry]
//! size = [200e-9, 100e-9, 5e-9]
//! cell = [4e-9, 4e-9, 5e-9]
//!
//! [time]
//! dt = 1.0e-14
//! duration = 1.0e-11
//! ```
//!
//! See the repository README for every key.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::krylov::KrylovConfig;
use crate::physics::{AppliedFieldSpec, EasyAxis, MaterialParams, GAMMA_ELECTRON, MU0};
use crate::stepper::{InitialGuess, SolverBackend};
use crate::vec3::{self, Vec3};
use crate::verify::DampingForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Relax,
    Pulse,
    Hysteresis,
    Verify,
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relax" => Ok(Scenario::Relax),
            "pulse" => Ok(Scenario::Pulse),
            "hysteresis" => Ok(Scenario::Hysteresis),
            "verify" => Ok(Scenario::Verify),
            other => Err(Error::Config(vec![format!(
                "unknown scenario '{other}' (expected relax, pulse, hysteresis or verify)"
            )])),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Uniform(Vec3),
    /// Independent random unit vectors drawn from the config seed.
    Random,
    Snapshot(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// Box edges, m.
    pub size: Vec3,
    /// Cell edges, m.
    pub cell: Vec3,
    pub counts: [usize; 3],
    /// Nondimensionalization length, m.
    pub length_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Steps between time-series rows.
    pub cadence: usize,
    /// Steps between snapshots; 0 writes only the initial and final states.
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopAxis {
    Long,
    Short,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisConfig {
    pub axis: LoopAxis,
    pub canting_deg: f64,
    /// Tesla (`mu0 H`).
    pub field_min: f64,
    pub field_max: f64,
    /// Field values per branch, endpoints included.
    pub n_field_steps: usize,
    pub steady_rel_tol: f64,
    pub max_steps_per_field: usize,
}

impl Default for HysteresisConfig {
    fn default() -> Self {
        HysteresisConfig {
            axis: LoopAxis::Long,
            canting_deg: 1.0,
            field_min: -0.05,
            field_max: 0.05,
            n_field_steps: 101,
            steady_rel_tol: 1e-7,
            max_steps_per_field: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyDims {
    #[serde(rename = "1d")]
    One,
    #[serde(rename = "3d")]
    Three,
}

/// One refinement study family: a box, a final time, and resolutions for the
/// temporal and spatial sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub box_len: f64,
    pub final_time: f64,
    /// Cells per axis held fixed during the temporal sweep.
    pub time_cells: usize,
    pub time_steps: Vec<usize>,
    /// Box and final time of the spatial sweep.
    pub space_box_len: f64,
    pub space_final_time: f64,
    pub space_dt: f64,
    pub space_cells: Vec<usize>,
}

impl SweepPlan {
    pub fn one_d() -> Self {
        SweepPlan {
            box_len: 1.0,
            final_time: 0.5,
            time_cells: 1000,
            time_steps: vec![20, 40, 80, 160],
            space_box_len: 1.0,
            space_final_time: 0.5,
            space_dt: 5e-3,
            space_cells: vec![20, 40, 80, 160],
        }
    }

    pub fn three_d() -> Self {
        SweepPlan {
            box_len: 0.01,
            final_time: 0.5,
            time_cells: 10,
            time_steps: vec![20, 40, 80, 160],
            space_box_len: 1.0,
            space_final_time: 0.1,
            space_dt: 1e-3,
            space_cells: vec![6, 8, 10, 12],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub dims: Vec<VerifyDims>,
    pub damping: DampingForm,
    /// `(alpha, eta)` pairs for the 1D sweeps.
    pub cases_1d: Vec<(f64, f64)>,
    pub cases_3d: Vec<(f64, f64)>,
    pub plan_1d: SweepPlan,
    pub plan_3d: SweepPlan,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            dims: vec![VerifyDims::One, VerifyDims::Three],
            damping: DampingForm::Gyro,
            cases_1d: vec![(0.0, 0.0), (0.01, 0.0), (0.01, 100.0), (0.01, 1000.0)],
            cases_3d: vec![(0.01, 1000.0)],
            plan_1d: SweepPlan::one_d(),
            plan_3d: SweepPlan::three_d(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub material: MaterialParams,
    pub easy_axis: EasyAxis,
    pub geometry: Geometry,
    /// Applied field in reduced units.
    pub applied: AppliedFieldSpec,
    /// Physical time step, s.
    pub dt_phys: f64,
    /// Physical run length, s.
    pub duration: f64,
    pub stray_field_enabled: bool,
    pub initial: InitialState,
    pub output: OutputConfig,
    pub krylov: KrylovConfig,
    pub backend: SolverBackend,
    pub guess: InitialGuess,
    /// Relaxation stops once the relative LL-energy change between checks
    /// drops below this value.
    pub steady_rel_tol: Option<f64>,
    /// Steps between steady-state checks.
    pub steady_check_interval: usize,
    pub hysteresis: HysteresisConfig,
    pub verify: VerifyConfig,
}

impl SimulationConfig {
    /// Number of steps covering `duration`.
    pub fn total_steps(&self) -> usize {
        (self.duration / self.dt_phys).round() as usize
    }

    /// Long and short in-plane axes as `(index, unit vector)` pairs.
    pub fn in_plane_axes(&self) -> ((usize, Vec3), (usize, Vec3)) {
        let [sx, sy, _] = self.geometry.size;
        if sx >= sy {
            ((0, vec3::E1), (1, vec3::E2))
        } else {
            ((1, vec3::E2), (0, vec3::E1))
        }
    }
}

// ---- raw schema ----

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<Scenario>,
    seed: Option<u64>,
    stray_field: Option<bool>,
    material: Option<RawMaterial>,
    geometry: Option<RawGeometry>,
    time: Option<RawTime>,
    applied: Option<RawApplied>,
    initial: Option<RawInitial>,
    output: Option<RawOutput>,
    solver: Option<RawSolver>,
    hysteresis: Option<RawHysteresis>,
    verify: Option<RawVerify>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    ms: Option<f64>,
    a_ex: Option<f64>,
    ku: Option<f64>,
    alpha: Option<f64>,
    tau: Option<f64>,
    gamma: Option<f64>,
    mu0: Option<f64>,
    easy_axis: Option<EasyAxis>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    size: Option<[f64; 3]>,
    cell: Option<[f64; 3]>,
    length_scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: Option<f64>,
    duration: Option<f64>,
    steady_rel_tol: Option<f64>,
    steady_check_interval: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawApplied {
    constant_t: Option<[f64; 3]>,
    pulse_amplitude_t: Option<f64>,
    /// Amplitude in units of `mu0 Ms`.
    pulse_amplitude_ms: Option<f64>,
    pulse_frequency: Option<f64>,
    pulse_direction: Option<[f64; 3]>,
    pulse_start: Option<f64>,
    pulse_end: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    kind: Option<String>,
    direction: Option<[f64; 3]>,
    path: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    cadence: Option<usize>,
    snapshot_every: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tol: Option<f64>,
    restart: Option<usize>,
    max_iters: Option<usize>,
    backend: Option<String>,
    initial_guess: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHysteresis {
    axis: Option<LoopAxis>,
    canting_deg: Option<f64>,
    field_min_t: Option<f64>,
    field_max_t: Option<f64>,
    n_field_steps: Option<usize>,
    steady_rel_tol: Option<f64>,
    max_steps_per_field: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    box_len: Option<f64>,
    final_time: Option<f64>,
    time_cells: Option<usize>,
    time_steps: Option<Vec<usize>>,
    space_box_len: Option<f64>,
    space_final_time: Option<f64>,
    space_dt: Option<f64>,
    space_cells: Option<Vec<usize>>,
    cases: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    dims: Option<Vec<VerifyDims>>,
    damping: Option<String>,
    one_d: Option<RawSweep>,
    three_d: Option<RawSweep>,
}

/// Reads and validates a configuration file. Relative paths inside the file
/// (snapshot input, output directory) are resolved against its directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimulationConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.display().to_string(),
            message,
        },
        other => other,
    })
}

/// Parses configuration text; `base` anchors relative paths.
pub fn parse_config(text: &str, base: &Path) -> Result<SimulationConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
        path: "<config>".into(),
        message: e.to_string(),
    })?;
    validate(raw, base)
}

fn positive(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{name} must be positive, got {v}"));
    }
}

fn required<T>(errs: &mut Vec<String>, name: &str, v: Option<T>) -> Option<T> {
    if v.is_none() {
        errs.push(format!("missing required field '{name}'"));
    }
    v
}

fn unit(v: [f64; 3]) -> Option<Vec3> {
    let n = vec3::norm(v);
    (n > 0.0 && n.is_finite()).then(|| vec3::scale(1.0 / n, v))
}

fn validate(raw: RawConfig, base: &Path) -> Result<SimulationConfig> {
    let mut errs = Vec::new();
    let scenario = required(&mut errs, "scenario", raw.scenario).unwrap_or(Scenario::Relax);
    let needs_material = scenario != Scenario::Verify;

    // material
    let rm = raw.material;
    let mut material = MaterialParams::permalloy(0.0, 0.0);
    let mut easy_axis = EasyAxis::X;
    match (&rm, needs_material) {
        (None, true) => errs.push("missing required section [material]".into()),
        (Some(m), _) => {
            let fields = [
                ("material.ms", m.ms),
                ("material.a_ex", m.a_ex),
                ("material.ku", m.ku),
                ("material.alpha", m.alpha),
                ("material.tau", m.tau),
            ];
            for (name, v) in fields {
                if needs_material {
                    required(&mut errs, name, v);
                }
            }
            material = MaterialParams {
                ms: m.ms.unwrap_or(material.ms),
                a_ex: m.a_ex.unwrap_or(material.a_ex),
                ku: m.ku.unwrap_or(material.ku),
                alpha: m.alpha.unwrap_or(0.0),
                tau: m.tau.unwrap_or(0.0),
                gamma: m.gamma.unwrap_or(GAMMA_ELECTRON),
                mu0: m.mu0.unwrap_or(MU0),
            };
            errs.extend(material.violations().into_iter().map(|v| format!("material: {v}")));
            easy_axis = m.easy_axis.unwrap_or(EasyAxis::X);
        }
        (None, false) => {}
    }

    // geometry
    let mut geometry = Geometry {
        size: [1.0; 3],
        cell: [1.0; 3],
        counts: [1; 3],
        length_scale: 1.0,
    };
    match (&raw.geometry, needs_material) {
        (None, true) => errs.push("missing required section [geometry]".into()),
        (Some(g), _) => {
            let size = required(&mut errs, "geometry.size", g.size);
            let cell = required(&mut errs, "geometry.cell", g.cell);
            if let (Some(size), Some(cell)) = (size, cell) {
                let mut ok = true;
                for a in 0..3 {
                    positive(&mut errs, &format!("geometry.size[{a}]"), size[a]);
                    positive(&mut errs, &format!("geometry.cell[{a}]"), cell[a]);
                    ok &= size[a] > 0.0 && cell[a] > 0.0;
                }
                if ok {
                    for a in 0..3 {
                        let ratio = size[a] / cell[a];
                        let n = ratio.round();
                        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
                            errs.push(format!(
                                "geometry: cell[{a}] = {} does not divide size[{a}] = {}",
                                cell[a], size[a]
                            ));
                        } else {
                            geometry.counts[a] = n as usize;
                        }
                    }
                    geometry.size = size;
                    geometry.cell = cell;
                    geometry.length_scale = g.length_scale.unwrap_or(size.into_iter().fold(0.0, f64::max));
                    positive(&mut errs, "geometry.length_scale", geometry.length_scale);
                }
            }
        }
        (None, false) => {}
    }

    // time
    let mut dt_phys = 1.0;
    let mut duration = 1.0;
    let mut steady_rel_tol = None;
    let mut steady_check_interval = 100;
    match (&raw.time, needs_material) {
        (None, true) => errs.push("missing required section [time]".into()),
        (Some(t), _) => {
            if let Some(dt) = required(&mut errs, "time.dt", t.dt) {
                positive(&mut errs, "time.dt", dt);
                dt_phys = dt;
            }
            let dur = if scenario == Scenario::Hysteresis {
                t.duration.unwrap_or(dt_phys)
            } else {
                required(&mut errs, "time.duration", t.duration).unwrap_or(dt_phys)
            };
            positive(&mut errs, "time.duration", dur);
            if dur < dt_phys {
                errs.push(format!("time.duration ({dur}) must be >= time.dt ({dt_phys})"));
            }
            duration = dur;
            if let Some(tol) = t.steady_rel_tol {
                positive(&mut errs, "time.steady_rel_tol", tol);
                steady_rel_tol = Some(tol);
            }
            if let Some(n) = t.steady_check_interval {
                if n == 0 {
                    errs.push("time.steady_check_interval must be >= 1".into());
                }
                steady_check_interval = n.max(1);
            }
        }
        (None, false) => {}
    }

    // applied field
    let to_reduced = |b: f64| b / (material.mu0 * material.ms);
    let mut applied = AppliedFieldSpec::default();
    if let Some(a) = &raw.applied {
        if let Some(c) = a.constant_t {
            applied.constant = c.map(to_reduced);
        }
        match (a.pulse_amplitude_t, a.pulse_amplitude_ms) {
            (Some(_), Some(_)) => errs.push("applied: give pulse_amplitude_t or pulse_amplitude_ms, not both".into()),
            (Some(b), None) => applied.pulse_amplitude = to_reduced(b),
            (None, Some(r)) => applied.pulse_amplitude = r,
            (None, None) => {}
        }
        if applied.pulse_amplitude != 0.0 {
            let f = required(&mut errs, "applied.pulse_frequency", a.pulse_frequency).unwrap_or(0.0);
            applied.pulse_frequency = f;
            let start = a.pulse_start.unwrap_or(0.0);
            let end = required(&mut errs, "applied.pulse_end", a.pulse_end).unwrap_or(start);
            applied.pulse_window = [start, end];
        }
        if let Some(d) = a.pulse_direction {
            match unit(d) {
                Some(u) => applied.pulse_direction = u,
                None => errs.push("applied.pulse_direction must be nonzero".into()),
            }
        }
        errs.extend(applied.violations().into_iter().map(|v| format!("applied: {v}")));
    }

    // initial state
    let initial = match &raw.initial {
        None => InitialState::Uniform(vec3::E1),
        Some(i) => match i.kind.as_deref().unwrap_or("uniform") {
            "uniform" => match unit(i.direction.unwrap_or([1.0, 0.0, 0.0])) {
                Some(u) => InitialState::Uniform(u),
                None => {
                    errs.push("initial.direction must be nonzero".into());
                    InitialState::Uniform(vec3::E1)
                }
            },
            "random" => InitialState::Random,
            "snapshot" => match &i.path {
                Some(p) => InitialState::Snapshot(base.join(p)),
                None => {
                    errs.push("missing required field 'initial.path' for a snapshot initial state".into());
                    InitialState::Random
                }
            },
            other => {
                errs.push(format!("initial.kind '{other}' is not one of uniform, random, snapshot"));
                InitialState::Random
            }
        },
    };

    // output
    let output = match &raw.output {
        None => OutputConfig {
            dir: PathBuf::from("output"),
            cadence: 100,
            snapshot_every: 0,
        },
        Some(o) => {
            let cadence = o.cadence.unwrap_or(100);
            if cadence == 0 {
                errs.push("output.cadence must be >= 1".into());
            }
            OutputConfig {
                dir: o.dir.as_ref().map(|d| base.join(d)).unwrap_or_else(|| PathBuf::from("output")),
                cadence: cadence.max(1),
                snapshot_every: o.snapshot_every.unwrap_or(0),
            }
        }
    };

    // solver
    let mut krylov = KrylovConfig::default();
    let mut backend = SolverBackend::Gmres;
    let mut guess = InitialGuess::Current;
    if let Some(s) = &raw.solver {
        krylov.tol = s.tol.unwrap_or(krylov.tol);
        krylov.restart = s.restart.unwrap_or(krylov.restart);
        krylov.max_iters = s.max_iters.unwrap_or(krylov.max_iters);
        backend = match s.backend.as_deref().unwrap_or("gmres") {
            "gmres" => SolverBackend::Gmres,
            "direct" => SolverBackend::Direct,
            "auto" => SolverBackend::Auto,
            other => {
                errs.push(format!("solver.backend '{other}' is not one of gmres, direct, auto"));
                SolverBackend::Gmres
            }
        };
        guess = match s.initial_guess.as_deref().unwrap_or("current") {
            "current" => InitialGuess::Current,
            "zero" => InitialGuess::Zero,
            other => {
                errs.push(format!("solver.initial_guess '{other}' is not one of current, zero"));
                InitialGuess::Current
            }
        };
    }
    errs.extend(krylov.violations().into_iter().map(|v| format!("solver: {v}")));

    // hysteresis
    let mut hysteresis = HysteresisConfig::default();
    if let Some(h) = &raw.hysteresis {
        hysteresis.axis = h.axis.unwrap_or(hysteresis.axis);
        hysteresis.canting_deg = h.canting_deg.unwrap_or(hysteresis.canting_deg);
        hysteresis.field_min = h.field_min_t.unwrap_or(hysteresis.field_min);
        hysteresis.field_max = h.field_max_t.unwrap_or(hysteresis.field_max);
        hysteresis.n_field_steps = h.n_field_steps.unwrap_or(hysteresis.n_field_steps);
        hysteresis.steady_rel_tol = h.steady_rel_tol.unwrap_or(hysteresis.steady_rel_tol);
        hysteresis.max_steps_per_field = h.max_steps_per_field.unwrap_or(hysteresis.max_steps_per_field);
    }
    if scenario == Scenario::Hysteresis {
        if !(hysteresis.field_min < hysteresis.field_max) {
            errs.push(format!(
                "hysteresis: field_min_t ({}) must be < field_max_t ({})",
                hysteresis.field_min, hysteresis.field_max
            ));
        }
        positive(&mut errs, "hysteresis.steady_rel_tol", hysteresis.steady_rel_tol);
        if hysteresis.n_field_steps < 2 {
            errs.push("hysteresis.n_field_steps must be >= 2".into());
        }
        if hysteresis.max_steps_per_field == 0 {
            errs.push("hysteresis.max_steps_per_field must be >= 1".into());
        }
    }

    // verification
    let mut verify = VerifyConfig::default();
    if let Some(v) = &raw.verify {
        if let Some(d) = &v.dims {
            verify.dims = d.clone();
        }
        verify.damping = match v.damping.as_deref().unwrap_or("gyro") {
            "gyro" => DampingForm::Gyro,
            "linear" => DampingForm::Linear,
            other => {
                errs.push(format!("verify.damping '{other}' is not one of gyro, linear"));
                DampingForm::Gyro
            }
        };
        for (raw_plan, plan, cases, label) in [
            (&v.one_d, &mut verify.plan_1d, &mut verify.cases_1d, "verify.one_d"),
            (&v.three_d, &mut verify.plan_3d, &mut verify.cases_3d, "verify.three_d"),
        ] {
            if let Some(r) = raw_plan {
                merge_sweep(r, plan, cases, label, &mut errs);
            }
        }
    }
    if scenario == Scenario::Verify {
        if verify.dims.is_empty() {
            errs.push("verify.dims must list at least one of \"1d\", \"3d\"".into());
        }
        for (plan, label) in [(&verify.plan_1d, "verify.one_d"), (&verify.plan_3d, "verify.three_d")] {
            if plan.time_steps.len() < 2 || plan.space_cells.len() < 2 {
                errs.push(format!("{label}: a convergence order needs at least two resolutions per sweep"));
            }
        }
    }

    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    Ok(SimulationConfig {
        scenario,
        seed: raw.seed.unwrap_or(0),
        material,
        easy_axis,
        geometry,
        applied,
        dt_phys,
        duration,
        stray_field_enabled: raw.stray_field.unwrap_or(false),
        initial,
        output,
        krylov,
        backend,
        guess,
        steady_rel_tol,
        steady_check_interval,
        hysteresis,
        verify,
    })
}

fn merge_sweep(r: &RawSweep, plan: &mut SweepPlan, cases: &mut Vec<(f64, f64)>, label: &str, errs: &mut Vec<String>) {
    let set_pos = |errs: &mut Vec<String>, name: &str, v: Option<f64>, slot: &mut f64| {
        if let Some(v) = v {
            positive(errs, &format!("{label}.{name}"), v);
            *slot = v;
        }
    };
    set_pos(errs, "box_len", r.box_len, &mut plan.box_len);
    set_pos(errs, "final_time", r.final_time, &mut plan.final_time);
    set_pos(errs, "space_box_len", r.space_box_len, &mut plan.space_box_len);
    set_pos(errs, "space_final_time", r.space_final_time, &mut plan.space_final_time);
    set_pos(errs, "space_dt", r.space_dt, &mut plan.space_dt);
    if let Some(n) = r.time_cells {
        plan.time_cells = n;
    }
    if let Some(v) = &r.time_steps {
        plan.time_steps = v.clone();
    }
    if let Some(v) = &r.space_cells {
        plan.space_cells = v.clone();
    }
    if plan.time_cells == 0 || plan.time_steps.contains(&0) || plan.space_cells.contains(&0) {
        errs.push(format!("{label}: cell and step counts must be >= 1"));
    }
    if let Some(c) = &r.cases {
        *cases = c.iter().map(|[a, e]| (*a, *e)).collect();
        if cases.iter().any(|(a, e)| !(*a >= 0.0 && *e >= 0.0)) {
            errs.push(format!("{label}.cases: alpha and eta must be >= 0"));
        }
    }
}
