//! Scenarios, closed-loop runs, metrics and the scheduler benchmark.
//!
//! A run wires the plant at its own step (1 kHz by default) to the
//! estimator, reference generator and controller at the control rate and to
//! the gain scheduler at the scheduling rate. Everything is deterministic for
//! a given seed.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{ControlError, GainSet, MotionForceController};
use crate::estimator::{rlse_update, ContactDetector, ContactEvent, EnvEstimate, EstimatorError, RlseConfig};
use crate::params;
use crate::plant::{self, PlantConfig, PlantError, PlantState, SensorNoise, SurfaceModel};
use crate::reference::{self, RefMode, ReferenceState};
use crate::scheduler::region::{region_grid, regions_explicit};
use crate::scheduler::{schedule, GainBox, GainSlew, NoSwitchCondition, Provenance, RegionParams, SchedulerError};
use crate::{Mat2, Vec2, Vec3};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    BadScenario(String),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error("non-finite state at t = {t:.4} s: {what}")]
    NonFinite { t: f64, what: &'static str },
    #[error("reading scenario: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForceProfile {
    Constant { value: f64 },
    /// `-3.5 + 2.5 cos(2πt/5)` N, `t` counted from first contact.
    Sinusoid,
}

impl ForceProfile {
    pub fn at(&self, t_contact: f64) -> f64 {
        match self {
            ForceProfile::Constant { value } => *value,
            ForceProfile::Sinusoid => params::sinusoid_force(t_contact),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MotionProfile {
    HoldPoint,
    /// Constant-speed slide in the motion plane, starting at first contact.
    Slide { direction: [f64; 2], speed: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfaceSpec {
    /// Tilt of the surface normal about the inertial `y` axis, degrees.
    pub tilt_deg: f64,
    pub p_s: [f64; 3],
    pub k_e: f64,
    pub b_e: f64,
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        Self { tilt_deg: 30.0, p_s: [1.0, 0.0, 1.5], k_e: 200.0, b_e: 0.5 }
    }
}

impl SurfaceSpec {
    pub fn model(&self) -> SurfaceModel {
        SurfaceModel::tilted(self.tilt_deg.to_radians(), Vec3::from(self.p_s), self.k_e, self.b_e)
    }
}

/// Controller settings in scalar form; the matrix gains are multiples of the
/// identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerSpec {
    pub k_p: f64,
    pub k_d: f64,
    pub k_mp: f64,
    pub k_md: f64,
    pub l_f: f64,
    pub l_m: f64,
    pub m_bar: f64,
    pub omega_n: f64,
    pub control_rate_hz: f64,
    pub scheduler_rate_hz: f64,
    pub slew_rate: f64,
    /// When false the force gains stay at `fixed_gains`.
    pub schedule_gains: bool,
    pub fixed_gains: Option<[f64; 2]>,
}

impl Default for ControllerSpec {
    fn default() -> Self {
        let g = GainSet::default();
        Self {
            k_p: params::K_P,
            k_d: params::K_D,
            k_mp: params::K_MP,
            k_md: params::K_MD,
            l_f: g.l_f,
            l_m: g.l_m[(0, 0)],
            m_bar: params::DEFAULT_NOMINAL_MASS,
            omega_n: params::OMEGA_N,
            control_rate_hz: params::CONTROL_RATE_HZ,
            scheduler_rate_hz: params::SCHEDULER_RATE_HZ,
            slew_rate: params::GAIN_SLEW_RATE,
            schedule_gains: true,
            fixed_gains: None,
        }
    }
}

impl ControllerSpec {
    pub fn gain_set(&self, k_f: f64, b_f: f64) -> GainSet {
        GainSet {
            k_p: self.k_p,
            k_d: self.k_d,
            k_mp: Mat2::identity() * self.k_mp,
            k_md: Mat2::identity() * self.k_md,
            k_f,
            b_f,
            l_f: self.l_f,
            l_m: Mat2::identity() * self.l_m,
            m_bar: self.m_bar,
            g_bar: params::GRAVITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub duration: f64,
    pub surface: SurfaceSpec,
    /// Initial stand-off of the end-effector from the surface along `-B_f`, m.
    pub standoff: f64,
    pub approach_speed: f64,
    pub force: ForceProfile,
    pub motion: MotionProfile,
    pub noise: SensorNoise,
    pub plant: PlantConfig,
    pub controller: ControllerSpec,
    pub estimator: RlseConfig,
    pub gain_box: GainBox,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "exp1-slow".into(),
            seed: 1,
            duration: 20.0,
            surface: SurfaceSpec::default(),
            standoff: 0.15,
            approach_speed: 0.1,
            force: ForceProfile::Constant { value: params::CONSTANT_FORCE },
            motion: MotionProfile::HoldPoint,
            noise: SensorNoise { position: 1e-4, velocity: 1e-3, force: 0.02 },
            plant: PlantConfig::default(),
            controller: ControllerSpec::default(),
            estimator: RlseConfig::default(),
            gain_box: GainBox::default(),
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        // plain data, serialisation cannot fail
        toml::to_string_pretty(self).unwrap()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::BadScenario(m.to_string()));
        if !(self.duration >= 0.0) {
            return bad("duration must be non-negative");
        }
        if !(self.approach_speed > 0.0) {
            return bad("approach_speed must be positive");
        }
        if !(self.standoff >= 0.0) {
            return bad("standoff must be non-negative");
        }
        if !(self.surface.k_e > 0.0 && self.surface.b_e > 0.0) {
            return bad("surface k_e and b_e must be positive");
        }
        let c = &self.controller;
        if !(c.control_rate_hz > 0.0 && c.scheduler_rate_hz > 0.0 && c.omega_n > 0.0) {
            return bad("rates and omega_n must be positive");
        }
        if 1.0 / c.control_rate_hz < self.plant.dt * (1.0 - 1e-9) {
            return bad("control rate cannot exceed the plant rate");
        }
        if let MotionProfile::Slide { direction, speed } = self.motion {
            if !(speed >= 0.0) || Vec2::from(direction).norm() == 0.0 {
                return bad("slide needs a non-zero direction and non-negative speed");
            }
        }
        self.plant.validate()?;
        self.estimator.bounds.validate()?;
        self.gain_box.validate()?;
        c.gain_set(self.gain_box.k_f_min, c.k_d).validate()?;
        Ok(())
    }

    /// Slow approach with the constant force setpoint.
    pub fn exp1_slow() -> Self {
        Self::default()
    }

    /// Fast approach with the sinusoidal force setpoint.
    pub fn exp1_fast() -> Self {
        Self { name: "exp1-fast".into(), approach_speed: 0.3, force: ForceProfile::Sinusoid, ..Self::default() }
    }

    /// Fast approach to a vertical wall, then slide while tracking the
    /// sinusoidal force.
    pub fn exp2_vertical() -> Self {
        Self {
            name: "exp2-vertical".into(),
            surface: SurfaceSpec { tilt_deg: 0.0, ..SurfaceSpec::default() },
            approach_speed: 0.3,
            force: ForceProfile::Sinusoid,
            motion: MotionProfile::Slide { direction: [1.0, 0.0], speed: 0.05 },
            ..Self::default()
        }
    }

    /// Slow approach to the tilted surface, then slide.
    pub fn exp2_tilted() -> Self {
        Self {
            name: "exp2-tilted".into(),
            approach_speed: 0.1,
            force: ForceProfile::Sinusoid,
            motion: MotionProfile::Slide { direction: [1.0, 0.0], speed: 0.05 },
            ..Self::default()
        }
    }
}

/// One logged sample. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
    pub x_f: f64,
    pub x_fr: f64,
    pub f_f: f64,
    pub f_f_meas: f64,
    pub f_fr: f64,
    pub x_m1: f64,
    pub x_m2: f64,
    pub x_mr1: f64,
    pub x_mr2: f64,
    pub k_f: f64,
    pub b_f: f64,
    pub k_hat: f64,
    pub b_hat: f64,
    /// 1 in contact mode, 0 in free mode.
    pub mode: u8,
    pub thrust: f64,
    pub phi_x: f64,
    pub phi_y: f64,
    pub phi_z: f64,
    /// Scheduler provenance when the scheduler ran on this tick, else 0.
    /// See [`sched_code`].
    pub sched: u8,
}

/// 1-3 NS1-3 centroid, 4 pattern search, 5 fallback.
pub fn sched_code(p: Provenance) -> u8 {
    match p {
        Provenance::NsCentroid(NoSwitchCondition::Ns1) => 1,
        Provenance::NsCentroid(NoSwitchCondition::Ns2) => 2,
        Provenance::NsCentroid(NoSwitchCondition::Ns3) => 3,
        Provenance::PatternSearch => 4,
        Provenance::Fallback => 5,
    }
}

fn sched_label(code: u8) -> Option<&'static str> {
    let p = match code {
        1 => Provenance::NsCentroid(NoSwitchCondition::Ns1),
        2 => Provenance::NsCentroid(NoSwitchCondition::Ns2),
        3 => Provenance::NsCentroid(NoSwitchCondition::Ns3),
        4 => Provenance::PatternSearch,
        5 => Provenance::Fallback,
        _ => return None,
    };
    Some(p.label())
}

/// Count of scheduler calls per provenance.
pub fn provenance_histogram(rows: &[LogRow]) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for label in rows.iter().filter_map(|r| sched_label(r.sched)) {
        *h.entry(label.to_string()).or_default() += 1;
    }
    h
}

impl LogRow {
    pub const HEADER: [&'static str; 23] = [
        "t", "p_x", "p_y", "p_z", "x_f", "x_fr", "f_f", "f_f_meas", "f_fr", "x_m1", "x_m2", "x_mr1", "x_mr2",
        "k_f", "b_f", "k_hat", "b_hat", "mode", "thrust", "phi_x", "phi_y", "phi_z", "sched",
    ];

    fn values(&self) -> [f64; 23] {
        [
            self.t, self.p_x, self.p_y, self.p_z, self.x_f, self.x_fr, self.f_f, self.f_f_meas, self.f_fr,
            self.x_m1, self.x_m2, self.x_mr1, self.x_mr2, self.k_f, self.b_f, self.k_hat, self.b_hat,
            self.mode as f64, self.thrust, self.phi_x, self.phi_y, self.phi_z, self.sched as f64,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ContactMade,
    ContactLost,
    Saturation,
    ProvenanceChange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub scenario: String,
    pub rows: Vec<LogRow>,
    pub events: Vec<Event>,
    pub saturated_ticks: usize,
}

impl RunLog {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(LogRow::HEADER)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_events_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(["t", "kind", "detail"])?;
        for e in &self.events {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<LogRow>, HarnessError> {
        let mut r = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for rec in r.deserialize() {
            rows.push(rec?);
        }
        Ok(rows)
    }

    pub fn read_events_csv<R: std::io::Read>(input: R) -> Result<Vec<Event>, HarnessError> {
        let mut r = csv::Reader::from_reader(input);
        let mut events = Vec::new();
        for rec in r.deserialize() {
            events.push(rec?);
        }
        Ok(events)
    }

    /// `<dir>/<name>.csv` and `<dir>/<name>.events.csv`.
    pub fn save(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        let name = if self.scenario.is_empty() { "run" } else { &self.scenario };
        self.write_csv(std::fs::File::create(dir.join(format!("{name}.csv")))?)?;
        self.write_events_csv(std::fs::File::create(dir.join(format!("{name}.events.csv")))?)?;
        Ok(())
    }

    pub fn contact_events(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| matches!(e.kind, EventKind::ContactMade | EventKind::ContactLost))
    }
}

fn region_params(spec: &ControllerSpec, est: &EnvEstimate) -> RegionParams {
    RegionParams { k_p: spec.k_p, k_d: spec.k_d, k_e: est.k_hat, b_e: est.b_hat, m_t: spec.m_bar }
}

/// Run a scenario to completion.
pub fn run(scenario: &Scenario) -> Result<RunLog, HarnessError> {
    scenario.validate()?;
    let sc = scenario;
    let spec = &sc.controller;
    let surface = sc.surface.model();
    let pcfg = &sc.plant;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);

    let mut log = RunLog { scenario: sc.name.clone(), ..RunLog::default() };
    let plant_steps = (sc.duration / pcfg.dt).round() as usize;
    let ctrl_every = ((1.0 / spec.control_rate_hz) / pcfg.dt).round().max(1.0) as usize;
    let dt_c = ctrl_every as f64 * pcfg.dt;
    let sched_period = 1.0 / spec.scheduler_rate_hz;

    let p0 = surface.p_s - surface.b_f * sc.standoff;
    let mut state = PlantState::at_rest(p0, &surface);
    let (x_f0, x_m0) = surface.decompose(&p0);
    let mut r = ReferenceState::at(x_f0, x_m0);

    let mut est = EnvEstimate::initial(&sc.estimator);
    let mut detector = ContactDetector::default();

    let (k0, b0, prov0) = match spec.fixed_gains {
        Some([k, b]) => (k, b, None),
        None => {
            let s = schedule(&region_params(spec, &est), &sc.gain_box)?;
            (s.k_f, s.b_f, Some(s.provenance))
        }
    };
    let mut slew = GainSlew { rate: spec.slew_rate, ..GainSlew::new(k0, b0) };
    let mut target = (k0, b0);
    let mut last_provenance = prov0;
    let mut pending_sched = prov0.map(sched_code);
    let mut ctrl = MotionForceController::new(spec.gain_set(k0, b0), 0.0)?;
    let mut last_sched = f64::NEG_INFINITY;
    let mut first_contact: Option<f64> = None;
    let mut slide_origin = x_m0;
    let mut saturated_prev = false;

    let mut thrust = pcfg.m_t * pcfg.g;
    let mut phi_r = Vec3::zeros();

    for step in 0..plant_steps {
        let t = step as f64 * pcfg.dt;
        if step % ctrl_every == 0 {
            let meas = plant::measure(&state, &surface, &sc.noise, &mut rng);

            match detector.update(meas.f_f, meas.x_f) {
                Some(ContactEvent::Made) => {
                    r = reference::switch_mode(&r, RefMode::Contact, meas.f_f);
                    if first_contact.is_none() {
                        first_contact = Some(t);
                        slide_origin = r.x_mr;
                    }
                    log.events.push(Event { t, kind: EventKind::ContactMade, detail: String::new() });
                }
                Some(ContactEvent::Lost) => {
                    r = reference::switch_mode(&r, RefMode::Free, meas.f_f);
                    log.events.push(Event { t, kind: EventKind::ContactLost, detail: String::new() });
                }
                None => {}
            }
            let mode = if detector.in_contact() { RefMode::Contact } else { RefMode::Free };

            if mode == RefMode::Contact {
                // latched on contact, present while in contact
                let x_fs = detector.x_fs().unwrap_or(meas.x_f);
                est = rlse_update(&est, meas.x_f, meas.x_f_dot, meas.f_f, x_fs, &sc.estimator, dt_c)?;

                if spec.schedule_gains && spec.fixed_gains.is_none() && t - last_sched >= sched_period - 1e-9 {
                    last_sched = t;
                    let s = schedule(&region_params(spec, &est), &sc.gain_box)?;
                    target = (s.k_f, s.b_f);
                    pending_sched = Some(sched_code(s.provenance));
                    if last_provenance != Some(s.provenance) {
                        log.events.push(Event {
                            t,
                            kind: EventKind::ProvenanceChange,
                            detail: s.provenance.label().to_string(),
                        });
                        last_provenance = Some(s.provenance);
                    }
                }
            }
            let (k_f, b_f) = slew.advance(target.0, target.1, dt_c);
            ctrl.gains.k_f = k_f;
            ctrl.gains.b_f = b_f;

            let t_c = first_contact.map_or(0.0, |t0| t - t0);
            let x_md = match (sc.motion, first_contact) {
                (MotionProfile::Slide { direction, speed }, Some(_)) => {
                    slide_origin + Vec2::from(direction).normalize() * (speed * t_c)
                }
                _ => slide_origin,
            };
            r = match mode {
                RefMode::Free => {
                    // carrot: a setpoint held 2v/ω ahead drives the smoother at speed v
                    let x_fd = r.x_fr + 2.0 * sc.approach_speed / spec.omega_n;
                    reference::free_step(&r, x_fd, &x_md, spec.omega_n, dt_c)
                }
                RefMode::Contact => reference::contact_step(&r, sc.force.at(t_c), &x_md, &est, spec.omega_n, dt_c),
            };
            if !r.is_finite() {
                return Err(HarnessError::NonFinite { t, what: "reference" });
            }

            let out = ctrl.tick(&r, &meas, &state.phi, &surface, mode, dt_c);
            thrust = out.thrust;
            phi_r = out.phi_r;
            if out.saturated {
                log.saturated_ticks += 1;
                if !saturated_prev {
                    log.events.push(Event {
                        t,
                        kind: EventKind::Saturation,
                        detail: format!("thrust {:.3} N", out.thrust),
                    });
                }
            }
            saturated_prev = out.saturated;

            let (x_f, x_m) = surface.decompose(&state.p_e);
            let f_true = plant::contact_force(x_f, surface.b_f.dot(&state.v_e), &surface);
            let row = LogRow {
                t,
                p_x: state.p_e.x,
                p_y: state.p_e.y,
                p_z: state.p_e.z,
                x_f,
                x_fr: r.x_fr,
                f_f: f_true,
                f_f_meas: meas.f_f,
                f_fr: r.f_fr,
                x_m1: x_m.x,
                x_m2: x_m.y,
                x_mr1: r.x_mr.x,
                x_mr2: r.x_mr.y,
                k_f,
                b_f,
                k_hat: est.k_hat,
                b_hat: est.b_hat,
                mode: (mode == RefMode::Contact) as u8,
                thrust,
                phi_x: state.phi.x,
                phi_y: state.phi.y,
                phi_z: state.phi.z,
                sched: pending_sched.take().unwrap_or(0),
            };
            if !row.is_finite() {
                return Err(HarnessError::NonFinite { t, what: "log row" });
            }
            log.rows.push(row);
        }
        state = plant::step(&state, thrust, &phi_r, &surface, pcfg)?;
    }
    Ok(log)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Metrics {
    /// Start of the evaluation window, or `None` if contact never held for the
    /// settle window.
    pub settled_at: Option<f64>,
    pub force_rms: f64,
    pub force_max_abs: f64,
    pub motion_rms: f64,
    pub contact_switches: usize,
    pub breaks_after_settle: usize,
    /// Force RMS over every contact-mode sample.
    pub contact_force_rms: f64,
    /// Delay of `f_f` behind `f_fr` at the cross-correlation peak, s.
    pub force_lag: f64,
    pub provenance: BTreeMap<String, usize>,
}

impl Metrics {
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let settled = self.settled_at.map_or("none".to_string(), |t| format!("{t:.4}"));
        s.push_str(&format!("settled_at={settled}\n"));
        s.push_str(&format!("force_rms={:.6}\n", self.force_rms));
        s.push_str(&format!("force_max_abs={:.6}\n", self.force_max_abs));
        s.push_str(&format!("motion_rms={:.6}\n", self.motion_rms));
        s.push_str(&format!("contact_switches={}\n", self.contact_switches));
        s.push_str(&format!("breaks_after_settle={}\n", self.breaks_after_settle));
        s.push_str(&format!("contact_force_rms={:.6}\n", self.contact_force_rms));
        s.push_str(&format!("force_lag={:.4}\n", self.force_lag));
        for (k, v) in &self.provenance {
            s.push_str(&format!("provenance.{k}={v}\n"));
        }
        s
    }
}

/// Intervals of continuous contact mode as `(start, end)` row indices.
fn contact_runs(rows: &[LogRow]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, r) in rows.iter().enumerate() {
        match (r.mode == 1, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, rows.len()));
    }
    runs
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 { 0.0 } else { (sum / n as f64).sqrt() }
}

/// Delay of `b` relative to `a` maximising the Pearson correlation of the
/// overlapping parts, searched over `±max_lag` samples.
pub fn xcorr_lag(a: &[f64], b: &[f64], max_lag: usize) -> isize {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0;
    }
    let max_lag = max_lag.min(n - 2) as isize;
    let mut best = (f64::NEG_INFINITY, 0isize);
    for lag in -max_lag..=max_lag {
        let (xa, xb) = if lag >= 0 {
            (&a[..n - lag as usize], &b[lag as usize..n])
        } else {
            (&a[(-lag) as usize..n], &b[..n - (-lag) as usize])
        };
        let m = xa.len() as f64;
        let ma = xa.iter().sum::<f64>() / m;
        let mb = xb.iter().sum::<f64>() / m;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in xa.iter().zip(xb) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        let c = if saa > 0.0 && sbb > 0.0 { sab / (saa * sbb).sqrt() } else { f64::NEG_INFINITY };
        if c > best.0 {
            best = (c, lag);
        }
    }
    best.1
}

/// Post-settling summary. The evaluation window starts `settle_window`
/// seconds into the first contact interval that lasts at least that long.
pub fn metrics(log: &RunLog, settle_window: f64) -> Metrics {
    let rows = &log.rows;
    let mut m = Metrics {
        provenance: provenance_histogram(&log.rows),
        contact_switches: log.contact_events().count(),
        ..Metrics::default()
    };
    if rows.is_empty() {
        return m;
    }
    let runs = contact_runs(rows);
    let contact_errs: Vec<f64> = rows.iter().filter(|r| r.mode == 1).map(|r| r.f_fr - r.f_f).collect();
    m.contact_force_rms = rms(contact_errs.iter().copied());

    let t_end = rows.last().map_or(0.0, |r| r.t);
    let settle_start = runs.iter().find_map(|&(s, e)| {
        let t0 = rows[s].t;
        let t1 = if e < rows.len() { rows[e].t } else { t_end + f64::EPSILON };
        (t1 - t0 >= settle_window).then_some(t0 + settle_window)
    });
    m.settled_at = settle_start;
    let Some(ts) = settle_start else {
        m.force_rms = f64::NAN;
        m.force_max_abs = f64::NAN;
        m.motion_rms = f64::NAN;
        m.force_lag = f64::NAN;
        return m;
    };
    let window: Vec<&LogRow> = rows.iter().filter(|r| r.t >= ts - 1e-12).collect();
    m.force_rms = rms(window.iter().map(|r| r.f_fr - r.f_f));
    m.force_max_abs = window.iter().map(|r| (r.f_fr - r.f_f).abs()).fold(0.0, f64::max);
    m.motion_rms = rms(window.iter().map(|r| (r.x_mr1 - r.x_m1).hypot(r.x_mr2 - r.x_m2)));
    m.breaks_after_settle = log.events.iter().filter(|e| e.kind == EventKind::ContactLost && e.t >= ts).count();

    let a: Vec<f64> = window.iter().map(|r| r.f_fr).collect();
    let b: Vec<f64> = window.iter().map(|r| r.f_f).collect();
    let dt = if window.len() > 1 { window[1].t - window[0].t } else { 0.0 };
    if dt > 0.0 {
        let lag = xcorr_lag(&a, &b, (1.0 / dt).round() as usize);
        m.force_lag = lag as f64 * dt;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub grid_median_s: f64,
    pub explicit_median_s: f64,
    pub ratio: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median wall time of the three grid bitmaps against the three explicit
/// polygons, for each `N`.
pub fn bench_scheduler(ns: &[usize], reps: usize, p: &RegionParams, gain_box: &GainBox) -> Vec<BenchRow> {
    let reps = reps.max(1);
    ns.iter()
        .map(|&n| {
            let mut grid = Vec::with_capacity(reps);
            let mut explicit = Vec::with_capacity(reps);
            for _ in 0..reps {
                let t0 = Instant::now();
                for cond in NoSwitchCondition::ALL {
                    std::hint::black_box(region_grid(cond, std::hint::black_box(p), gain_box, n));
                }
                grid.push(t0.elapsed().as_secs_f64());
                let t0 = Instant::now();
                std::hint::black_box(regions_explicit(std::hint::black_box(p), gain_box).ok());
                explicit.push(t0.elapsed().as_secs_f64());
            }
            let g = median(grid);
            let e = median(explicit);
            BenchRow { n, grid_median_s: g, explicit_median_s: e, ratio: g / e }
        })
        .collect()
}

/// Least-squares slope of `log t` against `log N` for the grid timings.
pub fn fit_scaling_exponent(rows: &[BenchRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.n as f64).ln(), r.grid_median_s.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug)]
pub struct SweepResult {
    pub scenario: String,
    pub outcome: Result<Metrics, HarnessError>,
}

/// Run scenarios in parallel. Logs are written under `out_dir` when given.
pub fn sweep(scenarios: &[Scenario], out_dir: Option<&Path>, settle_window: f64) -> Vec<SweepResult> {
    scenarios
        .par_iter()
        .map(|sc| {
            let outcome = run(sc).and_then(|log| {
                if let Some(dir) = out_dir {
                    log.save(dir)?;
                }
                Ok(metrics(&log, settle_window))
            });
            SweepResult { scenario: sc.name.clone(), outcome }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(offset: f64) -> RunLog {
        let rows = (0..2000)
            .map(|i| {
                let t = i as f64 * 0.002;
                let f_fr = params::sinusoid_force(t);
                LogRow {
                    t,
                    p_x: 0.0,
                    p_y: 0.0,
                    p_z: 0.0,
                    x_f: 0.0,
                    x_fr: 0.0,
                    f_f: f_fr - offset,
                    f_f_meas: f_fr - offset,
                    f_fr,
                    x_m1: 0.1 * t,
                    x_m2: 0.0,
                    x_mr1: 0.1 * t,
                    x_mr2: 0.0,
                    k_f: 0.1,
                    b_f: 19.5,
                    k_hat: 200.0,
                    b_hat: 0.5,
                    mode: 1,
                    thrust: 40.0,
                    phi_x: 0.0,
                    phi_y: 0.0,
                    phi_z: 0.0,
                    sched: 0,
                }
            })
            .collect();
        RunLog { scenario: "synthetic".into(), rows, ..RunLog::default() }
    }

    #[test]
    fn perfect_log_has_zero_error() {
        let m = metrics(&synthetic(0.0), 1.0);
        assert_eq!(m.settled_at, Some(1.0));
        assert_eq!(m.force_rms, 0.0);
        assert_eq!(m.motion_rms, 0.0);
        assert_eq!(m.force_max_abs, 0.0);
        assert_eq!(m.force_lag, 0.0);
    }

    #[test]
    fn injected_offset_shows_in_rms() {
        let m = metrics(&synthetic(0.2), 1.0);
        assert!((m.force_rms - 0.2).abs() < 1e-12);
    }

    #[test]
    fn xcorr_finds_shift() {
        let a: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.02).sin()).collect();
        let b: Vec<f64> = (0..1000).map(|i| ((i as f64 - 25.0) * 0.02).sin()).collect();
        assert_eq!(xcorr_lag(&a, &b, 100), 25);
    }

    #[test]
    fn zero_duration_gives_header_only() {
        let sc = Scenario { duration: 0.0, ..Scenario::default() };
        let log = run(&sc).unwrap();
        assert!(log.rows.is_empty());
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(text.trim_end().split(',').count(), LogRow::HEADER.len());
    }

    #[test]
    fn scenario_toml_round_trip() {
        for sc in [Scenario::exp1_slow(), Scenario::exp1_fast(), Scenario::exp2_vertical(), Scenario::exp2_tilted()] {
            let back = Scenario::from_toml(&sc.to_toml()).unwrap();
            assert_eq!(back, sc);
        }
        let partial = Scenario::from_toml("name = \"x\"\napproach_speed = 0.2\n").unwrap();
        assert_eq!(partial.approach_speed, 0.2);
        assert_eq!(partial.controller.k_p, 23.5);
        assert!(Scenario::from_toml("approach_speed = -1.0\n").is_err());
    }

    #[test]
    fn defaults_match_published_table() {
        let sc = Scenario::default();
        assert_eq!((sc.estimator.mu1, sc.estimator.mu2, sc.estimator.rho_max), (0.9996, 0.9996, 5000.0));
        assert_eq!((sc.controller.k_p, sc.controller.k_d, sc.controller.omega_n), (23.5, 19.5, 10.0));
        assert_eq!((sc.gain_box.k_f_min, sc.gain_box.b_f_min), (0.1, 10.0));
        assert_eq!((sc.gain_box.k_f_max, sc.gain_box.b_f_max), (1.0, 40.0));
    }
}
