//! Ground-truth translational dynamics of the end-effector.
//!
//! The simulated world integrates
//!
//! ```text
//! m_t p̈_e = -m_t g e3 + T R(φ) e3 + f_e + Δ_e
//! ```
//!
//! with `f_e = B_f · f_f` from a unilateral Kelvin-Voigt law, the attitude
//! following its reference through a first-order lag, and `Δ_e` supplied by a
//! [`Disturbance`] descriptor. Steps use a fixed RK4 scheme; a step that
//! crosses the contact boundary is split at the crossing, located by bisection.

use nalgebra::{Rotation3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params;
use crate::{Mat3x2, Vec2, Vec3};

const ORTHONORMAL_TOL: f64 = 1e-12;
const CROSSING_TOL: f64 = 1e-6;
const MAX_CROSSINGS_PER_STEP: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("surface basis is not orthonormal (error {0:.3e})")]
    NotOrthonormal(f64),
    #[error("contact parameters must be positive (k_e = {k_e}, b_e = {b_e})")]
    BadContactParameters { k_e: f64, b_e: f64 },
    #[error("invalid plant configuration: {0}")]
    BadConfig(&'static str),
    #[error("non-finite input to plant step: {0}")]
    NonFinite(&'static str),
    #[error("thrust must be non-negative, got {0}")]
    NegativeThrust(f64),
}

/// Contact surface: force direction `B_f` (pointing into the surface), motion
/// plane `B_m`, a point on the surface and the Kelvin-Voigt parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceModel {
    pub b_f: Vec3,
    pub b_m: Mat3x2,
    pub p_s: Vec3,
    pub k_e: f64,
    pub b_e: f64,
}

impl SurfaceModel {
    pub fn new(b_f: Vec3, b_m: Mat3x2, p_s: Vec3, k_e: f64, b_e: f64) -> Result<Self, PlantError> {
        let s = Self { b_f, b_m, p_s, k_e, b_e };
        let err = s.orthonormality_error();
        if !(err <= ORTHONORMAL_TOL) {
            return Err(PlantError::NotOrthonormal(err));
        }
        if !(k_e > 0.0 && b_e > 0.0) {
            return Err(PlantError::BadContactParameters { k_e, b_e });
        }
        Ok(s)
    }

    /// Surface frame given by a rotation: `B_f = R e1`, `B_m = [R e2, R e3]`.
    pub fn from_rotation(rot: &Rotation3<f64>, p_s: Vec3, k_e: f64, b_e: f64) -> Self {
        let m = rot.matrix();
        let b_f = m.column(0).into_owned();
        let b_m = Mat3x2::from_columns(&[m.column(1).into_owned(), m.column(2).into_owned()]);
        Self { b_f, b_m, p_s, k_e, b_e }
    }

    /// Surface facing the `-x` direction, tilted back by `tilt` radians about
    /// the inertial `y` axis. `tilt = 0` is a vertical wall with `B_f = e1`.
    pub fn tilted(tilt: f64, p_s: Vec3, k_e: f64, b_e: f64) -> Self {
        let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), tilt);
        Self::from_rotation(&rot, p_s, k_e, b_e)
    }

    pub fn vertical(p_s: Vec3, k_e: f64, b_e: f64) -> Self {
        Self::tilted(0.0, p_s, k_e, b_e)
    }

    /// `x_{f,s} = B_fᵀ p_s`.
    pub fn x_fs(&self) -> f64 {
        self.b_f.dot(&self.p_s)
    }

    pub fn penetration(&self, p_e: &Vec3) -> f64 {
        self.b_f.dot(p_e) - self.x_fs()
    }

    /// Largest deviation of `[B_f B_m]ᵀ[B_f B_m]` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let basis = nalgebra::Matrix3::from_columns(&[
            self.b_f,
            self.b_m.column(0).into_owned(),
            self.b_m.column(1).into_owned(),
        ]);
        let gram = basis.transpose() * basis;
        (gram - nalgebra::Matrix3::identity()).abs().max()
    }

    /// Split a 3-vector into its force-direction and motion-plane parts.
    pub fn decompose(&self, v: &Vec3) -> (f64, Vec2) {
        (self.b_f.dot(v), self.b_m.transpose() * v)
    }

    pub fn compose(&self, f_part: f64, m_part: &Vec2) -> Vec3 {
        self.b_f * f_part + self.b_m * m_part
    }
}

/// Kelvin-Voigt normal force on the end-effector along `B_f`.
///
/// Zero in free space; `-k_e·pen - b_e·ẋ_f` once the penetration is positive.
pub fn contact_force(x_f: f64, x_dot_f: f64, surface: &SurfaceModel) -> f64 {
    let pen = x_f - surface.x_fs();
    if pen > 0.0 {
        -surface.k_e * pen - surface.b_e * x_dot_f
    } else {
        0.0
    }
}

fn contact_force_law(pen: f64, x_dot_f: f64, surface: &SurfaceModel) -> f64 {
    -surface.k_e * pen - surface.b_e * x_dot_f
}

/// First-order attitude lag. Roll and pitch relax toward the reference with
/// time constant `tau_att`; yaw is set to its reference.
pub fn attitude_track(phi: &Vec3, phi_r: &Vec3, tau_att: f64, dt: f64) -> Vec3 {
    if tau_att <= 0.0 {
        return *phi_r;
    }
    let a = (-dt / tau_att).exp();
    Vec3::new(
        phi_r.x + (phi.x - phi_r.x) * a,
        phi_r.y + (phi.y - phi_r.y) * a,
        phi_r.z,
    )
}

/// `R(φ) e3` for Z-Y-X Euler angles, i.e. `Ψ Φ`.
pub fn thrust_direction(phi: &Vec3) -> Vec3 {
    let (sx, cx) = phi.x.sin_cos();
    let (sy, cy) = phi.y.sin_cos();
    let (sz, cz) = phi.z.sin_cos();
    let big_phi = Vec3::new(cx * sy, sx, cx * cy);
    Vec3::new(
        cz * big_phi.x + sz * big_phi.y,
        sz * big_phi.x - cz * big_phi.y,
        big_phi.z,
    )
}

/// Lumped translational disturbance `Δ_e`: a constant, a per-axis sinusoid and
/// an optional viscous friction acting in the motion plane while in contact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Disturbance {
    pub constant: Vec3,
    pub amplitude: Vec3,
    /// Hz, per axis.
    pub frequency: Vec3,
    pub phase: Vec3,
    /// N·s/m, tangential viscous friction; zero disables it.
    pub viscous_friction: f64,
}

impl Default for Disturbance {
    fn default() -> Self {
        Self {
            constant: Vec3::zeros(),
            amplitude: Vec3::zeros(),
            frequency: Vec3::zeros(),
            phase: Vec3::zeros(),
            viscous_friction: 0.0,
        }
    }
}

impl Disturbance {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn eval(&self, t: f64, v_e: &Vec3, surface: &SurfaceModel, in_contact: bool) -> Vec3 {
        let tau = 2.0 * std::f64::consts::PI;
        let mut d = self.constant;
        for i in 0..3 {
            if self.amplitude[i] != 0.0 {
                d[i] += self.amplitude[i] * (tau * self.frequency[i] * t + self.phase[i]).sin();
            }
        }
        if in_contact && self.viscous_friction > 0.0 {
            let tangential = surface.b_m * (surface.b_m.transpose() * v_e);
            d -= tangential * self.viscous_friction;
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantConfig {
    pub m_t: f64,
    pub g: f64,
    /// Fixed CoM-to-end-effector offset in the body frame (arm held rigid).
    pub d: Vec3,
    pub tau_att: f64,
    pub disturbance: Disturbance,
    pub dt: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            m_t: params::DEFAULT_TRUE_MASS,
            g: params::GRAVITY,
            d: Vec3::new(-0.45, 0.0, 0.1),
            tau_att: 0.03,
            disturbance: Disturbance::default(),
            dt: params::PLANT_DT,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<(), PlantError> {
        if !(self.m_t > 0.0) {
            return Err(PlantError::BadConfig("m_t must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(PlantError::BadConfig("dt must be positive"));
        }
        if !(self.tau_att >= 0.0) {
            return Err(PlantError::BadConfig("tau_att must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub p_e: Vec3,
    pub v_e: Vec3,
    /// Achieved roll, pitch, yaw.
    pub phi: Vec3,
    pub in_contact: bool,
    pub t: f64,
}

impl PlantState {
    pub fn at_rest(p_e: Vec3, surface: &SurfaceModel) -> Self {
        Self {
            p_e,
            v_e: Vec3::zeros(),
            phi: Vec3::zeros(),
            in_contact: surface.penetration(&p_e) > 0.0,
            t: 0.0,
        }
    }

    /// Multirotor CoM position, `p_e - R(φ) d`.
    pub fn com_position(&self, cfg: &PlantConfig) -> Vec3 {
        let r = Rotation3::from_euler_angles(self.phi.x, self.phi.y, self.phi.z);
        self.p_e - r * cfg.d
    }
}

/// Instantaneous acceleration of the end-effector for a given attitude.
pub fn acceleration(
    p_e: &Vec3,
    v_e: &Vec3,
    t: f64,
    thrust: f64,
    phi: &Vec3,
    surface: &SurfaceModel,
    cfg: &PlantConfig,
) -> Vec3 {
    let pen = surface.penetration(p_e);
    let in_contact = pen > 0.0;
    let f_f = if in_contact {
        contact_force_law(pen, surface.b_f.dot(v_e), surface)
    } else {
        0.0
    };
    accel_with(p_e, v_e, t, thrust, phi, surface, cfg, f_f, in_contact)
}

#[allow(clippy::too_many_arguments)]
fn accel_with(
    _p_e: &Vec3,
    v_e: &Vec3,
    t: f64,
    thrust: f64,
    phi: &Vec3,
    surface: &SurfaceModel,
    cfg: &PlantConfig,
    f_f: f64,
    in_contact: bool,
) -> Vec3 {
    let u_e = thrust_direction(phi) * thrust;
    let f_e = surface.b_f * f_f;
    let delta = cfg.disturbance.eval(t, v_e, surface, in_contact);
    -Vec3::z() * cfg.g + (u_e + f_e + delta) / cfg.m_t
}

/// One RK4 segment of length `h` with the contact law frozen to `contact`.
#[allow(clippy::too_many_arguments)]
fn rk4_segment(
    p0: &Vec3,
    v0: &Vec3,
    t0: f64,
    h: f64,
    thrust: f64,
    phi0: &Vec3,
    phi_r: &Vec3,
    surface: &SurfaceModel,
    cfg: &PlantConfig,
    contact: bool,
) -> (Vec3, Vec3) {
    let deriv = |p: &Vec3, v: &Vec3, s: f64| -> (Vec3, Vec3) {
        let phi = attitude_track(phi0, phi_r, cfg.tau_att, s);
        let f_f = if contact {
            contact_force_law(surface.penetration(p), surface.b_f.dot(v), surface)
        } else {
            0.0
        };
        (*v, accel_with(p, v, t0 + s, thrust, &phi, surface, cfg, f_f, contact))
    };
    let (k1p, k1v) = deriv(p0, v0, 0.0);
    let (k2p, k2v) = deriv(&(p0 + k1p * (h / 2.0)), &(v0 + k1v * (h / 2.0)), h / 2.0);
    let (k3p, k3v) = deriv(&(p0 + k2p * (h / 2.0)), &(v0 + k2v * (h / 2.0)), h / 2.0);
    let (k4p, k4v) = deriv(&(p0 + k3p * h), &(v0 + k3v * h), h);
    (
        p0 + (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (h / 6.0),
        v0 + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0),
    )
}

fn check_finite(v: &Vec3, what: &'static str) -> Result<(), PlantError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(PlantError::NonFinite(what))
    }
}

/// Advance the plant by `cfg.dt` under thrust `thrust` and attitude reference
/// `phi_r`.
pub fn step(
    state: &PlantState,
    thrust: f64,
    phi_r: &Vec3,
    surface: &SurfaceModel,
    cfg: &PlantConfig,
) -> Result<PlantState, PlantError> {
    cfg.validate()?;
    if !thrust.is_finite() {
        return Err(PlantError::NonFinite("thrust"));
    }
    if thrust < 0.0 {
        return Err(PlantError::NegativeThrust(thrust));
    }
    check_finite(phi_r, "phi_r")?;
    check_finite(&state.p_e, "p_e")?;
    check_finite(&state.v_e, "v_e")?;
    check_finite(&state.phi, "phi")?;

    let mut p = state.p_e;
    let mut v = state.v_e;
    let mut phi = state.phi;
    let mut t = state.t;
    let mut remaining = cfg.dt;
    let mut contact = surface.penetration(&p) > 0.0;

    for _ in 0..MAX_CROSSINGS_PER_STEP {
        let (p1, v1) = rk4_segment(&p, &v, t, remaining, thrust, &phi, phi_r, surface, cfg, contact);
        let pen1 = surface.penetration(&p1);
        if (pen1 > 0.0) == contact {
            p = p1;
            v = v1;
            phi = attitude_track(&phi, phi_r, cfg.tau_att, remaining);
            t += remaining;
            remaining = 0.0;
            break;
        }
        // Locate the boundary crossing by bisection on the segment length.
        let (mut lo, mut hi) = (0.0, remaining);
        let mut best = (p1, v1, remaining);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let (pm, vm) = rk4_segment(&p, &v, t, mid, thrust, &phi, phi_r, surface, cfg, contact);
            let pen = surface.penetration(&pm);
            if (pen > 0.0) == contact {
                lo = mid;
            } else {
                hi = mid;
                best = (pm, vm, mid);
            }
            if pen.abs() <= CROSSING_TOL || hi - lo < 1e-12 {
                best = (pm, vm, mid);
                break;
            }
        }
        let (pc, vc, h) = best;
        p = pc;
        v = vc;
        phi = attitude_track(&phi, phi_r, cfg.tau_att, h);
        t += h;
        remaining -= h;
        contact = !contact;
        if remaining <= 1e-15 {
            break;
        }
    }
    if remaining > 1e-15 {
        // Chattering on the boundary: finish the step with the current law.
        let (p1, v1) = rk4_segment(&p, &v, t, remaining, thrust, &phi, phi_r, surface, cfg, contact);
        p = p1;
        v = v1;
        phi = attitude_track(&phi, phi_r, cfg.tau_att, remaining);
    }
    check_finite(&p, "p_e after step")?;
    check_finite(&v, "v_e after step")?;
    Ok(PlantState {
        p_e: p,
        v_e: v,
        phi,
        in_contact: surface.penetration(&p) > 0.0,
        t: state.t + cfg.dt,
    })
}

/// Standard deviations of additive, zero-mean sensor noise. Zero disables a
/// channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorNoise {
    pub position: f64,
    pub velocity: f64,
    pub force: f64,
}

/// What the controller sees: projections of the end-effector state onto the
/// surface frame and the 1-axis force sensor reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub x_f: f64,
    pub x_f_dot: f64,
    pub x_m: Vec2,
    pub x_m_dot: Vec2,
    pub f_f: f64,
}

fn noisy<R: Rng + ?Sized>(value: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma > 0.0 {
        // sigma > 0 so the distribution is valid
        value + Normal::new(0.0, sigma).unwrap().sample(rng)
    } else {
        value
    }
}

pub fn measure<R: Rng + ?Sized>(
    state: &PlantState,
    surface: &SurfaceModel,
    noise: &SensorNoise,
    rng: &mut R,
) -> Measurement {
    let (x_f, x_m) = surface.decompose(&state.p_e);
    let (x_f_dot, x_m_dot) = surface.decompose(&state.v_e);
    let f_f = contact_force(x_f, x_f_dot, surface);
    Measurement {
        x_f: noisy(x_f, noise.position, rng),
        x_f_dot: noisy(x_f_dot, noise.velocity, rng),
        x_m: x_m.map(|x| noisy(x, noise.position, rng)),
        x_m_dot: x_m_dot.map(|x| noisy(x, noise.velocity, rng)),
        f_f: noisy(f_f, noise.force, rng),
    }
}
