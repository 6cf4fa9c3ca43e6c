//! Switching motion/force control law, disturbance observers and the
//! thrust/attitude extraction.
//!
//! The desired input is built in surface coordinates, `ū_e = B_f ū_f + B_m ū_m`,
//! and then converted into a total thrust and roll/pitch references for the
//! attitude loop.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params;
use crate::plant::{Measurement, SurfaceModel};
use crate::reference::{RefMode, ReferenceState};
use crate::{Mat2, Vec2, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("infeasible input: {0}")]
    InfeasibleInput(String),
    #[error("invalid gains: {0}")]
    BadGains(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GainSet {
    pub k_p: f64,
    pub k_d: f64,
    pub k_mp: Mat2,
    pub k_md: Mat2,
    pub k_f: f64,
    pub b_f: f64,
    pub l_f: f64,
    pub l_m: Mat2,
    pub m_bar: f64,
    pub g_bar: f64,
}

impl Default for GainSet {
    fn default() -> Self {
        Self {
            k_p: params::K_P,
            k_d: params::K_D,
            k_mp: Mat2::identity() * params::K_MP,
            k_md: Mat2::identity() * params::K_MD,
            k_f: params::K_F_MIN,
            b_f: params::K_D,
            l_f: 10.0,
            l_m: Mat2::identity() * 10.0,
            m_bar: params::DEFAULT_NOMINAL_MASS,
            g_bar: params::GRAVITY,
        }
    }
}

fn is_pd(m: &Mat2) -> bool {
    (m - m.transpose()).abs().max() <= 1e-12 && SymmetricEigen::new(*m).eigenvalues.min() > 0.0
}

impl GainSet {
    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.k_p > 0.0 && self.k_d > 0.0) {
            return Err(ControlError::BadGains("k_p and k_d must be positive"));
        }
        if !(self.k_f > 0.0 && self.b_f > 0.0) {
            return Err(ControlError::BadGains("k_f and b_f must be positive"));
        }
        if !(self.l_f > 0.0 && self.m_bar > 0.0 && self.g_bar > 0.0) {
            return Err(ControlError::BadGains("L_f, m_bar and g_bar must be positive"));
        }
        if !(is_pd(&self.k_mp) && is_pd(&self.k_md) && is_pd(&self.l_m)) {
            return Err(ControlError::BadGains("K_mp, K_md and L_m must be symmetric positive definite"));
        }
        Ok(())
    }
}

/// Observer state. Besides the filter states it keeps the previous
/// measurement so that each update integrates over the last interval exactly.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DobState {
    pub z_f: f64,
    pub z_m: Vec2,
    prev: Option<DobSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct DobSample {
    x_f_dot: f64,
    x_m_dot: Vec2,
    f_f: f64,
}

/// `(e^{-a h}, 1 - (1 - e^{-a h})/(a h))`.
fn observer_weights(a: f64, h: f64) -> (f64, f64) {
    let x = a * h;
    let e = (-x).exp();
    let ramp = if x < 1e-6 {
        x / 2.0 - x * x / 6.0
    } else {
        1.0 - (-x).exp_m1().abs() / x
    };
    (e, ramp)
}

/// Propagate `ż = -a z + a(c - ν(t))` over `h`, with `c` held and `ν` linear.
fn observer_step(z: f64, a: f64, h: f64, c: f64, nu0: f64, nu1: f64) -> f64 {
    let (e, ramp) = observer_weights(a, h);
    e * z + (1.0 - e) * (c - nu0) - ramp * (nu1 - nu0)
}

/// Disturbance observers for the force direction and the motion plane.
///
/// `u_bar_f`, `u_bar_m` are the inputs applied since the previous call. The
/// contact force enters the force-direction observer only while in contact.
/// Returns the updated state with `Δ̂_f` and `Δ̂_m`.
#[allow(clippy::too_many_arguments)]
pub fn dob_update(
    dob: &DobState,
    meas: &Measurement,
    u_bar_f: f64,
    u_bar_m: &Vec2,
    gains: &GainSet,
    surface: &SurfaceModel,
    in_contact: bool,
    dt: f64,
) -> (DobState, f64, Vec2) {
    let m = gains.m_bar;
    let grav_f = m * gains.g_bar * surface.b_f.z;
    let grav_m = surface.b_m.transpose() * Vec3::z() * (m * gains.g_bar);
    let f_now = if in_contact { meas.f_f } else { 0.0 };
    let nu_f1 = m * gains.l_f * meas.x_f_dot;
    let nu_m1 = gains.l_m * meas.x_m_dot * m;

    let mut next = *dob;
    if let Some(prev) = dob.prev {
        if dt > 0.0 {
            let nu_f0 = m * gains.l_f * prev.x_f_dot;
            let c_f = grav_f - prev.f_f - u_bar_f;
            next.z_f = observer_step(dob.z_f, gains.l_f, dt, c_f, nu_f0, nu_f1);

            // L_m is symmetric: run the scalar solution along its eigenvectors.
            let eig = SymmetricEigen::new(gains.l_m);
            let v = eig.eigenvectors;
            let nu_m0 = gains.l_m * prev.x_m_dot * m;
            let z = v.transpose() * dob.z_m;
            let c = v.transpose() * (grav_m - u_bar_m);
            let n0 = v.transpose() * nu_m0;
            let n1 = v.transpose() * nu_m1;
            let mut zn = Vec2::zeros();
            for i in 0..2 {
                zn[i] = observer_step(z[i], eig.eigenvalues[i], dt, c[i], n0[i], n1[i]);
            }
            next.z_m = v * zn;
        }
    }
    next.prev = Some(DobSample { x_f_dot: meas.x_f_dot, x_m_dot: meas.x_m_dot, f_f: f_now });
    let delta_f = next.z_f + nu_f1;
    let delta_m = next.z_m + nu_m1;
    (next, delta_f, delta_m)
}

/// Force-direction input for the current mode.
pub fn control_force(
    r: &ReferenceState,
    meas: &Measurement,
    delta_f_hat: f64,
    gains: &GainSet,
    surface: &SurfaceModel,
    mode: RefMode,
) -> f64 {
    let e_x = r.x_fr - meas.x_f;
    let e_v = r.x_fr_dot - meas.x_f_dot;
    let grav = gains.m_bar * gains.g_bar * surface.b_f.z;
    match mode {
        RefMode::Free => gains.m_bar * r.x_fr_ddot + gains.k_d * e_v + gains.k_p * e_x + grav - delta_f_hat,
        RefMode::Contact => {
            let e_f = r.f_fr - meas.f_f;
            gains.m_bar * r.x_fr_ddot - r.f_fr - gains.k_f * e_f + gains.b_f * e_v + grav - delta_f_hat
        }
    }
}

/// Motion-plane input.
pub fn control_motion(
    r: &ReferenceState,
    meas: &Measurement,
    delta_m_hat: &Vec2,
    gains: &GainSet,
    surface: &SurfaceModel,
) -> Vec2 {
    let e_x = r.x_mr - meas.x_m;
    let e_v = r.x_mr_dot - meas.x_m_dot;
    let grav = surface.b_m.transpose() * Vec3::z() * (gains.m_bar * gains.g_bar);
    r.x_mr_ddot * gains.m_bar + gains.k_md * e_v + gains.k_mp * e_x + grav - delta_m_hat
}

pub fn compose_u(u_bar_f: f64, u_bar_m: &Vec2, surface: &SurfaceModel) -> Vec3 {
    surface.compose(u_bar_f, u_bar_m)
}

pub fn decompose_u(u_bar_e: &Vec3, surface: &SurfaceModel) -> (f64, Vec2) {
    surface.decompose(u_bar_e)
}

/// `Ψ v` for yaw `psi`; `Ψ` is its own inverse.
fn psi_apply(psi: f64, v: &Vec3) -> Vec3 {
    let (s, c) = psi.sin_cos();
    Vec3::new(c * v.x + s * v.y, s * v.x - c * v.y, v.z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractedInputs {
    pub thrust: f64,
    pub phi_xr: f64,
    pub phi_yr: f64,
}

/// Thrust and roll/pitch references from `ū_e` and the current attitude.
///
/// Fails when an `asin` argument leaves `[-1, 1]`, the vertical component is
/// not positive, or the thrust exceeds `thrust_ceiling`.
pub fn extract_inputs(u_bar_e: &Vec3, phi: &Vec3, thrust_ceiling: f64) -> Result<ExtractedInputs, ControlError> {
    if !u_bar_e.iter().chain(phi.iter()).all(|v| v.is_finite()) {
        return Err(ControlError::InfeasibleInput("non-finite input".into()));
    }
    let w = psi_apply(phi.z, u_bar_e);
    let denom = phi.x.cos() * phi.y.cos();
    if !(w.z > 0.0) || !(denom > 0.0) {
        return Err(ControlError::InfeasibleInput(format!("vertical component {:.3e} not positive", w.z)));
    }
    let thrust = w.z / denom;
    if thrust > thrust_ceiling {
        return Err(ControlError::InfeasibleInput(format!("thrust {thrust:.3} above ceiling {thrust_ceiling:.3}")));
    }
    let sx = w.y / thrust;
    if sx.abs() > 1.0 {
        return Err(ControlError::InfeasibleInput(format!("roll sine {sx:.4} out of range")));
    }
    let phi_xr = sx.asin();
    let sy = w.x / (thrust * phi.x.cos());
    if sy.abs() > 1.0 {
        return Err(ControlError::InfeasibleInput(format!("pitch sine {sy:.4} out of range")));
    }
    Ok(ExtractedInputs { thrust, phi_xr, phi_yr: sy.asin() })
}

/// Attitude and thrust that reproduce `ū_e` exactly once the attitude has
/// converged: `T = |ū_e|`, the fixed point of [`extract_inputs`].
pub fn extract_inputs_steady(u_bar_e: &Vec3, yaw: f64) -> Result<ExtractedInputs, ControlError> {
    let w = psi_apply(yaw, u_bar_e);
    let thrust = w.norm();
    if !(w.z > 0.0) || !thrust.is_finite() {
        return Err(ControlError::InfeasibleInput("vertical component not positive".into()));
    }
    Ok(ExtractedInputs {
        thrust,
        phi_xr: (w.y / thrust).asin(),
        phi_yr: w.x.atan2(w.z),
    })
}

/// Saturating version of [`extract_inputs`] used in closed loop. Returns the
/// inputs and whether anything had to be clipped.
pub fn extract_inputs_saturated(u_bar_e: &Vec3, phi: &Vec3, thrust_ceiling: f64) -> (ExtractedInputs, bool) {
    if let Ok(out) = extract_inputs(u_bar_e, phi, thrust_ceiling) {
        return (out, false);
    }
    let w = psi_apply(phi.z, u_bar_e);
    let denom = (phi.x.cos() * phi.y.cos()).max(1e-3);
    let thrust = (w.z.max(0.0) / denom).min(thrust_ceiling);
    if thrust <= 0.0 || !thrust.is_finite() {
        return (ExtractedInputs { thrust: 0.0, phi_xr: 0.0, phi_yr: 0.0 }, true);
    }
    let phi_xr = (w.y / thrust).clamp(-1.0, 1.0).asin();
    let phi_yr = (w.x / (thrust * phi.x.cos().max(1e-3))).clamp(-1.0, 1.0).asin();
    (ExtractedInputs { thrust, phi_xr, phi_yr }, true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub u_bar_f: f64,
    pub u_bar_m: Vec2,
    pub u_bar_e: Vec3,
    pub thrust: f64,
    pub phi_r: Vec3,
    pub delta_f_hat: f64,
    pub delta_m_hat: Vec2,
    pub saturated: bool,
}

/// Stateful wrapper: observers, last applied input and the thrust ceiling.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionForceController {
    pub gains: GainSet,
    pub dob: DobState,
    pub thrust_ceiling: f64,
    pub yaw: f64,
    last_u_f: f64,
    last_u_m: Vec2,
}

impl MotionForceController {
    pub fn new(gains: GainSet, yaw: f64) -> Result<Self, ControlError> {
        gains.validate()?;
        Ok(Self {
            thrust_ceiling: 2.0 * gains.m_bar * gains.g_bar,
            gains,
            dob: DobState::default(),
            yaw,
            last_u_f: 0.0,
            last_u_m: Vec2::zeros(),
        })
    }

    /// One control tick: observer update with the previous input, control law
    /// for `mode`, then thrust/attitude extraction at the current attitude.
    pub fn tick(
        &mut self,
        r: &ReferenceState,
        meas: &Measurement,
        phi: &Vec3,
        surface: &SurfaceModel,
        mode: RefMode,
        dt: f64,
    ) -> ControlOutput {
        let in_contact = mode == RefMode::Contact;
        let (dob, delta_f_hat, delta_m_hat) =
            dob_update(&self.dob, meas, self.last_u_f, &self.last_u_m, &self.gains, surface, in_contact, dt);
        self.dob = dob;
        let u_bar_f = control_force(r, meas, delta_f_hat, &self.gains, surface, mode);
        let u_bar_m = control_motion(r, meas, &delta_m_hat, &self.gains, surface);
        let u_bar_e = compose_u(u_bar_f, &u_bar_m, surface);
        let phi_now = Vec3::new(phi.x, phi.y, self.yaw);
        let (inputs, saturated) = extract_inputs_saturated(&u_bar_e, &phi_now, self.thrust_ceiling);
        self.last_u_f = u_bar_f;
        self.last_u_m = u_bar_m;
        ControlOutput {
            u_bar_f,
            u_bar_m,
            u_bar_e,
            thrust: inputs.thrust,
            phi_r: Vec3::new(inputs.phi_xr, inputs.phi_yr, self.yaw),
            delta_f_hat,
            delta_m_hat,
            saturated,
        }
    }
}
