//! Reference smoothers for the free-flight and contact phases.
//!
//! Both generators are linear time-invariant between controller samples, so
//! each step applies the exact state transition over `dt` (the setpoints are
//! held over the step). This keeps the contact generator stable when
//! `k̂_e/b̂_e` is large compared with the controller rate.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::estimator::EnvEstimate;
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RefMode {
    Free,
    Contact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceState {
    pub x_fr: f64,
    pub x_fr_dot: f64,
    pub x_fr_ddot: f64,
    pub f_fr: f64,
    pub f_fr_dot: f64,
    pub x_mr: Vec2,
    pub x_mr_dot: Vec2,
    pub x_mr_ddot: Vec2,
    pub mode: RefMode,
}

impl ReferenceState {
    /// At rest at the given position, in free flight.
    pub fn at(x_f: f64, x_m: Vec2) -> Self {
        Self {
            x_fr: x_f,
            x_fr_dot: 0.0,
            x_fr_ddot: 0.0,
            f_fr: 0.0,
            f_fr_dot: 0.0,
            x_mr: x_m,
            x_mr_dot: Vec2::zeros(),
            x_mr_ddot: Vec2::zeros(),
            mode: RefMode::Free,
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.x_fr, self.x_fr_dot, self.x_fr_ddot, self.f_fr, self.f_fr_dot]
            .iter()
            .chain(self.x_mr.iter())
            .chain(self.x_mr_dot.iter())
            .chain(self.x_mr_ddot.iter())
            .all(|v| v.is_finite())
    }
}

/// Exact step of `ÿ = -2ω ẏ - ω² y` over `h`. Returns `(y, ẏ, ÿ)`.
pub fn critically_damped(y0: f64, v0: f64, omega: f64, h: f64) -> (f64, f64, f64) {
    let e = (-omega * h).exp();
    let c = v0 + omega * y0;
    let y = (y0 + c * h) * e;
    let v = (v0 - omega * c * h) * e;
    (y, v, -2.0 * omega * v - omega * omega * y)
}

fn motion_step(r: &mut ReferenceState, x_md: &Vec2, omega_n: f64, dt: f64) {
    for i in 0..2 {
        let (y, v, a) = critically_damped(r.x_mr[i] - x_md[i], r.x_mr_dot[i], omega_n, dt);
        r.x_mr[i] = x_md[i] + y;
        r.x_mr_dot[i] = v;
        r.x_mr_ddot[i] = a;
    }
}

/// Free-flight generator: both the force-direction and motion coordinates are
/// driven toward their setpoints by a critically damped second-order filter.
pub fn free_step(r: &ReferenceState, x_fd: f64, x_md: &Vec2, omega_n: f64, dt: f64) -> ReferenceState {
    debug_assert_eq!(r.mode, RefMode::Free);
    let mut out = *r;
    let (y, v, a) = critically_damped(r.x_fr - x_fd, r.x_fr_dot, omega_n, dt);
    out.x_fr = x_fd + y;
    out.x_fr_dot = v;
    out.x_fr_ddot = a;
    out.f_fr = 0.0;
    out.f_fr_dot = 0.0;
    motion_step(&mut out, x_md, omega_n, dt);
    out
}

fn contact_matrix(k_hat: f64, b_hat: f64, omega_n: f64) -> Matrix4<f64> {
    // state: (f_fr - f_fd, ḟ_fr, x_fr, ẋ_fr)
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0,
        -omega_n * omega_n, -2.0 * omega_n, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, -1.0 / b_hat, 0.0, -k_hat / b_hat,
    )
}

/// Contact generator: the force reference is smoothed toward `f_fd` and the
/// position reference follows `b̂ ẍ + k̂ ẋ + ḟ = 0`, using the current
/// environment estimate.
pub fn contact_step(
    r: &ReferenceState,
    f_fd: f64,
    x_md: &Vec2,
    est: &EnvEstimate,
    omega_n: f64,
    dt: f64,
) -> ReferenceState {
    debug_assert_eq!(r.mode, RefMode::Contact);
    assert!(est.b_hat > 0.0, "damping estimate must be positive");
    let a = contact_matrix(est.k_hat, est.b_hat, omega_n);
    let s0 = Vector4::new(r.f_fr - f_fd, r.f_fr_dot, r.x_fr, r.x_fr_dot);
    let s1 = (a * dt).exp() * s0;
    let mut out = *r;
    out.f_fr = f_fd + s1[0];
    out.f_fr_dot = s1[1];
    out.x_fr = s1[2];
    out.x_fr_dot = s1[3];
    out.x_fr_ddot = -(est.k_hat / est.b_hat) * s1[3] - s1[1] / est.b_hat;
    motion_step(&mut out, x_md, omega_n, dt);
    out
}

/// Hand-off between generators. Positions and velocities carry over; the
/// force reference starts from the measured force on contact and resets to
/// zero on release.
pub fn switch_mode(r: &ReferenceState, new_mode: RefMode, measured_f_f: f64) -> ReferenceState {
    let mut out = *r;
    out.mode = new_mode;
    match new_mode {
        RefMode::Contact => {
            out.f_fr = measured_f_f;
            out.f_fr_dot = 0.0;
        }
        RefMode::Free => {
            out.f_fr = 0.0;
            out.f_fr_dot = 0.0;
        }
    }
    out
}
