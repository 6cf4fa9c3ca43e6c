//! Published experiment parameters and the artifact-level defaults built on
//! top of them.

/// Forgetting gain on `P` in the estimator.
pub const MU1: f64 = 0.9996;
/// Information gain on `P` in the estimator.
pub const MU2: f64 = 0.9996;
/// Covariance eigenvalue ceiling.
pub const RHO_MAX: f64 = 5000.0;

pub const K_E_MIN: f64 = 50.0;
pub const B_E_MIN: f64 = 0.1;
pub const K_E_MAX: f64 = 500.0;
pub const B_E_MAX: f64 = 1.0;

/// Natural frequency of the reference smoothers, rad/s.
pub const OMEGA_N: f64 = 10.0;
pub const K_P: f64 = 23.5;
pub const K_D: f64 = 19.5;
/// Diagonal of the motion-space stiffness gain `K_mp`.
pub const K_MP: f64 = 23.5;
/// Diagonal of the motion-space damping gain `K_md`.
pub const K_MD: f64 = 19.5;

pub const K_F_MIN: f64 = 0.1;
pub const B_F_MIN: f64 = 10.0;
pub const K_F_MAX: f64 = 1.0;
pub const B_F_MAX: f64 = 40.0;

/// Constant force setpoint of the first experiment, N.
pub const CONSTANT_FORCE: f64 = -6.0;

/// Time-varying force setpoint `-3.5 + 2.5 cos(2πt/5)`, N.
pub fn sinusoid_force(t: f64) -> f64 {
    -3.5 + 2.5 * (2.0 * std::f64::consts::PI * t / 5.0).cos()
}

pub const GRAVITY: f64 = 9.81;

/// Simulated total mass. The airframe alone is 3.78 kg; the arm mass is not
/// published, so this is a configuration default.
pub const DEFAULT_TRUE_MASS: f64 = 4.2;
/// Nominal mass used by the controller and the scheduler.
pub const DEFAULT_NOMINAL_MASS: f64 = 4.0;

/// Initial estimator covariance `P(0) = 100 I`.
pub const P0_SCALE: f64 = 100.0;

/// Contact detector: force magnitude threshold, N.
pub const CONTACT_THRESHOLD: f64 = 0.1;
/// Contact detector: consecutive samples required to toggle.
pub const CONTACT_DEBOUNCE: u32 = 3;

pub const PLANT_DT: f64 = 1e-3;
pub const CONTROL_RATE_HZ: f64 = 500.0;
pub const SCHEDULER_RATE_HZ: f64 = 10.0;
/// Maximum slew of each scheduled gain, units/s.
pub const GAIN_SLEW_RATE: f64 = 5.0;

/// Support points used to linearise curved region boundaries.
pub const REGION_SUPPORT_POINTS: usize = 32;
