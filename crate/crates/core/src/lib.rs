//! Motion/force control of an underactuated aerial manipulator pushing on a
//! (possibly tilted) surface.
//!
//! The crate is organised the way the control stack is wired at run time:
//!
//! - [`plant`]: ground-truth translational dynamics of the end-effector with an
//!   attitude lag, Kelvin-Voigt contact and injected disturbances.
//! - [`estimator`]: continuous-time recursive least squares for the contact
//!   stiffness and damping, plus the debounced contact detector.
//! - [`reference`]: second-order smoothing of motion and force setpoints for the
//!   free-flight and contact phases.
//! - [`controller`]: the switching motion/force law with disturbance observers
//!   and the thrust/attitude extraction.
//! - [`scheduler`]: stability regions for the contact gains `(k_f, b_f)`, the
//!   switching contraction `Λ1Λ2`, pattern search and the gain schedule.
//! - [`harness`]: scenarios, closed-loop runs, metrics, CSV logs and the
//!   scheduler benchmark.
//!
//! ```
//! use uam_contact::plant::{contact_force, SurfaceModel};
//! use nalgebra::Vector3;
//!
//! let surface = SurfaceModel::vertical(Vector3::new(1.0, 0.0, 1.0), 200.0, 0.5);
//! // 1 cm into the surface, at rest
//! let f = contact_force(surface.x_fs() + 0.01, 0.0, &surface);
//! assert!((f + 2.0).abs() < 1e-12);
//! ```
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod estimator;
pub mod harness;
pub mod params;
pub mod plant;
pub mod reference;
pub mod scheduler;

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
pub type Mat3x2 = nalgebra::Matrix3x2<f64>;

pub use controller::{GainSet, MotionForceController};
pub use estimator::{ContactDetector, EnvEstimate, RlseConfig};
pub use harness::{RunLog, Scenario};
pub use plant::{PlantConfig, PlantState, SurfaceModel};
pub use reference::{RefMode, ReferenceState};
pub use scheduler::{GainBox, GainRegion, NoSwitchCondition, SwitchedParams};
