//! Force-controller gain scheduling.
//!
//! In contact the force-direction error obeys a switched second-order system
//!
//! ```text
//! free:    ë + B1 ė + K1 e = w1,   K1 = k_p/m,            B1 = k_d/m
//! contact: ë + B2 ė + K2 e = w2,   K2 = (1+k_f) k_e/m,    B2 = ((1+k_f) b_e + b_f)/m
//! ```
//!
//! The scheduler looks for `(k_f, b_f)` inside a box for which either the
//! free-to-contact transition happens once ([`NoSwitchCondition`]) or the
//! alternation contracts (`Λ1Λ2 < 1`, see [`lambda`]).

pub mod lambda;
pub mod polygon;
pub mod region;
pub mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params;

pub use lambda::{lambda_pair, LambdaError, LambdaPair};
pub use region::{region_explicit, region_grid, GainRegion, RegionBitmap};
pub use search::{pattern_search_j, schedule, schedule_with, GainSlew, Provenance, ScheduleResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulerError {
    #[error("invalid gain box: {0}")]
    BadBox(&'static str),
    #[error("invalid parameters: {0}")]
    BadParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchedParams {
    pub k1: f64,
    pub b1: f64,
    pub k2: f64,
    pub b2: f64,
}

impl SwitchedParams {
    pub fn new(k_p: f64, k_d: f64, k_f: f64, b_f: f64, k_e: f64, b_e: f64, m_t: f64) -> Self {
        Self {
            k1: k_p / m_t,
            b1: k_d / m_t,
            k2: (1.0 + k_f) * k_e / m_t,
            b2: ((1.0 + k_f) * b_e + b_f) / m_t,
        }
    }

    pub fn delta_k(&self) -> f64 {
        self.k1 - self.k2
    }

    pub fn delta_b(&self) -> f64 {
        self.b1 - self.b2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NoSwitchCondition {
    Ns1,
    Ns2,
    Ns3,
}

impl NoSwitchCondition {
    pub const ALL: [NoSwitchCondition; 3] = [Self::Ns1, Self::Ns2, Self::Ns3];

    pub fn label(&self) -> &'static str {
        match self {
            Self::Ns1 => "NS1",
            Self::Ns2 => "NS2",
            Self::Ns3 => "NS3",
        }
    }
}

impl std::fmt::Display for NoSwitchCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// The no-switching inequalities evaluated exactly as stated on the switched
/// parameters.
pub fn check_no_switch(cond: NoSwitchCondition, sp: &SwitchedParams) -> bool {
    let (dk, db) = (sp.delta_k(), sp.delta_b());
    match cond {
        NoSwitchCondition::Ns1 => {
            let disc = sp.b1 * sp.b1 - 4.0 * sp.k1;
            db < 0.0 && disc >= 0.0 && dk / db < 2.0 * sp.k1 / (sp.b1 - disc.sqrt())
        }
        NoSwitchCondition::Ns2 => {
            let disc = sp.b2 * sp.b2 - 4.0 * sp.k2;
            db < 0.0 && disc >= 0.0 && 2.0 * sp.k2 / (sp.b2 + disc.sqrt()) < dk / db
        }
        NoSwitchCondition::Ns3 => db >= 0.0 && 4.0 * sp.k2 <= sp.b2 * sp.b2,
    }
}

/// Admissible box for the force-controller gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainBox {
    pub k_f_min: f64,
    pub k_f_max: f64,
    pub b_f_min: f64,
    pub b_f_max: f64,
}

impl Default for GainBox {
    fn default() -> Self {
        Self {
            k_f_min: params::K_F_MIN,
            k_f_max: params::K_F_MAX,
            b_f_min: params::B_F_MIN,
            b_f_max: params::B_F_MAX,
        }
    }
}

impl GainBox {
    pub fn validate(&self) -> Result<(), SchedulerError> {
        let ok = [self.k_f_min, self.k_f_max, self.b_f_min, self.b_f_max].iter().all(|v| v.is_finite());
        if !ok {
            return Err(SchedulerError::BadBox("non-finite limit"));
        }
        if !(self.k_f_min > 0.0 && self.k_f_min <= self.k_f_max) {
            return Err(SchedulerError::BadBox("need 0 < k_f_min <= k_f_max"));
        }
        if !(self.b_f_min > 0.0 && self.b_f_min <= self.b_f_max) {
            return Err(SchedulerError::BadBox("need 0 < b_f_min <= b_f_max"));
        }
        Ok(())
    }

    pub fn contains(&self, k_f: f64, b_f: f64) -> bool {
        (self.k_f_min..=self.k_f_max).contains(&k_f) && (self.b_f_min..=self.b_f_max).contains(&b_f)
    }

    pub fn clamp(&self, k_f: f64, b_f: f64) -> (f64, f64) {
        (k_f.clamp(self.k_f_min, self.k_f_max), b_f.clamp(self.b_f_min, self.b_f_max))
    }

    pub fn midpoint(&self) -> (f64, f64) {
        (0.5 * (self.k_f_min + self.k_f_max), 0.5 * (self.b_f_min + self.b_f_max))
    }

    pub fn width(&self) -> (f64, f64) {
        (self.k_f_max - self.k_f_min, self.b_f_max - self.b_f_min)
    }
}

/// Everything the regions depend on apart from `(k_f, b_f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub k_p: f64,
    pub k_d: f64,
    pub k_e: f64,
    pub b_e: f64,
    pub m_t: f64,
}

impl RegionParams {
    /// Published free-motion gains with the given environment and mass.
    pub fn with_env(k_e: f64, b_e: f64, m_t: f64) -> Self {
        Self { k_p: params::K_P, k_d: params::K_D, k_e, b_e, m_t }
    }

    pub fn validate(&self) -> Result<(), SchedulerError> {
        let all = [self.k_p, self.k_d, self.k_e, self.b_e, self.m_t];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(SchedulerError::BadParams("k_p, k_d, k_e, b_e, m_t must be positive and finite"))
        }
    }

    pub fn switched(&self, k_f: f64, b_f: f64) -> SwitchedParams {
        SwitchedParams::new(self.k_p, self.k_d, k_f, b_f, self.k_e, self.b_e, self.m_t)
    }

    pub fn check(&self, cond: NoSwitchCondition, k_f: f64, b_f: f64) -> bool {
        check_no_switch(cond, &self.switched(k_f, b_f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn switched_params_example() {
        let sp = SwitchedParams::new(23.5, 19.5, 0.5, 20.0, 200.0, 0.5, 4.0);
        assert_abs_diff_eq!(sp.k1, 5.875, epsilon = 1e-12);
        assert_abs_diff_eq!(sp.b1, 4.875, epsilon = 1e-12);
        assert_abs_diff_eq!(sp.k2, 75.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sp.b2, 5.1875, epsilon = 1e-12);
        assert_abs_diff_eq!(sp.delta_b(), -0.3125, epsilon = 1e-12);
    }

    #[test]
    fn switched_params_limits_and_scaling() {
        let sp = SwitchedParams::new(23.5, 19.5, 0.0, 0.0, 200.0, 0.5, 4.0);
        assert_abs_diff_eq!(sp.k2, 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sp.b2, 0.125, epsilon = 1e-12);
        let a = SwitchedParams::new(23.5, 19.5, 0.3, 12.0, 150.0, 0.4, 3.0);
        let b = SwitchedParams::new(23.5, 19.5, 0.3, 12.0, 150.0, 0.4, 6.0);
        assert_abs_diff_eq!(a.k1, 2.0 * b.k1, epsilon = 1e-12);
        assert_abs_diff_eq!(a.b2, 2.0 * b.b2, epsilon = 1e-12);
    }

    #[test]
    fn ns1_reduces_to_its_ratio_test() {
        let sp = SwitchedParams::new(23.5, 19.5, 0.5, 20.0, 200.0, 0.5, 4.0);
        let d1 = sp.b1 * sp.b1 - 4.0 * sp.k1;
        assert!(d1 >= 0.0);
        let ratio = sp.delta_k() / sp.delta_b();
        let bound = 2.0 * sp.k1 / (sp.b1 - d1.sqrt());
        assert_eq!(check_no_switch(NoSwitchCondition::Ns1, &sp), ratio < bound);
        // the same test written as a bound on b_f
        let c = 0.5 * (sp.b1 + d1.sqrt());
        let (u, m, k_e, b_e) = (1.5, 4.0, 200.0, 0.5);
        let explicit = 20.0 > m * c + u * (k_e / c - b_e);
        assert_eq!(check_no_switch(NoSwitchCondition::Ns1, &sp), explicit);
    }

    #[test]
    fn stiff_wall_rules_out_ns2_ns3() {
        let sp = SwitchedParams { k1: 5.0, b1: 4.0, k2: 500.0, b2: 1.0 };
        assert!(!check_no_switch(NoSwitchCondition::Ns2, &sp));
        assert!(!check_no_switch(NoSwitchCondition::Ns3, &sp));
    }

    #[test]
    fn ns3_boundary_delta_b_zero() {
        let sp = SwitchedParams { k1: 5.0, b1: 10.0, k2: 20.0, b2: 10.0 };
        assert!(check_no_switch(NoSwitchCondition::Ns3, &sp));
    }

    #[test]
    fn box_validation() {
        assert!(GainBox::default().validate().is_ok());
        assert!(GainBox { k_f_min: 0.0, ..GainBox::default() }.validate().is_err());
        assert!(GainBox { b_f_max: 5.0, ..GainBox::default() }.validate().is_err());
    }
}
