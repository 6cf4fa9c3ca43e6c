//! Online estimation of the contact stiffness and damping.
//!
//! The estimator runs a continuous-time recursive least squares on the
//! regressor `Y = -[x_f - x_fs, ẋ_f]` with forgetting, a covariance ceiling and
//! a clamp on the estimates. The covariance ODE
//! `Ṗ = μ1 P - μ2 P YᵀY P` is integrated in information form
//! (`R = P⁻¹`, `Ṙ = -μ1 R + μ2 YᵀY`), which keeps `P` positive definite for
//! any step length that satisfies `μ1 dt < 1`.

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("non-finite estimator input: {0}")]
    NonFinite(&'static str),
    #[error("time step must be positive and below 1/mu1, got {0}")]
    BadStep(f64),
    #[error("invalid estimator bounds")]
    BadBounds,
}

/// Admissible box for `(k_e, b_e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvBounds {
    pub k_min: f64,
    pub k_max: f64,
    pub b_min: f64,
    pub b_max: f64,
}

impl Default for EnvBounds {
    fn default() -> Self {
        Self {
            k_min: params::K_E_MIN,
            k_max: params::K_E_MAX,
            b_min: params::B_E_MIN,
            b_max: params::B_E_MAX,
        }
    }
}

impl EnvBounds {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.k_min > 0.0 && self.k_min <= self.k_max && self.b_min > 0.0 && self.b_min <= self.b_max {
            Ok(())
        } else {
            Err(EstimatorError::BadBounds)
        }
    }

    pub fn midpoint(&self) -> (f64, f64) {
        (0.5 * (self.k_min + self.k_max), 0.5 * (self.b_min + self.b_max))
    }

    pub fn clamp(&self, k: f64, b: f64) -> (f64, f64) {
        (k.clamp(self.k_min, self.k_max), b.clamp(self.b_min, self.b_max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RlseConfig {
    pub mu1: f64,
    pub mu2: f64,
    pub rho_max: f64,
    pub bounds: EnvBounds,
    pub p0: f64,
}

impl Default for RlseConfig {
    fn default() -> Self {
        Self {
            mu1: params::MU1,
            mu2: params::MU2,
            rho_max: params::RHO_MAX,
            bounds: EnvBounds::default(),
            p0: params::P0_SCALE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvEstimate {
    pub k_hat: f64,
    pub b_hat: f64,
    pub p: Matrix2<f64>,
}

impl EnvEstimate {
    /// Midpoint of the bounds with `P = p0·I`.
    pub fn initial(cfg: &RlseConfig) -> Self {
        let (k_hat, b_hat) = cfg.bounds.midpoint();
        Self { k_hat, b_hat, p: Matrix2::identity() * cfg.p0 }
    }

    pub fn theta(&self) -> Vector2<f64> {
        Vector2::new(self.k_hat, self.b_hat)
    }

    pub fn lambda_max(&self) -> f64 {
        SymmetricEigen::new(self.p).eigenvalues.max()
    }
}

/// Replace `m` by `V diag(f(λ)) Vᵀ`, symmetrising first.
fn map_eigen(m: &Matrix2<f64>, f: impl Fn(f64) -> f64) -> Matrix2<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let d = Matrix2::from_diagonal(&eig.eigenvalues.map(f));
    let out = eig.eigenvectors * d * eig.eigenvectors.transpose();
    (out + out.transpose()) * 0.5
}

/// One estimator step of length `dt`. Call only while in contact.
#[allow(clippy::too_many_arguments)]
pub fn rlse_update(
    est: &EnvEstimate,
    x_f: f64,
    x_dot_f: f64,
    f_f: f64,
    x_fs: f64,
    cfg: &RlseConfig,
    dt: f64,
) -> Result<EnvEstimate, EstimatorError> {
    for (v, name) in [(x_f, "x_f"), (x_dot_f, "x_dot_f"), (f_f, "f_f"), (x_fs, "x_fs")] {
        if !v.is_finite() {
            return Err(EstimatorError::NonFinite(name));
        }
    }
    if !(dt > 0.0) || cfg.mu1 * dt >= 1.0 {
        return Err(EstimatorError::BadStep(dt));
    }
    cfg.bounds.validate()?;

    let y = Vector2::new(-(x_f - x_fs), -x_dot_f);
    let theta = est.theta();
    let eps = f_f - y.dot(&theta);

    let floor = 1.0 / cfg.rho_max;
    let info = map_eigen(&est.p, |l| 1.0 / l.max(1e-300));
    let info_next = info * (1.0 - cfg.mu1 * dt) + (y * y.transpose()) * (cfg.mu2 * dt);
    let p_next = map_eigen(&info_next, |l| 1.0 / l.max(floor));

    let theta_next = theta + p_next * y * (eps * dt);
    let (k_hat, b_hat) = cfg.bounds.clamp(theta_next.x, theta_next.y);
    if !(k_hat.is_finite() && b_hat.is_finite()) {
        return Err(EstimatorError::NonFinite("estimate"));
    }
    Ok(EnvEstimate { k_hat, b_hat, p: p_next })
}

/// Debounced contact detector on the measured normal force.
///
/// Contact is declared after `debounce` consecutive samples with
/// `|f| > threshold` and released after as many samples below it. The
/// surface position is latched at the first sample of the run that declared
/// contact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactDetector {
    pub threshold: f64,
    pub debounce: u32,
    in_contact: bool,
    count: u32,
    candidate_x: f64,
    latched_x_fs: Option<f64>,
}

impl Default for ContactDetector {
    fn default() -> Self {
        Self::new(params::CONTACT_THRESHOLD, params::CONTACT_DEBOUNCE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactEvent {
    Made,
    Lost,
}

impl ContactDetector {
    pub fn new(threshold: f64, debounce: u32) -> Self {
        Self {
            threshold,
            debounce: debounce.max(1),
            in_contact: false,
            count: 0,
            candidate_x: 0.0,
            latched_x_fs: None,
        }
    }

    pub fn in_contact(&self) -> bool {
        self.in_contact
    }

    pub fn x_fs(&self) -> Option<f64> {
        self.latched_x_fs
    }

    /// Feed one sample; returns an event when the contact state toggles.
    pub fn update(&mut self, f_f: f64, x_f: f64) -> Option<ContactEvent> {
        let above = f_f.abs() > self.threshold;
        if above != self.in_contact {
            if self.count == 0 {
                self.candidate_x = x_f;
            }
            self.count += 1;
            if self.count >= self.debounce {
                self.count = 0;
                self.in_contact = above;
                return if above {
                    self.latched_x_fs = Some(self.candidate_x);
                    Some(ContactEvent::Made)
                } else {
                    self.latched_x_fs = None;
                    Some(ContactEvent::Lost)
                };
            }
        } else {
            self.count = 0;
        }
        None
    }
}
