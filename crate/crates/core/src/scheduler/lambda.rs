//! Contraction of successive switching-line crossings, `Λ1Λ2`.
//!
//! Mode 1 (free) runs from the switching line `ΔK e + ΔB ė = 0` to the line
//! `ė = 0`; mode 2 (contact) runs back. `Λ_i` is the ratio of distances to the
//! origin at the end and the start of mode `i`, so one full free/contact cycle
//! scales the state by `Λ1Λ2`.

use thiserror::Error;

use super::SwitchedParams;

/// Relative tolerance for treating `B² = 4K` as a repeated root.
pub const REPEATED_ROOT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LambdaError {
    #[error("switching direction undefined: both modes identical (ΔK = ΔB = 0)")]
    DegenerateDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spectrum {
    Complex,
    Repeated,
    Real,
}

pub fn spectrum(k: f64, b: f64) -> Spectrum {
    let disc = b * b - 4.0 * k;
    if disc.abs() <= REPEATED_ROOT_TOL * (b * b).max(4.0 * k) {
        Spectrum::Repeated
    } else if disc < 0.0 {
        Spectrum::Complex
    } else {
        Spectrum::Real
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaPair {
    pub lambda1: f64,
    pub lambda2: f64,
    pub product: f64,
}

/// `Λ_i` for mode `i ∈ {1, 2}` with stiffness `k`, damping `b`.
pub fn lambda_mode(i: u8, k: f64, b: f64, dk: f64, db: f64) -> Result<f64, LambdaError> {
    let l = dk.hypot(db);
    if l == 0.0 {
        return Err(LambdaError::DegenerateDirection);
    }
    let sgn = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(match spectrum(k, b) {
        Spectrum::Complex => {
            let w = 0.5 * (4.0 * k - b * b).sqrt();
            let q = b * dk - 2.0 * k * db;
            let phi = (-(sgn * 2.0 * w * dk / q).atan()).rem_euclid(std::f64::consts::PI);
            let pre = (k / w) * (dk * dk / (l * l) + q * q / (4.0 * w * w * l * l)).powf(-0.5);
            pre.powf(sgn) * (-b * phi / (2.0 * w)).exp()
        }
        Spectrum::Repeated => {
            let den = 2.0 * dk - b * db;
            ((b * l / den).abs() * (2.0 * dk / den).exp()).powf(sgn)
        }
        Spectrum::Real => {
            let s = (b * b - 4.0 * k).sqrt();
            let la = 0.5 * (-b - s);
            let lb = 0.5 * (-b + s);
            let ta = ((dk * lb + k * db) / (k * l)).abs();
            let tb = ((dk * la + k * db) / (k * l)).abs();
            ta.powf(sgn * la / (lb - la)) * tb.powf(sgn * lb / (la - lb))
        }
    })
}

pub fn lambda_pair(sp: &SwitchedParams) -> Result<LambdaPair, LambdaError> {
    let (dk, db) = (sp.delta_k(), sp.delta_b());
    let lambda1 = lambda_mode(1, sp.k1, sp.b1, dk, db)?;
    let lambda2 = lambda_mode(2, sp.k2, sp.b2, dk, db)?;
    Ok(LambdaPair { lambda1, lambda2, product: lambda1 * lambda2 })
}

/// Whether mode `i` starting on its entry line reaches its exit line at all.
/// Complex modes always do; an overdamped mode may approach the origin
/// without crossing, in which case no further switch happens and `Λ_i` has
/// no trajectory meaning.
pub fn mode_reaches_exit(i: u8, k: f64, b: f64, dk: f64, db: f64) -> bool {
    // entry direction d and exit-line normal n
    let (d, n) = if i == 1 { ([db, -dk], [0.0, 1.0]) } else { ([1.0, 0.0], [dk, db]) };
    let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
    match spectrum(k, b) {
        Spectrum::Complex => true,
        Spectrum::Repeated => {
            let lam = -0.5 * b;
            // (A - λI) d
            let ad = [d[1] - lam * d[0], -k * d[0] - b * d[1] - lam * d[1]];
            let den = dot(n, ad);
            den != 0.0 && -dot(n, d) / den > 0.0
        }
        Spectrum::Real => {
            let s = (b * b - 4.0 * k).sqrt();
            let la = 0.5 * (-b - s);
            let lb = 0.5 * (-b + s);
            let ca = (d[0] * lb - d[1]) / (lb - la);
            let cb = (d[1] - d[0] * la) / (lb - la);
            let alpha = ca * dot(n, [1.0, la]);
            let beta = cb * dot(n, [1.0, lb]);
            if alpha == 0.0 {
                return false;
            }
            let r = -beta / alpha;
            r > 0.0 && r < 1.0
        }
    }
}

pub fn cycle_completes(sp: &SwitchedParams) -> bool {
    let (dk, db) = (sp.delta_k(), sp.delta_b());
    mode_reaches_exit(1, sp.k1, sp.b1, dk, db) && mode_reaches_exit(2, sp.k2, sp.b2, dk, db)
}
