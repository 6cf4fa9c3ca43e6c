//! Gain selection: largest certified region first, then a pattern search on
//! the penalised contraction `J`, then a fixed fallback.

use serde::{Deserialize, Serialize};

use super::lambda::lambda_pair;
use super::region::{regions_explicit, GainRegion};
use super::{GainBox, NoSwitchCondition, RegionParams, SchedulerError, SwitchedParams};
use crate::params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    NsCentroid(NoSwitchCondition),
    PatternSearch,
    Fallback,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::NsCentroid(NoSwitchCondition::Ns1) => "NS1-centroid",
            Provenance::NsCentroid(NoSwitchCondition::Ns2) => "NS2-centroid",
            Provenance::NsCentroid(NoSwitchCondition::Ns3) => "NS3-centroid",
            Provenance::PatternSearch => "PatternSearch",
            Provenance::Fallback => "Fallback",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleResult {
    pub k_f: f64,
    pub b_f: f64,
    pub provenance: Provenance,
    /// `J` at the returned point when it came from the pattern search.
    pub j: Option<f64>,
}

/// Coordinate pattern search of `f` over the box, from `seed`.
///
/// Works in coordinates normalised to the unit square: initial step 1/4,
/// halved whenever no poll improves, stopping once the step falls below
/// 1e-4. Non-finite values count as `+∞`.
pub fn pattern_search_from(f: &impl Fn(f64, f64) -> f64, gain_box: &GainBox, seed: (f64, f64)) -> (f64, f64, f64) {
    let (wk, wb) = gain_box.width();
    let to_real = |x: f64, y: f64| (gain_box.k_f_min + wk * x, gain_box.b_f_min + wb * y);
    let eval = |x: f64, y: f64| {
        let (k, b) = to_real(x, y);
        let v = f(k, b);
        if v.is_finite() { v } else { f64::INFINITY }
    };
    let norm = |v: f64, lo: f64, w: f64| if w > 0.0 { ((v - lo) / w).clamp(0.0, 1.0) } else { 0.0 };
    let mut x = norm(seed.0, gain_box.k_f_min, wk);
    let mut y = norm(seed.1, gain_box.b_f_min, wb);
    let mut best = eval(x, y);
    let mut step = 0.25;
    while step >= 1e-4 {
        let mut improved = false;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let nx = (x + dx * step).clamp(0.0, 1.0);
            let ny = (y + dy * step).clamp(0.0, 1.0);
            if nx == x && ny == y {
                continue;
            }
            let v = eval(nx, ny);
            if v < best {
                best = v;
                x = nx;
                y = ny;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let (k, b) = to_real(x, y);
    (k, b, best)
}

/// Multi-start pattern search: the given seeds, keeping the lowest value.
pub fn pattern_search_multi(
    f: &impl Fn(f64, f64) -> f64,
    gain_box: &GainBox,
    seeds: &[(f64, f64)],
) -> (f64, f64, f64) {
    let mid = [gain_box.midpoint()];
    let seeds = if seeds.is_empty() { &mid[..] } else { seeds };
    let mut best = pattern_search_from(f, gain_box, seeds[0]);
    for &s in &seeds[1..] {
        let r = pattern_search_from(f, gain_box, s);
        if r.2 < best.2 {
            best = r;
        }
    }
    best
}

/// Midpoint plus the four corners.
pub fn default_seeds(gain_box: &GainBox) -> [(f64, f64); 5] {
    [
        gain_box.midpoint(),
        (gain_box.k_f_min, gain_box.b_f_min),
        (gain_box.k_f_max, gain_box.b_f_min),
        (gain_box.k_f_min, gain_box.b_f_max),
        (gain_box.k_f_max, gain_box.b_f_max),
    ]
}

/// `J = Λ1Λ2 + (2/w_k)²(k_f - mid_k)² + (2/w_b)²(b_f - mid_b)²` with the
/// contraction supplied by `lambda`.
pub fn cost_j(
    lambda: &impl Fn(&SwitchedParams) -> f64,
    p: &RegionParams,
    gain_box: &GainBox,
    k_f: f64,
    b_f: f64,
) -> f64 {
    let (mk, mb) = gain_box.midpoint();
    let (wk, wb) = gain_box.width();
    let pen_k = if wk > 0.0 { (2.0 / wk * (k_f - mk)).powi(2) } else { 0.0 };
    let pen_b = if wb > 0.0 { (2.0 / wb * (b_f - mb)).powi(2) } else { 0.0 };
    lambda(&p.switched(k_f, b_f)) + pen_k + pen_b
}

pub fn lambda_product(sp: &SwitchedParams) -> f64 {
    lambda_pair(sp).map(|l| l.product).unwrap_or(f64::NAN)
}

/// Minimise `J` from the given seeds. Returns `(k_f, b_f, J)`.
pub fn pattern_search_j(p: &RegionParams, gain_box: &GainBox, seeds: &[(f64, f64)]) -> (f64, f64, f64) {
    let f = |k: f64, b: f64| cost_j(&lambda_product, p, gain_box, k, b);
    pattern_search_multi(&f, gain_box, seeds)
}

/// Pick the largest region (ties: NS3, then NS2, then NS1).
pub fn largest_region(regions: &[GainRegion]) -> Option<&GainRegion> {
    let rank = |c: NoSwitchCondition| match c {
        NoSwitchCondition::Ns3 => 2,
        NoSwitchCondition::Ns2 => 1,
        NoSwitchCondition::Ns1 => 0,
    };
    regions
        .iter()
        .filter(|r| !r.is_empty())
        .max_by(|a, b| a.area.total_cmp(&b.area).then(rank(a.condition).cmp(&rank(b.condition))))
}

/// Four-step gain schedule with the standard contraction.
pub fn schedule(p: &RegionParams, gain_box: &GainBox) -> Result<ScheduleResult, SchedulerError> {
    schedule_with(p, gain_box, &lambda_product)
}

/// Four-step gain schedule with a caller-supplied `Λ1Λ2`.
///
/// 1. Build the explicit regions. 2. Return the centroid of the largest one.
/// 3. Otherwise minimise `J`; accept when `J` is finite and `Λ1Λ2 < 1` at
///    the optimum. 4. Otherwise return `(k_f_min, k_d)`, clamped to the box.
pub fn schedule_with(
    p: &RegionParams,
    gain_box: &GainBox,
    lambda: &impl Fn(&SwitchedParams) -> f64,
) -> Result<ScheduleResult, SchedulerError> {
    let regions = regions_explicit(p, gain_box)?;
    if let Some(r) = largest_region(&regions) {
        // non-empty, so a centroid exists
        let c = r.centroid().unwrap();
        let (k_f, b_f) = gain_box.clamp(c.x, c.y);
        return Ok(ScheduleResult { k_f, b_f, provenance: Provenance::NsCentroid(r.condition), j: None });
    }
    let f = |k: f64, b: f64| cost_j(lambda, p, gain_box, k, b);
    let (k, b, j) = pattern_search_multi(&f, gain_box, &default_seeds(gain_box));
    let contraction = lambda(&p.switched(k, b));
    if j.is_finite() && contraction < 1.0 {
        let (k_f, b_f) = gain_box.clamp(k, b);
        return Ok(ScheduleResult { k_f, b_f, provenance: Provenance::PatternSearch, j: Some(j) });
    }
    let (k_f, b_f) = gain_box.clamp(gain_box.k_f_min, p.k_d);
    Ok(ScheduleResult { k_f, b_f, provenance: Provenance::Fallback, j: None })
}

/// Rate-limited tracking of scheduled gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSlew {
    pub k_f: f64,
    pub b_f: f64,
    pub rate: f64,
}

impl GainSlew {
    pub fn new(k_f: f64, b_f: f64) -> Self {
        Self { k_f, b_f, rate: params::GAIN_SLEW_RATE }
    }

    /// Move toward `(k_f, b_f)` by at most `rate·dt` per gain.
    pub fn advance(&mut self, target_k: f64, target_b: f64, dt: f64) -> (f64, f64) {
        let max = self.rate * dt;
        self.k_f += (target_k - self.k_f).clamp(-max, max);
        self.b_f += (target_b - self.b_f).clamp(-max, max);
        (self.k_f, self.b_f)
    }
}
