//! No-switching regions in the `(k_f, b_f)` box: explicit polygons and the
//! brute-force grid.
//!
//! With `u = 1 + k_f` and the free-mode roots `c < d` of `λ² + B1 λ + K1`
//! (real only when `4 m k_p <= k_d²`), each condition becomes
//!
//! - NS1: `ΔB < 0` and `p2(c) < 0`,
//! - NS2: `ΔB < 0`, `B2² >= 4K2` and `c < λ_b2 < d`, where `λ_b2` is the larger
//!   contact-mode root,
//! - NS3: `ΔB >= 0` and `b_f >= g(u) = -b_e u + 2√(m k_e u)`,
//!
//! where `p2(λ) = λ² + B2 λ + K2`. For a fixed negative `λ`, `p2(λ) < 0` is a
//! half-plane in `(k_f, b_f)`, so NS1 is a polygon. NS2 splits into the
//! polygon `{ΔB < 0, p2(c) < 0, p2(d) > 0}` and a second piece bounded by the
//! curve `g`; the curve is concave, so a tangent line lies above it and
//! replacing it by the best tangent gives a convex inner approximation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::polygon::{self, HalfPlane};
use super::{GainBox, NoSwitchCondition, RegionParams, SchedulerError};
use crate::params;
use crate::Vec2;

const MARGIN: f64 = 1e-9;
const CONTAINS_TOL: f64 = 1e-12;

/// A convex polygon of certified gains, vertices `(k_f, b_f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRegion {
    pub condition: NoSwitchCondition,
    pub vertices: Vec<Vec2>,
    pub area: f64,
}

impl GainRegion {
    pub fn empty(condition: NoSwitchCondition) -> Self {
        Self { condition, vertices: Vec::new(), area: 0.0 }
    }

    fn from_vertices(condition: NoSwitchCondition, vertices: Vec<Vec2>) -> Self {
        let area = polygon::area(&vertices);
        Self { condition, vertices, area }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn centroid(&self) -> Option<Vec2> {
        polygon::centroid(&self.vertices)
    }

    pub fn contains(&self, k_f: f64, b_f: f64) -> bool {
        polygon::contains(&self.vertices, &Vec2::new(k_f, b_f), CONTAINS_TOL)
    }
}

fn box_polygon(b: &GainBox) -> Vec<Vec2> {
    vec![
        Vec2::new(b.k_f_min, b.b_f_min),
        Vec2::new(b.k_f_max, b.b_f_min),
        Vec2::new(b.k_f_max, b.b_f_max),
        Vec2::new(b.k_f_min, b.b_f_max),
    ]
}

/// `m·p2(λ) < 0`, i.e. `-λ b_f - (λ b_e + k_e) u - m λ² > 0`.
fn p2_negative(p: &RegionParams, lam: f64) -> HalfPlane {
    let a_u = -(lam * p.b_e + p.k_e);
    HalfPlane::new(a_u, -lam, a_u - p.m_t * lam * lam)
}

/// `ΔB < 0`: `b_f + b_e u - k_d > 0`.
fn delta_b_negative(p: &RegionParams) -> HalfPlane {
    HalfPlane::new(p.b_e, 1.0, p.b_e - p.k_d)
}

/// `B2 < -2λ`: `-2mλ - b_e u - b_f > 0`.
fn b2_below(p: &RegionParams, lam: f64) -> HalfPlane {
    HalfPlane::new(-p.b_e, -1.0, -2.0 * p.m_t * lam - p.b_e)
}

/// `b_f >= tangent of g at u0`, which implies `b_f >= g(u)`.
fn above_g_tangent(p: &RegionParams, u0: f64) -> HalfPlane {
    let g0 = -p.b_e * u0 + 2.0 * (p.m_t * p.k_e * u0).sqrt();
    let slope = -p.b_e + (p.m_t * p.k_e / u0).sqrt();
    // b_f - g0 - slope (u - u0) >= 0 with u = 1 + k_f
    HalfPlane::new(-slope, 1.0, -g0 - slope * (1.0 - u0))
}

/// Free-mode roots `(c, d)`, `c <= d < 0`, when real.
fn free_roots(p: &RegionParams) -> Option<(f64, f64)> {
    let b1 = p.k_d / p.m_t;
    let k1 = p.k_p / p.m_t;
    let disc = b1 * b1 - 4.0 * k1;
    if 4.0 * p.m_t * p.k_p > p.k_d * p.k_d || disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some((0.5 * (-b1 - s), 0.5 * (-b1 + s)))
}

fn clip_tight(poly: &[Vec2], planes: &[HalfPlane]) -> Vec<Vec2> {
    let tight: Vec<_> = planes.iter().map(|h| h.tightened(MARGIN)).collect();
    polygon::clip_all(poly, &tight)
}

/// Clip with `planes` plus the best of `support` tangents to `g`.
fn clip_with_best_tangent(
    p: &RegionParams,
    gain_box: &GainBox,
    planes: &[HalfPlane],
    support: usize,
) -> Vec<Vec2> {
    let base = clip_tight(&box_polygon(gain_box), planes);
    if base.is_empty() {
        return base;
    }
    // Only the k_f range of the linear part matters for the tangent choice.
    let lo = base.iter().map(|v| v.x).fold(f64::INFINITY, f64::min);
    let hi = base.iter().map(|v| v.x).fold(f64::NEG_INFINITY, f64::max);
    let n = support.max(1);
    let mut best: Vec<Vec2> = Vec::new();
    let mut best_area = -1.0;
    for j in 0..n {
        let k0 = if n == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * j as f64 / (n - 1) as f64 };
        let cut = polygon::clip(&base, &above_g_tangent(p, 1.0 + k0).tightened(MARGIN));
        if cut.is_empty() {
            continue;
        }
        let a = polygon::area(&cut);
        if a > best_area {
            best_area = a;
            best = cut;
        }
    }
    best
}

/// Explicit region for one condition, clipped to the box.
pub fn region_explicit(
    cond: NoSwitchCondition,
    p: &RegionParams,
    gain_box: &GainBox,
) -> Result<GainRegion, SchedulerError> {
    region_explicit_with(cond, p, gain_box, params::REGION_SUPPORT_POINTS)
}

/// As [`region_explicit`] with a chosen number of tangent support points.
pub fn region_explicit_with(
    cond: NoSwitchCondition,
    p: &RegionParams,
    gain_box: &GainBox,
    support: usize,
) -> Result<GainRegion, SchedulerError> {
    gain_box.validate()?;
    p.validate()?;

    if gain_box.k_f_min == gain_box.k_f_max && gain_box.b_f_min == gain_box.b_f_max {
        let (k, b) = (gain_box.k_f_min, gain_box.b_f_min);
        return Ok(if p.check(cond, k, b) {
            GainRegion::from_vertices(cond, vec![Vec2::new(k, b)])
        } else {
            GainRegion::empty(cond)
        });
    }

    let vertices = match cond {
        NoSwitchCondition::Ns1 => match free_roots(p) {
            None => Vec::new(),
            Some((c, _)) => clip_tight(&box_polygon(gain_box), &[delta_b_negative(p), p2_negative(p, c)]),
        },
        NoSwitchCondition::Ns2 => match free_roots(p) {
            None => Vec::new(),
            Some((c, d)) => {
                let piece_a = clip_tight(
                    &box_polygon(gain_box),
                    &[delta_b_negative(p), p2_negative(p, c), p2_negative(p, d).negated()],
                );
                let piece_b = clip_with_best_tangent(
                    p,
                    gain_box,
                    &[delta_b_negative(p), p2_negative(p, d).negated(), b2_below(p, c)],
                    support,
                );
                if polygon::area(&piece_b) > polygon::area(&piece_a) {
                    piece_b
                } else {
                    piece_a
                }
            }
        },
        NoSwitchCondition::Ns3 => {
            // ΔB >= 0
            let db_nonneg = delta_b_negative(p).negated();
            clip_with_best_tangent(p, gain_box, &[db_nonneg], support)
        }
    };
    let vertices = vertices
        .into_iter()
        .map(|v| {
            let (k, b) = gain_box.clamp(v.x, v.y);
            Vec2::new(k, b)
        })
        .collect();
    Ok(GainRegion::from_vertices(cond, vertices))
}

/// All three explicit regions.
pub fn regions_explicit(p: &RegionParams, gain_box: &GainBox) -> Result<[GainRegion; 3], SchedulerError> {
    Ok([
        region_explicit(NoSwitchCondition::Ns1, p, gain_box)?,
        region_explicit(NoSwitchCondition::Ns2, p, gain_box)?,
        region_explicit(NoSwitchCondition::Ns3, p, gain_box)?,
    ])
}

/// Membership bitmap on an `(N+1)×(N+1)` grid. Row `i` is
/// `b_f = b_f_min + i·Δb`, column `j` is `k_f = k_f_min + j·Δk`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionBitmap {
    pub n: usize,
    pub bits: Vec<bool>,
}

impl RegionBitmap {
    pub fn side(&self) -> usize {
        self.n + 1
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.side() + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// True when the cell and its (up to) 8 neighbours carry the same value.
    pub fn is_interior(&self, row: usize, col: usize) -> bool {
        let side = self.side();
        let v = self.get(row, col);
        let r0 = row.saturating_sub(1);
        let c0 = col.saturating_sub(1);
        let r1 = (row + 1).min(side - 1);
        let c1 = (col + 1).min(side - 1);
        (r0..=r1).all(|r| (c0..=c1).all(|c| self.get(r, c) == v))
    }
}

/// Grid coordinates `(k_f, b_f)` of cell `(row, col)`.
pub fn grid_point(gain_box: &GainBox, n: usize, row: usize, col: usize) -> (f64, f64) {
    let n = n.max(1) as f64;
    let (wk, wb) = gain_box.width();
    (gain_box.k_f_min + wk * col as f64 / n, gain_box.b_f_min + wb * row as f64 / n)
}

fn bitmap_of(gain_box: &GainBox, n: usize, f: impl Fn(f64, f64) -> bool) -> RegionBitmap {
    let n = n.max(1);
    let side = n + 1;
    let mut bits = Vec::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            let (k, b) = grid_point(gain_box, n, row, col);
            bits.push(f(k, b));
        }
    }
    RegionBitmap { n, bits }
}

/// Brute-force evaluation of the no-switching inequalities on the grid.
pub fn region_grid(cond: NoSwitchCondition, p: &RegionParams, gain_box: &GainBox, n: usize) -> RegionBitmap {
    bitmap_of(gain_box, n, |k, b| p.check(cond, k, b))
}

/// Rasterise an explicit region onto the same grid.
pub fn rasterize(region: &GainRegion, gain_box: &GainBox, n: usize) -> RegionBitmap {
    bitmap_of(gain_box, n, |k, b| region.contains(k, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GridComparison {
    /// Cells certified by the polygon but rejected by the inequalities.
    pub false_certifications: usize,
    /// Cells away from both boundaries.
    pub interior_cells: usize,
    pub interior_disagreements: usize,
}

impl GridComparison {
    pub fn interior_agreement(&self) -> f64 {
        if self.interior_cells == 0 {
            1.0
        } else {
            1.0 - self.interior_disagreements as f64 / self.interior_cells as f64
        }
    }
}

/// Compare a rasterised explicit region with the grid oracle.
pub fn compare_with_grid(explicit: &RegionBitmap, grid: &RegionBitmap) -> GridComparison {
    assert_eq!(explicit.n, grid.n, "bitmaps must share a grid");
    let side = grid.side();
    let mut out = GridComparison::default();
    for row in 0..side {
        for col in 0..side {
            let e = explicit.get(row, col);
            let g = grid.get(row, col);
            if e && !g {
                out.false_certifications += 1;
            }
            if explicit.is_interior(row, col) && grid.is_interior(row, col) {
                out.interior_cells += 1;
                if e != g {
                    out.interior_disagreements += 1;
                }
            }
        }
    }
    out
}

/// Polygon vertices as CSV: `condition,index,k_f,b_f`.
pub fn write_regions_csv<W: Write>(regions: &[GainRegion], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["condition", "index", "k_f", "b_f"])?;
    for r in regions {
        for (i, v) in r.vertices.iter().enumerate() {
            w.write_record([r.condition.label().to_string(), i.to_string(), v.x.to_string(), v.y.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Row-major bitmap as CSV: `row,col,k_f,b_f,inside`.
pub fn write_bitmap_csv<W: Write>(bitmap: &RegionBitmap, gain_box: &GainBox, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "col", "k_f", "b_f", "inside"])?;
    let side = bitmap.side();
    for row in 0..side {
        for col in 0..side {
            let (k, b) = grid_point(gain_box, bitmap.n, row, col);
            let inside = if bitmap.get(row, col) { "1" } else { "0" };
            w.write_record([row.to_string(), col.to_string(), k.to_string(), b.to_string(), inside.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
