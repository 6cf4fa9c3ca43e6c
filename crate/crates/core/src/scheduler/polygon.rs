//! Convex polygons in the `(k_f, b_f)` plane.

use crate::Vec2;

/// `a·p + c >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub a: Vec2,
    pub c: f64,
}

impl HalfPlane {
    pub fn new(a_k: f64, a_b: f64, c: f64) -> Self {
        Self { a: Vec2::new(a_k, a_b), c }
    }

    pub fn eval(&self, p: &Vec2) -> f64 {
        self.a.dot(p) + self.c
    }

    /// Shift the boundary inward by a small relative margin so that points on
    /// the returned polygon satisfy the strict inequality.
    pub fn tightened(&self, rel: f64) -> Self {
        let scale = 1.0 + self.a.abs().sum() + self.c.abs();
        Self { a: self.a, c: self.c - rel * scale }
    }

    pub fn negated(&self) -> Self {
        Self { a: -self.a, c: -self.c }
    }
}

/// Keep the part of a convex polygon where `h >= 0`.
pub fn clip(poly: &[Vec2], h: &HalfPlane) -> Vec<Vec2> {
    let n = poly.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return if h.eval(&poly[0]) >= 0.0 { poly.to_vec() } else { Vec::new() };
    }
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let fp = h.eval(&p);
        let fq = h.eval(&q);
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push(p + (q - p) * t);
        }
    }
    dedupe(out)
}

fn dedupe(mut pts: Vec<Vec2>) -> Vec<Vec2> {
    const EPS: f64 = 1e-12;
    pts.dedup_by(|a, b| (*a - *b).abs().max() <= EPS * (1.0 + b.abs().max()));
    while pts.len() > 1 {
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if (first - last).abs().max() <= EPS * (1.0 + first.abs().max()) {
            pts.pop();
        } else {
            break;
        }
    }
    pts
}

pub fn clip_all(poly: &[Vec2], planes: &[HalfPlane]) -> Vec<Vec2> {
    let mut cur = poly.to_vec();
    for h in planes {
        cur = clip(&cur, h);
        if cur.is_empty() {
            break;
        }
    }
    cur
}

/// Signed shoelace area (positive for counter-clockwise order).
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        s += p.x * q.y - q.x * p.y;
    }
    0.5 * s
}

pub fn area(poly: &[Vec2]) -> f64 {
    signed_area(poly).abs()
}

/// Area-weighted centroid; the vertex mean for degenerate polygons.
pub fn centroid(poly: &[Vec2]) -> Option<Vec2> {
    let n = poly.len();
    if n == 0 {
        return None;
    }
    let a = signed_area(poly);
    let span = poly.iter().fold(0.0f64, |m, p| m.max(p.abs().max()));
    if a.abs() <= 1e-14 * (1.0 + span * span) {
        let sum = poly.iter().fold(Vec2::zeros(), |s, p| s + p);
        return Some(sum / n as f64);
    }
    let mut c = Vec2::zeros();
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let cross = p.x * q.y - q.x * p.y;
        c += (p + q) * cross;
    }
    Some(c / (6.0 * a))
}

/// Inclusive containment test for a convex polygon in either orientation.
pub fn contains(poly: &[Vec2], p: &Vec2, tol: f64) -> bool {
    match poly.len() {
        0 => false,
        1 => (poly[0] - p).norm() <= tol,
        2 => {
            let d = poly[1] - poly[0];
            let t = ((p - poly[0]).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
            (poly[0] + d * t - p).norm() <= tol
        }
        n => {
            let orient = signed_area(poly).signum();
            (0..n).all(|i| {
                let a = poly[i];
                let b = poly[(i + 1) % n];
                let e = b - a;
                let cross = e.x * (p.y - a.y) - e.y * (p.x - a.x);
                orient * cross >= -tol * e.norm()
            })
        }
    }
}

pub fn is_convex(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return true;
    }
    let orient = signed_area(poly).signum();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        let e1 = b - a;
        let e2 = c - b;
        orient * (e1.x * e2.y - e1.y * e2.x) >= -1e-9 * e1.norm() * e2.norm()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square() -> Vec<Vec2> {
        vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)]
    }

    #[test]
    fn square_area_centroid() {
        let sq = unit_square();
        assert!((area(&sq) - 1.0).abs() < 1e-15);
        assert!((centroid(&sq).unwrap() - Vec2::new(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn clip_to_triangle() {
        // x + y <= 1
        let tri = clip(&unit_square(), &HalfPlane::new(-1.0, -1.0, 1.0));
        assert_eq!(tri.len(), 3);
        assert!((area(&tri) - 0.5).abs() < 1e-15);
        let c = centroid(&tri).unwrap();
        assert!((c - Vec2::new(1.0 / 3.0, 1.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn clip_away_everything() {
        assert!(clip(&unit_square(), &HalfPlane::new(1.0, 0.0, -2.0)).is_empty());
    }

    #[test]
    fn degenerate_centroid_is_vertex_mean() {
        let seg = vec![Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0)];
        assert_eq!(centroid(&seg), Some(Vec2::new(1.0, 0.0)));
        assert_eq!(centroid(&[]), None);
    }

    proptest! {
        #[test]
        fn clipped_square_stays_convex_and_inside(
            cuts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 0..6),
        ) {
            let planes: Vec<_> = cuts.iter().map(|&(a, b, c)| HalfPlane::new(a, b, c)).collect();
            let poly = clip_all(&unit_square(), &planes);
            prop_assert!(is_convex(&poly));
            for p in &poly {
                prop_assert!(p.x >= -1e-12 && p.x <= 1.0 + 1e-12);
                prop_assert!(p.y >= -1e-12 && p.y <= 1.0 + 1e-12);
                for h in &planes {
                    prop_assert!(h.eval(p) >= -1e-12);
                }
            }
            if let Some(c) = centroid(&poly) {
                prop_assert!(contains(&poly, &c, 1e-9));
            }
        }
    }
}
