use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::projgeom::{cross2, dist2, norm2, sub2, Mat3, Vec2, Vec3};

/// Relative tolerance (sine of the turning angle) below which a vertex is
/// treated as collinear with its neighbours and dropped.
const CONVEXITY_TOL: f64 = 1e-9;
/// Largest fraction of points that may be dropped as numerically degenerate
/// before the data are declared inconsistent.
const MAX_DROPPED_FRACTION: f64 = 0.05;
/// Slack for accepting a spline parameter slightly outside `[0, 1]`.
const ARC_PARAM_SLACK: f64 = 1e-9;

/// Boundary sandwich for a strictly convex domain known through boundary
/// points and their supporting lines.
///
/// * inner hull: the convex polygon through the points;
/// * outer polygon: the intersection of the supporting half-planes;
/// * interpolated boundary: on each gap between consecutive points, the conic
///   arc tangent to both supporting lines at both points (a rational quadratic
///   Bézier arc with control polygon `Pᵢ, oᵢ, Pᵢ₊₁`, `oᵢ` the outer vertex).
///   The arc weight is fitted to the neighbouring points, so when all points
///   lie on one conic the conic is reproduced exactly. The interpolated curve is
///   C¹, strictly convex, and lies between inner hull and outer polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Sandwich {
    points: Vec<Vec2>,
    /// `(a, b, c)` with `a x + b y + c > 0` on the domain side.
    tangents: Vec<Vec3>,
    angles: Vec<f64>,
    outer: Vec<Vec2>,
    weights: Vec<f64>,
    vertex_gap: Vec<f64>,
    gap: f64,
    dropped: usize,
}

fn eval_line(l: &Vec3, x: Vec2) -> f64 {
    l[0] * x[0] + l[1] * x[1] + l[2]
}

fn line_norm(l: &Vec3) -> f64 {
    l[0].hypot(l[1])
}

fn wrap_2pi(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

/// Affine barycentric coordinates of `q` in the triangle `(a, o, b)`.
fn barycentric(a: Vec2, o: Vec2, b: Vec2, q: Vec2) -> Option<Vec3> {
    let m = Mat3::new(a[0], o[0], b[0], a[1], o[1], b[1], 1.0, 1.0, 1.0);
    m.lu().solve(&Vec3::new(q[0], q[1], 1.0))
}

/// Weight of the conic arc with control polygon `(a, o, b)` that passes
/// through `q`.
fn weight_through(a: Vec2, o: Vec2, b: Vec2, q: Vec2) -> Option<f64> {
    let beta = barycentric(a, o, b, q)?;
    if beta[0] > 0.0 && beta[2] > 0.0 {
        let w = beta[1].abs() / (2.0 * (beta[0] * beta[2]).sqrt());
        if w.is_finite() && w > 0.0 {
            return Some(w);
        }
    }
    None
}

impl Sandwich {
    /// Build from boundary points and supporting lines given in a chart
    /// where the origin is interior. Points closer than `min_separation` to
    /// the previously kept point (in angular order) are skipped.
    pub fn new(points: &[Vec2], tangents: &[Vec3], min_separation: f64) -> Result<Self> {
        if points.len() != tangents.len() {
            return Err(Error::InvalidParameter(
                "points and tangents differ in number".into(),
            ));
        }
        let mut items: Vec<(f64, Vec2, Vec3)> = Vec::with_capacity(points.len());
        for (p, l) in points.iter().zip(tangents) {
            let n = line_norm(l);
            if n == 0.0 || !n.is_finite() || !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InconsistentRepresentation(
                    "non-finite boundary datum".into(),
                ));
            }
            // Already-normalized input is kept bit for bit, so exported
            // domains reload exactly.
            let mut l = if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
                *l
            } else {
                l / n
            };
            if l[2] < 0.0 {
                l = -l;
            }
            if l[2] <= 0.0 {
                return Err(Error::InconsistentRepresentation(
                    "supporting line passes through the chart origin".into(),
                ));
            }
            if eval_line(&l, *p).abs() > 1e-8 {
                return Err(Error::InconsistentRepresentation(format!(
                    "supporting line misses its point by {:.3e}",
                    eval_line(&l, *p).abs()
                )));
            }
            items.push((p[1].atan2(p[0]), *p, l));
        }
        items.sort_by(|a, b| a.0.total_cmp(&b.0));

        let total = items.len();
        let sep = min_separation.max(1e-12);
        let mut kept: Vec<(f64, Vec2, Vec3)> = Vec::with_capacity(total);
        for it in items {
            if let Some(last) = kept.last() {
                if dist2(last.1, it.1) < sep {
                    continue;
                }
            }
            kept.push(it);
        }
        while kept.len() > 3 && dist2(kept[0].1, kept[kept.len() - 1].1) < sep {
            kept.pop();
        }
        let after_thinning = kept.len();

        // Remove numerically degenerate vertices (flat turns or tangent lines
        // marginally cutting a neighbour), failing on gross violations.
        let mut dropped = 0;
        loop {
            let k = kept.len();
            if k < 3 {
                return Err(Error::InsufficientData {
                    found: k,
                    needed: 3,
                });
            }
            let mut bad = None;
            for i in 0..k {
                let prev = kept[(i + k - 1) % k].1;
                let cur = kept[i].1;
                let next = kept[(i + 1) % k].1;
                let e1 = sub2(cur, prev);
                let e2 = sub2(next, cur);
                let turn = cross2(e1, e2) / (norm2(e1) * norm2(e2));
                let l = &kept[i].2;
                let sp = eval_line(l, prev) / norm2(e1);
                let sn = eval_line(l, next) / norm2(e2);
                let worst = turn.min(sp).min(sn);
                if worst <= CONVEXITY_TOL {
                    if worst < -1e-6 {
                        return Err(Error::InconsistentRepresentation(format!(
                            "boundary points not in convex position (defect {worst:.3e})"
                        )));
                    }
                    bad = Some(i);
                    break;
                }
            }
            match bad {
                Some(i) => {
                    kept.remove(i);
                    dropped += 1;
                }
                None => break,
            }
        }
        if dropped as f64 > MAX_DROPPED_FRACTION * after_thinning as f64 && dropped > 2 {
            return Err(Error::InconsistentRepresentation(format!(
                "{dropped} of {after_thinning} boundary points violate convexity"
            )));
        }
        // The origin must be interior: every angular step is below π.
        let k = kept.len();
        for i in 0..k {
            if cross2(kept[i].1, kept[(i + 1) % k].1) <= 0.0 {
                return Err(Error::InconsistentRepresentation(
                    "chart origin is not inside the inner hull".into(),
                ));
            }
        }

        let points: Vec<Vec2> = kept.iter().map(|t| t.1).collect();
        let tangents: Vec<Vec3> = kept.iter().map(|t| t.2).collect();
        let angles: Vec<f64> = kept.iter().map(|t| t.0).collect();

        let mut outer = Vec::with_capacity(k);
        let mut vertex_gap = Vec::with_capacity(k);
        for i in 0..k {
            let j = (i + 1) % k;
            let h = tangents[i].cross(&tangents[j]);
            if h[2].abs() < 1e-300 {
                return Err(Error::InconsistentRepresentation(
                    "consecutive supporting lines are parallel".into(),
                ));
            }
            let o = [h[0] / h[2], h[1] / h[2]];
            let chord = sub2(points[j], points[i]);
            let height = -cross2(chord, sub2(o, points[i])) / norm2(chord);
            // The outer vertex lies beyond the chord, on the far side from the origin.
            // Nearly flat stretches leave the vertex on the chord up to rounding.
            let height = if height > -1e-10 {
                height.max(0.0)
            } else {
                height
            };
            if !(height >= 0.0) || !o[0].is_finite() {
                return Err(Error::InconsistentRepresentation(format!(
                    "outer vertex on the wrong side of the inner hull ({height:.3e})"
                )));
            }
            outer.push(o);
            vertex_gap.push(height.abs());
        }
        let gap = vertex_gap.iter().cloned().fold(0.0, f64::max);

        let mut weights = Vec::with_capacity(k);
        for i in 0..k {
            let (a, o, b) = (points[i], outer[i], points[(i + 1) % k]);
            let left = weight_through(a, o, b, points[(i + k - 1) % k]);
            let right = weight_through(a, o, b, points[(i + 2) % k]);
            let w = match (left, right) {
                (Some(l), Some(r)) => (l * r).sqrt(),
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => std::f64::consts::FRAC_1_SQRT_2,
            };
            weights.push(w);
        }

        Ok(Sandwich {
            points,
            tangents,
            angles,
            outer,
            weights,
            vertex_gap,
            gap,
            dropped,
        })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn tangents(&self) -> &[Vec3] {
        &self.tangents
    }

    pub fn outer_vertices(&self) -> &[Vec2] {
        &self.outer
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Hausdorff distance between inner hull and outer polygon (largest
    /// distance from an outer vertex to the inner hull).
    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn vertex_gaps(&self) -> &[f64] {
        &self.vertex_gap
    }

    /// Points discarded as numerically degenerate during construction.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index `i` of the wedge `[θᵢ, θᵢ₊₁)` about the origin that contains `x`.
    fn wedge(&self, x: Vec2) -> usize {
        let theta = x[1].atan2(x[0]);
        let idx = self.angles.partition_point(|&a| a <= theta);
        if idx == 0 {
            self.points.len() - 1
        } else {
            idx - 1
        }
    }

    pub fn inside_inner(&self, x: Vec2) -> bool {
        let k = self.points.len();
        let i = self.wedge(x);
        let (a, b) = (self.points[i], self.points[(i + 1) % k]);
        cross2(sub2(b, a), sub2(x, a)) > 0.0
    }

    pub fn inside_outer(&self, x: Vec2) -> bool {
        self.tangents.iter().all(|l| eval_line(l, x) > 0.0)
    }

    /// Membership for the interpolated boundary.
    pub fn inside(&self, x: Vec2) -> bool {
        if self.inside_inner(x) {
            return true;
        }
        let k = self.points.len();
        let i = self.wedge(x);
        let (a, o, b) = (self.points[i], self.outer[i], self.points[(i + 1) % k]);
        match barycentric(a, o, b, x) {
            Some(beta) => {
                let w = self.weights[i];
                beta[0] > 0.0
                    && beta[2] > 0.0
                    && beta[1] * beta[1] < 4.0 * w * w * beta[0] * beta[2]
            }
            None => false,
        }
    }

    /// Index `j` such that the ray from `x` along `v` leaves the convex
    /// polygon `poly` (which must contain `x`) through edge `(j−1, j)`.
    fn exit_vertex(poly: &[Vec2], x: Vec2, v: Vec2) -> usize {
        let phi = v[1].atan2(v[0]);
        let psi = |i: usize| {
            let d = sub2(poly[i], x);
            wrap_2pi(d[1].atan2(d[0]) - phi)
        };
        let k = poly.len();
        let (mut lo, mut hi) = (0usize, k - 1);
        if psi(lo) < psi(hi) {
            return 0;
        }
        while lo < hi {
            let mid = (lo + hi) / 2;
            if psi(mid) > psi(hi) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Ray parameters `t` (in units of `v`) where the line `x + t v` meets arc `i`.
    fn arc_hits(&self, i: usize, x: Vec2, v: Vec2) -> [Option<f64>; 2] {
        let k = self.points.len();
        let (a, o, b) = (self.points[i], self.outer[i], self.points[(i + 1) % k]);
        let w = self.weights[i];
        let n = [-v[1], v[0]];
        let f = |p: Vec2| n[0] * (p[0] - x[0]) + n[1] * (p[1] - x[1]);
        let (fa, fo, fb) = (f(a), w * f(o), f(b));
        // (1−s)² fa + 2 s (1−s) fo + s² fb = 0
        let qa = fa - 2.0 * fo + fb;
        let qb = 2.0 * (fo - fa);
        let qc = fa;
        let mut roots = [None, None];
        let scale = qa.abs().max(qb.abs()).max(qc.abs());
        if scale == 0.0 {
            return roots;
        }
        if qa.abs() <= 1e-14 * scale {
            if qb != 0.0 {
                roots[0] = Some(-qc / qb);
            }
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc < 0.0 {
                return roots;
            }
            let sq = disc.sqrt();
            let q = -0.5 * (qb + qb.signum() * sq);
            roots[0] = Some(q / qa);
            if q != 0.0 {
                roots[1] = Some(qc / q);
            }
        }
        let vv = v[0] * v[0] + v[1] * v[1];
        let mut out = [None, None];
        for (slot, s) in out.iter_mut().zip(roots) {
            if let Some(s) = s {
                if (-ARC_PARAM_SLACK..=1.0 + ARC_PARAM_SLACK).contains(&s) {
                    let u = 1.0 - s;
                    let den = u * u + 2.0 * s * u * w + s * s;
                    let px = (u * u * a[0] + 2.0 * s * u * w * o[0] + s * s * b[0]) / den;
                    let py = (u * u * a[1] + 2.0 * s * u * w * o[1] + s * s * b[1]) / den;
                    let t = ((px - x[0]) * v[0] + (py - x[1]) * v[1]) / vv;
                    *slot = Some(t);
                }
            }
        }
        out
    }

    /// Forward exit parameter `t > 0` of the ray `x + t v` through the
    /// interpolated boundary, with the local sandwich width.
    pub fn exit(&self, x: Vec2, v: Vec2) -> Result<(f64, f64)> {
        let k = self.points.len();
        if self.inside_inner(x) {
            let j = Self::exit_vertex(&self.points, x, v);
            for di in [0usize, k - 1, 1] {
                let i = (j + k - 1 + di) % k;
                let best = self
                    .arc_hits(i, x, v)
                    .into_iter()
                    .flatten()
                    .filter(|&t| t > 0.0)
                    .fold(f64::INFINITY, f64::min);
                if best.is_finite() {
                    return Ok((best, self.vertex_gap[i]));
                }
            }
        } else if !self.inside(x) {
            return Err(Error::OutsideDomain);
        }
        // Points in the thin shell between inner hull and boundary: scan.
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..k {
            for t in self.arc_hits(i, x, v).into_iter().flatten() {
                if t > 0.0 && t < best.0 {
                    best = (t, self.vertex_gap[i]);
                }
            }
        }
        if best.0.is_finite() {
            Ok(best)
        } else {
            Err(Error::OutsideDomain)
        }
    }

    /// Forward exit parameter through the outer polygon (a certified bound:
    /// the true boundary is met no later).
    pub fn exit_outer(&self, x: Vec2, v: Vec2) -> Result<f64> {
        if !self.inside_outer(x) {
            return Err(Error::OutsideDomain);
        }
        let k = self.outer.len();
        let j = Self::exit_vertex(&self.outer, x, v);
        // Edge (o_{j−1}, o_j) lies on the supporting line j.
        let check = |i: usize| {
            let l = &self.tangents[i];
            let rate = l[0] * v[0] + l[1] * v[1];
            if rate < 0.0 {
                Some(-eval_line(l, x) / rate)
            } else {
                None
            }
        };
        if let Some(t) = check(j % k) {
            let p = [x[0] + t * v[0], x[1] + t * v[1]];
            if self.tangents.iter().all(|l| eval_line(l, p) >= -1e-12) {
                return Ok(t);
            }
        }
        Ok(self
            .tangents
            .iter()
            .enumerate()
            .filter_map(|(i, _)| check(i))
            .fold(f64::INFINITY, f64::min))
    }

    /// Forward exit parameter through the inner hull (`x` inside it).
    pub fn exit_inner(&self, x: Vec2, v: Vec2) -> Result<f64> {
        if !self.inside_inner(x) {
            return Err(Error::OutsideDomain);
        }
        let k = self.points.len();
        let j = Self::exit_vertex(&self.points, x, v);
        let a = self.points[(j + k - 1) % k];
        let b = self.points[j];
        let e = sub2(b, a);
        let den = cross2(v, e);
        if den == 0.0 {
            return Err(Error::DegenerateDirection);
        }
        Ok(cross2(sub2(a, x), e) / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_data(n: usize, r: f64) -> (Vec<Vec2>, Vec<Vec3>) {
        let mut pts = Vec::new();
        let mut tans = Vec::new();
        for i in 0..n {
            let th = 2.0 * PI * (i as f64 + 0.3) / n as f64;
            let p = [r * th.cos(), r * th.sin()];
            pts.push(p);
            // tangent: x cos + y sin = r  →  −cos x − sin y + r ≥ 0 inside
            tans.push(Vec3::new(-th.cos(), -th.sin(), r));
        }
        (pts, tans)
    }

    #[test]
    fn circle_is_reproduced() {
        let (pts, tans) = circle_data(64, 0.8);
        let s = Sandwich::new(&pts, &tans, 0.0).unwrap();
        assert_eq!(s.len(), 64);
        let half = PI / 64.0;
        let expected_gap = 0.8 / half.cos() - 0.8 * half.cos();
        assert!((s.gap() - expected_gap).abs() < 1e-12);
        for &w in s.weights() {
            assert!((w - half.cos()).abs() < 1e-10);
        }
        for k in 0..50 {
            let th = 0.123 * k as f64;
            let x = [0.1, -0.2];
            let v = [th.cos(), th.sin()];
            let (t, _) = s.exit(x, v).unwrap();
            let p = [x[0] + t * v[0], x[1] + t * v[1]];
            assert!((norm2(p) - 0.8).abs() < 1e-12, "{}", norm2(p));
            let to = s.exit_outer(x, v).unwrap();
            let ti = s.exit_inner(x, v).unwrap();
            assert!(ti <= t + 1e-15 && t <= to + 1e-15);
        }
    }

    #[test]
    fn shell_points_are_handled() {
        let (pts, tans) = circle_data(16, 0.8);
        let s = Sandwich::new(&pts, &tans, 0.0).unwrap();
        let th = 2.0 * PI * 0.8 / 16.0;
        let x = [0.7995 * th.cos(), 0.7995 * th.sin()];
        assert!(!s.inside_inner(x));
        assert!(s.inside(x));
        let (t, _) = s.exit(x, [th.cos(), th.sin()]).unwrap();
        assert!((t - 0.0005).abs() < 1e-9);
        assert!(!s.inside([0.81, 0.0]));
    }

    #[test]
    fn non_convex_data_rejected() {
        let (mut pts, tans) = circle_data(16, 0.8);
        pts[3] = [pts[3][0] * 0.5, pts[3][1] * 0.5];
        assert!(Sandwich::new(&pts, &tans, 0.0).is_err());
    }
}
