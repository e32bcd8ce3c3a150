//! Strictly convex domains (exact conics and boundary sandwiches reconstructed
//! from a representation) and their Hilbert metric.

mod conic;
mod sandwich;

use std::fmt::Write as _;

use rayon::prelude::*;

pub use conic::Conic;
pub use sandwich::Sandwich;

use crate::error::{Error, Result};
use crate::holonomy::{eigen_data_with_inverse, Representation, WordBall};
use crate::projgeom::{add2, norm2, scale2, sub2, AffineChart, Mat3, ProjPoint, Vec2, Vec3};

/// Queries closer than this (chart units) to the boundary are rejected.
pub const NEAR_BOUNDARY: f64 = 1e-12;
/// Radius of the disk that holds the inner hull after chart normalization.
pub const CHART_RADIUS: f64 = 0.8;

/// Boundary model of a [`ConvexDomain`].
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Conic(Conic),
    Sandwich(Sandwich),
}

/// A bounded strictly convex domain together with the chart in which it is
/// bounded. Points handed to the `ProjPoint` methods are in the
/// representation's homogeneous coordinates; `*_chart` methods take chart
/// coordinates directly.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDomain {
    boundary: Boundary,
    chart: AffineChart,
}

/// Boundary intersections of the line through a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordHit {
    pub p_minus: ProjPoint,
    pub p_plus: ProjPoint,
    pub chart_minus: Vec2,
    pub chart_plus: Vec2,
    /// Estimated position error of the endpoints (zero for conics).
    pub residual: f64,
}

/// Chord parameters along `x + t v`: `t_minus < 0 < t_plus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord {
    pub t_minus: f64,
    pub t_plus: f64,
    pub residual: f64,
}

/// Options for [`limit_domain_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitDomainOptions {
    /// Minimal chart distance between consecutive boundary points kept.
    pub min_separation: f64,
    /// Minimal number of proximal elements with distinct fixed points.
    pub min_points: usize,
}

impl Default for LimitDomainOptions {
    fn default() -> Self {
        LimitDomainOptions {
            min_separation: 2e-4,
            min_points: 20,
        }
    }
}

/// Exact conic domain `{pᵀQp < 0}` for a form of signature (2,1).
///
/// The identity chart is kept when the conic is a bounded ellipse in it;
/// otherwise a chart mapping the conic to the unit disk is used.
pub fn conic_domain(q: &Mat3) -> Result<ConvexDomain> {
    let q = conic::lorentzian(q)?;
    if let Ok(c) = Conic::in_chart(&q) {
        return Ok(ConvexDomain {
            boundary: Boundary::Conic(c),
            chart: AffineChart::identity(),
        });
    }
    let chart = conic::disk_chart(&q)?;
    conic_domain_in_chart(&q, chart)
}

/// Conic domain for a form given in world coordinates, viewed in `chart`.
pub fn conic_domain_in_chart(q: &Mat3, chart: AffineChart) -> Result<ConvexDomain> {
    let inv = chart.inverse();
    let qc = inv.transpose() * q * inv;
    Ok(ConvexDomain {
        boundary: Boundary::Conic(Conic::in_chart(&qc)?),
        chart,
    })
}

/// The invariant conic of a representation at the hyperbolic point.
pub fn conic_for_representation(rep: &Representation) -> Result<ConvexDomain> {
    let form = rep
        .invariant_form()
        .ok_or_else(|| Error::InconsistentRepresentation("no invariant quadratic form".into()))?;
    if form.signature != (2, 1) || form.residual > 1e-8 {
        return Err(Error::NotAnEllipse(format!(
            "invariant form has signature {:?} and residual {:.3e}",
            form.signature, form.residual
        )));
    }
    let q = conic::lorentzian(&form.matrix)?;
    conic_domain_in_chart(&q, rep.chart_hint().clone())
        .or_else(|_| conic_domain_in_chart(&q, conic::disk_chart(&q)?))
}

/// Boundary sandwich from the attracting fixed points and tangent lines of
/// the proximal elements in the even ball of rotation length `L`.
pub fn limit_domain(rep: &Representation, rotation_length: usize) -> Result<ConvexDomain> {
    limit_domain_with(rep, rotation_length, &LimitDomainOptions::default())
}

pub fn limit_domain_with(
    rep: &Representation,
    rotation_length: usize,
    opts: &LimitDomainOptions,
) -> Result<ConvexDomain> {
    let ball = WordBall::new(rep, 2 * rotation_length);
    limit_domain_from_ball(rep, &ball, opts)
}

/// As [`limit_domain_with`], reusing an enumerated ball.
pub fn limit_domain_from_ball(
    rep: &Representation,
    ball: &WordBall,
    opts: &LimitDomainOptions,
) -> Result<ConvexDomain> {
    let alphabet = ball.alphabet();
    let even: Vec<_> = ball.even_elements().map(|(_, g)| g).collect();
    let data: Vec<(Vec3, Vec3)> = even
        .par_iter()
        .filter_map(|g| {
            let inv = g.inverse(alphabet);
            eigen_data_with_inverse(g.matrix(), inv.matrix())
                .ok()
                .map(|e| (*e.attracting.coords(), *e.tangent.coeffs()))
        })
        .collect();

    let base = rep.chart_hint();
    let mut pts = Vec::with_capacity(data.len());
    let mut lines = Vec::with_capacity(data.len());
    for (p, l) in &data {
        let c = base.to_chart(p).map_err(|_| {
            Error::InconsistentRepresentation("fixed point at infinity in the chart".into())
        })?;
        pts.push(c);
        lines.push(base.inverse().transpose() * l);
    }
    let distinct = count_distinct(&pts, 1e-9);
    if distinct < opts.min_points {
        return Err(Error::InsufficientData {
            found: distinct,
            needed: opts.min_points,
        });
    }

    // Normalize: hull barycentre at the origin, hull inside radius 0.8.
    let centre = polygon_centroid(&pts);
    let radius = pts
        .iter()
        .map(|p| norm2(sub2(*p, centre)))
        .fold(0.0, f64::max);
    let s = CHART_RADIUS / radius;
    let n = Mat3::new(
        s,
        0.0,
        -s * centre[0],
        0.0,
        s,
        -s * centre[1],
        0.0,
        0.0,
        1.0,
    );
    let n_inv_t = n
        .try_inverse()
        .ok_or(Error::SingularMatrix(0.0))?
        .transpose();
    let pts: Vec<Vec2> = pts.iter().map(|p| scale2(sub2(*p, centre), s)).collect();
    let lines: Vec<Vec3> = lines.iter().map(|l| n_inv_t * l).collect();
    let chart = base.then(&n)?;
    let sandwich = Sandwich::new(&pts, &lines, opts.min_separation)?;
    Ok(ConvexDomain {
        boundary: Boundary::Sandwich(sandwich),
        chart,
    })
}

fn count_distinct(pts: &[Vec2], tol: f64) -> usize {
    let mut sorted: Vec<Vec2> = pts.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut n = 0;
    let mut last: Option<Vec2> = None;
    for p in sorted {
        if last.is_none_or(|q| norm2(sub2(p, q)) > tol) {
            n += 1;
            last = Some(p);
        }
    }
    n
}

/// Area centroid of the polygon obtained by sorting `pts` by angle about
/// their mean.
fn polygon_centroid(pts: &[Vec2]) -> Vec2 {
    let n = pts.len() as f64;
    let mean = pts
        .iter()
        .fold([0.0, 0.0], |acc, p| add2(acc, scale2(*p, 1.0 / n)));
    let mut sorted: Vec<Vec2> = pts.to_vec();
    sorted.sort_by(|a, b| {
        let ta = (a[1] - mean[1]).atan2(a[0] - mean[0]);
        let tb = (b[1] - mean[1]).atan2(b[0] - mean[0]);
        ta.total_cmp(&tb)
    });
    let (mut area, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..sorted.len() {
        let a = sub2(sorted[i], mean);
        let b = sub2(sorted[(i + 1) % sorted.len()], mean);
        let cr = a[0] * b[1] - a[1] * b[0];
        area += cr;
        cx += (a[0] + b[0]) * cr;
        cy += (a[1] + b[1]) * cr;
    }
    if area.abs() < 1e-300 {
        return mean;
    }
    [mean[0] + cx / (3.0 * area), mean[1] + cy / (3.0 * area)]
}

impl ConvexDomain {
    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn chart(&self) -> &AffineChart {
        &self.chart
    }

    /// Sandwich gap; zero for exact conics.
    pub fn gap(&self) -> f64 {
        match &self.boundary {
            Boundary::Conic(_) => 0.0,
            Boundary::Sandwich(s) => s.gap(),
        }
    }

    pub fn is_conic(&self) -> bool {
        matches!(self.boundary, Boundary::Conic(_))
    }

    /// A group element in chart coordinates.
    pub fn chart_matrix(&self, g: &Mat3) -> Mat3 {
        self.chart.conjugate(g)
    }

    pub fn to_chart(&self, p: &ProjPoint) -> Result<Vec2> {
        self.chart.to_chart(p.coords())
    }

    pub fn from_chart(&self, x: Vec2) -> Result<ProjPoint> {
        ProjPoint::from_vector(&self.chart.lift(x))
    }

    pub fn contains_chart(&self, x: Vec2) -> bool {
        match &self.boundary {
            Boundary::Conic(c) => c.contains(x),
            Boundary::Sandwich(s) => s.inside(x),
        }
    }

    pub fn contains(&self, p: &ProjPoint) -> bool {
        self.to_chart(p).is_ok_and(|x| self.contains_chart(x))
    }

    /// Chord of the line `x + t v` in chart coordinates.
    pub fn chord_chart(&self, x: Vec2, v: Vec2) -> Result<Chord> {
        let speed = norm2(v);
        if speed == 0.0 || !speed.is_finite() {
            return Err(Error::DegenerateDirection);
        }
        let (t_minus, t_plus, residual) = match &self.boundary {
            Boundary::Conic(c) => {
                let (a, b) = c.chord(x, v)?;
                (a, b, 0.0)
            }
            Boundary::Sandwich(s) => {
                let (tp, rp) = s.exit(x, v)?;
                let (tm, rm) = s.exit(x, [-v[0], -v[1]])?;
                (-tm, tp, rp.max(rm))
            }
        };
        let clearance = t_plus.min(-t_minus) * speed;
        if !(clearance > 0.0) {
            return Err(Error::OutsideDomain);
        }
        if clearance < NEAR_BOUNDARY {
            return Err(Error::NearBoundary(clearance));
        }
        Ok(Chord {
            t_minus,
            t_plus,
            residual,
        })
    }

    /// Boundary points of the oriented line through `x` with chart direction `v`.
    pub fn ray_boundary(&self, x: &ProjPoint, v: Vec2) -> Result<ChordHit> {
        let xc = self.to_chart(x)?;
        let ch = self.chord_chart(xc, v)?;
        let cm = add2(xc, scale2(v, ch.t_minus));
        let cp = add2(xc, scale2(v, ch.t_plus));
        Ok(ChordHit {
            p_minus: self.from_chart(cm)?,
            p_plus: self.from_chart(cp)?,
            chart_minus: cm,
            chart_plus: cp,
            residual: ch.residual,
        })
    }

    pub fn hilbert_distance_chart(&self, x: Vec2, y: Vec2) -> Result<f64> {
        let u = sub2(y, x);
        if norm2(u) == 0.0 {
            return if self.contains_chart(x) {
                Ok(0.0)
            } else {
                Err(Error::OutsideDomain)
            };
        }
        let ch = self.chord_chart(x, u)?;
        distance_from_chord(ch.t_minus, ch.t_plus)
    }

    pub fn hilbert_distance(&self, x: &ProjPoint, y: &ProjPoint) -> Result<f64> {
        self.hilbert_distance_chart(self.to_chart(x)?, self.to_chart(y)?)
    }

    /// Lower and upper bounds on the distance implied by the sandwich (the
    /// outer polygon can only shorten distances, the inner hull only lengthen
    /// them). Both equal the distance for conics.
    pub fn distance_bounds_chart(&self, x: Vec2, y: Vec2) -> Result<(f64, f64)> {
        match &self.boundary {
            Boundary::Conic(_) => {
                let d = self.hilbert_distance_chart(x, y)?;
                Ok((d, d))
            }
            Boundary::Sandwich(s) => {
                let u = sub2(y, x);
                if norm2(u) == 0.0 {
                    return Ok((0.0, 0.0));
                }
                let mu = [-u[0], -u[1]];
                let lower = distance_from_chord(-s.exit_outer(x, mu)?, s.exit_outer(x, u)?)?;
                let upper = match (s.exit_inner(x, mu), s.exit_inner(x, u)) {
                    (Ok(a), Ok(b)) if b > 1.0 => distance_from_chord(-a, b)?,
                    _ => f64::INFINITY,
                };
                Ok((lower, upper))
            }
        }
    }

    /// Finsler norm `(1/|x−p⁻| + 1/|x−p⁺|)|v|`.
    pub fn finsler_norm_chart(&self, x: Vec2, v: Vec2) -> Result<f64> {
        let ch = self.chord_chart(x, v)?;
        Ok(1.0 / ch.t_plus - 1.0 / ch.t_minus)
    }

    pub fn finsler_norm(&self, x: &ProjPoint, v: Vec2) -> Result<f64> {
        self.finsler_norm_chart(self.to_chart(x)?, v)
    }

    /// Plain-text export (17 significant digits).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "domain v1");
        let kind = if self.is_conic() { "conic" } else { "sandwich" };
        let _ = writeln!(s, "kind {kind}");
        let _ = writeln!(s, "chart");
        write_rows(&mut s, self.chart.matrix());
        match &self.boundary {
            Boundary::Conic(c) => {
                let _ = writeln!(s, "form");
                write_rows(&mut s, c.form());
            }
            Boundary::Sandwich(w) => {
                let _ = writeln!(s, "gap {:.16e}", w.gap());
                let _ = writeln!(s, "points {}", w.len());
                for (p, l) in w.points().iter().zip(w.tangents()) {
                    let _ = writeln!(
                        s,
                        "  {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                        p[0], p[1], l[0], l[1], l[2]
                    );
                }
            }
        }
        s
    }

    /// Parse and re-validate an exported domain.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cur = Cursor::new(text);
        if cur.next("header")? != "domain v1" {
            return Err(Error::Format("unexpected header".into()));
        }
        let kind = cur
            .next("kind")?
            .strip_prefix("kind ")
            .ok_or_else(|| Error::Format("missing `kind`".into()))?
            .to_string();
        if cur.next("chart")? != "chart" {
            return Err(Error::Format("missing `chart`".into()));
        }
        let chart = AffineChart::new(cur.matrix()?)?;
        match kind.as_str() {
            "conic" => {
                if cur.next("form")? != "form" {
                    return Err(Error::Format("missing `form`".into()));
                }
                let q = cur.matrix()?;
                Ok(ConvexDomain {
                    boundary: Boundary::Conic(Conic::in_chart(&q)?),
                    chart,
                })
            }
            "sandwich" => {
                let gap = cur
                    .next("gap")?
                    .strip_prefix("gap ")
                    .and_then(|g| g.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Format("missing `gap`".into()))?;
                let n = cur
                    .next("points")?
                    .strip_prefix("points ")
                    .and_then(|g| g.trim().parse::<usize>().ok())
                    .ok_or_else(|| Error::Format("missing `points`".into()))?;
                let mut pts = Vec::with_capacity(n);
                let mut tans = Vec::with_capacity(n);
                for _ in 0..n {
                    let r = parse_floats(cur.next("point")?, 5)?;
                    pts.push([r[0], r[1]]);
                    tans.push(Vec3::new(r[2], r[3], r[4]));
                }
                let s = Sandwich::new(&pts, &tans, 0.0)?;
                if s.len() != n || s.dropped() != 0 {
                    return Err(Error::InconsistentRepresentation(
                        "stored boundary points are not in strictly convex position".into(),
                    ));
                }
                if (s.gap() - gap).abs() > 1e-12 * gap.max(1e-300) + 1e-15 {
                    return Err(Error::InconsistentRepresentation(format!(
                        "stored gap {gap:.6e} differs from recomputed {:.6e}",
                        s.gap()
                    )));
                }
                Ok(ConvexDomain {
                    boundary: Boundary::Sandwich(s),
                    chart,
                })
            }
            other => Err(Error::Format(format!("unknown domain kind `{other}`"))),
        }
    }
}

/// `½ log CR` for a chord `x + t u`, `t ∈ (t₋, t₊)`, from `x` (t = 0) to
/// `y` (t = 1).
fn distance_from_chord(t_minus: f64, t_plus: f64) -> Result<f64> {
    if !(t_plus > 1.0 && t_minus < 0.0) {
        return Err(Error::OutsideDomain);
    }
    Ok(0.5 * ((t_plus - t_minus) / ((-t_minus) * (t_plus - 1.0))).ln_1p())
}

struct Cursor<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            lines: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
            pos: 0,
        }
    }

    fn next(&mut self, what: &str) -> Result<&'a str> {
        let l = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| Error::Format(format!("record truncated before {what}")))?;
        self.pos += 1;
        Ok(l)
    }

    fn matrix(&mut self) -> Result<Mat3> {
        let mut m = Mat3::zeros();
        for i in 0..3 {
            let row = parse_floats(self.next("matrix row")?, 3)?;
            for j in 0..3 {
                m[(i, j)] = row[j];
            }
        }
        Ok(m)
    }
}

fn write_rows(s: &mut String, m: &Mat3) {
    for i in 0..3 {
        let _ = writeln!(
            s,
            "  {:.16e} {:.16e} {:.16e}",
            m[(i, 0)],
            m[(i, 1)],
            m[(i, 2)]
        );
    }
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Format(format!("cannot parse numbers from `{s}`")))?;
    if v.len() != n {
        return Err(Error::Format(format!("expected {n} numbers in `{s}`")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::vinberg_triangle;

    fn disk() -> ConvexDomain {
        conic_domain(&Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0))).unwrap()
    }

    #[test]
    fn unit_disk_queries() {
        let d = disk();
        let o = ProjPoint::from_chart([0.0, 0.0]);
        let hit = d.ray_boundary(&o, [1.0, 0.0]).unwrap();
        assert!((hit.chart_plus[0] - 1.0).abs() < 1e-15 && hit.chart_plus[1].abs() < 1e-15);
        assert!((hit.chart_minus[0] + 1.0).abs() < 1e-15);
        let x = ProjPoint::from_chart([0.5, 0.0]);
        let hit = d.ray_boundary(&x, [0.0, 1.0]).unwrap();
        assert!((hit.chart_plus[1] - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((hit.chart_minus[1] + 0.75f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            d.ray_boundary(&ProjPoint::from_chart([2.0, 0.0]), [1.0, 0.0]),
            Err(Error::OutsideDomain)
        ));
        assert!(matches!(
            d.ray_boundary(&o, [0.0, 0.0]),
            Err(Error::DegenerateDirection)
        ));
        let dist = d.hilbert_distance(&o, &x).unwrap();
        assert!((dist - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert!((d.finsler_norm(&o, [1.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!((d.finsler_norm(&x, [1.0, 0.0]).unwrap() - 8.0 / 3.0).abs() < 1e-14);
        assert_eq!(d.hilbert_distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn empty_conic_rejected() {
        assert!(matches!(
            conic_domain(&Mat3::identity()),
            Err(Error::NotAnEllipse(_))
        ));
    }

    #[test]
    fn fuchsian_conic_is_invariant() {
        let rep = vinberg_triangle(3, 3, 4, 0.0).unwrap();
        let d = conic_for_representation(&rep).unwrap();
        let x = [0.05, -0.02];
        let y = [-0.1, 0.13];
        let base = d.hilbert_distance_chart(x, y).unwrap();
        for g in rep.generators() {
            let gc = d.chart_matrix(g);
            let gx = crate::projgeom::map_chart(&gc, x).unwrap();
            let gy = crate::projgeom::map_chart(&gc, y).unwrap();
            let moved = d.hilbert_distance_chart(gx, gy).unwrap();
            assert!((moved - base).abs() < 1e-10);
        }
    }

    #[test]
    fn text_round_trip_conic() {
        let d = disk();
        let back = ConvexDomain::from_text(&d.to_text()).unwrap();
        assert_eq!(back, d);
    }
}
