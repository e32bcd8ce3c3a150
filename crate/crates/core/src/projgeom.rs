//! Projective-plane primitives: homogeneous points and lines, affine charts,
//! the cross-ratio and the action of 3×3 matrices.
//!
//! Homogeneous triples are normalized so that the entry of largest magnitude
//! equals `+1` (ties go to the lowest index). The representative is therefore
//! canonical for `p` and `-p`, and normalizing twice is a no-op.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;
/// A point or direction in the active affine chart (the `z = 1` plane).
pub type Vec2 = [f64; 2];

/// Tolerance on `|det(p, x, q)|` for the collinearity precondition.
pub const COLLINEARITY_TOL: f64 = 1e-9;

fn normalize_triple(v: &Vec3) -> Result<Vec3> {
    let mut best = 0usize;
    for i in 1..3 {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    let m = v[best];
    if m == 0.0 || !m.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(v / m)
}

/// A point of the real projective plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjPoint {
    coords: Vec3,
}

impl ProjPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vector(&Vec3::new(x, y, z))
    }

    pub fn from_vector(v: &Vec3) -> Result<Self> {
        Ok(Self {
            coords: normalize_triple(v)?,
        })
    }

    /// Lift a chart point `(x, y)` to `(x : y : 1)`.
    pub fn from_chart(p: Vec2) -> Self {
        Self::from_vector(&Vec3::new(p[0], p[1], 1.0)).expect("chart lift is never zero")
    }

    pub fn coords(&self) -> &Vec3 {
        &self.coords
    }

    /// Dehomogenize into the `z = 1` chart.
    pub fn to_chart(&self) -> Result<Vec2> {
        let z = self.coords[2];
        if z.abs() < 1e-300 {
            return Err(Error::PointAtInfinity);
        }
        Ok([self.coords[0] / z, self.coords[1] / z])
    }

    /// Projective equality: the sine of the angle between representatives.
    pub fn distance(&self, other: &ProjPoint) -> f64 {
        let a = self.coords.normalize();
        let b = other.coords.normalize();
        a.cross(&b).norm()
    }

    pub fn approx_eq(&self, other: &ProjPoint, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    /// The line through two distinct points.
    pub fn join(&self, other: &ProjPoint) -> Result<ProjLine> {
        ProjLine::from_vector(&self.coords.cross(&other.coords))
            .map_err(|_| Error::DegenerateConfiguration("join of coincident points".into()))
    }
}

/// A line of the projective plane, stored by its dual coordinates `(a : b : c)`
/// so that a point `p` lies on it when `a p0 + b p1 + c p2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjLine {
    coeffs: Vec3,
}

impl ProjLine {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::from_vector(&Vec3::new(a, b, c))
    }

    pub fn from_vector(v: &Vec3) -> Result<Self> {
        Ok(Self {
            coeffs: normalize_triple(v)?,
        })
    }

    pub fn coeffs(&self) -> &Vec3 {
        &self.coeffs
    }

    /// Incidence pairing with a point (bilinear in the stored representatives).
    pub fn pairing(&self, p: &ProjPoint) -> f64 {
        self.coeffs.dot(p.coords())
    }

    /// Intersection point of two distinct lines.
    pub fn meet(&self, other: &ProjLine) -> Result<ProjPoint> {
        ProjPoint::from_vector(&self.coeffs.cross(&other.coeffs))
            .map_err(|_| Error::DegenerateConfiguration("meet of coincident lines".into()))
    }

    /// Line `a x + b y + c = 0` of the chart, oriented by the sign of the
    /// representative: the returned triple is *not* normalized, so orientation
    /// survives.
    pub fn chart_equation(&self) -> [f64; 3] {
        [self.coeffs[0], self.coeffs[1], self.coeffs[2]]
    }
}

/// An invertible matrix taking homogeneous coordinates of the working space to
/// chart coordinates, in which the domain of interest is a bounded region of
/// the `z = 1` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineChart {
    matrix: Mat3,
    inverse: Mat3,
}

impl AffineChart {
    pub fn new(matrix: Mat3) -> Result<Self> {
        check_invertible(&matrix)?;
        let inverse = matrix.try_inverse().ok_or(Error::SingularMatrix(0.0))?;
        Ok(Self { matrix, inverse })
    }

    pub fn identity() -> Self {
        Self {
            matrix: Mat3::identity(),
            inverse: Mat3::identity(),
        }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn inverse(&self) -> &Mat3 {
        &self.inverse
    }

    /// 2-norm condition number of the chart matrix.
    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix.singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Chart coordinates of a homogeneous vector in working coordinates.
    pub fn to_chart(&self, v: &Vec3) -> Result<Vec2> {
        let w = self.matrix * v;
        if w[2].abs() < 1e-300 {
            return Err(Error::PointAtInfinity);
        }
        Ok([w[0] / w[2], w[1] / w[2]])
    }

    /// Working homogeneous coordinates of a chart point.
    pub fn lift(&self, p: Vec2) -> Vec3 {
        self.inverse * Vec3::new(p[0], p[1], 1.0)
    }

    /// Express a working-space transformation in chart coordinates.
    pub fn conjugate(&self, g: &Mat3) -> Mat3 {
        self.matrix * g * self.inverse
    }

    /// Compose with a further change of chart coordinates `a` (applied after).
    pub fn then(&self, a: &Mat3) -> Result<Self> {
        Self::new(a * self.matrix)
    }
}

fn check_invertible(m: &Mat3) -> Result<()> {
    let scale = m.norm();
    if !scale.is_finite() || scale == 0.0 {
        return Err(Error::SingularMatrix(0.0));
    }
    let rel = m.determinant() / scale.powi(3);
    if rel.abs() < 1e-14 || !rel.is_finite() {
        return Err(Error::SingularMatrix(rel));
    }
    Ok(())
}

/// Action of `m` on a point.
pub fn apply_projective(m: &Mat3, p: &ProjPoint) -> Result<ProjPoint> {
    check_invertible(m)?;
    ProjPoint::from_vector(&(m * p.coords()))
}

/// Dual action of `m` on a line (by the inverse transpose), so that incidence
/// is preserved: `apply_projective_line(m, l)` contains `m·p` whenever `l`
/// contains `p`.
pub fn apply_projective_line(m: &Mat3, l: &ProjLine) -> Result<ProjLine> {
    check_invertible(m)?;
    let inv_t = m
        .try_inverse()
        .ok_or(Error::SingularMatrix(0.0))?
        .transpose();
    ProjLine::from_vector(&(inv_t * l.coeffs()))
}

fn det3(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    a.dot(&b.cross(c))
}

/// Cross-ratio `(|p−y| |q−x|) / (|p−x| |q−y|)` of four collinear points, with
/// Euclidean distances measured in the `z = 1` chart.
///
/// Returns a value `>= 1` when the points occur in the order `p, x, y, q`, so
/// that `½ log` of it is the Hilbert distance between `x` and `y`.
pub fn cross_ratio(p: &ProjPoint, x: &ProjPoint, y: &ProjPoint, q: &ProjPoint) -> Result<f64> {
    let triple_x = det3(p.coords(), x.coords(), q.coords());
    let triple_y = det3(p.coords(), y.coords(), q.coords());
    let triple = triple_x.abs().max(triple_y.abs());
    if triple > COLLINEARITY_TOL {
        return Err(Error::NotCollinear { triple });
    }
    let (pc, xc, yc, qc) = (p.to_chart()?, x.to_chart()?, y.to_chart()?, q.to_chart()?);
    let d = |a: Vec2, b: Vec2| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let (px, qy) = (d(pc, xc), d(qc, yc));
    if px == 0.0 || qy == 0.0 {
        return Err(Error::DegenerateConfiguration(
            "boundary point coincides with an interior point".into(),
        ));
    }
    Ok(d(pc, yc) * d(qc, xc) / (px * qy))
}

// Small chart-vector helpers used throughout the geometric inner loops.

#[inline]
pub fn sub2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale2(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm2(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist2(a: Vec2, b: Vec2) -> f64 {
    norm2(sub2(a, b))
}

/// Apply a chart-coordinate projective matrix to a chart point.
#[inline]
pub fn map_chart(m: &Mat3, p: Vec2) -> Result<Vec2> {
    let w = m * Vec3::new(p[0], p[1], 1.0);
    if w[2].abs() < 1e-300 {
        return Err(Error::PointAtInfinity);
    }
    Ok([w[0] / w[2], w[1] / w[2]])
}
