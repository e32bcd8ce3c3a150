use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::projgeom::{AffineChart, Mat3, Vec2};

/// A properly convex conic region `{pᵀQp < 0}` expressed in its working
/// chart, where it is a bounded ellipse.
#[derive(Debug, Clone, PartialEq)]
pub struct Conic {
    /// Quadratic form in chart coordinates, normalized so that the upper-left
    /// 2×2 block is positive definite and `det Q < 0`.
    form: Mat3,
}

/// Normalize the sign of a signature-(2,1) form so that it has two positive
/// eigenvalues, or fail.
pub(crate) fn lorentzian(q: &Mat3) -> Result<Mat3> {
    let q = (q + q.transpose()) * 0.5;
    let scale = q.amax();
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::NotAnEllipse("zero or non-finite form".into()));
    }
    let q = q / scale;
    let eig = SymmetricEigen::new(q);
    let tol = 1e-12;
    let pos = eig.eigenvalues.iter().filter(|&&e| e > tol).count();
    let neg = eig.eigenvalues.iter().filter(|&&e| e < -tol).count();
    match (pos, neg) {
        (2, 1) => Ok(q),
        (1, 2) => Ok(-q),
        _ => Err(Error::NotAnEllipse(format!(
            "signature ({pos},{neg}) instead of (2,1)"
        ))),
    }
}

/// A chart in which the form becomes `diag(1, 1, −1)`.
pub(crate) fn disk_chart(q: &Mat3) -> Result<AffineChart> {
    let eig = SymmetricEigen::new(*q);
    let mut idx: Vec<usize> = (0..3).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut m = Mat3::zeros();
    for (row, &i) in idx.iter().enumerate() {
        let s = eig.eigenvalues[i].abs().sqrt();
        for j in 0..3 {
            m[(row, j)] = s * eig.eigenvectors[(j, i)];
        }
    }
    AffineChart::new(m)
}

impl Conic {
    /// Wrap a form already expressed in chart coordinates; fails unless the
    /// region is a bounded ellipse in the chart.
    pub fn in_chart(q_chart: &Mat3) -> Result<Self> {
        let q = lorentzian(q_chart)?;
        let (a, b, d) = (q[(0, 0)], q[(0, 1)], q[(1, 1)]);
        if !(a > 0.0 && a * d - b * b > 0.0) {
            return Err(Error::NotAnEllipse(
                "conic is unbounded in the chosen chart".into(),
            ));
        }
        Ok(Conic { form: q })
    }

    pub fn form(&self) -> &Mat3 {
        &self.form
    }

    fn eval(&self, x: Vec2) -> f64 {
        let p = nalgebra::Vector3::new(x[0], x[1], 1.0);
        p.dot(&(self.form * p))
    }

    pub fn contains(&self, x: Vec2) -> bool {
        self.eval(x) < 0.0
    }

    /// Parameters `t₋ < 0 < t₊` with `x + t v` on the conic.
    pub fn chord(&self, x: Vec2, v: Vec2) -> Result<(f64, f64)> {
        let q = &self.form;
        let p = nalgebra::Vector3::new(x[0], x[1], 1.0);
        let d = nalgebra::Vector3::new(v[0], v[1], 0.0);
        let a = d.dot(&(q * d));
        let b = d.dot(&(q * p));
        let c = p.dot(&(q * p));
        if c >= 0.0 {
            return Err(Error::OutsideDomain);
        }
        let disc = (b * b - a * c).sqrt();
        // Stable roots of a t² + 2 b t + c.
        let k = -(b + b.signum() * disc);
        let (r1, r2) = if b == 0.0 {
            ((-c / a).sqrt(), -(-c / a).sqrt())
        } else {
            (k / a, c / k)
        };
        Ok((r1.min(r2), r1.max(r2)))
    }

    /// Points of the conic by angle about its centre, for sampling.
    pub fn sample(&self, theta: f64) -> Vec2 {
        let q = &self.form;
        let q2 = nalgebra::Matrix2::new(q[(0, 0)], q[(0, 1)], q[(1, 0)], q[(1, 1)]);
        let q12 = nalgebra::Vector2::new(q[(0, 2)], q[(1, 2)]);
        let c = -(q2.try_inverse().expect("positive definite") * q12);
        let centre = [c[0], c[1]];
        let v = [theta.cos(), theta.sin()];
        let (_, tp) = self.chord(centre, v).expect("centre is inside");
        [centre[0] + tp * v[0], centre[1] + tp * v[1]]
    }
}
