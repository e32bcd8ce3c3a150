use crate::error::{Error, Result};
use crate::holonomy::words::GroupElement;
use crate::projgeom::{Mat3, ProjLine, ProjPoint, Vec3};

/// Minimum ratio between consecutive eigenvalues for an element to count as
/// proximal.
pub const PROXIMALITY_GAP: f64 = 1.0 + 1e-6;

/// Spectral invariants of a proximal element of `SL(3, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenData {
    /// `λ₁ > λ₂ > λ₃ > 0` with product one.
    pub lambda: [f64; 3],
    /// Attracting fixed point (the λ₁ eigenline).
    pub attracting: ProjPoint,
    /// Repelling fixed point (the λ₃ eigenline).
    pub repelling: ProjPoint,
    /// Saddle fixed point (the λ₂ eigenline).
    pub saddle: ProjPoint,
    /// Tangent line at the attracting point: the span of the λ₁ and λ₂
    /// eigenlines, i.e. the sum of eigenspaces complementary to the repelling
    /// point (the kernel of the left λ₃ eigenvector).
    pub tangent: ProjLine,
    /// Translation length `½ log(λ₁/λ₃)`.
    pub translation_length: f64,
    /// Parallel exponent `−1 + 2 log(λ₁/λ₂) / log(λ₁/λ₃)`.
    pub eta: f64,
    /// Boundary exponent at the attracting point `log(λ₁/λ₃) / log(λ₁/λ₂)`.
    pub alpha: f64,
}

/// The spectral invariants computed from the two logarithms
/// `a = log λ₁` and `b = −log λ₃` of a determinant-one proximal matrix.
///
/// Everything below is expressed through `a` and `b` so that the
/// identities relating `g` and `g⁻¹` (which swaps `a` and `b`) hold to
/// rounding error.
pub fn invariants_from_logs(a: f64, b: f64) -> (f64, f64, f64) {
    let l13 = a + b;
    let l12 = 2.0 * a - b;
    let ell = 0.5 * l13;
    let eta = -1.0 + 2.0 * l12 / l13;
    let alpha = l13 / l12;
    (ell, eta, alpha)
}

/// Roots of `x³ − c₁x² + c₂x − c₀` when all three are real, in decreasing
/// order. `None` for a complex pair.
fn real_cubic_roots(c1: f64, c2: f64, c0: f64) -> Option<[f64; 3]> {
    let s = c1 / 3.0;
    let p = c2 - c1 * c1 / 3.0;
    let q = -2.0 * c1 * c1 * c1 / 27.0 + c1 * c2 / 3.0 - c0;
    if p >= 0.0 {
        // At most one real root unless p = q = 0 (triple root).
        let scale = c1.abs().max(c2.abs()).max(c0.abs()).max(1.0);
        if p.abs() <= 1e-14 * scale * scale && q.abs() <= 1e-14 * scale * scale * scale {
            return Some([s, s, s]);
        }
        return None;
    }
    let m = 2.0 * (-p / 3.0).sqrt();
    let arg = 3.0 * q / (p * m);
    if arg.abs() > 1.0 + 1e-9 {
        return None;
    }
    let theta = arg.clamp(-1.0, 1.0).acos() / 3.0;
    let tau = 2.0 * std::f64::consts::PI / 3.0;
    let mut r = [
        s + m * theta.cos(),
        s + m * (theta - tau).cos(),
        s + m * (theta - 2.0 * tau).cos(),
    ];
    r.sort_by(|x, y| y.partial_cmp(x).expect("finite roots"));
    Some(r)
}

fn det_one(m: &Mat3) -> Result<Mat3> {
    let det = m.determinant();
    if !det.is_finite() || det == 0.0 {
        return Err(Error::SingularMatrix(det));
    }
    // det(−m) = −det(m): choose the sign with positive determinant, then scale.
    let m = if det < 0.0 { -m } else { *m };
    Ok(m / det.abs().cbrt())
}

/// Real positive spectrum with a gap, or the matching non-proximal error.
fn checked_roots(m: &Mat3) -> Result<[f64; 3]> {
    let (c1, c2, c0) = char_coeffs(m);
    let roots = real_cubic_roots(c1, c2, c0).ok_or_else(|| Error::NonProximal {
        reason: "complex eigenvalue pair".into(),
        gap: 1.0,
    })?;
    if roots[2] <= 0.0 {
        return Err(Error::NonProximal {
            reason: "spectrum is not positive".into(),
            gap: 1.0,
        });
    }
    let crude = (roots[0] / roots[1]).min(roots[1] / roots[2]);
    if crude < 1.0 + 1e-9 {
        return Err(Error::NonProximal {
            reason: "repeated eigenvalue".into(),
            gap: crude,
        });
    }
    Ok(roots)
}

fn char_coeffs(m: &Mat3) -> (f64, f64, f64) {
    let c1 = m.trace();
    let c2 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)]
        - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    (c1, c2, m.determinant())
}

/// A null vector of a (numerically) rank-two matrix, from the largest cross
/// product of row pairs.
fn null_vector(b: &Mat3) -> Option<Vec3> {
    let r = [
        b.row(0).transpose(),
        b.row(1).transpose(),
        b.row(2).transpose(),
    ];
    let cands = [r[0].cross(&r[1]), r[0].cross(&r[2]), r[1].cross(&r[2])];
    let best = cands
        .iter()
        .max_by(|x, y| x.norm().partial_cmp(&y.norm()).expect("finite"))?;
    let n = best.norm();
    if n == 0.0 || !n.is_finite() {
        None
    } else {
        Some(best / n)
    }
}

/// Eigenvector of `m` for the simple real eigenvalue `lambda`: cross-product
/// null vector followed by one inverse-iteration step.
fn eigenvector(m: &Mat3, lambda: f64) -> Option<Vec3> {
    let b = m - Mat3::identity() * lambda;
    let v = null_vector(&b)?;
    let shift = lambda * (1.0 + 1e-10) + 1e-300;
    let refined = (m - Mat3::identity() * shift)
        .lu()
        .solve(&v)
        .filter(|w| w.iter().all(|x| x.is_finite()) && w.norm() > 0.0)
        .map(|w| w.normalize());
    Some(refined.unwrap_or(v))
}

/// Left and right eigenvectors and the two-sided Rayleigh quotient.
fn refine(m: &Mat3, guess: f64) -> Option<(f64, Vec3, Vec3)> {
    let right = eigenvector(m, guess)?;
    let left = eigenvector(&m.transpose(), guess)?;
    let denom = left.dot(&right);
    if denom.abs() < 1e-300 {
        return None;
    }
    let lambda = left.dot(&(m * right)) / denom;
    Some((lambda, right, left))
}

/// Spectral data of a group element (see [`eigen_data_matrix`]).
pub fn eigen_data(g: &GroupElement) -> Result<EigenData> {
    eigen_data_matrix(g.matrix())
}

/// Spectral data of a 3×3 matrix, taken up to sign and scale: the matrix is
/// normalized to determinant one with positive dominant eigenvalue.
pub fn eigen_data_matrix(m: &Mat3) -> Result<EigenData> {
    let inv = m.try_inverse().ok_or(Error::SingularMatrix(0.0))?;
    eigen_data_with_inverse(m, &inv)
}

/// Spectral data from a matrix and an independently computed inverse (for
/// example the product of the reversed word). The small eigenvalue and the
/// repelling point are read off the inverse, so that swapping the two
/// arguments swaps the results exactly.
pub fn eigen_data_with_inverse(m: &Mat3, m_inv: &Mat3) -> Result<EigenData> {
    let m = det_one(m)?;
    let adj = det_one(m_inv)?;
    let roots = checked_roots(&m)?;
    let inv_roots = checked_roots(&adj)?;
    let crude = (roots[0] / roots[1]).min(roots[1] / roots[2]);
    let (l1, attracting, _) = refine(&m, roots[0]).ok_or(Error::NonProximal {
        reason: "dominant eigenvector".into(),
        gap: crude,
    })?;
    let (mu, repelling, left3) = refine(&adj, inv_roots[0]).ok_or(Error::NonProximal {
        reason: "repelling eigenvector".into(),
        gap: crude,
    })?;
    if !(l1 > 0.0 && mu > 0.0) {
        return Err(Error::NonProximal {
            reason: "spectrum is not positive".into(),
            gap: crude,
        });
    }
    let a = l1.ln();
    let b = mu.ln();
    let l3 = 1.0 / mu;
    let l2 = (b - a).exp();
    let gap = (l1 / l2).min(l2 / l3);
    if gap < PROXIMALITY_GAP || 2.0 * a - b <= 0.0 || 2.0 * b - a <= 0.0 {
        return Err(Error::NonProximal {
            reason: "eigenvalue gap below threshold".into(),
            gap,
        });
    }
    let saddle = eigenvector(&m, l2).ok_or(Error::NonProximal {
        reason: "saddle eigenvector".into(),
        gap,
    })?;
    let (ell, eta, alpha) = invariants_from_logs(a, b);
    Ok(EigenData {
        lambda: [l1, l2, l3],
        attracting: ProjPoint::from_vector(&attracting)?,
        repelling: ProjPoint::from_vector(&repelling)?,
        saddle: ProjPoint::from_vector(&saddle)?,
        tangent: ProjLine::from_vector(&left3)?,
        translation_length: ell,
        eta,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_example() {
        let g = Mat3::from_diagonal(&Vec3::new(4.0, 2.0, 0.125));
        let e = eigen_data_matrix(&g).unwrap();
        assert!((e.translation_length - 0.5 * 32f64.ln()).abs() < 1e-12);
        assert!((e.translation_length - 1.732868).abs() < 1e-6);
        assert!((e.eta + 0.6).abs() < 1e-12);
        assert!((e.alpha - 5.0).abs() < 1e-12);
        assert!(e
            .attracting
            .approx_eq(&ProjPoint::new(1.0, 0.0, 0.0).unwrap(), 1e-12));
        assert!(e
            .repelling
            .approx_eq(&ProjPoint::new(0.0, 0.0, 1.0).unwrap(), 1e-12));
        assert!(e
            .saddle
            .approx_eq(&ProjPoint::new(0.0, 1.0, 0.0).unwrap(), 1e-12));
        assert!(e.tangent.pairing(&e.saddle).abs() < 1e-12);
        assert!(e.tangent.pairing(&e.attracting).abs() < 1e-12);
        assert!(e.tangent.pairing(&e.repelling).abs() > 0.5);
    }

    #[test]
    fn symmetric_spectrum() {
        for &l in &[1.5, 3.0, 40.0] {
            let g = Mat3::from_diagonal(&Vec3::new(l, 1.0, 1.0 / l));
            let e = eigen_data_matrix(&g).unwrap();
            assert!(e.eta.abs() < 1e-12);
            assert!((e.alpha - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_proximal_inputs() {
        assert!(matches!(
            eigen_data_matrix(&Mat3::identity()),
            Err(Error::NonProximal { .. })
        ));
        let rot = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            eigen_data_matrix(&rot),
            Err(Error::NonProximal { .. })
        ));
        let nearly = Mat3::from_diagonal(&Vec3::new(2.0, 2.0 * (1.0 + 1e-8), 0.25));
        assert!(matches!(
            eigen_data_matrix(&nearly),
            Err(Error::NonProximal { .. })
        ));
    }

    #[test]
    fn conjugated_diagonal() {
        let h = Mat3::new(1.0, 2.0, 0.5, -1.0, 0.3, 2.0, 0.7, 0.1, 1.0);
        let d = Mat3::from_diagonal(&Vec3::new(5.0, 0.8, 0.25));
        let g = h * d * h.try_inverse().unwrap();
        let e = eigen_data_matrix(&(g * 3.0)).unwrap();
        let lp = ProjPoint::from_vector(&h.column(0).into_owned()).unwrap();
        assert!(e.attracting.approx_eq(&lp, 1e-12));
        assert!((e.lambda[0] - 5.0).abs() < 1e-12);
        assert!((e.lambda[1] - 0.8).abs() < 1e-12);
        assert!((e.lambda[2] - 0.25).abs() < 1e-12);
        let neg = eigen_data_matrix(&(-g)).unwrap();
        assert!((neg.alpha - e.alpha).abs() < 1e-14);
    }
}
