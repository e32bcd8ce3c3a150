use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::projgeom::{AffineChart, Mat3, Vec3};

/// Tolerance for the Coxeter relations, entrywise after projective scaling.
pub const RELATION_TOL: f64 = 1e-10;

/// A representation of a finitely generated group into `PGL(3, R)`, given by
/// its generator matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    generators: Vec<Mat3>,
    names: Vec<String>,
    coxeter: Option<[u32; 3]>,
    tau: f64,
    chart_hint: AffineChart,
    verified: bool,
}

/// A symmetric bilinear form preserved by every generator.
#[derive(Debug, Clone)]
pub struct InvariantForm {
    pub matrix: Mat3,
    /// `max_g |gᵀJg − J|` entrywise, with `J` scaled to unit Frobenius norm.
    pub residual: f64,
    /// Number of positive and negative eigenvalues.
    pub signature: (usize, usize),
}

/// Cartan matrix of the triangle reflection group with Coxeter orders
/// `m12 = p`, `m23 = q`, `m31 = r` and triple ratio `exp(tau)`.
///
/// Off-diagonal entries are `c_ij = −2 cos(π/m_ij) s_ij` with
/// `s12 = s23 = s31 = exp(tau/6)` and `s21 = s32 = s13 = exp(−tau/6)`, so
/// `c_ij c_ji = 4 cos²(π/m_ij)` for every pair and
/// `(c12 c23 c31)/(c13 c21 c32) = exp(tau)`.
pub fn triangle_cartan_matrix(p: u32, q: u32, r: u32, tau: f64) -> Mat3 {
    let c = |m: u32| 2.0 * (PI / m as f64).cos();
    let up = (tau / 6.0).exp();
    let down = (-tau / 6.0).exp();
    let mut a = Mat3::identity() * 2.0;
    // forward cyclic entries (1,2), (2,3), (3,1)
    a[(0, 1)] = -c(p) * up;
    a[(1, 2)] = -c(q) * up;
    a[(2, 0)] = -c(r) * up;
    a[(1, 0)] = -c(p) * down;
    a[(2, 1)] = -c(q) * down;
    a[(0, 2)] = -c(r) * down;
    a
}

/// The Vinberg reflection representation of the `(p, q, r)` triangle group at
/// deformation parameter `tau` (the logarithm of the cyclic triple ratio of
/// the Cartan matrix). `tau = 0` is the hyperbolic point.
pub fn vinberg_triangle(p: u32, q: u32, r: u32, tau: f64) -> Result<Representation> {
    if p < 2 || q < 2 || r < 2 {
        return Err(Error::InvalidParameter(format!(
            "Coxeter orders must be at least 2, got ({p},{q},{r})"
        )));
    }
    if !tau.is_finite() {
        return Err(Error::InvalidParameter("tau must be finite".into()));
    }
    let sum = 1.0 / p as f64 + 1.0 / q as f64 + 1.0 / r as f64;
    if sum >= 1.0 - 1e-12 {
        return Err(Error::NotHyperbolic { p, q, r, sum });
    }
    if (p == 2 || q == 2 || r == 2) && tau != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "triangle group ({p},{q},{r}) has an order-2 vertex and admits no triple-ratio deformation"
        )));
    }
    let a = triangle_cartan_matrix(p, q, r, tau);
    // In the root basis ρ_i = I − v_i α_iᵀ with α_i = e_i and v_i the i-th
    // column of A.
    let generators: Vec<Mat3> = (0..3)
        .map(|i| {
            let mut g = Mat3::identity();
            for row in 0..3 {
                g[(row, i)] -= a[(row, i)];
            }
            g
        })
        .collect();

    // Work in the basis whose z-functional lies inside the dual chamber
    // {f : f(v_i) > 0}, with the barycentre (1,1,1) of the fundamental chamber
    // sent to the chart origin. Products of long words are markedly better
    // conditioned here than in the root basis.
    let ones = Vec3::new(1.0, 1.0, 1.0);
    let f = -(a
        .transpose()
        .try_inverse()
        .ok_or(Error::SingularMatrix(0.0))?
        * ones);
    if f.dot(&ones) <= 0.0 {
        return Err(Error::InconsistentRepresentation(
            "Cartan matrix is not of negative type".into(),
        ));
    }
    let f = f.normalize();
    let r0 = Vec3::new(1.0, -1.0, 0.0).normalize();
    let r1 = Vec3::new(1.0, 1.0, -2.0).normalize();
    let basis = Mat3::from_rows(&[r0.transpose(), r1.transpose(), f.transpose()]);
    let basis_inv = basis.try_inverse().ok_or(Error::SingularMatrix(0.0))?;
    let generators = generators.iter().map(|g| basis * g * basis_inv).collect();

    let rep = Representation {
        generators,
        names: vec!["r1".into(), "r2".into(), "r3".into()],
        coxeter: Some([p, q, r]),
        tau,
        chart_hint: AffineChart::identity(),
        verified: true,
    };
    let residual = rep.coxeter_residual().unwrap_or(0.0);
    if residual > RELATION_TOL {
        return Err(Error::InconsistentRepresentation(format!(
            "Coxeter relations fail with residual {residual:.3e}"
        )));
    }
    Ok(rep)
}

/// Residual of `m` against the identity after the best projective scaling.
pub fn projective_identity_residual(m: &Mat3) -> f64 {
    let s = m.trace() / 3.0;
    if s == 0.0 {
        return f64::INFINITY;
    }
    (m / s - Mat3::identity()).amax()
}

impl Representation {
    /// A representation from arbitrary generators. Relations are not checked;
    /// the result is flagged unverified unless Coxeter orders are supplied and
    /// hold.
    pub fn from_generators(
        generators: Vec<Mat3>,
        names: Vec<String>,
        coxeter: Option<[u32; 3]>,
        tau: f64,
        chart_hint: Option<AffineChart>,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidParameter("no generators".into()));
        }
        if names.len() != generators.len() {
            return Err(Error::InvalidParameter(
                "generator names and matrices differ in number".into(),
            ));
        }
        let generators = generators
            .into_iter()
            .map(|g| {
                let det = g.determinant();
                if det.abs() < 1e-300 || !det.is_finite() {
                    return Err(Error::SingularMatrix(det));
                }
                if (det.abs() - 1.0).abs() <= 1e-12 {
                    Ok(g)
                } else {
                    Ok(g / det.abs().cbrt())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rep = Representation {
            generators,
            names,
            coxeter,
            tau,
            chart_hint: chart_hint.unwrap_or_else(AffineChart::identity),
            verified: false,
        };
        if rep.coxeter.is_some() && rep.generators.len() == 3 {
            rep.verified = rep
                .coxeter_residual()
                .map(|r| r <= RELATION_TOL)
                .unwrap_or(false);
        }
        Ok(rep)
    }

    pub fn generators(&self) -> &[Mat3] {
        &self.generators
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn coxeter_orders(&self) -> Option<[u32; 3]> {
        self.coxeter
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn chart_hint(&self) -> &AffineChart {
        &self.chart_hint
    }

    /// Whether the Coxeter relations were checked and hold.
    pub fn is_verified(&self) -> bool {
        self.verified
    }

    /// Largest residual over `ρ_i² = I` and `(ρ_i ρ_j)^{m_ij} = I`, or `None`
    /// when no Coxeter orders are attached.
    pub fn coxeter_residual(&self) -> Option<f64> {
        let [p, q, r] = self.coxeter?;
        if self.generators.len() != 3 {
            return None;
        }
        let g = &self.generators;
        let mut worst: f64 = 0.0;
        for gi in g {
            worst = worst.max(projective_identity_residual(&(gi * gi)));
        }
        for &(i, j, m) in &[(0usize, 1usize, p), (1, 2, q), (2, 0, r)] {
            let prod = g[i] * g[j];
            let mut acc = Mat3::identity();
            for _ in 0..m {
                acc *= prod;
            }
            worst = worst.max(projective_identity_residual(&acc));
        }
        Some(worst)
    }

    /// Solve `gᵀ J g = J` for a symmetric `J` common to all generators. Returns
    /// `None` when the linear system has no (numerically) nonzero solution.
    pub fn invariant_form(&self) -> Option<InvariantForm> {
        // Unknowns: J00 J01 J02 J11 J12 J22.
        let idx = |i: usize, j: usize| -> usize {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            match (a, b) {
                (0, 0) => 0,
                (0, 1) => 1,
                (0, 2) => 2,
                (1, 1) => 3,
                (1, 2) => 4,
                _ => 5,
            }
        };
        let rows = 9 * self.generators.len();
        let mut sys = DMatrix::<f64>::zeros(rows, 6);
        for (n, g) in self.generators.iter().enumerate() {
            for a in 0..3 {
                for b in 0..3 {
                    let row = 9 * n + 3 * a + b;
                    // (gᵀ J g)_{ab} − J_{ab}
                    for i in 0..3 {
                        for j in 0..3 {
                            sys[(row, idx(i, j))] += g[(i, a)] * g[(j, b)];
                        }
                    }
                    sys[(row, idx(a, b))] -= 1.0;
                }
            }
        }
        let svd = sys.svd(false, true);
        let v_t = svd.v_t?;
        let (k, smin) =
            svd.singular_values
                .iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc },
                );
        let smax = svd.singular_values.max();
        if smin > 1e-8 * smax.max(1.0) {
            return None;
        }
        let x = v_t.row(k);
        let mut j = Mat3::zeros();
        for a in 0..3 {
            for b in 0..3 {
                j[(a, b)] = x[idx(a, b)];
            }
        }
        let eig = SymmetricEigen::new(j);
        let pos = eig.eigenvalues.iter().filter(|&&e| e > 0.0).count();
        let neg = eig.eigenvalues.iter().filter(|&&e| e < 0.0).count();
        if pos < neg {
            j = -j;
        }
        let j = j / j.norm();
        let residual = self
            .generators
            .iter()
            .map(|g| (g.transpose() * j * g - j).amax())
            .fold(0.0, f64::max);
        Some(InvariantForm {
            matrix: j,
            residual,
            signature: (pos.max(neg), pos.min(neg)),
        })
    }

    /// Serialize as the plain-text representation record (17 significant
    /// digits, row-major matrices).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "representation v1");
        let _ = writeln!(s, "names {}", self.names.join(" "));
        if let Some([p, q, r]) = self.coxeter {
            let _ = writeln!(s, "coxeter {p} {q} {r}");
        }
        let _ = writeln!(s, "tau {:.16e}", self.tau);
        let _ = writeln!(
            s,
            "status {}",
            if self.verified {
                "verified"
            } else {
                "unverified"
            }
        );
        for (name, g) in self.names.iter().zip(&self.generators) {
            let _ = writeln!(s, "generator {name}");
            write_matrix(&mut s, g);
        }
        let _ = writeln!(s, "chart");
        write_matrix(&mut s, self.chart_hint.matrix());
        s
    }

    /// Parse a representation record. Generators are accepted as given; the
    /// Coxeter relations are re-checked and the status recomputed.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty record".into()))?;
        if header != "representation v1" {
            return Err(Error::Format(format!("unexpected header `{header}`")));
        }
        let mut names: Vec<String> = Vec::new();
        let mut coxeter = None;
        let mut tau = 0.0;
        let mut generators = Vec::new();
        let mut gen_names = Vec::new();
        let mut chart = None;
        while let Some(line) = lines.next() {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "names" => names = rest.split_whitespace().map(String::from).collect(),
                "coxeter" => {
                    let v = parse_numbers::<u32>(rest, 3, "coxeter")?;
                    coxeter = Some([v[0], v[1], v[2]]);
                }
                "tau" => tau = parse_numbers::<f64>(rest, 1, "tau")?[0],
                "status" => {}
                "generator" => {
                    gen_names.push(rest.trim().to_string());
                    generators.push(read_matrix(&mut lines, "generator")?);
                }
                "chart" => chart = Some(AffineChart::new(read_matrix(&mut lines, "chart")?)?),
                other => return Err(Error::Format(format!("unknown key `{other}`"))),
            }
        }
        if !names.is_empty() && names != gen_names {
            return Err(Error::Format("generator names do not match `names`".into()));
        }
        Representation::from_generators(generators, gen_names, coxeter, tau, chart)
    }
}

fn write_matrix(s: &mut String, m: &Mat3) {
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

fn parse_numbers<T: std::str::FromStr>(s: &str, n: usize, what: &str) -> Result<Vec<T>> {
    let v: Vec<T> = s
        .split_whitespace()
        .map(|t| t.parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Format(format!("cannot parse `{what}` values from `{s}`")))?;
    if v.len() != n {
        return Err(Error::Format(format!(
            "`{what}` expects {n} values, got {}",
            v.len()
        )));
    }
    Ok(v)
}

fn read_matrix<'a>(lines: &mut impl Iterator<Item = &'a str>, what: &str) -> Result<Mat3> {
    let mut m = Mat3::zeros();
    for i in 0..3 {
        let line = lines
            .next()
            .ok_or_else(|| Error::Format(format!("`{what}` matrix truncated")))?;
        let row = parse_numbers::<f64>(line, 3, what)?;
        for j in 0..3 {
            m[(i, j)] = row[j];
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartan_products_and_triple_ratio() {
        let tau = 0.8;
        let a = triangle_cartan_matrix(3, 3, 4, tau);
        let four_cos2 = |m: f64| 4.0 * (PI / m).cos().powi(2);
        assert!((a[(0, 1)] * a[(1, 0)] - four_cos2(3.0)).abs() < 1e-14);
        assert!((a[(1, 2)] * a[(2, 1)] - four_cos2(3.0)).abs() < 1e-14);
        assert!((a[(2, 0)] * a[(0, 2)] - four_cos2(4.0)).abs() < 1e-14);
        let ratio = (a[(0, 1)] * a[(1, 2)] * a[(2, 0)]) / (a[(0, 2)] * a[(1, 0)] * a[(2, 1)]);
        assert!((ratio.ln() - tau).abs() < 1e-13);
    }

    #[test]
    fn coxeter_relations_hold_along_family() {
        for &tau in &[-1.5, -0.8, 0.0, 0.5, 0.8, 2.0] {
            let rep = vinberg_triangle(3, 3, 4, tau).unwrap();
            assert!(rep.is_verified());
            let g = rep.generators();
            for gi in g {
                assert!((gi.determinant() + 1.0).abs() < 1e-12);
            }
            let r12 = g[0] * g[1];
            assert!(projective_identity_residual(&(r12 * r12 * r12)) < 1e-10);
            assert!(rep.coxeter_residual().unwrap() < 1e-10);
        }
    }

    #[test]
    fn non_hyperbolic_triangles_rejected() {
        assert!(matches!(
            vinberg_triangle(3, 3, 3, 0.0),
            Err(Error::NotHyperbolic { .. })
        ));
        assert!(matches!(
            vinberg_triangle(2, 4, 4, 0.0),
            Err(Error::NotHyperbolic { .. })
        ));
        assert!(vinberg_triangle(2, 3, 7, 0.0).is_ok());
        assert!(vinberg_triangle(2, 3, 7, 0.3).is_err());
    }

    #[test]
    fn fuchsian_point_preserves_lorentzian_form() {
        let rep = vinberg_triangle(3, 3, 4, 0.0).unwrap();
        let form = rep.invariant_form().expect("form exists at tau = 0");
        assert!(form.residual <= 1e-8, "residual {}", form.residual);
        assert_eq!(form.signature, (2, 1));
    }

    #[test]
    fn deformed_point_has_no_invariant_form() {
        let rep = vinberg_triangle(3, 3, 4, 0.8).unwrap();
        assert!(rep.invariant_form().is_none());
    }

    #[test]
    fn text_round_trip() {
        let rep = vinberg_triangle(3, 3, 4, 0.8).unwrap();
        let text = rep.to_text();
        let back = Representation::from_text(&text).unwrap();
        assert!(back.is_verified());
        assert_eq!(back.coxeter_orders(), Some([3, 3, 4]));
        for (a, b) in rep.generators().iter().zip(back.generators()) {
            assert!((a - b).amax() < 1e-15);
        }
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn arbitrary_generators_are_unverified() {
        let g = Mat3::new(2.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        let rep =
            Representation::from_generators(vec![g], vec!["a".into()], None, 0.0, None).unwrap();
        assert!(!rep.is_verified());
        assert!(rep.to_text().contains("status unverified"));
    }
}
