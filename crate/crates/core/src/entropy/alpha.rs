use serde::{Deserialize, Serialize};

use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::holonomy::{EigenData, GroupElement};
use crate::projgeom::{dot2, norm2, scale2, sub2, Mat3, ProjLine, ProjPoint, Vec2, Vec3};

/// Least-squares boundary-exponent fit at a boundary point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit {
    pub alpha: f64,
    pub r_squared: f64,
    /// Scale range `(t_min, t_max)` of the fitted samples.
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    /// True when the samples approach from one side only.
    pub one_sided: bool,
}

/// Scale window for [`boundary_alpha`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaOptions {
    /// Minimum number of scales in the fit.
    pub min_scales: usize,
    /// Number of coarsest scales to discard (pre-asymptotic regime).
    pub drop_coarse: usize,
    /// Graph heights below this are dominated by rounding and discarded.
    pub min_height: f64,
}

impl Default for AlphaOptions {
    fn default() -> Self {
        AlphaOptions {
            min_scales: 6,
            drop_coarse: 2,
            min_height: 1e-11,
        }
    }
}

/// Chart frame at `ξ`: the first axis along the tangent line, the second
/// along the inward normal (towards the chart origin, which is interior).
fn frame(dom: &ConvexDomain, xi: &ProjPoint, tangent: &ProjLine) -> Result<(Vec2, Vec2, Vec2)> {
    let origin = dom.to_chart(xi)?;
    let l: Vec3 = dom.chart().inverse().transpose() * tangent.coeffs();
    let (a, b) = (l[0], l[1]);
    let n = a.hypot(b);
    if n == 0.0 {
        return Err(Error::DegenerateConfiguration(
            "tangent line is the line at infinity of the chart".into(),
        ));
    }
    let e1 = [-b / n, a / n];
    let mut e2 = [a / n, b / n];
    if dot2(sub2([0.0, 0.0], origin), e2) < 0.0 {
        e2 = scale2(e2, -1.0);
    }
    Ok((origin, e1, e2))
}

/// Offsets below this are at the chart's rounding scale.
const ROUNDING_SCALE: f64 = 1e-9;

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    (slope, r2)
}

/// Fit the boundary exponent at `ξ` from boundary samples approaching it.
///
/// Samples are expressed as graph points `(t, f(t))` in the tangent/normal
/// frame; opposite sides are paired by nearest `|t|` and the slope of
/// `log((f(t) + f(−t))/2)` against `log|t|` is fitted, after discarding the
/// coarsest scales.
pub fn boundary_alpha(
    dom: &ConvexDomain,
    xi: &ProjPoint,
    tangent: &ProjLine,
    points: &[ProjPoint],
    opts: &AlphaOptions,
) -> Result<AlphaFit> {
    let (origin, e1, e2) = frame(dom, xi, tangent)?;
    let mut graph = Vec::with_capacity(points.len());
    for p in points {
        let d = sub2(dom.to_chart(p)?, origin);
        if norm2(d) > 0.0 {
            graph.push((dot2(d, e1), dot2(d, e2)));
        }
    }
    fit_graph(&graph, opts)
}

/// Fit the exponent from graph samples `(t, f(t))` in a tangent/normal frame.
pub fn fit_graph(graph: &[(f64, f64)], opts: &AlphaOptions) -> Result<AlphaFit> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &(t, f) in graph {
        if f < opts.min_height {
            // Heights at the rounding floor carry no shape information; a
            // non-positive height at a resolvable scale means the samples
            // are not on a strictly convex curve touching the tangent.
            if f <= 0.0 && t.abs() > ROUNDING_SCALE {
                return Err(Error::InconsistentBoundary(format!(
                    "sample at t = {t:.3e} lies on or outside the tangent line (f = {f:.3e})"
                )));
            }
            continue;
        }
        if t > 0.0 {
            right.push((t, f));
        } else if t < 0.0 {
            left.push((-t, f));
        }
    }
    let by_scale = |a: &(f64, f64), b: &(f64, f64)| b.0.total_cmp(&a.0);
    left.sort_by(by_scale);
    right.sort_by(by_scale);
    let one_sided = left.is_empty() || right.is_empty();
    // Graph samples ordered from coarse to fine.
    let samples: Vec<(f64, f64)> = if one_sided {
        if left.is_empty() {
            right
        } else {
            left
        }
    } else {
        let (few, many) = if left.len() <= right.len() {
            (&left, &right)
        } else {
            (&right, &left)
        };
        few.iter()
            .map(|&(t, f)| {
                let gap = |a: &(f64, f64)| (a.0.ln() - t.ln()).abs();
                let &(s, g) = many
                    .iter()
                    .min_by(|a, b| gap(a).total_cmp(&gap(b)))
                    .expect("non-empty side");
                ((t * s).sqrt(), 0.5 * (f + g))
            })
            .collect()
    };
    let usable: Vec<(f64, f64)> = samples.into_iter().skip(opts.drop_coarse).collect();
    if usable.len() < opts.min_scales {
        return Err(Error::InsufficientScales {
            found: usable.len(),
            needed: opts.min_scales,
        });
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let (alpha, r_squared) = least_squares(&xs, &ys);
    if !(alpha >= 1.0 - 1e-9) {
        return Err(Error::InconsistentBoundary(format!(
            "fitted exponent {alpha:.4} is below 1"
        )));
    }
    let ts = usable.iter().map(|p| p.0);
    Ok(AlphaFit {
        alpha,
        r_squared,
        t_min: ts.clone().fold(f64::INFINITY, f64::min),
        t_max: ts.fold(0.0, f64::max),
        n_points: usable.len(),
        one_sided,
    })
}

/// Boundary samples `γ^k z` for `k = 1..=k_max`, approaching the attracting
/// fixed point of `γ` along the boundary from the side of `z`.
pub fn self_similar_samples(g: &GroupElement, z: &ProjPoint, k_max: u32) -> Result<Vec<ProjPoint>> {
    let m = g.matrix();
    let mut v: Vec3 = *z.coords();
    let mut out = Vec::with_capacity(k_max as usize);
    for _ in 0..k_max {
        v = m * v;
        v /= v.amax();
        out.push(ProjPoint::from_vector(&v)?);
    }
    Ok(out)
}

/// Graph samples of `γ^k z`, `k = 1..=k_max`, in the chart frame at the
/// attracting point `ξ = [v₁]` of `γ`, computed in the eigenbasis.
///
/// Writing `z = a₁v₁ + a₂v₂ + a₃v₃`, the sample is `v₁ + s v₂ + u v₃` with
/// `s = (λ₂/λ₁)^k a₂/a₁` and `u = (λ₃/λ₁)^k a₃/a₁`. Because the tangent at
/// `ξ` is spanned by `v₁, v₂`, only `u` contributes to the normal offset,
/// which is therefore obtained without cancellation even when it is many
/// orders of magnitude below the tangential offset.
pub fn self_similar_graph(
    dom: &ConvexDomain,
    eigen: &EigenData,
    z: &ProjPoint,
    k_max: u32,
) -> Result<Vec<(f64, f64)>> {
    let c = dom.chart().matrix();
    let basis = Mat3::from_columns(&[
        *eigen.attracting.coords(),
        *eigen.saddle.coords(),
        *eigen.repelling.coords(),
    ]);
    let lu = basis.lu();
    let a = lu
        .solve(z.coords())
        .ok_or_else(|| Error::SingularMatrix(basis.determinant()))?;
    if a[0].abs() < 1e-14 * a.amax() {
        return Err(Error::DegenerateConfiguration(
            "anchor lies on the repelling line of the element".into(),
        ));
    }
    let q = c * eigen.attracting.coords();
    let pa = c * eigen.saddle.coords();
    let pb = c * eigen.repelling.coords();
    let lift = |w: &Vec3| -> Vec2 {
        [
            (w[0] * q[2] - q[0] * w[2]) / q[2],
            (w[1] * q[2] - q[1] * w[2]) / q[2],
        ]
    };
    // Chart offsets per unit of s and of u, before the common denominator.
    let (x, y) = (lift(&pa), lift(&pb));
    let nx = norm2(x);
    if nx == 0.0 {
        return Err(Error::DegenerateConfiguration(
            "tangent direction vanishes".into(),
        ));
    }
    let e1 = scale2(x, 1.0 / nx);
    let mut e2 = [-e1[1], e1[0]];
    let origin = [q[0] / q[2], q[1] / q[2]];
    if dot2(sub2([0.0, 0.0], origin), e2) < 0.0 {
        e2 = scale2(e2, -1.0);
    }
    let (y1, y2) = (dot2(y, e1), dot2(y, e2));
    let [l1, l2, l3] = eigen.lambda;
    let mut out = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max as i32 {
        let s = (l2 / l1).powi(k) * a[1] / a[0];
        let u = (l3 / l1).powi(k) * a[2] / a[0];
        let den = q[2] + s * pa[2] + u * pb[2];
        out.push(((s * nx + u * y1) / den, u * y2 / den));
    }
    Ok(out)
}

/// α at the attracting point of `γ` from self-similar samples on both sides.
/// `anchors` supplies candidate boundary points (e.g. fixed points of other
/// group elements); one is chosen in each component of the boundary minus
/// the two fixed points of `γ`.
pub fn periodic_alpha(
    dom: &ConvexDomain,
    eigen: &EigenData,
    anchors: &[ProjPoint],
    k_max: u32,
    opts: &AlphaOptions,
) -> Result<AlphaFit> {
    let angle = |p: &ProjPoint| -> Result<f64> {
        let c = dom.to_chart(p)?;
        Ok(c[1].atan2(c[0]))
    };
    let a_plus = angle(&eigen.attracting)?;
    let a_minus = angle(&eigen.repelling)?;
    let tau = std::f64::consts::TAU;
    let arc = (a_minus - a_plus).rem_euclid(tau);
    // Pick in each arc the anchor farthest (in angle) from both endpoints.
    let mut best: [Option<(f64, &ProjPoint)>; 2] = [None, None];
    for p in anchors {
        let u = (angle(p)? - a_plus).rem_euclid(tau);
        let (side, margin) = if u < arc {
            (0, u.min(arc - u))
        } else {
            (1, (u - arc).min(tau - u))
        };
        if margin > 1e-3 && best[side].is_none_or(|(m, _)| margin > m) {
            best[side] = Some((margin, p));
        }
    }
    let mut graph = Vec::new();
    for (_, z) in best.iter().flatten() {
        graph.extend(self_similar_graph(dom, eigen, z, k_max)?);
    }
    // The offsets carry full relative precision, so no rounding floor applies.
    let opts = AlphaOptions {
        min_height: f64::MIN_POSITIVE,
        ..*opts
    };
    fit_graph(&graph, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::conic_domain;

    fn disk() -> ConvexDomain {
        conic_domain(&Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0))).unwrap()
    }

    #[test]
    fn conic_boundary_is_quadratic() {
        let d = disk();
        let phi0: f64 = 0.4;
        let xi = ProjPoint::from_chart([phi0.cos(), phi0.sin()]);
        let tangent = ProjLine::new(phi0.cos(), phi0.sin(), -1.0).unwrap();
        let pts: Vec<ProjPoint> = (1..=14)
            .flat_map(|k| {
                let s = 0.5f64.powi(k);
                [phi0 + s, phi0 - 1.3 * s]
            })
            .map(|a| ProjPoint::from_chart([a.cos(), a.sin()]))
            .collect();
        let fit = boundary_alpha(&d, &xi, &tangent, &pts, &AlphaOptions::default()).unwrap();
        assert!((fit.alpha - 2.0).abs() < 0.01, "{fit:?}");
        assert!(!fit.one_sided);
        assert!(fit.r_squared > 0.999);
    }

    #[test]
    fn degenerate_samples_are_rejected() {
        let d = disk();
        let xi = ProjPoint::from_chart([1.0, 0.0]);
        let tangent = ProjLine::new(1.0, 0.0, -1.0).unwrap();
        let on_tangent: Vec<ProjPoint> = (1..10)
            .map(|k| ProjPoint::from_chart([1.0, 0.5f64.powi(k)]))
            .collect();
        assert!(matches!(
            boundary_alpha(&d, &xi, &tangent, &on_tangent, &AlphaOptions::default()),
            Err(Error::InconsistentBoundary(_))
        ));
        let few: Vec<ProjPoint> = (1..4)
            .map(|k| {
                let a = 0.5f64.powi(k);
                ProjPoint::from_chart([a.cos(), a.sin()])
            })
            .collect();
        assert!(matches!(
            boundary_alpha(&d, &xi, &tangent, &few, &AlphaOptions::default()),
            Err(Error::InsufficientScales { .. })
        ));
    }
}
