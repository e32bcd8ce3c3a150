//! The Hilbert geodesic flow in closed form, deck-transformation recentering,
//! finite-difference tangent cocycles, and the Euclidean-speed time change.

mod cocycle;
mod recenter;
mod trace;

pub use cocycle::{
    beta_and_abramov, initial_condition, lyapunov_spectrum, lyapunov_spectrum_traced,
    AbramovRecord, CocycleConfig, LyapunovEstimate,
};
pub use recenter::{recenter, Recenterer, DEFAULT_SEARCH_LENGTH};
pub use trace::{write_trace_csv, TraceRow};

use crate::domain::{ChordHit, ConvexDomain, NEAR_BOUNDARY};
use crate::error::{Error, Result};
use crate::projgeom::{add2, map_chart, norm2, scale2, Mat3, ProjPoint, Vec2};

/// A point of the homogenized tangent bundle: a base point in chart
/// coordinates, a unit chart direction, and the cached chord of the oriented
/// line (`x + t·dir` meets the boundary at `t_minus < 0 < t_plus`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowPoint {
    pub x: Vec2,
    pub dir: Vec2,
    pub t_minus: f64,
    pub t_plus: f64,
    /// Boundary position uncertainty carried by the chord.
    pub residual: f64,
}

impl FlowPoint {
    /// Build from a chart point and a (nonzero) chart direction.
    pub fn new(dom: &ConvexDomain, x: Vec2, dir: Vec2) -> Result<Self> {
        let n = norm2(dir);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateDirection);
        }
        let dir = scale2(dir, 1.0 / n);
        let ch = dom.chord_chart(x, dir)?;
        Ok(FlowPoint {
            x,
            dir,
            t_minus: ch.t_minus,
            t_plus: ch.t_plus,
            residual: ch.residual,
        })
    }

    pub fn from_angle(dom: &ConvexDomain, x: Vec2, theta: f64) -> Result<Self> {
        Self::new(dom, x, [theta.cos(), theta.sin()])
    }

    pub fn angle(&self) -> f64 {
        self.dir[1].atan2(self.dir[0])
    }

    pub fn p_plus(&self) -> Vec2 {
        add2(self.x, scale2(self.dir, self.t_plus))
    }

    pub fn p_minus(&self) -> Vec2 {
        add2(self.x, scale2(self.dir, self.t_minus))
    }

    /// Recompute the chord from `(x, dir)`.
    pub fn refresh(&self, dom: &ConvexDomain) -> Result<Self> {
        Self::new(dom, self.x, self.dir)
    }

    pub fn base_point(&self, dom: &ConvexDomain) -> Result<ProjPoint> {
        dom.from_chart(self.x)
    }

    pub fn chord_hit(&self, dom: &ConvexDomain) -> Result<ChordHit> {
        let (m, p) = (self.p_minus(), self.p_plus());
        Ok(ChordHit {
            p_minus: dom.from_chart(m)?,
            p_plus: dom.from_chart(p)?,
            chart_minus: m,
            chart_plus: p,
            residual: self.residual,
        })
    }

    /// Image under a projective map given in chart coordinates; the chord is
    /// recomputed in `dom`.
    pub fn transform(&self, dom: &ConvexDomain, g: &Mat3) -> Result<Self> {
        let (x, dir) = push_forward(g, self.x, self.dir)?;
        Self::new(dom, x, dir)
    }
}

/// Image of a point and a tangent direction under a projective map of the
/// chart (the direction by the derivative of the map).
pub fn push_forward(g: &Mat3, x: Vec2, v: Vec2) -> Result<(Vec2, Vec2)> {
    let den = g[(2, 0)] * x[0] + g[(2, 1)] * x[1] + g[(2, 2)];
    if den.abs() < 1e-300 {
        return Err(Error::PointAtInfinity);
    }
    let y = map_chart(g, x)?;
    let c = [g[(2, 0)], g[(2, 1)]];
    let cv = c[0] * v[0] + c[1] * v[1];
    let jv = [
        (g[(0, 0)] * v[0] + g[(0, 1)] * v[1] - y[0] * cv) / den,
        (g[(1, 0)] * v[0] + g[(1, 1)] * v[1] - y[1] * cv) / den,
    ];
    Ok((y, jv))
}

/// `1 / (1 + e^z)` without overflow.
fn logistic_complement(z: f64) -> f64 {
    if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Flow for Hilbert time `t` along the cached chord.
///
/// The affine ratio `u = |x − p⁻| / |x − p⁺|` is multiplied by `e^{2t}`; the
/// new chord parameters are formed directly from the ratio, so points close
/// to either endpoint keep full relative precision.
pub fn geodesic_flow(w: &FlowPoint, t: f64) -> Result<FlowPoint> {
    if t == 0.0 {
        return Ok(*w);
    }
    let len = w.t_plus - w.t_minus;
    let log_u = (-w.t_minus).ln() - w.t_plus.ln() + 2.0 * t;
    let t_plus = len * logistic_complement(log_u);
    let t_minus = -len * logistic_complement(-log_u);
    let clearance = t_plus.min(-t_minus);
    if !(clearance >= NEAR_BOUNDARY) {
        return Err(Error::NearBoundary(clearance));
    }
    let shift = if t > 0.0 {
        w.t_plus - t_plus
    } else {
        w.t_minus - t_minus
    };
    Ok(FlowPoint {
        x: add2(w.x, scale2(w.dir, shift)),
        dir: w.dir,
        t_minus,
        t_plus,
        residual: w.residual,
    })
}

/// Move a Euclidean chart distance `h` along the chord (the unit-chart-speed
/// reparametrization). Returns the new point and the Hilbert time elapsed.
pub fn euclidean_flow(w: &FlowPoint, h: f64) -> Result<(FlowPoint, f64)> {
    let t_plus = w.t_plus - h;
    let t_minus = w.t_minus - h;
    let clearance = t_plus.min(-t_minus);
    if !(clearance >= NEAR_BOUNDARY) {
        return Err(Error::NearBoundary(clearance));
    }
    let dt = 0.5 * ((w.t_plus / t_plus).ln() + (t_minus / w.t_minus).ln());
    Ok((
        FlowPoint {
            x: add2(w.x, scale2(w.dir, h)),
            dir: w.dir,
            t_minus,
            t_plus,
            residual: w.residual,
        },
        dt,
    ))
}

/// Euclidean displacement reached after Hilbert time `t`.
pub fn euclidean_step_for_time(w: &FlowPoint, t: f64) -> Result<f64> {
    let moved = geodesic_flow(w, t)?;
    Ok(w.t_plus - moved.t_plus)
}

/// The flip `(x, [v]) ↦ (x, [−v])`.
pub fn flip(w: &FlowPoint) -> FlowPoint {
    FlowPoint {
        x: w.x,
        dir: [-w.dir[0], -w.dir[1]],
        t_minus: -w.t_plus,
        t_plus: -w.t_minus,
        residual: w.residual,
    }
}

/// `β = F(x, z)` for the Euclidean-unit tangent `z` of the chord.
pub fn beta(w: &FlowPoint) -> f64 {
    1.0 / w.t_plus - 1.0 / w.t_minus
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::conic_domain;
    use crate::projgeom::{Mat3, Vec3};

    fn disk() -> ConvexDomain {
        conic_domain(&Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0))).unwrap()
    }

    #[test]
    fn klein_model_flow() {
        let d = disk();
        let w = FlowPoint::new(&d, [0.0, 0.0], [1.0, 0.0]).unwrap();
        for &t in &[0.1, 0.5, 1.0, 2.5, -1.3] {
            let m = geodesic_flow(&w, t).unwrap();
            assert!((m.x[0] - f64::tanh(t)).abs() < 1e-14);
            assert!(m.x[1].abs() < 1e-15);
            let dist = d.hilbert_distance_chart(w.x, m.x).unwrap();
            assert!((dist - t.abs()).abs() < 1e-12);
        }
        assert_eq!(geodesic_flow(&w, 0.0).unwrap(), w);
    }

    #[test]
    fn semigroup_and_flip() {
        let d = disk();
        let w = FlowPoint::new(&d, [0.2, -0.1], [0.3, 0.8]).unwrap();
        for &(t, s) in &[(0.7, -1.2), (2.0, 1.0), (-3.0, 2.5)] {
            let a = geodesic_flow(&geodesic_flow(&w, s).unwrap(), t).unwrap();
            let b = geodesic_flow(&w, t + s).unwrap();
            assert!(norm2(crate::projgeom::sub2(a.x, b.x)) < 1e-12);
            let c = flip(&geodesic_flow(&flip(&w), t).unwrap());
            let e = geodesic_flow(&w, -t).unwrap();
            assert!(norm2(crate::projgeom::sub2(c.x, e.x)) < 1e-12);
        }
        assert_eq!(flip(&flip(&w)), w);
    }

    #[test]
    fn beta_at_centre() {
        let d = disk();
        let w = FlowPoint::new(&d, [0.0, 0.0], [0.6, 0.8]).unwrap();
        assert!((beta(&w) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn euclidean_flow_time_matches_distance() {
        let d = disk();
        let w = FlowPoint::new(&d, [0.1, 0.2], [1.0, -0.4]).unwrap();
        let (m, dt) = euclidean_flow(&w, 0.3).unwrap();
        let dist = d.hilbert_distance_chart(w.x, m.x).unwrap();
        assert!((dist - dt).abs() < 1e-13);
    }

    #[test]
    fn push_forward_matches_finite_difference() {
        let g = Mat3::new(1.2, 0.1, 0.3, -0.2, 0.9, 0.1, 0.4, -0.3, 1.5);
        let x = [0.1, -0.2];
        let v = [0.6, 0.8];
        let (y, jv) = push_forward(&g, x, v).unwrap();
        let h = 1e-7;
        let yp = map_chart(&g, [x[0] + h * v[0], x[1] + h * v[1]]).unwrap();
        let ym = map_chart(&g, [x[0] - h * v[0], x[1] - h * v[1]]).unwrap();
        for i in 0..2 {
            assert!(((yp[i] - ym[i]) / (2.0 * h) - jv[i]).abs() < 1e-7);
        }
        assert!(norm2(crate::projgeom::sub2(y, map_chart(&g, x).unwrap())) < 1e-15);
    }
}
