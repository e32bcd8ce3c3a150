use std::f64::consts::TAU;

use log::debug;

use super::FlowPoint;
use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::holonomy::{Representation, WordBall};
use crate::projgeom::{map_chart, Mat3, Vec2};

/// Default search depth, in reflection letters, over the rotation subgroup.
pub const DEFAULT_SEARCH_LENGTH: usize = 12;

#[derive(Debug, Clone)]
struct Candidate {
    /// Deck transformation in chart coordinates.
    g: Mat3,
    word: Vec<u8>,
    /// `g⁻¹·o`: moving `x` by `g` lands at distance `d(x, g⁻¹·o)` from `o`.
    orbit_point: Vec2,
    /// `d(o, g⁻¹·o)`, used to prune the search by the triangle inequality.
    offset: f64,
}

/// Brings flow points back near the chart origin by deck transformations of
/// the orientation-preserving subgroup, chosen to minimize the Hilbert
/// distance of the new base point to the origin.
#[derive(Debug, Clone)]
pub struct Recenterer {
    candidates: Vec<Candidate>,
    covering_radius: f64,
}

impl Recenterer {
    /// Build the candidate set from the even elements of the word ball of
    /// the given reflection length, and estimate the covering radius of the
    /// origin's orbit (half the Dirichlet diameter).
    pub fn new(dom: &ConvexDomain, rep: &Representation, search_length: usize) -> Result<Self> {
        let ball = WordBall::new(rep, search_length);
        let origin = [0.0, 0.0];
        let mut candidates = Vec::new();
        for (_, el) in ball.even_elements() {
            if el.word_length() == 0 {
                continue;
            }
            let g = dom.chart_matrix(el.matrix());
            let g_inv = match g.try_inverse() {
                Some(m) => m,
                None => continue,
            };
            let orbit_point = match map_chart(&g_inv, origin) {
                Ok(p) if dom.contains_chart(p) => p,
                _ => continue,
            };
            let offset = match dom.hilbert_distance_chart(origin, orbit_point) {
                Ok(d) => d,
                Err(_) => continue,
            };
            candidates.push(Candidate {
                g,
                word: el.word().to_vec(),
                orbit_point,
                offset,
            });
        }
        if candidates.is_empty() {
            return Err(Error::InsufficientData {
                found: 0,
                needed: 1,
            });
        }
        candidates.sort_by(|a, b| a.offset.total_cmp(&b.offset));
        let mut rec = Recenterer {
            candidates,
            covering_radius: 0.0,
        };
        rec.covering_radius = rec.estimate_covering_radius(dom)?;
        debug!(
            "recenterer: {} candidates, covering radius {:.4}",
            rec.candidates.len(),
            rec.covering_radius
        );
        Ok(rec)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Estimated covering radius of the origin's orbit.
    pub fn covering_radius(&self) -> f64 {
        self.covering_radius
    }

    /// Estimated diameter of the Dirichlet domain centred at the origin.
    pub fn dirichlet_diameter(&self) -> f64 {
        2.0 * self.covering_radius
    }

    /// Default recentering radius: a little beyond the Dirichlet diameter.
    pub fn default_radius(&self) -> f64 {
        1.1 * self.dirichlet_diameter()
    }

    /// Smallest distance from `x` to the origin or its candidate images,
    /// with the index of the minimizing candidate (`None` for the origin).
    fn nearest(&self, dom: &ConvexDomain, x: Vec2) -> Result<(Option<usize>, f64)> {
        let r = dom.hilbert_distance_chart([0.0, 0.0], x)?;
        let mut best = (None, r);
        for (i, c) in self.candidates.iter().enumerate() {
            if c.offset - r >= best.1 {
                break;
            }
            if let Ok(d) = dom.hilbert_distance_chart(x, c.orbit_point) {
                if d < best.1 {
                    best = (Some(i), d);
                }
            }
        }
        Ok(best)
    }

    fn estimate_covering_radius(&self, dom: &ConvexDomain) -> Result<f64> {
        let max_offset = self.candidates.last().map(|c| c.offset).unwrap_or(0.0);
        let reach = (0.5 * max_offset).max(0.5);
        let (n_dir, n_rad) = (96, 32);
        let mut worst: f64 = 0.0;
        for i in 0..n_dir {
            let theta = TAU * (i as f64 + 0.5) / n_dir as f64;
            let v = [theta.cos(), theta.sin()];
            let w = FlowPoint::new(dom, [0.0, 0.0], v)?;
            for j in 1..=n_rad {
                let t = reach * j as f64 / n_rad as f64;
                let x = super::geodesic_flow(&w, t)?.x;
                let (_, d) = self.nearest(dom, x)?;
                worst = worst.max(d);
            }
        }
        Ok(worst)
    }

    /// The deck transformation minimizing the distance of `x` to the origin.
    /// Fails if no candidate brings `x` closer than it already is.
    pub fn best(&self, dom: &ConvexDomain, x: Vec2) -> Result<(&Mat3, &[u8], f64)> {
        let r = dom.hilbert_distance_chart([0.0, 0.0], x)?;
        match self.nearest(dom, x)? {
            (Some(i), d) => Ok((&self.candidates[i].g, &self.candidates[i].word, d)),
            (None, _) => Err(Error::RecenterFailure { best: r, radius: r }),
        }
    }

    /// Apply the best deck transformation for `points[0]` to every point.
    pub fn apply(&self, dom: &ConvexDomain, points: &mut [FlowPoint]) -> Result<(Vec<u8>, f64)> {
        let (g, word, d) = self.best(dom, points[0].x)?;
        for p in points.iter_mut() {
            *p = p.transform(dom, g)?;
        }
        Ok((word.to_vec(), d))
    }
}

/// Recenter a flow point: returns the transformed point and the word used.
pub fn recenter(
    dom: &ConvexDomain,
    recenterer: &Recenterer,
    w: &FlowPoint,
) -> Result<(FlowPoint, Vec<u8>)> {
    let mut pts = [*w];
    let (word, _) = recenterer.apply(dom, &mut pts)?;
    Ok((pts[0], word))
}
