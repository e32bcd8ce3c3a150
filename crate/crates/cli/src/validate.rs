//! The algebraic-identity suite behind `srb validate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srb_core::domain::limit_domain;
use srb_core::flow::{flip, geodesic_flow, initial_condition, FlowPoint, Recenterer};
use srb_core::holonomy::{conjugacy_census, Representation, RELATION_TOL};
use srb_core::projgeom::{apply_projective, cross_ratio, Mat3, ProjPoint};

/// Outcome of one identity suite.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    /// Number of individual checks.
    pub checks: usize,
    /// Largest observed defect.
    pub worst: f64,
    pub tolerance: f64,
    pub note: String,
}

impl SuiteResult {
    fn new(name: &'static str, tolerance: f64, checks: usize, worst: f64) -> Self {
        SuiteResult {
            name,
            passed: worst <= tolerance,
            checks,
            worst,
            tolerance,
            note: String::new(),
        }
    }

    fn failed(name: &'static str, note: String) -> Self {
        SuiteResult {
            name,
            passed: false,
            checks: 0,
            worst: f64::NAN,
            tolerance: 0.0,
            note,
        }
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        if self.note.is_empty() {
            format!(
                "{verdict} {:<22} {:>5} checks, worst {:.3e} (tolerance {:.1e})",
                self.name, self.checks, self.worst, self.tolerance
            )
        } else {
            format!("{verdict} {:<22} {}", self.name, self.note)
        }
    }
}

/// Relative defect `|a − b| / max(1, |a|, |b|)`.
fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn coxeter_relations(rep: &Representation) -> SuiteResult {
    match rep.coxeter_residual() {
        Some(r) => SuiteResult::new("coxeter-relations", RELATION_TOL, 6, r),
        None => SuiteResult::failed(
            "coxeter-relations",
            "representation carries no Coxeter orders".into(),
        ),
    }
}

/// `η(γ⁻¹) = −η(γ)`, `(1+η)α = 2` and `1/α(γ) + 1/α(γ⁻¹) = 1` on every
/// class of a small census.
fn reversibility(rep: &Representation) -> SuiteResult {
    const NAME: &str = "reversibility";
    let census = match conjugacy_census(rep, 6) {
        Ok(c) => c,
        Err(e) => return SuiteResult::failed(NAME, format!("census failed: {e}")),
    };
    let mut worst: f64 = 0.0;
    for c in &census.classes {
        let (e, f) = (&c.eigen, &c.inverse_eigen);
        worst = worst
            .max(rel(e.eta, -f.eta))
            .max(rel((1.0 + e.eta) * e.alpha, 2.0))
            .max(rel((1.0 + f.eta) * f.alpha, 2.0))
            .max(rel(1.0 / e.alpha + 1.0 / f.alpha, 1.0));
    }
    SuiteResult::new(NAME, 1e-12, 4 * census.classes.len(), worst)
}

/// Cross-ratios of collinear quadruples are unchanged by projective maps.
fn cross_ratio_invariance(rng: &mut ChaCha8Rng) -> SuiteResult {
    const NAME: &str = "cross-ratio-invariance";
    let trials = 200;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let base = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let mut ts: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ts.sort_by(f64::total_cmp);
        if ts.windows(2).any(|w| w[1] - w[0] < 0.05) {
            continue;
        }
        let pts: Vec<ProjPoint> = ts
            .iter()
            .map(|t| ProjPoint::from_chart([base[0] + t * theta.cos(), base[1] + t * theta.sin()]))
            .collect();
        let m = Mat3::identity() + Mat3::from_fn(|_, _| rng.gen_range(-0.3..0.3));
        let before = cross_ratio(&pts[0], &pts[1], &pts[2], &pts[3]);
        let image: Result<Vec<ProjPoint>, _> =
            pts.iter().map(|p| apply_projective(&m, p)).collect();
        let after = image.and_then(|q| cross_ratio(&q[0], &q[1], &q[2], &q[3]));
        match (before, after) {
            (Ok(a), Ok(b)) => worst = worst.max(rel(a, b)),
            // A map sending a point to the line at infinity is not a fair draw.
            _ => continue,
        }
    }
    SuiteResult::new(NAME, 1e-10, trials, worst)
}

fn chart_defect(a: &FlowPoint, b: &FlowPoint) -> f64 {
    let dx = (a.x[0] - b.x[0]).hypot(a.x[1] - b.x[1]);
    let dv = (a.dir[0] - b.dir[0]).hypot(a.dir[1] - b.dir[1]);
    dx.max(dv)
}

/// `φ^{s+t} = φ^t ∘ φ^s` and `φ^t ∘ σ ∘ φ^t = σ` on the limit domain.
fn flow_semigroup(rep: &Representation, rotation_length: usize, seed: u64) -> SuiteResult {
    const NAME: &str = "flow-semigroup";
    let run = || -> srb_core::Result<(usize, f64)> {
        let dom = limit_domain(rep, rotation_length)?;
        let rec = Recenterer::new(&dom, rep, 6)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut checks = 0;
        for i in 0..50 {
            let w = initial_condition(&dom, &rec, seed, i)?;
            let s: f64 = rng.gen_range(-3.0..3.0);
            let t: f64 = rng.gen_range(-3.0..3.0);
            let joint = geodesic_flow(&w, s + t)?;
            let split = geodesic_flow(&geodesic_flow(&w, s)?, t)?;
            let back = flip(&geodesic_flow(&flip(&geodesic_flow(&w, t)?), t)?);
            worst = worst
                .max(chart_defect(&joint, &split))
                .max(chart_defect(&back, &w));
            worst = worst.max(chart_defect(&flip(&flip(&w)), &w));
            checks += 3;
        }
        Ok((checks, worst))
    };
    match run() {
        Ok((checks, worst)) => SuiteResult::new(NAME, 1e-10, checks, worst),
        Err(e) => SuiteResult::failed(NAME, format!("{} ({e})", e.name())),
    }
}

/// Run every suite.
pub fn identity_suite(rep: &Representation, rotation_length: usize, seed: u64) -> Vec<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        coxeter_relations(rep),
        reversibility(rep),
        cross_ratio_invariance(&mut rng),
        flow_semigroup(rep, rotation_length, seed),
    ]
}
