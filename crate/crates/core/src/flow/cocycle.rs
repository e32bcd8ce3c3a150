use std::f64::consts::{PI, TAU};

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::trace::TraceRow;
use super::{euclidean_flow, geodesic_flow, FlowPoint, Recenterer};
use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::projgeom::Mat3;

/// Separation band (in units of ε) a perturbation may reach within one step
/// before the step is retried with half the time.
const GROWTH_BAND: (f64, f64) = (1e-2, 1e2);
const MAX_HALVINGS: u32 = 12;

/// Parameters of a tangent-cocycle integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CocycleConfig {
    /// Finite-difference perturbation size in chart units.
    pub eps: f64,
    /// Renormalization interval in flow time.
    pub delta: f64,
    /// Measured flow time (after burn-in).
    pub t_total: f64,
    /// Recentering radius; defaults to a little beyond the Dirichlet diameter.
    pub radius: Option<f64>,
    pub seed: u64,
    /// Flow time discarded before measuring.
    pub burn_in: f64,
    /// Batch length for the batch-means standard error.
    pub batch_length: f64,
}

impl Default for CocycleConfig {
    fn default() -> Self {
        CocycleConfig {
            eps: 1e-6,
            delta: 1.0,
            t_total: 2000.0,
            radius: None,
            seed: 0,
            burn_in: 20.0,
            batch_length: 25.0,
        }
    }
}

impl CocycleConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.eps > 0.0 && self.eps <= 1e-4) {
            return bad("eps must lie in (0, 1e-4]");
        }
        if !(self.delta > 0.0 && self.delta <= 2.0) {
            return bad("delta must lie in (0, 2]");
        }
        if !(self.t_total > 0.0 && self.t_total.is_finite()) {
            return bad("T must be positive and finite");
        }
        if !(self.burn_in >= 0.0 && self.burn_in.is_finite()) {
            return bad("burn-in must be non-negative");
        }
        if !(self.batch_length > 0.0) {
            return bad("batch length must be positive");
        }
        if let Some(r) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                return bad("recentering radius must be positive");
            }
        }
        Ok(())
    }

    /// Runs shorter than `100·Δ` are performed but flagged as unconverged.
    pub fn long_enough(&self) -> bool {
        self.t_total >= 100.0 * self.delta
    }

    fn radius_for(&self, rec: &Recenterer) -> Result<f64> {
        match self.radius {
            Some(r) if r <= rec.dirichlet_diameter() => Err(Error::InvalidConfig(format!(
                "recentering radius {r:.4} does not exceed the Dirichlet diameter estimate {:.4}",
                rec.dirichlet_diameter()
            ))),
            Some(r) => Ok(r),
            None => Ok(rec.default_radius()),
        }
    }
}

/// Lyapunov spectrum of the flow along one orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub chi_plus: f64,
    /// Exponent along the flow direction (zero in exact arithmetic).
    pub chi_zero: f64,
    pub chi_minus: f64,
    /// Exponential growth rate of the Lebesgue volume (sum of the exponents).
    pub vol_rate: f64,
    /// Batch-means standard error of `chi_plus`.
    pub stderr: f64,
    pub chi_minus_stderr: f64,
    pub vol_rate_stderr: f64,
    /// Standard error of `chi_plus − 1 − vol_rate / 2` from paired batches.
    pub consistency_stderr: f64,
    pub t_used: f64,
    pub renorm_count: u64,
    pub recenter_count: u64,
    pub halvings: u64,
    pub converged: bool,
}

/// Outcome of a run under both the Hilbert-speed and the Euclidean-speed
/// parametrizations of the same trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbramovRecord {
    /// Average of `β = F(x, z)` over Euclidean time (equals 2T / S, the
    /// Finsler norm being twice the metric speed).
    pub mean_beta: f64,
    pub mean_beta_stderr: f64,
    pub chi_plus_psi: f64,
    pub chi_plus_phi: f64,
    /// `|χ⁺_ψ − χ⁺_φ · mean_beta / 2|`.
    pub abramov_residual: f64,
    pub t_phi: f64,
    pub s_psi: f64,
}

fn wrap_angle(a: f64) -> f64 {
    a - TAU * (a / TAU).round()
}

fn state(w: &FlowPoint) -> [f64; 3] {
    [w.x[0], w.x[1], w.angle()]
}

fn perturbed(dom: &ConvexDomain, w: &FlowPoint, q: &[f64; 3], s: f64) -> Result<FlowPoint> {
    let th = w.angle() + s * q[2];
    FlowPoint::from_angle(dom, [w.x[0] + s * q[0], w.x[1] + s * q[1]], th)
}

/// Modified Gram–Schmidt: replaces the columns by an orthonormal frame and
/// returns the diagonal of the triangular factor.
fn gram_schmidt(cols: &mut [[f64; 3]]) -> Vec<f64> {
    let mut r = Vec::with_capacity(cols.len());
    for k in 0..cols.len() {
        for j in 0..k {
            let dot = dot3(&cols[j], &cols[k]);
            let cj = cols[j];
            for i in 0..3 {
                cols[k][i] -= dot * cj[i];
            }
        }
        let n = dot3(&cols[k], &cols[k]).sqrt();
        r.push(n);
        for v in cols[k].iter_mut() {
            *v /= n;
        }
    }
    r
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Central-difference image of the frame `q` at `w` under `advance`
/// followed by the optional deck transformation `g`.
fn propagate_frame(
    dom: &ConvexDomain,
    w: &FlowPoint,
    q: &[[f64; 3]],
    eps: f64,
    g: Option<&Mat3>,
    advance: &dyn Fn(&FlowPoint) -> Result<FlowPoint>,
) -> Result<Vec<[f64; 3]>> {
    let mut d = Vec::with_capacity(q.len());
    for col in q {
        let mut ends = [[0.0; 3]; 2];
        for (e, s) in ends.iter_mut().zip([eps, -eps]) {
            let mut c = advance(&perturbed(dom, w, col, s)?)?;
            if let Some(g) = g {
                c = c.transform(dom, g)?;
            }
            *e = state(&c);
        }
        d.push([
            (ends[0][0] - ends[1][0]) / (2.0 * eps),
            (ends[0][1] - ends[1][1]) / (2.0 * eps),
            wrap_angle(ends[0][2] - ends[1][2]) / (2.0 * eps),
        ]);
    }
    Ok(d)
}

/// Remove the component along the flow direction at `w`.
fn project_transverse(cols: &mut [[f64; 3]], w: &FlowPoint) {
    let x = [w.dir[0], w.dir[1], 0.0];
    for c in cols.iter_mut() {
        let a = dot3(c, &x);
        for i in 0..3 {
            c[i] -= a * x[i];
        }
    }
}

fn within_band(d: &[[f64; 3]]) -> bool {
    d.iter().all(|c| {
        let n = dot3(c, c).sqrt();
        n >= GROWTH_BAND.0 && n <= GROWTH_BAND.1
    })
}

/// Running sums with burn-in and batch means.
#[derive(Debug, Default)]
struct Accumulator {
    burn_in: f64,
    batch_length: f64,
    elapsed: f64,
    measured: f64,
    sums: [f64; 3],
    batch_time: f64,
    batch_sums: [f64; 3],
    batches: Vec<[f64; 3]>,
}

impl Accumulator {
    fn new(burn_in: f64, batch_length: f64) -> Self {
        Accumulator {
            burn_in,
            batch_length,
            ..Default::default()
        }
    }

    fn push(&mut self, dt: f64, logs: [f64; 3]) {
        self.elapsed += dt;
        if self.elapsed <= self.burn_in + 1e-12 {
            return;
        }
        self.measured += dt;
        self.batch_time += dt;
        for (i, x) in logs.into_iter().enumerate() {
            self.sums[i] += x;
            self.batch_sums[i] += x;
        }
        if self.batch_time >= self.batch_length - 1e-12 {
            let bt = self.batch_time;
            self.batches.push(self.batch_sums.map(|s| s / bt));
            self.batch_time = 0.0;
            self.batch_sums = [0.0; 3];
        }
    }

    fn rate(&self, i: usize) -> f64 {
        self.sums[i] / self.measured
    }

    /// Batch-means standard error of a linear combination of the rates.
    fn stderr(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        let n = self.batches.len();
        if n < 2 {
            return f64::NAN;
        }
        let vals: Vec<f64> = self.batches.iter().map(&f).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }
}

/// A uniformly distributed starting point: base point uniform in the chart
/// within the covering ball of the origin, direction uniform in angle. The
/// stream is the orbit index, so orbit `i` of a seed is reproducible and
/// independent of how many other orbits run.
pub fn initial_condition(
    dom: &ConvexDomain,
    rec: &Recenterer,
    seed: u64,
    index: u64,
) -> Result<FlowPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let reach = rec.covering_radius();
    for _ in 0..100_000 {
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let theta = rng.gen_range(-PI..PI);
        if !dom.contains_chart(x) {
            continue;
        }
        match dom.hilbert_distance_chart([0.0, 0.0], x) {
            Ok(d) if d <= reach => return FlowPoint::from_angle(dom, x, theta),
            _ => continue,
        }
    }
    Err(Error::InsufficientData {
        found: 0,
        needed: 1,
    })
}

fn finish(acc: &Accumulator, counts: (u64, u64, u64), converged: bool) -> LyapunovEstimate {
    let (renorm_count, recenter_count, halvings) = counts;
    let vol = acc.sums.iter().sum::<f64>() / acc.measured;
    LyapunovEstimate {
        chi_plus: acc.rate(0),
        chi_zero: acc.rate(1),
        chi_minus: acc.rate(2),
        vol_rate: vol,
        stderr: acc.stderr(|b| b[0]),
        chi_minus_stderr: acc.stderr(|b| b[2]),
        vol_rate_stderr: acc.stderr(|b| b[0] + b[1] + b[2]),
        consistency_stderr: acc.stderr(|b| b[0] - 0.5 * (b[0] + b[1] + b[2])),
        t_used: acc.measured,
        renorm_count,
        recenter_count,
        halvings,
        converged: converged && acc.batches.len() >= 8 && acc.stderr(|b| b[0]) <= 0.05,
    }
}

/// Lyapunov spectrum by finite-difference Benettin renormalization along
/// the recentered orbit of `w0`.
pub fn lyapunov_spectrum(
    dom: &ConvexDomain,
    rec: &Recenterer,
    w0: &FlowPoint,
    cfg: &CocycleConfig,
) -> Result<LyapunovEstimate> {
    lyapunov_spectrum_traced(dom, rec, w0, cfg, 0).map(|(e, _)| e)
}

/// As [`lyapunov_spectrum`], also recording every `stride`-th step of the
/// orbit (no trace when `stride == 0`).
pub fn lyapunov_spectrum_traced(
    dom: &ConvexDomain,
    rec: &Recenterer,
    w0: &FlowPoint,
    cfg: &CocycleConfig,
    stride: usize,
) -> Result<(LyapunovEstimate, Vec<TraceRow>)> {
    cfg.validate()?;
    let radius = cfg.radius_for(rec)?;
    let burn_in = cfg.burn_in.min(0.1 * cfg.t_total);
    let batch = cfg.batch_length.min(cfg.t_total / 8.0);
    let mut acc = Accumulator::new(burn_in, batch);
    let mut trace = Vec::new();
    let mut w = *w0;
    let mut q = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let (mut renorms, mut recenters, mut halvings) = (0u64, 0u64, 0u64);
    let mut log_stretch = 0.0;
    let total = burn_in + cfg.t_total;
    let mut step = 0usize;
    while acc.elapsed < total - 1e-9 {
        let mut dt = cfg.delta.min(total - acc.elapsed);
        let mut tries = 0;
        let (w_next, d, recentered) = loop {
            let mut next = geodesic_flow(&w, dt)?;
            let mut g = None;
            if dom.hilbert_distance_chart([0.0, 0.0], next.x)? > radius {
                let (gm, _, _) = rec.best(dom, next.x)?;
                next = next.transform(dom, gm)?;
                g = Some(*gm);
            }
            let advance = |c: &FlowPoint| geodesic_flow(c, dt);
            let d = propagate_frame(dom, &w, &q, cfg.eps, g.as_ref(), &advance)?;
            if within_band(&d) || tries >= MAX_HALVINGS {
                break (next, d, g.is_some());
            }
            tries += 1;
            halvings += 1;
            dt *= 0.5;
            debug!("perturbation left the growth band; step halved to {dt}");
        };
        let mut d = d;
        let r = gram_schmidt(&mut d);
        let logs = [r[0].ln(), r[1].ln(), r[2].ln()];
        acc.push(dt, logs);
        q = d;
        w = w_next;
        renorms += 1;
        recenters += recentered as u64;
        log_stretch += logs[0];
        step += 1;
        if stride > 0 && step.is_multiple_of(stride) {
            trace.push(TraceRow {
                t: acc.elapsed,
                x: w.x[0],
                y: w.x[1],
                theta: w.angle(),
                log_stretch,
                recentered,
            });
        }
    }
    if halvings > 0 {
        warn!("{halvings} renormalization steps were halved");
    }
    Ok((
        finish(&acc, (renorms, recenters, halvings), cfg.long_enough()),
        trace,
    ))
}

/// Run one trajectory under both the Hilbert-speed flow `φ` and its
/// unit-Euclidean-speed reparametrization `ψ`, estimating the mean of `β`
/// and the leading exponent of each parametrization.
pub fn beta_and_abramov(
    dom: &ConvexDomain,
    rec: &Recenterer,
    w0: &FlowPoint,
    cfg: &CocycleConfig,
) -> Result<AbramovRecord> {
    cfg.validate()?;
    let radius = cfg.radius_for(rec)?;
    let burn_in = cfg.burn_in.min(0.1 * cfg.t_total);
    let batch = cfg.batch_length.min(cfg.t_total / 8.0);
    let mut w = *w0;
    let mut q_phi = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    // The unit-Euclidean-speed time change is not invariant under deck
    // transformations, so each recentering rescales the flow-direction
    // component of a ψ-perturbation. The ψ-frame is therefore kept
    // transverse to the flow, where the time change acts without that
    // artefact.
    let mut q_psi = vec![[-w.dir[1], w.dir[0], 0.0], [0.0, 0.0, 1.0]];
    let (mut elapsed, mut t_phi, mut s_psi) = (0.0, 0.0, 0.0);
    let (mut log_phi, mut log_psi) = (0.0, 0.0);
    let (mut bt, mut bs) = (0.0, 0.0);
    let mut batch_betas = Vec::new();
    let total = burn_in + cfg.t_total;
    while elapsed < total - 1e-9 {
        let mut dt = cfg.delta.min(total - elapsed);
        let mut tries = 0;
        let (w_next, mut d_phi, mut d_psi, h) = loop {
            let mut next = geodesic_flow(&w, dt)?;
            let h = w.t_plus - next.t_plus;
            let mut g = None;
            if dom.hilbert_distance_chart([0.0, 0.0], next.x)? > radius {
                let (gm, _, _) = rec.best(dom, next.x)?;
                next = next.transform(dom, gm)?;
                g = Some(*gm);
            }
            let phi = |c: &FlowPoint| geodesic_flow(c, dt);
            let psi = |c: &FlowPoint| euclidean_flow(c, h).map(|(p, _)| p);
            let d_phi = propagate_frame(dom, &w, &q_phi, cfg.eps, g.as_ref(), &phi)?;
            let d_psi = propagate_frame(dom, &w, &q_psi, cfg.eps, g.as_ref(), &psi)?;
            if (within_band(&d_phi) && within_band(&d_psi)) || tries >= MAX_HALVINGS {
                break (next, d_phi, d_psi, h);
            }
            tries += 1;
            dt *= 0.5;
        };
        project_transverse(&mut d_psi, &w_next);
        let r_phi = gram_schmidt(&mut d_phi);
        let r_psi = gram_schmidt(&mut d_psi);
        q_phi = d_phi;
        q_psi = d_psi;
        w = w_next;
        elapsed += dt;
        if elapsed > burn_in + 1e-12 {
            t_phi += dt;
            s_psi += h;
            log_phi += r_phi[0].ln();
            log_psi += r_psi[0].ln();
            bt += dt;
            bs += h;
            if bt >= batch - 1e-12 {
                batch_betas.push(2.0 * bt / bs);
                bt = 0.0;
                bs = 0.0;
            }
        }
    }
    // β is the Finsler norm of the Euclidean-unit tangent, twice the Hilbert
    // speed of the unit-Euclidean-speed parametrization, so T = ∫ β/2 ds.
    let mean_beta = 2.0 * t_phi / s_psi;
    let n = batch_betas.len();
    let mean_beta_stderr = if n >= 2 {
        let m = batch_betas.iter().sum::<f64>() / n as f64;
        let var = batch_betas.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::NAN
    };
    let chi_plus_phi = log_phi / t_phi;
    let chi_plus_psi = log_psi / s_psi;
    Ok(AbramovRecord {
        mean_beta,
        mean_beta_stderr,
        chi_plus_psi,
        chi_plus_phi,
        abramov_residual: (chi_plus_psi - 0.5 * chi_plus_phi * mean_beta).abs(),
        t_phi,
        s_psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::conic_for_representation;
    use crate::holonomy::vinberg_triangle;

    #[test]
    fn config_validation() {
        assert!(CocycleConfig::default().validate().is_ok());
        for bad in [
            CocycleConfig {
                eps: 0.0,
                ..Default::default()
            },
            CocycleConfig {
                eps: 1e-3,
                ..Default::default()
            },
            CocycleConfig {
                delta: 3.0,
                ..Default::default()
            },
            CocycleConfig {
                t_total: -1.0,
                ..Default::default()
            },
            CocycleConfig {
                radius: Some(-1.0),
                ..Default::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        }
        assert!(!CocycleConfig {
            t_total: 10.0,
            ..Default::default()
        }
        .long_enough());
    }

    #[test]
    fn gram_schmidt_orthonormalizes() {
        let mut d = [[2.0, 0.0, 1.0], [1.0, 3.0, 0.0], [0.0, 1.0, 4.0]];
        let m = nalgebra::Matrix3::from_fn(|i, j| d[j][i]);
        let r = gram_schmidt(&mut d);
        for a in 0..3 {
            for b in 0..3 {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((dot3(&d[a], &d[b]) - e).abs() < 1e-14);
            }
        }
        assert!((r.iter().product::<f64>() - m.determinant().abs()).abs() < 1e-12);
    }

    #[test]
    fn short_fuchsian_run_has_symmetric_spectrum() {
        let rep = vinberg_triangle(3, 3, 4, 0.0).unwrap();
        let dom = conic_for_representation(&rep).unwrap();
        let rec = Recenterer::new(&dom, &rep, 12).unwrap();
        let w0 = initial_condition(&dom, &rec, 7, 0).unwrap();
        let cfg = CocycleConfig {
            t_total: 300.0,
            ..Default::default()
        };
        let est = lyapunov_spectrum(&dom, &rec, &w0, &cfg).unwrap();
        assert!((est.chi_plus - 1.0).abs() < 0.05, "{est:?}");
        assert!((est.chi_minus + 1.0).abs() < 0.05, "{est:?}");
        assert!(est.chi_zero.abs() < 0.02, "{est:?}");
        assert!(est.recenter_count > 10);
        let short = CocycleConfig {
            t_total: 10.0,
            ..Default::default()
        };
        assert!(
            !lyapunov_spectrum(&dom, &rec, &w0, &short)
                .unwrap()
                .converged
        );
    }

    #[test]
    fn initial_conditions_are_reproducible_per_stream() {
        let rep = vinberg_triangle(3, 3, 4, 0.0).unwrap();
        let dom = conic_for_representation(&rep).unwrap();
        let rec = Recenterer::new(&dom, &rep, 8).unwrap();
        let a = initial_condition(&dom, &rec, 3, 5).unwrap();
        let b = initial_condition(&dom, &rec, 3, 5).unwrap();
        let c = initial_condition(&dom, &rec, 3, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
