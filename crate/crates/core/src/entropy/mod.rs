//! SRB entropy via the Pesin equality, parallel exponents, boundary
//! exponents, topological entropy by counting, and deformation sweeps.

mod alpha;
mod counting;

pub use alpha::{
    boundary_alpha, fit_graph, periodic_alpha, self_similar_graph, self_similar_samples, AlphaFit,
    AlphaOptions,
};
pub use counting::{
    topological_entropy_count, topological_entropy_from_census, TopologicalEntropy,
    MIN_PRIMITIVE_CLASSES,
};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{limit_domain, ConvexDomain};
use crate::error::{Error, Result};
use crate::flow::{
    initial_condition, lyapunov_spectrum, CocycleConfig, LyapunovEstimate, Recenterer,
};
use crate::holonomy::{vinberg_triangle, Representation};

/// Minimum number of orbits in a report.
pub const MIN_ORBITS: usize = 8;
/// Orbits whose batch-means standard error exceeds this are excluded.
pub const MAX_ORBIT_STDERR: f64 = 0.05;
/// Relative tolerance of the report's construction identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// One row of the entropy table. The first nineteen fields are the stable
/// CSV schema; the remaining standard errors and the consistency verdict
/// follow them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub family_p: u32,
    pub family_q: u32,
    pub family_r: u32,
    pub tau: f64,
    #[serde(rename = "L")]
    pub rotation_length: usize,
    pub gap: f64,
    pub n_orbits: usize,
    #[serde(rename = "T")]
    pub t_total: f64,
    pub h_srb: f64,
    pub h_srb_stderr: f64,
    pub chi_plus: f64,
    pub chi_minus: f64,
    pub eta: f64,
    pub eta_volrate: f64,
    pub alpha_srb: f64,
    pub h_top: Option<f64>,
    pub h_top_caveat: String,
    pub excluded_orbits: usize,
    pub seed: u64,
    pub chi_minus_stderr: f64,
    pub eta_stderr: f64,
    pub alpha_srb_stderr: f64,
    pub eta_volrate_stderr: f64,
    /// Standard error of `eta − eta_volrate` from paired per-orbit values.
    pub consistency_stderr: f64,
    /// `|eta − eta_volrate| ≤ 3·consistency_stderr`.
    pub consistent: bool,
}

impl EntropyReport {
    /// The identities that hold by construction, each with its verdict:
    /// `h_srb = chi_plus`, `alpha_srb·chi_plus = 2`, `eta = 2(h_srb − 1)`.
    pub fn identity_checks(&self) -> [(&'static str, bool); 3] {
        let close = |a: f64, b: f64| (a - b).abs() <= IDENTITY_TOL * a.abs().max(b.abs()).max(1.0);
        [
            ("h_srb = chi_plus", close(self.h_srb, self.chi_plus)),
            (
                "alpha_srb * chi_plus = 2",
                close(self.alpha_srb * self.chi_plus, 2.0),
            ),
            (
                "eta = 2 (h_srb - 1)",
                close(self.eta, 2.0 * (self.h_srb - 1.0)),
            ),
        ]
    }

    /// Fail with a format error naming the first violated identity.
    pub fn check_identities(&self) -> Result<()> {
        match self.identity_checks().iter().find(|(_, ok)| !ok) {
            Some((what, _)) => Err(Error::Format(format!("report identity violated: {what}"))),
            None => Ok(()),
        }
    }

    /// `|h_srb − 1| ≤ 3·stderr`.
    pub fn consistent_with_hyperbolic(&self) -> bool {
        (self.h_srb - 1.0).abs() <= 3.0 * self.h_srb_stderr
    }
}

/// Weighted mean with a between-orbit standard error.
fn weighted_mean(values: &[f64], weights: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let wsum: f64 = weights.iter().sum();
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / wsum;
    let spread: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| (w * (v - mean)).powi(2))
        .sum();
    let se = (spread * n / (n - 1.0)).sqrt() / wsum;
    (mean, se)
}

/// Per-orbit estimates for orbits `0..n_orbits`, run in parallel and
/// returned in orbit order.
pub fn orbit_estimates(
    dom: &ConvexDomain,
    rec: &Recenterer,
    n_orbits: usize,
    cfg: &CocycleConfig,
) -> Vec<Result<LyapunovEstimate>> {
    (0..n_orbits as u64)
        .into_par_iter()
        .map(|i| {
            let w0 = initial_condition(dom, rec, cfg.seed, i)?;
            lyapunov_spectrum(dom, rec, &w0, cfg)
        })
        .collect()
}

/// Where a report's context comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportContext {
    pub family: [u32; 3],
    pub tau: f64,
    pub rotation_length: usize,
    pub gap: f64,
}

impl ReportContext {
    pub fn new(rep: &Representation, dom: &ConvexDomain, rotation_length: usize) -> Self {
        ReportContext {
            family: rep.coxeter_orders().unwrap_or([0, 0, 0]),
            tau: rep.tau(),
            rotation_length,
            gap: dom.gap(),
        }
    }
}

/// Aggregate per-orbit estimates into a report.
pub fn aggregate(
    ctx: &ReportContext,
    n_orbits: usize,
    cfg: &CocycleConfig,
    estimates: &[Result<LyapunovEstimate>],
) -> Result<EntropyReport> {
    let mut good = Vec::new();
    for (i, e) in estimates.iter().enumerate() {
        match e {
            Ok(e) if e.converged && e.stderr <= MAX_ORBIT_STDERR => good.push(*e),
            Ok(e) => warn!(
                "orbit {i} excluded: not converged (stderr {:.3e})",
                e.stderr
            ),
            Err(err) => warn!("orbit {i} excluded: {err}"),
        }
    }
    let excluded = estimates.len() - good.len();
    if good.len() < 2 || 2 * excluded > estimates.len() {
        return Err(Error::UnreliableReport {
            excluded,
            total: estimates.len(),
        });
    }
    let weights: Vec<f64> = good.iter().map(|e| 1.0 / e.stderr.powi(2)).collect();
    let pick = |f: fn(&LyapunovEstimate) -> f64| -> Vec<f64> { good.iter().map(f).collect() };
    let (chi_plus, se_plus) = weighted_mean(&pick(|e| e.chi_plus), &weights);
    let (chi_minus, se_minus) = weighted_mean(&pick(|e| e.chi_minus), &weights);
    let (vol, se_vol) = weighted_mean(&pick(|e| e.vol_rate), &weights);
    let (diff, se_diff) = weighted_mean(&pick(|e| 2.0 * (e.chi_plus - 1.0) - e.vol_rate), &weights);
    let h = chi_plus;
    let eta = 2.0 * (h - 1.0);
    let consistency_stderr = se_diff;
    Ok(EntropyReport {
        family_p: ctx.family[0],
        family_q: ctx.family[1],
        family_r: ctx.family[2],
        tau: ctx.tau,
        rotation_length: ctx.rotation_length,
        gap: ctx.gap,
        n_orbits,
        t_total: cfg.t_total,
        h_srb: h,
        h_srb_stderr: se_plus,
        chi_plus,
        chi_minus,
        eta,
        eta_volrate: vol,
        alpha_srb: 2.0 / chi_plus,
        h_top: None,
        h_top_caveat: String::new(),
        excluded_orbits: excluded,
        seed: cfg.seed,
        chi_minus_stderr: se_minus,
        eta_stderr: 2.0 * se_plus,
        alpha_srb_stderr: 2.0 * se_plus / (chi_plus * chi_plus),
        eta_volrate_stderr: se_vol,
        consistency_stderr,
        consistent: diff.abs() <= 3.0 * consistency_stderr,
    })
}

/// SRB entropy report from `n_orbits` Lebesgue-sampled orbits.
pub fn srb_entropy_report(
    dom: &ConvexDomain,
    rep: &Representation,
    rec: &Recenterer,
    rotation_length: usize,
    n_orbits: usize,
    cfg: &CocycleConfig,
) -> Result<EntropyReport> {
    if n_orbits < MIN_ORBITS {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_ORBITS} orbits are required, got {n_orbits}"
        )));
    }
    cfg.validate()?;
    let estimates = orbit_estimates(dom, rec, n_orbits, cfg);
    let report = aggregate(
        &ReportContext::new(rep, dom, rotation_length),
        n_orbits,
        cfg,
        &estimates,
    )?;
    if !report.consistent {
        warn!(
            "tau = {}: eta = {:.5} and volume rate {:.5} disagree beyond 3 joint stderr",
            report.tau, report.eta, report.eta_volrate
        );
    }
    Ok(report)
}

/// Parameters of a deformation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub family: [u32; 3],
    pub taus: Vec<f64>,
    /// Rotation length of the limit-set ball.
    pub rotation_length: usize,
    pub n_orbits: usize,
    pub cocycle: CocycleConfig,
    /// Also run the counting estimate at this rotation length.
    pub count_length: Option<usize>,
}

/// Sweep outcome: reports in grid order plus the continuity diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub reports: Vec<EntropyReport>,
    /// `(τ, error name)` for grid points that failed.
    pub failures: Vec<(f64, String)>,
    /// Largest `|h(τ_{i+1}) − h(τ_i)|` over adjacent successful points.
    pub max_adjacent_diff: f64,
    /// Whether every adjacent difference is within `3·joint stderr + mesh`.
    pub continuity_ok: bool,
}

/// Mesh allowance per unit of τ in the continuity diagnostic.
pub const CONTINUITY_MESH_SLOPE: f64 = 0.5;

fn sweep_point(opts: &SweepOptions, tau: f64) -> Result<EntropyReport> {
    let [p, q, r] = opts.family;
    let rep = vinberg_triangle(p, q, r, tau)?;
    let dom = limit_domain(&rep, opts.rotation_length)?;
    let rec = Recenterer::new(&dom, &rep, crate::flow::DEFAULT_SEARCH_LENGTH)?;
    let mut report = srb_entropy_report(
        &dom,
        &rep,
        &rec,
        opts.rotation_length,
        opts.n_orbits,
        &opts.cocycle,
    )?;
    if let Some(l) = opts.count_length {
        let top = topological_entropy_count(&rep, l)?;
        report.h_top = Some(top.h_top);
        report.h_top_caveat = top.caveat;
    }
    Ok(report)
}

/// Reports along a τ-grid with common seeds at every point.
pub fn deformation_sweep(opts: &SweepOptions) -> Result<SweepResult> {
    if opts.taus.is_empty() {
        return Err(Error::InvalidParameter("empty tau grid".into()));
    }
    if opts.taus.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(
            "tau grid must be strictly increasing".into(),
        ));
    }
    if !opts.taus.iter().any(|&t| t.abs() < 1e-12) {
        return Err(Error::InvalidParameter("tau grid must contain 0".into()));
    }
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for &tau in &opts.taus {
        match sweep_point(opts, tau) {
            Ok(r) => {
                info!(
                    "tau = {tau:+.3}: h_srb = {:.5} ± {:.5}",
                    r.h_srb, r.h_srb_stderr
                );
                reports.push(r);
            }
            Err(e) => {
                warn!("tau = {tau:+.3} failed: {e}");
                failures.push((tau, e.name().to_string()));
            }
        }
    }
    if 4 * failures.len() > opts.taus.len() {
        return Err(Error::SweepFailure {
            failed: failures.len(),
            total: opts.taus.len(),
        });
    }
    let mut max_adjacent_diff: f64 = 0.0;
    let mut continuity_ok = true;
    for w in reports.windows(2) {
        let d = (w[1].h_srb - w[0].h_srb).abs();
        let joint = w[0].h_srb_stderr.hypot(w[1].h_srb_stderr);
        let allowed = 3.0 * joint + CONTINUITY_MESH_SLOPE * (w[1].tau - w[0].tau);
        max_adjacent_diff = max_adjacent_diff.max(d);
        continuity_ok &= d <= allowed;
    }
    Ok(SweepResult {
        reports,
        failures,
        max_adjacent_diff,
        continuity_ok,
    })
}

/// Write reports as CSV (header plus one row per report).
pub fn write_reports_csv<W: std::io::Write>(out: W, reports: &[EntropyReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Read reports from CSV, naming the offending column on schema mismatch,
/// and re-check the construction identities.
pub fn read_reports_csv<R: std::io::Read>(input: R) -> Result<Vec<EntropyReport>> {
    let reports = parse_reports_csv(input)?;
    for r in &reports {
        r.check_identities()?;
    }
    Ok(reports)
}

/// Parse reports from CSV, checking the schema but not the identities.
pub fn parse_reports_csv<R: std::io::Read>(input: R) -> Result<Vec<EntropyReport>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd
        .headers()
        .map_err(|e| Error::Format(e.to_string()))?
        .clone();
    for col in REQUIRED_COLUMNS {
        if !headers.iter().any(|h| h == *col) {
            return Err(Error::Format(format!("missing column '{col}'")));
        }
    }
    let mut out = Vec::new();
    for rec in rd.deserialize() {
        out.push(rec.map_err(|e| Error::Format(e.to_string()))?);
    }
    Ok(out)
}

/// Read reports from the JSON mirror (an array of reports).
pub fn read_reports_json(text: &str) -> Result<Vec<EntropyReport>> {
    let reports: Vec<EntropyReport> =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    for r in &reports {
        r.check_identities()?;
    }
    Ok(reports)
}

/// The stable CSV columns, in order.
pub const REQUIRED_COLUMNS: &[&str] = &[
    "family_p",
    "family_q",
    "family_r",
    "tau",
    "L",
    "gap",
    "n_orbits",
    "T",
    "h_srb",
    "h_srb_stderr",
    "chi_plus",
    "chi_minus",
    "eta",
    "eta_volrate",
    "alpha_srb",
    "h_top",
    "h_top_caveat",
    "excluded_orbits",
    "seed",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn estimate(chi: f64, vol: f64, se: f64) -> LyapunovEstimate {
        LyapunovEstimate {
            chi_plus: chi,
            chi_zero: 0.0,
            chi_minus: vol - chi,
            vol_rate: vol,
            stderr: se,
            chi_minus_stderr: se,
            vol_rate_stderr: se,
            consistency_stderr: se,
            t_used: 2000.0,
            renorm_count: 2000,
            recenter_count: 100,
            halvings: 0,
            converged: true,
        }
    }

    fn ctx() -> ReportContext {
        ReportContext {
            family: [3, 3, 4],
            tau: 0.0,
            rotation_length: 12,
            gap: 1e-6,
        }
    }

    #[test]
    fn aggregate_satisfies_identities() {
        let est: Vec<Result<LyapunovEstimate>> = (0..10)
            .map(|i| {
                Ok(estimate(
                    0.95 + 0.001 * i as f64,
                    -0.1 + 0.002 * i as f64,
                    0.01,
                ))
            })
            .collect();
        let r = aggregate(&ctx(), 10, &CocycleConfig::default(), &est).unwrap();
        r.check_identities().unwrap();
        assert!((r.chi_plus - 0.9545).abs() < 1e-12);
        assert_eq!(r.excluded_orbits, 0);
        assert!(r.h_srb_stderr > 0.0);
    }

    #[test]
    fn too_many_exclusions_is_unreliable() {
        let est: Vec<Result<LyapunovEstimate>> = (0..10)
            .map(|i| {
                if i < 6 {
                    Err(Error::NearBoundary(1e-13))
                } else {
                    Ok(estimate(1.0, 0.0, 0.01))
                }
            })
            .collect();
        assert!(matches!(
            aggregate(&ctx(), 10, &CocycleConfig::default(), &est),
            Err(Error::UnreliableReport {
                excluded: 6,
                total: 10
            })
        ));
    }

    #[test]
    fn csv_round_trip_and_tampering() {
        let est: Vec<Result<LyapunovEstimate>> = (0..8)
            .map(|i| Ok(estimate(1.0 + 1e-3 * i as f64, 0.0, 0.01)))
            .collect();
        let r = aggregate(&ctx(), 8, &CocycleConfig::default(), &est).unwrap();
        let mut buf = Vec::new();
        write_reports_csv(&mut buf, std::slice::from_ref(&r)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&REQUIRED_COLUMNS.join(",")));
        let back = read_reports_csv(text.as_bytes()).unwrap();
        assert_eq!(back.len(), 1);
        let (a, b) = (
            serde_json::to_value(&back[0]).unwrap(),
            serde_json::to_value(&r).unwrap(),
        );
        for (k, v) in b.as_object().unwrap() {
            match (v.as_f64(), a[k].as_f64()) {
                (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-15 * x.abs().max(1.0), "{k}"),
                _ => assert_eq!(v, &a[k], "{k}"),
            }
        }
        let mut bad = r.clone();
        bad.alpha_srb *= 1.01;
        let mut buf = Vec::new();
        write_reports_csv(&mut buf, &[bad]).unwrap();
        assert!(read_reports_csv(buf.as_slice()).is_err());
        let json = serde_json::to_string(&vec![r.clone()]).unwrap();
        assert_eq!(read_reports_json(&json).unwrap(), vec![r]);
    }

    #[test]
    fn sweep_grid_validation() {
        let mut opts = SweepOptions {
            family: [3, 3, 4],
            taus: vec![],
            rotation_length: 10,
            n_orbits: 8,
            cocycle: CocycleConfig::default(),
            count_length: None,
        };
        assert!(deformation_sweep(&opts).is_err());
        opts.taus = vec![0.2, 0.4];
        assert!(deformation_sweep(&opts).is_err());
        opts.taus = vec![0.2, 0.0];
        assert!(deformation_sweep(&opts).is_err());
    }
}
