//! Command implementations. Each command computes everything first and
//! writes its artifacts once at the end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::info;
use serde::Serialize;
use srb_core::domain::{conic_for_representation, limit_domain, ConvexDomain};
use srb_core::entropy::{
    deformation_sweep, parse_reports_csv, topological_entropy_count, write_reports_csv,
    EntropyReport, SweepOptions,
};
use srb_core::flow::{
    beta_and_abramov, initial_condition, lyapunov_spectrum_traced, write_trace_csv, AbramovRecord,
    LyapunovEstimate, Recenterer, DEFAULT_SEARCH_LENGTH,
};
use srb_core::holonomy::{conjugacy_census, vinberg_triangle, Alphabet, Representation};

use crate::config::RunConfig;
use crate::validate::identity_suite;

/// A check performed by the command did not hold (exit status 4).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ValidationFailure(pub String);

fn representation(cfg: &RunConfig) -> srb_core::Result<Representation> {
    let f = &cfg.family;
    vinberg_triangle(f.p, f.q, f.r, f.tau)
}

/// Write `bytes` to the configured output, or to standard output.
fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .context("writing to standard output")
        }
    }
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn sibling(path: &Path, extension: &str) -> PathBuf {
    path.with_extension(extension)
}

pub fn validate(cfg: &RunConfig) -> Result<()> {
    let rep = representation(cfg)?;
    let results = identity_suite(&rep, cfg.domain.rotation_length, cfg.seed);
    let mut text = String::new();
    for r in &results {
        writeln!(text, "{}", r.line())?;
    }
    emit(cfg.output.as_deref(), text.as_bytes())?;
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(ValidationFailure(format!("identity suites failed: {}", failed.join(", "))).into())
    }
}

#[derive(Serialize)]
struct CensusRow {
    class: usize,
    word: String,
    word_length: usize,
    length: f64,
    eta: f64,
    alpha: f64,
    multiplicity: usize,
    primitive: bool,
    reliable: bool,
    inverse_class: Option<usize>,
}

pub fn census(cfg: &RunConfig) -> Result<()> {
    let rep = representation(cfg)?;
    let census = conjugacy_census(&rep, cfg.domain.rotation_length)?;
    let alphabet = Alphabet::new(&rep);
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, c) in census.classes.iter().enumerate() {
        w.serialize(CensusRow {
            class: i,
            word: c.representative.word_string(&alphabet),
            word_length: c.representative.word_length(),
            length: c.eigen.translation_length,
            eta: c.eigen.eta,
            alpha: c.eigen.alpha,
            multiplicity: c.multiplicity,
            primitive: c.primitive,
            reliable: c.reliable,
            inverse_class: c.inverse_class,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    info!(
        "{} classes from a ball of {} elements ({} non-proximal skipped)",
        census.classes.len(),
        census.ball_size,
        census.skipped_non_proximal
    );
    emit(cfg.output.as_deref(), &bytes)
}

pub fn domain(cfg: &RunConfig) -> Result<()> {
    let rep = representation(cfg)?;
    let dom = limit_domain(&rep, cfg.domain.rotation_length)?;
    eprintln!(
        "limit domain for ({},{},{}) tau = {}: L = {}, certified gap {:.3e}",
        cfg.family.p,
        cfg.family.q,
        cfg.family.r,
        cfg.family.tau,
        cfg.domain.rotation_length,
        dom.gap()
    );
    emit(cfg.output.as_deref(), dom.to_text().as_bytes())
}

#[derive(Serialize)]
struct OrbitOutput {
    tau: f64,
    orbit_index: u64,
    seed: u64,
    domain: &'static str,
    gap: f64,
    estimate: LyapunovEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    abramov: Option<AbramovRecord>,
}

/// One orbit of the flow. The conic is used at the hyperbolic point when
/// `conic` is set; otherwise the limit domain.
pub fn orbit(cfg: &RunConfig, conic: bool, abramov: bool) -> Result<()> {
    let rep = representation(cfg)?;
    let (dom, kind): (ConvexDomain, &'static str) = if conic {
        (conic_for_representation(&rep)?, "conic")
    } else {
        (limit_domain(&rep, cfg.domain.rotation_length)?, "limit")
    };
    let rec = Recenterer::new(&dom, &rep, DEFAULT_SEARCH_LENGTH)?;
    let cc = cfg.cocycle();
    cc.validate()?;
    let w0 = initial_condition(&dom, &rec, cfg.seed, cfg.orbits.index)?;
    let (estimate, trace) =
        lyapunov_spectrum_traced(&dom, &rec, &w0, &cc, cfg.orbits.trace_stride)?;
    if !estimate.converged {
        eprintln!(
            "warning: orbit not converged (T = {}, batch stderr {:.3e}); estimate is flagged",
            cc.t_total, estimate.stderr
        );
    }
    let abramov = if abramov {
        Some(beta_and_abramov(&dom, &rec, &w0, &cc)?)
    } else {
        None
    };
    let out = OrbitOutput {
        tau: cfg.family.tau,
        orbit_index: cfg.orbits.index,
        seed: cfg.seed,
        domain: kind,
        gap: dom.gap(),
        estimate,
        abramov,
    };
    emit(cfg.output.as_deref(), &json(&out))?;
    if cfg.orbits.trace_stride > 0 {
        let mut bytes = Vec::new();
        write_trace_csv(&mut bytes, &trace)?;
        let path = match &cfg.output {
            Some(p) => sibling(p, "trace.csv"),
            None => PathBuf::from("orbit.trace.csv"),
        };
        emit(Some(&path), &bytes)?;
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<()> {
    let taus = cfg.sweep_grid()?.to_vec();
    let opts = SweepOptions {
        family: [cfg.family.p, cfg.family.q, cfg.family.r],
        taus,
        rotation_length: cfg.domain.rotation_length,
        n_orbits: cfg.orbits.n_orbits,
        cocycle: cfg.cocycle(),
        count_length: cfg.domain.count_length,
    };
    let result = deformation_sweep(&opts)?;
    for (tau, name) in &result.failures {
        eprintln!("warning: tau = {tau} failed ({name})");
    }
    eprintln!(
        "max adjacent |dh| = {:.4}; continuity within 3 joint stderr + mesh: {}",
        result.max_adjacent_diff,
        if result.continuity_ok { "yes" } else { "no" }
    );
    let mut bytes = Vec::new();
    write_reports_csv(&mut bytes, &result.reports)?;
    emit(cfg.output.as_deref(), &bytes)?;
    if let Some(p) = &cfg.output {
        emit(Some(&sibling(p, "json")), &json(&result.reports))?;
    }
    Ok(())
}

pub fn count(cfg: &RunConfig) -> Result<()> {
    let rep = representation(cfg)?;
    let l = cfg
        .domain
        .count_length
        .unwrap_or(cfg.domain.rotation_length);
    let top = topological_entropy_count(&rep, l)?;
    emit(cfg.output.as_deref(), &json(&top))
}

fn read_reports(path: &Path) -> Result<Vec<EntropyReport>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let reports = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| srb_core::Error::Format(e.to_string()))?
    } else {
        parse_reports_csv(text.as_bytes())?
    };
    Ok(reports)
}

/// Human-readable summary of a report file.
pub fn explain(path: &Path) -> Result<()> {
    let reports = read_reports(path)?;
    let mut violations = 0;
    let mut text = String::new();
    for (i, r) in reports.iter().enumerate() {
        writeln!(
            text,
            "report {}: family ({},{},{}), tau = {}, L = {}, T = {}, {} orbits ({} excluded), seed {}",
            i + 1, r.family_p, r.family_q, r.family_r, r.tau, r.rotation_length, r.t_total,
            r.n_orbits, r.excluded_orbits, r.seed
        )?;
        writeln!(
            text,
            "  h_srb = {:.6} ± {:.6}   alpha_srb = {:.6}   eta = {:.6}",
            r.h_srb, r.h_srb_stderr, r.alpha_srb, r.eta
        )?;
        for (name, ok) in r.identity_checks() {
            violations += usize::from(!ok);
            writeln!(
                text,
                "  identity {name:<26} {}",
                if ok { "ok" } else { "VIOLATED" }
            )?;
        }
        let diff = r.eta - r.eta_volrate;
        writeln!(
            text,
            "  eta vs volume rate: {:.6} vs {:.6} (difference {:.2e}, stderr {:.2e}): {}",
            r.eta,
            r.eta_volrate,
            diff,
            r.consistency_stderr,
            if r.consistent {
                "agree within 3 stderr"
            } else {
                "disagree beyond 3 stderr"
            }
        )?;
        let verdict = if r.consistent_with_hyperbolic() {
            "consistent with hyperbolic point"
        } else {
            "differs from hyperbolic point"
        };
        writeln!(
            text,
            "  |h_srb - 1| = {:.3e} vs 3 stderr = {:.3e}: {verdict}",
            (r.h_srb - 1.0).abs(),
            3.0 * r.h_srb_stderr
        )?;
        if let Some(h) = r.h_top {
            writeln!(text, "  h_top = {h:.4} ({})", r.h_top_caveat)?;
        }
    }
    print!("{text}");
    if violations > 0 {
        return Err(ValidationFailure(format!("{violations} report identities violated")).into());
    }
    Ok(())
}
