//! Entropy reports, boundary exponents and counting.

use srb_core::domain::{conic_for_representation, limit_domain};
use srb_core::entropy::{
    periodic_alpha, read_reports_csv, read_reports_json, srb_entropy_report,
    topological_entropy_count, write_reports_csv, AlphaOptions, EntropyReport,
};
use srb_core::flow::{CocycleConfig, Recenterer, DEFAULT_SEARCH_LENGTH};
use srb_core::holonomy::{conjugacy_census, vinberg_triangle};

fn cfg() -> CocycleConfig {
    CocycleConfig {
        t_total: 2000.0,
        seed: 17,
        ..CocycleConfig::default()
    }
}

fn deformed_report() -> EntropyReport {
    let rep = vinberg_triangle(3, 3, 4, 0.8).unwrap();
    let dom = limit_domain(&rep, 12).unwrap();
    let rec = Recenterer::new(&dom, &rep, DEFAULT_SEARCH_LENGTH).unwrap();
    srb_entropy_report(&dom, &rep, &rec, 12, 16, &cfg()).unwrap()
}

#[test]
fn conic_report_is_hyperbolic() {
    let rep = vinberg_triangle(3, 3, 4, 0.0).unwrap();
    let dom = conic_for_representation(&rep).unwrap();
    let rec = Recenterer::new(&dom, &rep, DEFAULT_SEARCH_LENGTH).unwrap();
    let r = srb_entropy_report(&dom, &rep, &rec, 0, 16, &cfg()).unwrap();
    assert!((r.h_srb - 1.0).abs() <= 0.02, "{r:?}");
    assert!(
        r.eta.abs() <= 0.04 && (r.alpha_srb - 2.0).abs() <= 0.04,
        "{r:?}"
    );
    assert!(r.consistent && r.consistent_with_hyperbolic(), "{r:?}");
    r.check_identities().unwrap();
}

#[test]
fn deformed_report_is_strictly_below_the_hyperbolic_value() {
    let r = deformed_report();
    assert!(r.h_srb < 1.0 - 2.0 * r.h_srb_stderr, "{r:?}");
    assert!(r.eta < 0.0);
    assert!(r.alpha_srb > 2.0 + 2.0 * r.alpha_srb_stderr);
    assert!(
        r.consistent,
        "eta {} vs volume rate {}",
        r.eta, r.eta_volrate
    );
    assert_eq!(r.excluded_orbits, 0);

    let top = topological_entropy_count(&vinberg_triangle(3, 3, 4, 0.8).unwrap(), 12).unwrap();
    assert!(top.h_top < 1.0);
    assert!(top.h_top >= r.h_srb - 3.0 * r.h_srb_stderr);

    let mut csv = Vec::new();
    write_reports_csv(&mut csv, std::slice::from_ref(&r)).unwrap();
    let back = read_reports_csv(csv.as_slice()).unwrap();
    assert_eq!(back.len(), 1);
    assert!((back[0].h_srb - r.h_srb).abs() <= 1e-15);
    let json = serde_json::to_string(&[&r]).unwrap();
    assert_eq!(read_reports_json(&json).unwrap()[0], r);
}

#[test]
fn fuchsian_counting_entropy() {
    let top = topological_entropy_count(&vinberg_triangle(3, 3, 4, 0.0).unwrap(), 12).unwrap();
    assert!((top.h_top - 1.0).abs() <= 0.15, "{top:?}");
    assert!(top.n_window >= 25 && top.r_max > top.r_min);
    // The bare slope is biased low at these lengths.
    assert!(top.h_slope < top.h_top);
}

#[test]
fn periodic_boundary_exponents_match_eigenvalues() {
    let rep = vinberg_triangle(3, 3, 4, 0.8).unwrap();
    let census = conjugacy_census(&rep, 10).unwrap();
    let dom = limit_domain(&rep, 10).unwrap();
    let anchors: Vec<_> = census.classes.iter().map(|c| c.eigen.repelling).collect();
    let mut checked = 0;
    for c in census
        .primitive()
        .filter(|c| c.reliable && c.eigen.eta.abs() > 1e-3)
        .take(4)
    {
        let fit = periodic_alpha(&dom, &c.eigen, &anchors, 12, &AlphaOptions::default()).unwrap();
        assert!(
            (fit.alpha / c.eigen.alpha - 1.0).abs() <= 0.05,
            "{fit:?} vs {}",
            c.eigen.alpha
        );
        checked += 1;
    }
    assert_eq!(checked, 4);
}
