//! Projective geometry and Hilbert-metric properties.

use std::sync::OnceLock;

use approx::assert_relative_eq;
use proptest::prelude::*;
use srb_core::domain::{conic_domain, conic_domain_in_chart, limit_domain, Boundary, ConvexDomain};
use srb_core::holonomy::vinberg_triangle;
use srb_core::projgeom::{apply_projective, cross_ratio, map_chart, Mat3, ProjPoint};

fn unit_disk() -> ConvexDomain {
    conic_domain(&Mat3::from_diagonal(&[1.0, 1.0, -1.0].into())).unwrap()
}

/// Limit domain of the deformed triangle group, built once.
fn deformed() -> &'static ConvexDomain {
    static DOM: OnceLock<ConvexDomain> = OnceLock::new();
    DOM.get_or_init(|| limit_domain(&vinberg_triangle(3, 3, 4, 0.8).unwrap(), 10).unwrap())
}

fn sandwich_points(dom: &ConvexDomain) -> Vec<[f64; 2]> {
    match dom.boundary() {
        Boundary::Sandwich(s) => s.points().to_vec(),
        Boundary::Conic(_) => panic!("expected a sandwich"),
    }
}

#[test]
fn cross_ratio_example() {
    let p = |x: f64| ProjPoint::from_chart([x, 0.0]);
    let cr = cross_ratio(&p(-1.0), &p(0.0), &p(0.5), &p(1.0)).unwrap();
    assert_relative_eq!(cr, 3.0, max_relative = 1e-15);
}

#[test]
fn unit_disk_examples() {
    let dom = unit_disk();
    assert_relative_eq!(
        dom.hilbert_distance_chart([0.0, 0.0], [0.5, 0.0]).unwrap(),
        0.5 * 3f64.ln(),
        max_relative = 1e-14
    );
    let ch = dom.chord_chart([0.5, 0.0], [0.0, 1.0]).unwrap();
    assert_relative_eq!(ch.t_plus, 0.75f64.sqrt(), max_relative = 1e-14);
    assert_relative_eq!(ch.t_minus, -(0.75f64.sqrt()), max_relative = 1e-14);
    assert_relative_eq!(
        dom.finsler_norm_chart([0.5, 0.0], [1.0, 0.0]).unwrap(),
        8.0 / 3.0,
        max_relative = 1e-14
    );
}

/// The Finsler norm `1/|x−p⁻| + 1/|x−p⁺|` is twice the infinitesimal
/// growth of `d = ½ log CR`, so the finite-difference quotient of the
/// distance is compared against half the norm.
#[test]
fn finsler_norm_is_twice_the_metric_speed() {
    let dom = unit_disk();
    for s in [1e-3, 1e-4, 1e-5] {
        let quotient = dom.hilbert_distance_chart([0.0, 0.0], [s, 0.0]).unwrap() / s;
        assert!(
            (2.0 * quotient - 2.0).abs() <= 10.0 * s,
            "s = {s}: {quotient}"
        );
    }
    let dom = deformed();
    for (x, v) in [([0.1, -0.2], [0.6, 0.8]), ([-0.3, 0.05], [1.0, 0.0])] {
        let s = 1e-6;
        let y = [x[0] + s * v[0], x[1] + s * v[1]];
        let quotient = dom.hilbert_distance_chart(x, y).unwrap() / s;
        let norm = dom.finsler_norm_chart(x, v).unwrap();
        assert_relative_eq!(2.0 * quotient, norm, max_relative = 1e-4);
    }
}

#[test]
fn fuchsian_limit_domain_lies_on_the_invariant_conic() {
    let rep = vinberg_triangle(3, 3, 4, 0.0).unwrap();
    let dom = limit_domain(&rep, 10).unwrap();
    let form = rep.invariant_form().unwrap();
    let conic = conic_domain_in_chart(&form.matrix, dom.chart().clone())
        .or_else(|_| conic_domain_in_chart(&(-form.matrix), dom.chart().clone()))
        .unwrap();
    let mut worst: f64 = 0.0;
    for x in sandwich_points(&dom) {
        let r = x[0].hypot(x[1]);
        let ch = conic.chord_chart([0.0, 0.0], [x[0] / r, x[1] / r]).unwrap();
        worst = worst.max((ch.t_plus - r).abs());
    }
    assert!(worst <= 1e-6, "worst chart distance {worst:.3e}");
}

#[test]
fn sandwich_gap_shrinks_with_ball_size() {
    let rep = vinberg_triangle(3, 3, 4, 0.0).unwrap();
    let g10 = limit_domain(&rep, 10).unwrap().gap();
    let g12 = limit_domain(&rep, 12).unwrap().gap();
    assert!(g12 < g10, "{g12} vs {g10}");
    let mid = limit_domain(&vinberg_triangle(3, 3, 4, 0.5).unwrap(), 10).unwrap();
    assert!(mid.gap() < 1e-4 && mid.contains_chart([0.0, 0.0]));
}

#[test]
fn domain_text_round_trip() {
    let dom = deformed();
    let back = ConvexDomain::from_text(&dom.to_text()).unwrap();
    assert_eq!(back.to_text(), dom.to_text());
    let (x, y) = ([0.1, 0.2], [-0.3, 0.1]);
    assert_eq!(
        back.hilbert_distance_chart(x, y).unwrap(),
        dom.hilbert_distance_chart(x, y).unwrap()
    );
}

fn in_disk(radius: f64) -> impl Strategy<Value = [f64; 2]> {
    (0.0..radius, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

fn near_identity() -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-0.3..0.3f64).prop_map(|a| Mat3::identity() + Mat3::from_row_slice(&a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn cross_ratio_is_projectively_invariant(
        base in in_disk(1.0),
        theta in 0.0..std::f64::consts::TAU,
        ts in prop::array::uniform4(-1.0..1.0f64),
        m in near_identity(),
    ) {
        let mut ts = ts;
        ts.sort_by(f64::total_cmp);
        prop_assume!(ts.windows(2).all(|w| w[1] - w[0] > 0.05));
        let pts: Vec<ProjPoint> = ts
            .iter()
            .map(|t| ProjPoint::from_chart([base[0] + t * theta.cos(), base[1] + t * theta.sin()]))
            .collect();
        let before = cross_ratio(&pts[0], &pts[1], &pts[2], &pts[3]).unwrap();
        let img: Vec<ProjPoint> = pts.iter().map(|p| apply_projective(&m, p).unwrap()).collect();
        let after = cross_ratio(&img[0], &img[1], &img[2], &img[3]);
        prop_assume!(after.is_ok());
        let after = after.unwrap();
        prop_assert!((before - after).abs() <= 1e-10 * before.abs().max(1.0));
    }

    #[test]
    fn triangle_inequality(x in in_disk(0.6), y in in_disk(0.6), z in in_disk(0.6)) {
        let dom = deformed();
        prop_assume!(dom.contains_chart(x) && dom.contains_chart(y) && dom.contains_chart(z));
        let d = |a, b| dom.hilbert_distance_chart(a, b).unwrap();
        prop_assert!(d(x, y) + d(y, z) - d(x, z) >= -1e-10);
    }

    #[test]
    fn distances_add_along_chords(x in in_disk(0.6), z in in_disk(0.6), s in 0.05..0.95f64) {
        let dom = deformed();
        prop_assume!(dom.contains_chart(x) && dom.contains_chart(z));
        let y = [x[0] + s * (z[0] - x[0]), x[1] + s * (z[1] - x[1])];
        let d = |a, b| dom.hilbert_distance_chart(a, b).unwrap();
        prop_assert!((d(x, y) + d(y, z) - d(x, z)).abs() <= 1e-10 * d(x, z).max(1.0));
    }

    #[test]
    fn congruent_conics_are_isometric(m in near_identity(), x in in_disk(0.9), y in in_disk(0.9)) {
        let q = Mat3::from_diagonal(&[1.0, 1.0, -1.0].into());
        let m_inv = m.try_inverse();
        prop_assume!(m_inv.is_some());
        let m_inv = m_inv.unwrap();
        let image = conic_domain(&(m_inv.transpose() * q * m_inv));
        prop_assume!(image.is_ok());
        let image = image.unwrap();
        let (mx, my) = (map_chart(&m, x), map_chart(&m, y));
        prop_assume!(mx.is_ok() && my.is_ok());
        let d0 = unit_disk().hilbert_distance_chart(x, y).unwrap();
        let d1 = image.hilbert_distance_chart(mx.unwrap(), my.unwrap()).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-10 * d0.max(1.0), "{} vs {}", d0, d1);
    }
}
