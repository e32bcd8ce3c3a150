//! Geodesic flow, recentering and cocycle estimates.

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srb_core::domain::{conic_for_representation, limit_domain, ConvexDomain};
use srb_core::flow::{
    beta, beta_and_abramov, flip, geodesic_flow, initial_condition, lyapunov_spectrum, recenter,
    CocycleConfig, FlowPoint, Recenterer, DEFAULT_SEARCH_LENGTH,
};
use srb_core::holonomy::{
    projective_identity_residual, vinberg_triangle, Alphabet, GroupElement, Representation,
};

fn fuchsian() -> (Representation, ConvexDomain, Recenterer) {
    let rep = vinberg_triangle(3, 3, 4, 0.0).unwrap();
    let dom = conic_for_representation(&rep).unwrap();
    let rec = Recenterer::new(&dom, &rep, DEFAULT_SEARCH_LENGTH).unwrap();
    (rep, dom, rec)
}

fn deformed() -> (Representation, ConvexDomain, Recenterer) {
    let rep = vinberg_triangle(3, 3, 4, 0.8).unwrap();
    let dom = limit_domain(&rep, 12).unwrap();
    let rec = Recenterer::new(&dom, &rep, DEFAULT_SEARCH_LENGTH).unwrap();
    (rep, dom, rec)
}

fn cfg(t_total: f64, seed: u64) -> CocycleConfig {
    CocycleConfig {
        t_total,
        seed,
        ..CocycleConfig::default()
    }
}

#[test]
fn recentering_undoes_a_rotation() {
    let (rep, dom, rec) = fuchsian();
    let alphabet = Alphabet::new(&rep);
    // Rotations (products of two reflections) generate the even subgroup.
    for word in [[0u8, 1], [1, 2], [2, 0]] {
        let g = GroupElement::from_word(&alphabet, &word);
        let gc = dom.chart_matrix(g.matrix());
        let w = FlowPoint::from_angle(&dom, [0.0, 0.0], 0.3)
            .unwrap()
            .transform(&dom, &gc)
            .unwrap();
        let (back, used) = recenter(&dom, &rec, &w).unwrap();
        assert!(back.x[0].hypot(back.x[1]) < 1e-9, "{:?}", back.x);
        let h = GroupElement::from_word(&alphabet, &used);
        assert!(projective_identity_residual(&(h.matrix() * g.matrix())) < 1e-9);
    }
}

#[test]
fn companions_keep_their_distances_through_many_recenterings() {
    let (rep, dom, rec) = fuchsian();
    let alphabet = Alphabet::new(&rep);
    let rotations: Vec<_> = [[0u8, 1], [1, 0], [1, 2], [2, 1], [2, 0], [0, 2]]
        .iter()
        .map(|w| dom.chart_matrix(GroupElement::from_word(&alphabet, w).matrix()))
        .collect();
    let mut pts: Vec<FlowPoint> = [[0.05, 0.0], [0.0, 0.1], [-0.08, -0.03], [0.1, 0.1]]
        .iter()
        .map(|&x| FlowPoint::from_angle(&dom, x, 1.0).unwrap())
        .collect();
    let dists = |p: &[FlowPoint]| -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                out.push(dom.hilbert_distance_chart(p[i].x, p[j].x).unwrap());
            }
        }
        out
    };
    let initial = dists(&pts);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let g = &rotations[rng.gen_range(0..rotations.len())];
        for p in pts.iter_mut() {
            *p = p.transform(&dom, g).unwrap();
        }
        rec.apply(&dom, &mut pts).unwrap();
    }
    for (a, b) in initial.iter().zip(dists(&pts)) {
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }
}

#[test]
fn flow_commutes_with_deck_transformations() {
    let (rep, dom, _) = fuchsian();
    let alphabet = Alphabet::new(&rep);
    let g = dom.chart_matrix(GroupElement::from_word(&alphabet, &[0, 1, 2, 1]).matrix());
    let w = FlowPoint::from_angle(&dom, [0.1, -0.05], 2.0).unwrap();
    for t in [0.5, 1.5, 3.0] {
        let a = geodesic_flow(&w.transform(&dom, &g).unwrap(), t).unwrap();
        let b = geodesic_flow(&w, t).unwrap().transform(&dom, &g).unwrap();
        assert!((a.x[0] - b.x[0]).hypot(a.x[1] - b.x[1]) < 1e-9);
        assert!((a.dir[0] - b.dir[0]).hypot(a.dir[1] - b.dir[1]) < 1e-9);
    }
}

#[test]
fn beta_is_flip_invariant() {
    let (_, dom, rec) = deformed();
    for i in 0..20 {
        let w = initial_condition(&dom, &rec, 5, i).unwrap();
        assert_relative_eq!(beta(&flip(&w)), beta(&w), max_relative = 1e-14);
    }
}

#[test]
fn fuchsian_spectrum_is_plus_minus_one() {
    let (_, dom, rec) = fuchsian();
    let w = initial_condition(&dom, &rec, 1, 0).unwrap();
    let e = lyapunov_spectrum(&dom, &rec, &w, &cfg(2000.0, 1)).unwrap();
    assert!(e.converged);
    assert!((e.chi_plus - 1.0).abs() <= 0.02, "{e:?}");
    assert!((e.chi_minus + 1.0).abs() <= 0.02, "{e:?}");
    assert!(e.vol_rate.abs() <= 0.02, "{e:?}");
}

#[test]
fn nonzero_exponents_sum_to_the_volume_rate() {
    let (_, dom, rec) = deformed();
    for i in 0..3 {
        let w = initial_condition(&dom, &rec, 2, i).unwrap();
        let e = lyapunov_spectrum(&dom, &rec, &w, &cfg(1000.0, 2)).unwrap();
        assert!(
            (e.chi_plus + e.chi_minus - e.vol_rate).abs() <= 2.0 * e.vol_rate_stderr,
            "{e:?}"
        );
    }
}

/// Batch-means errors scale like `1/√T`; the ratio is averaged over a few
/// orbits because a single ratio fluctuates.
#[test]
fn doubling_the_run_shrinks_the_error_by_root_two() {
    let (_, dom, rec) = fuchsian();
    let mut ratio = 0.0;
    let n = 6;
    for i in 0..n {
        let w = initial_condition(&dom, &rec, 4, i).unwrap();
        let short = lyapunov_spectrum(&dom, &rec, &w, &cfg(1000.0, 4)).unwrap();
        let long = lyapunov_spectrum(&dom, &rec, &w, &cfg(2000.0, 4)).unwrap();
        ratio += short.stderr / long.stderr / n as f64;
    }
    assert!((1.1..1.8).contains(&ratio), "mean ratio {ratio}");
}

#[test]
fn abramov_relation_on_the_conic() {
    let (_, dom, rec) = fuchsian();
    let w = initial_condition(&dom, &rec, 9, 0).unwrap();
    let a = beta_and_abramov(&dom, &rec, &w, &cfg(2000.0, 9)).unwrap();
    assert!(a.abramov_residual <= 0.03, "{a:?}");
}

/// `β` is pointwise flip-invariant, so the time-reversed runs have the same
/// mean. Single orbits occasionally sit near 3σ apart, so the comparison
/// pools eight orbits.
#[test]
fn time_reversal_preserves_mean_beta() {
    let (_, dom, rec) = deformed();
    let c = cfg(2000.0, 42);
    let (mut fwd, mut bwd, mut var) = (0.0, 0.0, 0.0);
    let n = 8;
    for i in 0..n {
        let w = initial_condition(&dom, &rec, 42, i).unwrap();
        let a = beta_and_abramov(&dom, &rec, &w, &c).unwrap();
        let b = beta_and_abramov(&dom, &rec, &flip(&w), &c).unwrap();
        fwd += a.mean_beta / n as f64;
        bwd += b.mean_beta / n as f64;
        var += (a.mean_beta_stderr.powi(2) + b.mean_beta_stderr.powi(2)) / (n * n) as f64;
    }
    assert!(
        (fwd - bwd).abs() <= 2.0 * var.sqrt(),
        "{fwd} vs {bwd} (stderr {})",
        var.sqrt()
    );
}
