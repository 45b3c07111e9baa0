mod common;

use common::{facing, five_point_oracle, lateral, px_err, rel_err, s1};
use epipole_core::projective::det3_normalized;
use epipole_core::solvers::{solve_five_detailed, solve_six_detailed, QuadSplit};
use epipole_core::{
    conic_from_4corr, join, projectively_equal, rank_candidates, solve_five, solve_four, solve_six, ConicClass,
    CorrSet, GeometryError, HomPoint2, LineParam, Method, QuadIndex, SixPointOptions,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn four_point_conic_contains_true_epipole_on_s1() {
    let sc = s1();
    let corr = sc.corr.prefix(4);
    let sol = solve_four(&sc.e_true, &corr).unwrap();
    assert_eq!(sol.class, ConicClass::Nondegenerate);
    assert!(sol.conic.incidence(&sc.e_prime_true).abs() < 1e-9);
    for c in &corr.pairs {
        assert!(sol.conic.incidence(&c.p_prime).abs() < 1e-12);
    }
    let n_samples: usize = sol.polyline.iter().map(Vec::len).sum();
    assert!(n_samples > 0 && n_samples <= 256);
    for p in sol.polyline.iter().flatten() {
        assert!(sol.conic.pixel().eval(p).abs() < 1e-9);
        assert!(sol.viewport.contains(p.to_pixel().unwrap()));
    }
}

#[test]
fn four_point_noise_increases_incidence_on_average() {
    use epipole_core::{add_noise, NoiseSpec};
    let mut mean = [0.0; 2];
    for seed in 0..100 {
        let sc = facing(seed);
        for (k, sigma) in [0.0, 1.0].into_iter().enumerate() {
            let spec = NoiseSpec { sigma, seed: 1000 + seed, perturb_epipole: true };
            let noisy = add_noise(&sc.corr, &spec).unwrap();
            let sol = solve_four(&noisy.epipole.unwrap(), &noisy.prefix(4)).unwrap();
            mean[k] += sol.conic.incidence(&sc.e_prime_true).abs() / 100.0;
        }
    }
    eprintln!("mean |incidence| of e'_true: sigma 0 -> {:e}, sigma 1 -> {:e}", mean[0], mean[1]);
    assert!(mean[0] < 1e-9 && mean[1] > mean[0]);
}

#[test]
fn five_point_recovers_s1_epipole() {
    let sc = s1();
    let corr = sc.corr.prefix(5);
    let (est, diag) = solve_five_detailed(&sc.e_true, &corr).unwrap();
    assert_eq!(diag.split, QuadSplit::all()[0]);
    assert!(rel_err(&est.e_prime, &sc.e_prime_true) < 1e-6);
    assert!(est.residual_rms < 1e-8);
    assert_eq!(est.method, Method::FiveCremona);
    for t in &diag.triangle_conics {
        let [a, _, c, _, _, f] = t.coefficients();
        assert!(a.abs().max(c.abs()).max(f.abs()) < 1e-8);
    }
    let oracle = five_point_oracle(&sc.e_true, &corr).unwrap();
    assert!(rel_err(&est.e_prime, &oracle) < 1e-8);
}

#[test]
fn five_point_matches_pencil_oracle_on_random_scenes() {
    for seed in 0..60 {
        for sc in [facing(seed), lateral(seed)] {
            let corr = sc.corr.prefix(5);
            let Ok(est) = solve_five(&sc.e_true, &corr) else { continue };
            let oracle = five_point_oracle(&sc.e_true, &corr).expect("oracle");
            assert!(
                rel_err(&est.e_prime, &oracle) < 1e-8,
                "seed {seed}: {:?} vs {:?}",
                est.e_prime,
                oracle
            );
            assert!(rel_err(&est.e_prime, &sc.e_prime_true) < 1e-6);
        }
    }
}

#[test]
fn collinear_with_epipole_is_redundant_for_the_conic_but_not_for_five_points() {
    let sc = s1();
    let mut corr = sc.corr.prefix(5);
    // p_1 moved onto the line through e and p_0.
    let e = sc.e_true.to_pixel().unwrap();
    let p0 = corr.pairs[0].p.to_pixel().unwrap();
    corr.pairs[1].p = HomPoint2::pixel(e[0] + 2.0 * (p0[0] - e[0]), e[1] + 2.0 * (p0[1] - e[1]));
    let quad = QuadIndex::new(0, 1, 2, 3).unwrap();
    let err = conic_from_4corr(&sc.e_true, &quad, &corr).unwrap_err();
    assert!(matches!(err, GeometryError::RedundantConfiguration { pair: [0, 1] }), "{err:?}");
    // A split without both points still solves; the pencil map then forces
    // e' onto the line p'_0 p'_1.
    let (est, diag) = solve_five_detailed(&sc.e_true, &corr).unwrap();
    assert_ne!(diag.split, QuadSplit::all()[0]);
    let d = det3_normalized(&est.e_prime, &corr.pairs[0].p_prime, &corr.pairs[1].p_prime);
    assert!(d.abs() < 1e-9, "{d:e}");
}

#[test]
fn rank_candidates_prefers_truth() {
    let sc = s1();
    let corr = sc.corr.prefix(5);
    let a = HomPoint2::pixel(100.0, 50.0);
    let b = HomPoint2::pixel(500.0, 400.0);
    let est = rank_candidates(&[a, sc.e_prime_true, b], &sc.e_true, &corr, Method::FiveCremona)
        .unwrap();
    assert_eq!(est.e_prime, sc.e_prime_true);
    assert_eq!(est.alternates, vec![a, b]);
    assert!(est.residual_rms < 1e-9);
}

fn true_line(sc: &epipole_core::Scene) -> epipole_core::Line2 {
    join(&sc.e_true, &sc.corr.pairs[6].p).unwrap()
}

fn matches_truth(roots: &[epipole_core::SixPointRoot], sc: &epipole_core::Scene, tol: f64) -> bool {
    roots
        .iter()
        .any(|r| rel_err(&r.e, &sc.e_true) < tol && rel_err(&r.e_prime, &sc.e_prime_true) < tol)
}

#[test]
fn six_point_recovers_s1_pair() {
    let sc = s1();
    let corr = sc.corr.prefix(6);
    let lp = LineParam::from_line(true_line(&sc), [320.0, 240.0], 320.0).unwrap();
    let roots = solve_six(&lp, &corr).unwrap();
    assert!(!roots.is_empty() && roots.len() <= 3, "{} roots", roots.len());
    assert!(matches_truth(&roots, &sc, 1e-5), "{roots:?}");
    let n = corr.normalized().unwrap();
    for r in &roots {
        let e = n.to_frame1(&r.e).normalize();
        let ep = n.to_frame2(&r.e_prime).normalize();
        for q in QuadIndex::all(6) {
            assert!(n.residual_raw(&e, &ep, &q).abs() < 1e-6);
        }
    }
}

#[test]
fn six_point_root_at_anchor() {
    let sc = facing(3);
    let corr = sc.corr.prefix(6);
    let other = sc.corr.pairs[7].p;
    let lp = LineParam::from_anchors(sc.e_true, other).unwrap();
    let rep = solve_six_detailed(&lp, &corr, &SixPointOptions::default()).unwrap();
    let hit = rep
        .roots
        .iter()
        .find(|r| rel_err(&r.e, &sc.e_true) < 1e-5)
        .expect("root at the anchor");
    assert_eq!(hit.chart, 0);
    assert!(hit.t.abs() < 1e-9, "t = {}", hit.t);
}

#[test]
fn six_point_root_count_bounded_on_random_scenes() {
    let mut found = 0;
    for seed in 0..100 {
        let sc = facing(seed);
        let corr = sc.corr.prefix(6);
        let lp = LineParam::from_line(true_line(&sc), [320.0, 240.0], 320.0).unwrap();
        if let Ok(roots) = solve_six(&lp, &corr) {
            assert!(roots.len() <= 3, "seed {seed}: {} roots", roots.len());
            found += usize::from(matches_truth(&roots, &sc, 1e-5));
        }
    }
    assert!(found >= 95, "{found}/100");
}

#[test]
fn six_point_finds_root_beyond_anchors() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..20 {
        let sc = facing(seed);
        let corr = sc.corr.prefix(6);
        let e = sc.e_true.to_pixel().unwrap();
        let l = true_line(&sc);
        let [a, b, _] = l.to_array();
        let len = a.hypot(b);
        let dir = [-b / len, a / len];
        // Anchors both on one side of e, far or near.
        let s0: f64 = rng.random_range(5.0..400.0);
        let s1: f64 = s0 + rng.random_range(1.0..400.0);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let pa = HomPoint2::pixel(e[0] + sign * s0 * dir[0], e[1] + sign * s0 * dir[1]);
        let pb = HomPoint2::pixel(e[0] + sign * s1 * dir[0], e[1] + sign * s1 * dir[1]);
        let lp = LineParam::new(l, pa, pb).unwrap();
        let roots = solve_six(&lp, &corr).unwrap();
        assert!(matches_truth(&roots, &sc, 1e-5), "seed {seed}");
    }
}

#[test]
fn six_point_is_deterministic() {
    let sc = facing(11);
    let corr = sc.corr.prefix(6);
    let lp = LineParam::from_line(true_line(&sc), [320.0, 240.0], 320.0).unwrap();
    assert_eq!(solve_six(&lp, &corr).unwrap(), solve_six(&lp, &corr).unwrap());
}

fn permuted(corr: &CorrSet, perm: &[usize]) -> CorrSet {
    corr.select(perm)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn five_point_invariant_under_relabeling(seed in 0u64..500, perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        let sc = facing(seed);
        let corr = sc.corr.prefix(5);
        let a = solve_five(&sc.e_true, &corr);
        let b = solve_five(&sc.e_true, &permuted(&corr, &perm));
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!(projectively_equal(&a.e_prime, &b.e_prime, 1e-8),
                "{:?} vs {:?}", a.e_prime, b.e_prime);
            prop_assert!(px_err(&a.e_prime, &sc.e_prime_true) < 1e-3);
        }
    }

    #[test]
    fn four_point_conic_contains_truth_for_every_subset(seed in 0u64..1000, pick in proptest::sample::subsequence((0..12).collect::<Vec<usize>>(), 4)) {
        let sc = facing(seed);
        let corr = sc.corr.select(&pick);
        match solve_four(&sc.e_true, &corr) {
            Ok(sol) => prop_assert!(sol.conic.incidence(&sc.e_prime_true).abs() < 1e-9),
            Err(e) => prop_assert!(matches!(e, GeometryError::RedundantConfiguration { .. }), "{:?}", e),
        }
    }
}
