mod common;

use proptest::prelude::*;
use rand::Rng;

use common::{gaussian, random_instance, rng, stationarity_residual};
use sparse_halfspace::linalg::{norm_p, pnorm_grad, pnorm_grad_inverse, PNormParams, Vector};
use sparse_halfspace::mirror::{bregman, bregman_project, ProjectionSettings, Regularizer};

#[test]
fn roundtrip_across_dimensions() {
    let mut rng = rng(11);
    for &d in &[2usize, 10, 1000] {
        let params = PNormParams::for_dimension(d);
        let n = if d == 1000 { 1000 } else { 4500 };
        for _ in 0..n {
            let scale = 10f64.powf(rng.random_range(-3.0..2.0));
            let w = gaussian(&mut rng, d, scale);
            let back = pnorm_grad_inverse(&pnorm_grad(&w, params), params);
            assert!(back.dist2(&w) <= 1e-9 * w.norm2().max(1.0), "d={d}");
        }
    }
}

#[test]
fn strong_convexity_on_random_pairs() {
    let mut rng = rng(12);
    for i in 0..10_000 {
        let d = [2usize, 10, 50][i % 3];
        let reg = Regularizer::for_reference(gaussian(&mut rng, d, 0.5));
        let a = gaussian(&mut rng, d, 1.0);
        let b = gaussian(&mut rng, d, 1.0);
        let np = norm_p(&a.sub(&b), reg.params.p);
        assert!(bregman(&reg, &a, &b) >= 0.5 * np * np - 1e-12);
    }
}

#[test]
fn projection_is_first_order_optimal() {
    let mut rng = rng(13);
    let settings = ProjectionSettings::default();
    let mut checked = 0;
    while checked < 100 {
        let d = [2usize, 5, 20, 100][checked % 4];
        let (set, reference) = random_instance(&mut rng, d);
        let reg = Regularizer::for_reference(reference);
        let scale = rng.random_range(0.1..3.0);
        let z = gaussian(&mut rng, d, scale);
        if set.contains(&z, 0.0) {
            continue;
        }
        let w = bregman_project(&reg, &set, &z, &settings).unwrap();
        assert!(set.max_violation(&w) <= 1e-9);
        let theta = reg.grad(&z);
        let r = stationarity_residual(&reg, &set, &theta, &w);
        assert!(r <= 1e-6, "instance {checked}: residual {r:e}");
        checked += 1;
    }
}

#[test]
fn projection_beats_random_feasible_points() {
    let mut rng = rng(14);
    for _ in 0..30 {
        let d = 6;
        let (set, reference) = random_instance(&mut rng, d);
        let reg = Regularizer::for_reference(reference);
        let z = gaussian(&mut rng, d, 2.0);
        let w = bregman_project(&reg, &set, &z, &ProjectionSettings::default()).unwrap();
        let best = bregman(&reg, &w, &z);
        for _ in 0..300 {
            // Feasible competitors: Euclidean projections of nearby points.
            let probe = w.add(&gaussian(&mut rng, d, 0.05));
            let x = set.project_euclidean(&probe, 1e-11, 1_000_000).unwrap();
            assert!(bregman(&reg, &x, &z) >= best - 1e-10);
        }
    }
}

#[test]
fn quadratic_projection_matches_euclidean_oracle() {
    let mut rng = rng(15);
    for _ in 0..100 {
        let d = rng.random_range(2..30);
        let (set, reference) = random_instance(&mut rng, d);
        let reg = Regularizer::new(reference, PNormParams::euclidean());
        let z = gaussian(&mut rng, d, 1.5);
        let settings = ProjectionSettings {
            tol: 1e-12,
            ..ProjectionSettings::default()
        };
        let w = bregman_project(&reg, &set, &z, &settings).unwrap();
        let e = set.project_euclidean(&z, 1e-14, 1_000_000).unwrap();
        assert!(w.dist2(&e) <= 1e-8, "{:e}", w.dist2(&e));
    }
}

proptest! {
    #[test]
    fn grad_inverse_is_one_lipschitz(
        a in prop::collection::vec(-5.0f64..5.0, 8),
        b in prop::collection::vec(-5.0f64..5.0, 8),
    ) {
        let params = PNormParams::for_dimension(8);
        let wa = pnorm_grad_inverse(&a, params);
        let wb = pnorm_grad_inverse(&b, params);
        let da = Vector::new(a.clone()).dist2(&b);
        prop_assert!(wa.dist2(&wb) <= da * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn projected_point_is_feasible(seed in 0u64..5000) {
        let mut rng = rng(seed);
        let d = rng.random_range(2..12);
        let (set, reference) = random_instance(&mut rng, d);
        let reg = Regularizer::for_reference(reference);
        let z = gaussian(&mut rng, d, 3.0);
        let w = bregman_project(&reg, &set, &z, &ProjectionSettings::default()).unwrap();
        prop_assert!(set.max_violation(&w) <= 1e-9);
        if set.contains(&z, 0.0) {
            prop_assert_eq!(w.as_slice(), z.as_slice());
        }
    }
}
