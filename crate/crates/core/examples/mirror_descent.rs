//! Online mirror descent with the p-norm regularizer on a shrinking ball
//! around a sparse centre: gradient map, Bregman divergence and projection.
//!
//! `cargo run --example mirror_descent`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sparse_halfspace::feasible::FeasibleSet;
use sparse_halfspace::linalg::{hard_threshold, normalize, PNormParams};
use sparse_halfspace::mirror::{bregman, bregman_project, OmdState, ProjectionSettings, RegretTracker, Regularizer};
use sparse_halfspace::Vector;

fn main() -> sparse_halfspace::Result<()> {
    let d = 1000;
    let params = PNormParams::for_dimension(d);
    println!("d = {d}: p = {:.4}, q = {:.3}", params.p, params.q);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut draw = |scale: f64| -> Vector {
        (0..d).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); scale * z }).collect::<Vec<f64>>().into()
    };
    let center = normalize(&hard_threshold(&draw(1.0), 10)?)?;
    let set = FeasibleSet::phase(&center, 0.2)?;
    let reg = Regularizer::for_reference(center.clone());

    // One projection by hand.
    let z = center.add(&draw(0.05));
    let w = bregman_project(&reg, &set, &z, &ProjectionSettings::default())?;
    println!(
        "projection of a point at ‖z − v‖₂ = {:.4}: violation {:.1e}, ‖w − v‖₂ = {:.4}, D(w, z) = {:.4}",
        z.dist2(&center),
        set.max_violation(&w),
        w.dist2(&center),
        bregman(&reg, &w, &z)
    );

    // A run against a fixed linear loss pulling towards a point outside the set.
    let target = draw(1.0);
    let g = target.scaled(-1.0 / target.norm2());
    let mut state = OmdState::new(center.clone(), 0.05, set.clone(), reg.clone())?;
    let mut regret = RegretTracker::new(d, params);
    for t in 1..=200 {
        regret.record(&state.iterate, &g);
        state.step(&g)?;
        if t % 50 == 0 {
            println!(
                "t = {t:>3}: ⟨−g, w_t⟩ = {:.4}, ‖w_t − v‖₂ = {:.4}",
                -g.dot(&state.iterate),
                state.iterate.dist2(&center)
            );
        }
    }
    println!("regret against the final iterate: {:.4}", regret.regret(&state.iterate));
    Ok(())
}
