//! The initialization stage alone: label averaging, hard thresholding to a
//! coarse direction, and constrained refinement inside the cone around it.
//!
//! `cargo run --release --example initialize -- [d] [eta]`

use sparse_halfspace::initialize::initialize;
use sparse_halfspace::learner::build_oracles;
use sparse_halfspace::{LearnerConfig, OracleSetup};

fn main() -> sparse_halfspace::Result<()> {
    let mut args = std::env::args().skip(1);
    let d: usize = args.next().map_or(100, |a| a.parse().expect("d is an integer"));
    let eta: f64 = args.next().map_or(0.2, |a| a.parse().expect("eta is a number"));
    let cfg = LearnerConfig::new(d, 5, eta, 0.05);
    let init = cfg.init_config()?;
    println!(
        "m = {}, s̃ = {}, α₀ = {:.4}, b₀ = {:.4}, T₀ = {}, cone threshold {:.3e}",
        init.m, init.s_tilde, init.alpha, init.band, init.iterations, init.threshold
    );
    for seed in 0..5 {
        let mut oracles = build_oracles(&cfg, &OracleSetup::default(), seed)?;
        let out = initialize(&init, &mut oracles, &mut ())?;
        println!(
            "seed {seed}: ⟨w♯,u⟩ = {:.3}, truth in cone: {}, θ(ṽ₀,u) = {:.4}, labels {} + {}",
            out.sharp_alignment, out.truth_feasible, out.angle, out.labels_average, out.labels_refine
        );
    }
    Ok(())
}
