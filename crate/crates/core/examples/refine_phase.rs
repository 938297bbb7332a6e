//! One refinement phase: start near the truth inside a small ball and watch
//! the angle of the iterates while band-sampled mirror descent runs.
//!
//! `cargo run --example refine_phase -- [eta]`

use sparse_halfspace::feasible::FeasibleSet;
use sparse_halfspace::linalg::{hard_threshold, normalize};
use sparse_halfspace::oracles::{GroundTruth, SeedStreams, Stream, UnlabeledDistribution};
use sparse_halfspace::refine::{refine, RefineConfig};
use sparse_halfspace::trace::TraceLog;
use sparse_halfspace::{linalg::angle, NoiseModel, Oracles, SamplingMode};

fn main() -> sparse_halfspace::Result<()> {
    let eta: f64 = std::env::args().nth(1).map_or(0.2, |a| a.parse().expect("eta is a number"));
    let (d, s) = (100, 5);
    let streams = SeedStreams::new(5);
    let truth = GroundTruth::random(d, s, &mut streams.rng(Stream::Truth))?;

    // Tilt the support entries alternately up and down.
    let mut start = truth.u.clone();
    let support: Vec<usize> = (0..d).filter(|&i| truth.u[i] != 0.0).collect();
    for (k, &i) in support.iter().enumerate() {
        start[i] += if k % 2 == 0 { 0.12 } else { -0.12 };
    }
    let center = normalize(&hard_threshold(&start, s)?)?;
    let u = truth.u.clone();
    println!("start angle {:.4}", angle(&center, &u)?);

    let mut oracles = Oracles::new(
        UnlabeledDistribution::gaussian(d),
        truth,
        NoiseModel::Constant { eta },
        SamplingMode::Active,
        &streams,
    )?;
    let scale = 1.0 - 2.0 * eta;
    let set = FeasibleSet::phase(&center, 0.4)?;
    let cfg = RefineConfig::new(center, set, eta, 0.25 * scale, 0.125 * scale, 3000);
    let mut log = TraceLog::default();
    let out = refine(&cfg, &mut oracles, &mut log)?;

    for rec in log.steps.iter().step_by(500) {
        println!("t = {:>4}: θ(w_t, u) = {:.4}, ‖g_t‖_q = {:.3}", rec.t, rec.angle, rec.gradient_dual_norm);
    }
    let stats = oracles.stats();
    println!(
        "averaged output angle {:.4} after {} labels ({} unlabeled draws)",
        angle(&out, &u)?,
        stats.label_queries,
        stats.ex_calls
    );
    Ok(())
}
