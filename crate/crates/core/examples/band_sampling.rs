//! Band-conditioned sampling from each generator, with the oracle counters
//! in active and passive mode.
//!
//! `cargo run --example band_sampling`

use sparse_halfspace::oracles::{default_max_attempts, GroundTruth, SeedStreams, Stream, UnlabeledDistribution};
use sparse_halfspace::{DistributionKind, NoiseModel, Oracles, SamplingMode};

fn main() -> sparse_halfspace::Result<()> {
    let (d, b, draws) = (20, 0.1, 2000);
    println!("{:<18} {:<8} {:>9} {:>9} {:>11}", "distribution", "mode", "ex_calls", "labels", "acceptance");
    for kind in DistributionKind::ALL {
        for mode in [SamplingMode::Active, SamplingMode::Passive] {
            let streams = SeedStreams::new(11);
            let truth = GroundTruth::random(d, 4, &mut streams.rng(Stream::Truth))?;
            let w_hat = truth.u.clone();
            let mut oracles = Oracles::new(
                UnlabeledDistribution::new(kind, d),
                truth,
                NoiseModel::Constant { eta: 0.2 },
                mode,
                &streams,
            )?;
            for _ in 0..draws {
                let ex = oracles.sample_band(&w_hat, b, default_max_attempts(b))?;
                debug_assert!(w_hat.dot(&ex.x).abs() <= b);
            }
            let stats = oracles.stats();
            println!(
                "{:<18} {:<8} {:>9} {:>9} {:>11.4}",
                kind.name(),
                mode.name(),
                stats.ex_calls,
                stats.label_queries,
                draws as f64 / stats.ex_calls as f64
            );
        }
    }
    Ok(())
}
