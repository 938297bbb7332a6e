//! The same learner with every drawn example labeled (passive) versus only
//! band points labeled (active), on paired seeds.
//!
//! `cargo run --release --example passive_vs_active`

use sparse_halfspace::learner::passive_sample_count;
use sparse_halfspace::{run_seeded, LearnerConfig, OracleSetup, SamplingMode};

fn main() -> sparse_halfspace::Result<()> {
    let mut cfg = LearnerConfig::new(50, 5, 0.0, 0.05);
    cfg.eval_points = 20_000;
    println!("{:>4} {:>10} {:>10} {:>9} {:>9}", "seed", "active", "passive", "err(a)", "err(p)");
    for seed in 0..3 {
        cfg.mode = SamplingMode::Active;
        let active = run_seeded(&cfg, &OracleSetup::default(), seed)?;
        cfg.mode = SamplingMode::Passive;
        let passive = run_seeded(&cfg, &OracleSetup::default(), seed)?;
        println!(
            "{seed:>4} {:>10} {:>10} {:>9.5} {:>9.5}",
            active.label_queries,
            passive_sample_count(&passive)?,
            active.excess_error.expect("evaluated").mean,
            passive.excess_error.expect("evaluated").mean
        );
    }
    Ok(())
}
