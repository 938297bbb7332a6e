//! A config-driven sweep: runs every point and seed of a TOML file, writes
//! `runs.csv` and `summary.json`, and pivots them into a label-complexity table.
//!
//! `cargo run --release --example sweep -- [config.toml]`

use std::path::PathBuf;

use sparse_halfspace::experiment::{emit_label_complexity_table, run_experiment, ExperimentConfig, RunOptions};

fn main() -> sparse_halfspace::Result<()> {
    let path = std::env::args().nth(1).map_or_else(
        || PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/dimension_sweep.toml"),
        PathBuf::from,
    );
    let cfg = ExperimentConfig::load(&path)?;
    let summary = run_experiment(&cfg, RunOptions { jobs: 2, profile: None })?;
    for p in &summary.points {
        println!(
            "d = {:>4}  η = {:.1}  median labels {:>8.0}  median excess error {:.5}",
            p.d, p.eta, p.median_labels_total, p.median_excess_error
        );
    }
    let table = emit_label_complexity_table(&cfg.output_dir)?;
    println!("table written to {}", table.display());
    Ok(())
}
