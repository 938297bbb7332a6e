//! A complete run: initialization followed by the refinement phases, with
//! per-phase labels and angles and the excess error of the output.
//!
//! `cargo run --release --example learn -- [d] [s] [eta] [epsilon] [seed]`

use sparse_halfspace::{run_seeded, LearnerConfig, OracleSetup};

fn main() -> sparse_halfspace::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let cfg = LearnerConfig::new(
        arg(0, "200").parse().expect("d"),
        arg(1, "5").parse().expect("s"),
        arg(2, "0.2").parse().expect("eta"),
        arg(3, "0.05").parse().expect("epsilon"),
    );
    let seed: u64 = arg(4, "0").parse().expect("seed");
    println!("planned labels: {:.0}", cfg.planned_labels()?);

    let report = run_seeded(&cfg, &OracleSetup::default(), seed)?;
    if let Some(init) = &report.init {
        println!("init      labels {:>7}  angle {:.4}", init.labels_average + init.labels_refine, init.angle);
    }
    for p in &report.phases {
        println!(
            "phase {:>2}  labels {:>7}  angle {:.4}  (radius {:.4}, truth in ball: {})",
            p.schedule.k, p.labels, p.angle, p.schedule.radius, p.truth_in_ball
        );
    }
    let excess = report.excess_error.expect("evaluated");
    println!(
        "total labels {}, unlabeled draws {}, excess error {:.5} ± {:.5}, {:.0} ms",
        report.label_queries, report.ex_calls, excess.mean, excess.stderr, report.wall_ms
    );
    Ok(())
}
