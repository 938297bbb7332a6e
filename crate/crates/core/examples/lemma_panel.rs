//! The inequality panel: deterministic checks on random instances and
//! Monte Carlo checks with a 3σ allowance.
//!
//! `cargo run --release --example lemma_panel -- [seed]`

use sparse_halfspace::diagnostics::{check_lemma_panel, PanelSizes};

fn main() {
    let seed: u64 = std::env::args().nth(1).map_or(0, |a| a.parse().expect("seed is an integer"));
    let report = check_lemma_panel(seed, PanelSizes::quick());
    for c in &report.checks {
        println!(
            "{:<32} {:>6} instances  {:>3} violations  margin {:>10.3e}  {}",
            c.name,
            c.instances,
            c.violations,
            c.margin,
            if c.passed { "ok" } else { "FAILED" }
        );
    }
    println!(
        "statistical pass rate {:.3}, deterministic violations {}",
        report.statistical_pass_rate, report.deterministic_violations
    );
}
