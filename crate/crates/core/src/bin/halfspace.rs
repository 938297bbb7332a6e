use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sparse_halfspace::diagnostics::{check_lemma_panel, PanelSizes};
use sparse_halfspace::experiment::{emit_label_complexity_table, exit_code, run_experiment, ExperimentConfig, RunOptions};
use sparse_halfspace::{Error, Profile};

#[derive(Parser)]
#[command(name = "halfspace", version, about = "Sparse halfspace active-learning experiments")]
struct Cli {
    /// Schedule profile, overriding the config file.
    #[arg(long, global = true)]
    profile: Option<Profile>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep point and seed in a TOML config.
    Run { config: PathBuf },
    /// Pivot `runs.csv` in a results directory into a label-complexity table.
    Table { dir: PathBuf },
    /// Run the lemma panel and print its JSON report.
    Lemmas {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the small panel sizes.
        #[arg(long)]
        quick: bool,
    },
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = run_experiment(
                &cfg,
                RunOptions {
                    jobs: cli.jobs,
                    profile: cli.profile,
                },
            )?;
            println!("{} runs written to {}", summary.runs, cfg.output_dir.display());
            Ok(true)
        }
        Command::Table { dir } => {
            let path = emit_label_complexity_table(&dir)?;
            println!("{}", path.display());
            Ok(true)
        }
        Command::Lemmas { seed, quick } => {
            let sizes = if quick { PanelSizes::quick() } else { PanelSizes::default() };
            let report = check_lemma_panel(seed, sizes);
            let json = serde_json::to_string_pretty(&report).map_err(|e| Error::DataError(e.to_string()))?;
            println!("{json}");
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
