//! Config-driven sweeps: parse a TOML experiment file, run every
//! (sweep point × seed) pair, and write `runs.csv`, `summary.json` and a
//! timing sidecar. [`emit_label_complexity_table`] pivots the CSV afterwards.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{check_lemma_panel, median, quantile, LemmaPanelReport, PanelSizes};
use crate::error::{Error, Result};
use crate::learner::{run_seeded, LearnerConfig, OracleSetup, Prefactors, Profile, RunReport};
use crate::mirror::ProjectionSettings;
use crate::oracles::SamplingMode;

/// First line of every results CSV.
pub const CSV_SCHEMA: &str = "#schema=sparse-halfspace/runs/v1";
pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMINGS_FILE: &str = "timings.log";
pub const TABLE_FILE: &str = "label_complexity.csv";

/// Learner settings shared by every sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerDefaults {
    pub delta: f64,
    pub c1: f64,
    pub mode: SamplingMode,
    pub eval_points: usize,
    pub prefactors: Prefactors,
}

impl Default for LearnerDefaults {
    fn default() -> Self {
        let base = LearnerConfig::new(1, 1, 0.0, 0.1);
        LearnerDefaults {
            delta: base.delta,
            c1: base.c1,
            mode: base.mode,
            eval_points: base.eval_points,
            prefactors: base.prefactors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    pub d: Vec<usize>,
    pub s: Vec<usize>,
    pub eta: Vec<f64>,
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PanelOptions {
    pub enabled: bool,
    pub seed: u64,
    #[serde(flatten)]
    pub sizes: PanelSizes,
}

impl Default for PanelOptions {
    fn default() -> Self {
        PanelOptions {
            enabled: true,
            seed: 0,
            sizes: PanelSizes::quick(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub profile: Profile,
    pub seeds: Vec<u64>,
    /// Relative paths are resolved against the config file's directory.
    pub output_dir: PathBuf,
    /// Fill the `wall_ms` column. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_wall_clock: bool,
    #[serde(default)]
    pub learner: LearnerDefaults,
    #[serde(default)]
    pub oracles: OracleSetup,
    pub sweep: SweepAxes,
    #[serde(default)]
    pub panel: PanelOptions,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if cfg.output_dir.is_relative() {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// Canonical TOML text: every field present, fixed key order.
    pub fn to_canonical(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    /// Learner configurations in sweep order (`d`, then `s`, `η`, `ε`).
    pub fn points(&self) -> Vec<LearnerConfig> {
        let mut out = Vec::new();
        for &d in &self.sweep.d {
            for &s in &self.sweep.s {
                for &eta in &self.sweep.eta {
                    for &epsilon in &self.sweep.epsilon {
                        out.push(LearnerConfig {
                            epsilon,
                            delta: self.learner.delta,
                            eta,
                            s,
                            d,
                            c1: self.learner.c1,
                            profile: self.profile,
                            prefactors: self.learner.prefactors,
                            mode: self.learner.mode,
                            eval_points: self.learner.eval_points,
                            projection: ProjectionSettings::default(),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for point in self.points() {
            point.validate()?;
        }
        if let crate::learner::NoiseSpec::MarginConcentrated { tau } = self.oracles.noise {
            if !(tau >= 0.0) {
                return Err(Error::config("margin width must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// One CSV row per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub seed: u64,
    pub d: usize,
    pub s: usize,
    pub eta: f64,
    pub epsilon: f64,
    pub labels_total: u64,
    pub labels_init: u64,
    /// JSON array of per-phase label counts.
    pub labels_per_phase: String,
    pub ex_calls: u64,
    pub excess_error_mean: f64,
    pub excess_error_stderr: f64,
    pub final_angle: f64,
    pub wall_ms: Option<f64>,
}

impl RunRow {
    pub fn from_report(cfg: &LearnerConfig, seed: u64, report: &RunReport, wall_clock: bool) -> Self {
        let excess = report.excess_error;
        RunRow {
            seed,
            d: cfg.d,
            s: cfg.s,
            eta: cfg.eta,
            epsilon: cfg.epsilon,
            labels_total: report.label_queries,
            labels_init: report.labels_init(),
            labels_per_phase: serde_json::to_string(&report.labels_per_phase()).expect("integers serialize"),
            ex_calls: report.ex_calls,
            excess_error_mean: excess.map_or(f64::NAN, |e| e.mean),
            excess_error_stderr: excess.map_or(f64::NAN, |e| e.stderr),
            final_angle: report.final_angle.unwrap_or(f64::NAN),
            wall_ms: wall_clock.then_some(report.wall_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub d: usize,
    pub s: usize,
    pub eta: f64,
    pub epsilon: f64,
    pub runs: usize,
    pub median_labels_total: f64,
    pub median_ex_calls: f64,
    pub median_excess_error: f64,
    pub median_final_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub schema: String,
    pub profile: Profile,
    pub runs: usize,
    pub points: Vec<PointSummary>,
    pub lemma_panel: Option<LemmaPanelReport>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `0` or `1` runs sequentially.
    pub jobs: usize,
    pub profile: Option<Profile>,
}

fn write_csv(path: &Path, rows: &[RunRow]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "{CSV_SCHEMA}")?;
    let mut writer = csv::Writer::from_writer(file);
    if rows.is_empty() {
        writer
            .write_record([
                "seed",
                "d",
                "s",
                "eta",
                "epsilon",
                "labels_total",
                "labels_init",
                "labels_per_phase",
                "ex_calls",
                "excess_error_mean",
                "excess_error_stderr",
                "final_angle",
                "wall_ms",
            ])
            .map_err(csv_error)?;
    }
    for row in rows {
        writer.serialize(row).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::DataError(format!("{other:?}")),
    }
}

fn summarize(points: &[LearnerConfig], rows: &[RunRow], seeds: usize) -> Vec<PointSummary> {
    points
        .iter()
        .zip(rows.chunks(seeds.max(1)))
        .map(|(p, chunk)| {
            let col = |f: fn(&RunRow) -> f64| median(&chunk.iter().map(f).collect::<Vec<_>>());
            PointSummary {
                d: p.d,
                s: p.s,
                eta: p.eta,
                epsilon: p.epsilon,
                runs: chunk.len(),
                median_labels_total: col(|r| r.labels_total as f64),
                median_ex_calls: col(|r| r.ex_calls as f64),
                median_excess_error: col(|r| r.excess_error_mean),
                median_final_angle: col(|r| r.final_angle),
            }
        })
        .collect()
}

/// Runs every sweep point for every seed and writes the result files.
///
/// Rows appear in sweep order × seed order regardless of `jobs`. If any run
/// fails, the rows of the successful runs are still written and the first
/// failure (in that order) is returned.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentSummary> {
    let mut cfg = cfg.clone();
    if let Some(profile) = opts.profile {
        cfg.profile = profile;
    }
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;

    let points = cfg.points();
    let jobs_list: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|i| cfg.seeds.iter().map(move |&seed| (i, seed)))
        .collect();
    let run_one = |&(i, seed): &(usize, u64)| run_seeded(&points[i], &cfg.oracles, seed);
    let results: Vec<Result<RunReport>> = if opts.jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
        pool.install(|| jobs_list.par_iter().map(run_one).collect())
    } else {
        jobs_list.iter().map(run_one).collect()
    };

    let mut rows = Vec::new();
    let mut timings = String::new();
    let mut first_error = None;
    for (&(i, seed), result) in jobs_list.iter().zip(results) {
        let p = &points[i];
        match result {
            Ok(report) => {
                timings.push_str(&format!(
                    "seed={seed} d={} s={} eta={} epsilon={} wall_ms={:.3}\n",
                    p.d, p.s, p.eta, p.epsilon, report.wall_ms
                ));
                rows.push(RunRow::from_report(p, seed, &report, cfg.record_wall_clock));
            }
            Err(e) => {
                timings.push_str(&format!(
                    "seed={seed} d={} s={} eta={} epsilon={} failed: {e}\n",
                    p.d, p.s, p.eta, p.epsilon
                ));
                first_error.get_or_insert(e);
            }
        }
    }

    write_csv(&cfg.output_dir.join(RUNS_FILE), &rows)?;
    fs::write(cfg.output_dir.join(TIMINGS_FILE), timings)?;
    if let Some(e) = first_error {
        return Err(e);
    }

    let summary = ExperimentSummary {
        schema: CSV_SCHEMA.trim_start_matches("#schema=").to_string(),
        profile: cfg.profile,
        runs: rows.len(),
        points: summarize(&points, &rows, cfg.seeds.len()),
        lemma_panel: cfg.panel.enabled.then(|| check_lemma_panel(cfg.panel.seed, cfg.panel.sizes)),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::DataError(e.to_string()))?;
    fs::write(cfg.output_dir.join(SUMMARY_FILE), json + "\n")?;
    Ok(summary)
}

/// Reads the rows of a results CSV, checking the schema line.
pub fn read_runs(path: &Path) -> Result<Vec<RunRow>> {
    let file = fs::File::open(path).map_err(|e| Error::DataError(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    if first.trim_end() != CSV_SCHEMA {
        return Err(Error::DataError(format!(
            "{} does not start with `{CSV_SCHEMA}`",
            path.display()
        )));
    }
    let mut csv = csv::Reader::from_reader(reader);
    csv.deserialize()
        .map(|row| row.map_err(|e| Error::DataError(format!("{}: {e}", path.display()))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub axis: String,
    pub value: f64,
    pub runs: usize,
    pub median_labels: f64,
    pub iqr_labels: f64,
}

/// Median and interquartile range of `labels_total` per value of each axis.
pub fn label_complexity_table(rows: &[RunRow]) -> Vec<TableRow> {
    let axes: [(&str, fn(&RunRow) -> f64); 4] = [
        ("d", |r| r.d as f64),
        ("s", |r| r.s as f64),
        ("eta", |r| r.eta),
        ("epsilon", |r| r.epsilon),
    ];
    let mut out = Vec::new();
    for (name, key) in axes {
        let mut values: Vec<f64> = rows.iter().map(key).collect();
        values.sort_by(|a, b| a.total_cmp(b));
        values.dedup();
        for v in values {
            let labels: Vec<f64> = rows.iter().filter(|r| key(r) == v).map(|r| r.labels_total as f64).collect();
            out.push(TableRow {
                axis: name.to_string(),
                value: v,
                runs: labels.len(),
                median_labels: median(&labels),
                iqr_labels: quantile(&labels, 0.75) - quantile(&labels, 0.25),
            });
        }
    }
    out
}

/// Writes `label_complexity.csv` next to `runs.csv` in `dir`.
pub fn emit_label_complexity_table(dir: &Path) -> Result<PathBuf> {
    let rows = read_runs(&dir.join(RUNS_FILE))?;
    let table = label_complexity_table(&rows);
    let path = dir.join(TABLE_FILE);
    let mut writer = csv::Writer::from_path(&path).map_err(csv_error)?;
    if table.is_empty() {
        writer
            .write_record(["axis", "value", "runs", "median_labels", "iqr_labels"])
            .map_err(csv_error)?;
    }
    for row in &table {
        writer.serialize(row).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(path)
}

/// Process exit code for an error: `1` for configuration problems, `2` for
/// failures while running or reading results.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) | Error::InvalidSparsity { .. } => 1,
        _ => 2,
    }
}
