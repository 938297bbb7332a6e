//! The phase loop: initialize, then repeatedly hard threshold, shrink the
//! feasible ball, and refine with halved step size and band width.

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{excess_error, McEstimate};
use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::initialize::{initialize, InitConfig, InitOutcome, InitPrefactors};
use crate::linalg::{angle, hard_threshold, PNormParams, Vector};
use crate::mirror::ProjectionSettings;
use crate::oracles::{
    DistributionKind, GroundTruth, NoiseModel, Oracles, RandomField, SamplingMode, SeedStreams, Stream,
    UnlabeledDistribution,
};
use crate::refine::{refine, RefineConfig};
use crate::trace::TraceSink;

/// Schedules that plan more labels than this are refused as not runnable.
pub const MAX_PLANNED_LABELS: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Functional forms with tuned prefactors.
    #[default]
    Desk,
    /// Literal worst-case constants.
    Paper,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::config(format!("unknown profile `{other}` (expected desk or paper)"))),
        }
    }
}

/// Multipliers on the phase schedule under [`Profile::Desk`]:
/// `α_k = c_α (1−2η) 2^{−k}`, `b_k = c_b (1−2η) 2^{−k}`, `T_k = c_T s ln d / (1−2η)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Prefactors {
    pub c_alpha: f64,
    pub c_band: f64,
    pub c_t: f64,
    pub init: InitPrefactors,
}

impl Default for Prefactors {
    fn default() -> Self {
        Prefactors {
            c_alpha: 0.5,
            c_band: 0.25,
            c_t: 50.0,
            init: InitPrefactors::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub eta: f64,
    pub s: usize,
    pub d: usize,
    /// Disagreement constant: `k₀ = ⌈log₂(1 / (c₁ ε))⌉`.
    pub c1: f64,
    pub profile: Profile,
    pub prefactors: Prefactors,
    pub mode: SamplingMode,
    /// Test points for the excess-error estimate in [`run_seeded`].
    pub eval_points: usize,
    pub projection: ProjectionSettings,
}

impl LearnerConfig {
    pub fn new(d: usize, s: usize, eta: f64, epsilon: f64) -> Self {
        LearnerConfig {
            epsilon,
            delta: 0.05,
            eta,
            s,
            d,
            c1: 0.5,
            profile: Profile::Desk,
            prefactors: Prefactors::default(),
            mode: SamplingMode::Active,
            eval_points: 100_000,
            projection: ProjectionSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::config(format!("target error {} is outside (0, 1)", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(format!("failure probability {} is outside (0, 1)", self.delta)));
        }
        if !(0.0..0.5).contains(&self.eta) {
            return Err(Error::config(format!("noise bound {} is outside [0, 0.5)", self.eta)));
        }
        if self.s < 1 || self.s > self.d {
            return Err(Error::InvalidSparsity { s: self.s, d: self.d });
        }
        if !(self.c1 > 0.0) {
            return Err(Error::config("c1 must be positive"));
        }
        let p = &self.prefactors;
        let i = &p.init;
        let knobs = [p.c_alpha, p.c_band, p.c_t, i.c_m, i.c_s_tilde, i.c_alpha, i.c_band, i.c_t, i.c_hs];
        if knobs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::config("schedule prefactors must be positive and finite"));
        }
        if self.eval_points < 2 {
            return Err(Error::config("eval_points must be at least 2"));
        }
        Ok(())
    }

    /// Number of refinement phases `k₀`.
    pub fn phases(&self) -> usize {
        (1.0 / (self.c1 * self.epsilon)).log2().ceil().max(0.0) as usize
    }

    /// Initialization failure probability `δ' = δ/2`.
    pub fn init_delta(&self) -> f64 {
        self.delta / 2.0
    }

    pub fn init_config(&self) -> Result<InitConfig> {
        let mut cfg = match self.profile {
            Profile::Desk => InitConfig::scaled(self.d, self.s, self.eta, self.init_delta(), &self.prefactors.init)?,
            Profile::Paper => InitConfig::literal(self.d, self.s, self.eta, self.init_delta())?,
        };
        cfg.projection = self.projection;
        Ok(cfg)
    }

    pub fn schedule(&self, k: usize) -> PhaseSchedule {
        let gap = 1.0 - 2.0 * self.eta;
        let kf = k as f64;
        let halving = 2f64.powi(-(k as i32));
        let (alpha, band, iterations) = match self.profile {
            Profile::Desk => {
                let p = &self.prefactors;
                let t = p.c_t * self.s as f64 * (self.d as f64).ln().max(1.0) / (gap * gap);
                (p.c_alpha * gap * halving, p.c_band * gap * halving, t)
            }
            Profile::Paper => {
                let l = (self.d as f64 * kf * kf * 2f64.powi(k as i32) / (self.delta * gap)).ln().max(1.0);
                let t = self.s as f64 * l.powi(3) / (gap * gap);
                (gap * halving / (l * l), gap * halving, t)
            }
        };
        PhaseSchedule {
            k,
            alpha,
            band,
            iterations: (iterations.ceil() as usize).max(1),
            radius: PI / (16.0 * 2f64.powi(k as i32 - 1)),
            delta: self.delta / (2.0 * kf * (kf + 1.0)),
        }
    }

    /// Labels requested by a full active run.
    pub fn planned_labels(&self) -> Result<f64> {
        let init = self.init_config()?.planned_labels();
        Ok(init + (1..=self.phases()).map(|k| self.schedule(k).iterations as f64).sum::<f64>())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub k: usize,
    pub alpha: f64,
    pub band: f64,
    pub iterations: usize,
    /// Radius of the ball around `v_{k−1}`: `π / (16 · 2^{k−1})`.
    pub radius: f64,
    /// Per-phase failure probability `δ / (2k(k+1))`; recorded only.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub schedule: PhaseSchedule,
    pub labels: u64,
    pub ex_calls: u64,
    /// `θ(ṽ_k, u)`
    pub angle: f64,
    /// `θ(v_{k−1}, u)` for the thresholded centre.
    pub center_angle: f64,
    pub truth_in_ball: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Unit output direction; on abort, the last completed direction (if any).
    pub final_w: Option<Vector>,
    pub mode: SamplingMode,
    pub planned_phases: usize,
    pub init: Option<InitOutcome>,
    pub phases: Vec<PhaseReport>,
    pub label_queries: u64,
    pub ex_calls: u64,
    pub excess_error: Option<McEstimate>,
    pub final_angle: Option<f64>,
    pub wall_ms: f64,
}

impl RunReport {
    pub fn labels_init(&self) -> u64 {
        self.init.as_ref().map_or(0, |i| i.labels_average + i.labels_refine)
    }

    pub fn labels_per_phase(&self) -> Vec<u64> {
        self.phases.iter().map(|p| p.labels).collect()
    }

    /// `θ(ṽ₀,u), θ(ṽ₁,u), …`
    pub fn angle_path(&self) -> Vec<f64> {
        self.init.iter().map(|i| i.angle).chain(self.phases.iter().map(|p| p.angle)).collect()
    }
}

/// Labeled-sample count of the induced passive learner.
pub fn passive_sample_count(report: &RunReport) -> Result<u64> {
    match report.mode {
        SamplingMode::Passive => Ok(report.ex_calls),
        SamplingMode::Active => Err(Error::ModeMismatch {
            expected: "passive",
            found: report.mode.name(),
        }),
    }
}

/// Runs initialization and `k₀` refinement phases against `oracles`.
///
/// Any stage error is returned as [`Error::RunAborted`] carrying the report up
/// to the failure. The excess-error field is left empty.
pub fn learn<S: TraceSink + ?Sized>(cfg: &LearnerConfig, oracles: &mut Oracles, sink: &mut S) -> Result<RunReport> {
    cfg.validate()?;
    if oracles.dim() != cfg.d {
        return Err(Error::DimensionMismatch {
            expected: cfg.d,
            got: oracles.dim(),
        });
    }
    if oracles.mode() != cfg.mode {
        return Err(Error::ModeMismatch {
            expected: cfg.mode.name(),
            found: oracles.mode().name(),
        });
    }
    let planned = cfg.planned_labels()?;
    if planned > MAX_PLANNED_LABELS {
        return Err(Error::config(format!(
            "{} profile plans {planned:.3e} labels, above the runnable limit of {MAX_PLANNED_LABELS:.0e}",
            cfg.profile.name()
        )));
    }

    let clock = Instant::now();
    let start = oracles.stats();
    let mut report = RunReport {
        final_w: None,
        mode: cfg.mode,
        planned_phases: cfg.phases(),
        init: None,
        phases: Vec::new(),
        label_queries: 0,
        ex_calls: 0,
        excess_error: None,
        final_angle: None,
        wall_ms: 0.0,
    };

    let outcome = run_phases(cfg, oracles, sink, &mut report);
    let end = oracles.stats();
    report.label_queries = end.label_queries - start.label_queries;
    report.ex_calls = end.ex_calls - start.ex_calls;
    report.final_angle = match &report.final_w {
        Some(w) => Some(angle(w, &oracles.truth().u)?),
        None => None,
    };
    report.wall_ms = clock.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(()) => Ok(report),
        Err(e) => Err(Error::RunAborted {
            source: Box::new(e),
            partial: Box::new(report),
        }),
    }
}

fn run_phases<S: TraceSink + ?Sized>(
    cfg: &LearnerConfig,
    oracles: &mut Oracles,
    sink: &mut S,
    report: &mut RunReport,
) -> Result<()> {
    let init = initialize(&cfg.init_config()?, oracles, sink)?;
    let mut current = init.v0.clone();
    report.final_w = Some(current.clone());
    report.init = Some(init);
    let params = PNormParams::for_dimension(cfg.d);

    for k in 1..=cfg.phases() {
        let schedule = cfg.schedule(k);
        let before = oracles.stats();
        let center = hard_threshold(&current, cfg.s)?;
        let u = &oracles.truth().u;
        let center_angle = angle(&center, u)?;
        let truth_in_ball = center.dist2(u) <= schedule.radius;
        let set = FeasibleSet::phase(&center, schedule.radius)?;
        let rcfg = RefineConfig {
            w1: center.clone(),
            reference: center,
            delta: schedule.delta,
            eta: cfg.eta,
            alpha: schedule.alpha,
            band: schedule.band,
            set,
            iterations: schedule.iterations,
            params,
            max_attempts: None,
            projection: cfg.projection,
        };
        current = refine(&rcfg, oracles, sink)?;
        sink.phase_end(k);
        let after = oracles.stats();
        report.phases.push(PhaseReport {
            schedule,
            labels: after.label_queries - before.label_queries,
            ex_calls: after.ex_calls - before.ex_calls,
            angle: angle(&current, &oracles.truth().u)?,
            center_angle,
            truth_in_ball,
        });
        report.final_w = Some(current.clone());
    }
    Ok(())
}

/// How labels are corrupted; the rate bound comes from the learner's `η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Constant,
    MarginConcentrated { tau: f64 },
    RandomField { cuts: usize },
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Constant
    }
}

impl NoiseSpec {
    pub fn build(&self, eta: f64, dim: usize, streams: &SeedStreams) -> Result<NoiseModel> {
        Ok(match self {
            NoiseSpec::Constant => NoiseModel::Constant { eta },
            NoiseSpec::MarginConcentrated { tau } => NoiseModel::MarginConcentrated { eta, tau: *tau },
            NoiseSpec::RandomField { cuts } => {
                if *cuts > 20 {
                    return Err(Error::config("random field supports at most 20 cuts"));
                }
                NoiseModel::RandomField(RandomField::new(eta, dim, *cuts, &mut streams.rng(Stream::NoiseField)))
            }
        })
    }
}

/// Which synthetic oracles a seeded run uses.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSetup {
    pub distribution: DistributionKind,
    pub noise: NoiseSpec,
}

/// Builds the ground truth and oracles for `seed`.
pub fn build_oracles(cfg: &LearnerConfig, setup: &OracleSetup, seed: u64) -> Result<Oracles> {
    let streams = SeedStreams::new(seed);
    let truth = GroundTruth::random(cfg.d, cfg.s, &mut streams.rng(Stream::Truth))?;
    let noise = setup.noise.build(cfg.eta, cfg.d, &streams)?;
    Oracles::new(
        UnlabeledDistribution::new(setup.distribution, cfg.d),
        truth,
        noise,
        cfg.mode,
        &streams,
    )
}

/// One complete seeded run: oracles, [`learn`], then the excess error of the
/// output on `eval_points` fresh test points.
pub fn run_seeded(cfg: &LearnerConfig, setup: &OracleSetup, seed: u64) -> Result<RunReport> {
    let mut oracles = build_oracles(cfg, setup, seed)?;
    let mut report = learn(cfg, &mut oracles, &mut ())?;
    if let Some(w) = &report.final_w {
        let mut rng = SeedStreams::new(seed).rng(Stream::Evaluation);
        report.excess_error = Some(excess_error(
            w,
            oracles.truth(),
            oracles.noise(),
            oracles.distribution(),
            cfg.eval_points,
            &mut rng,
        )?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_count() {
        let mut cfg = LearnerConfig::new(50, 5, 0.0, 0.05);
        assert_eq!(cfg.phases(), 6);
        cfg.epsilon = 0.9;
        cfg.c1 = 2.0;
        assert_eq!(cfg.phases(), 0);
    }

    #[test]
    fn desk_schedule_values() {
        let cfg = LearnerConfig::new(50, 5, 0.2, 0.1);
        let s = cfg.schedule(2);
        assert!((s.alpha - 0.5 * 0.6 / 4.0).abs() < 1e-15);
        assert!((s.band - 0.25 * 0.6 / 4.0).abs() < 1e-15);
        assert_eq!(s.iterations, (50.0 * 5.0 * 50f64.ln() / 0.36).ceil() as usize);
        assert!((s.radius - PI / 32.0).abs() < 1e-15);
        assert!((s.delta - 0.05 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn paper_profile_is_not_runnable() {
        let mut cfg = LearnerConfig::new(50, 5, 0.2, 0.1);
        cfg.profile = Profile::Paper;
        let mut o = build_oracles(&cfg, &OracleSetup::default(), 1).unwrap();
        assert!(matches!(learn(&cfg, &mut o, &mut ()), Err(Error::InvalidConfig(_))));
        assert_eq!(o.stats().label_queries, 0);
    }

    #[test]
    fn zero_phases_returns_initial_direction() {
        let mut cfg = LearnerConfig::new(10, 2, 0.0, 0.9);
        cfg.c1 = 2.0;
        let report = run_seeded(&cfg, &OracleSetup::default(), 3).unwrap();
        assert!(report.phases.is_empty());
        assert_eq!(report.final_w.as_ref(), Some(&report.init.as_ref().unwrap().v0));
        assert_eq!(report.label_queries, report.labels_init());
    }

    #[test]
    fn passive_count_requires_passive_mode() {
        let mut cfg = LearnerConfig::new(10, 2, 0.0, 0.9);
        cfg.c1 = 2.0;
        let report = run_seeded(&cfg, &OracleSetup::default(), 3).unwrap();
        assert!(matches!(passive_sample_count(&report), Err(Error::ModeMismatch { .. })));
        cfg.mode = SamplingMode::Passive;
        let report = run_seeded(&cfg, &OracleSetup::default(), 3).unwrap();
        assert_eq!(passive_sample_count(&report).unwrap(), report.label_queries);
    }
}
