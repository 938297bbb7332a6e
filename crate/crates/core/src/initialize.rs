//! Initialization: average `y·x` over full-distribution samples, hard
//! threshold to get a coarse direction `w♯`, then run a constrained
//! refinement inside a cone around `w♯`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::linalg::{angle, hard_threshold, normalize, PNormParams, Vector};
use crate::mirror::ProjectionSettings;
use crate::oracles::Oracles;
use crate::refine::{refine, RefineConfig};
use crate::trace::{InitSummary, TraceSink};

/// Unscaled inner-product threshold of the initialization cone, `(1 − 2η) / (9 · 2¹⁹)`.
pub fn cone_threshold(eta: f64) -> f64 {
    (1.0 - 2.0 * eta) / (9.0 * 2f64.powi(19))
}

/// Multipliers on the initialization schedule.
///
/// `m = c_m s ln(8d/δ') / (1−2η)²`, `s̃ = c_s̃ s / (1−2η)²` (capped at `d`),
/// `α = c_α (1−2η)²`, `b = c_b (1−2η)²`, `T = c_T s ln d / (1−2η)⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitPrefactors {
    pub c_m: f64,
    pub c_s_tilde: f64,
    pub c_alpha: f64,
    pub c_band: f64,
    pub c_t: f64,
    /// Multiplier on the cone threshold.
    pub c_hs: f64,
}

impl Default for InitPrefactors {
    fn default() -> Self {
        InitPrefactors {
            c_m: 10.0,
            c_s_tilde: 4.0,
            c_alpha: 0.5,
            c_band: 0.5,
            c_t: 30.0,
            c_hs: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitConfig {
    /// Labeled samples averaged in stage one.
    pub m: usize,
    pub s_tilde: usize,
    pub s: usize,
    pub eta: f64,
    /// The initialization failure probability `δ'`; recorded only.
    pub delta: f64,
    pub alpha: f64,
    pub band: f64,
    pub iterations: usize,
    /// Required inner product with `w♯` for every feasible point.
    pub threshold: f64,
    pub max_attempts: Option<u64>,
    pub projection: ProjectionSettings,
}

fn check_basics(d: usize, s: usize, eta: f64, delta: f64) -> Result<()> {
    if s < 1 || s > d {
        return Err(Error::InvalidSparsity { s, d });
    }
    if !(0.0..0.5).contains(&eta) {
        return Err(Error::config(format!("noise bound {eta} is outside [0, 0.5)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::config(format!("failure probability {delta} is outside (0, 1)")));
    }
    Ok(())
}

impl InitConfig {
    /// Schedule with the tunable prefactors.
    pub fn scaled(d: usize, s: usize, eta: f64, delta: f64, c: &InitPrefactors) -> Result<Self> {
        check_basics(d, s, eta, delta)?;
        let gap = 1.0 - 2.0 * eta;
        let s_f = s as f64;
        let ln_d = (d as f64).ln().max(1.0);
        let m = (c.c_m * s_f * (8.0 * d as f64 / delta).ln() / (gap * gap)).ceil();
        let s_tilde = (c.c_s_tilde * s_f / (gap * gap)).ceil();
        let cfg = InitConfig {
            m: (m as usize).max(1),
            s_tilde: (s_tilde as usize).clamp(1, d),
            s,
            eta,
            delta,
            alpha: c.c_alpha * gap * gap,
            band: c.c_band * gap * gap,
            iterations: ((c.c_t * s_f * ln_d / gap.powi(4)).ceil() as usize).max(1),
            threshold: c.c_hs * cone_threshold(eta),
            max_attempts: None,
            projection: ProjectionSettings::default(),
        };
        cfg.validate(d)?;
        Ok(cfg)
    }

    /// Schedule with the literal worst-case constants. Counts saturate at
    /// `usize::MAX`; use [`InitConfig::planned_labels`] before running.
    pub fn literal(d: usize, s: usize, eta: f64, delta: f64) -> Result<Self> {
        check_basics(d, s, eta, delta)?;
        let gap = 1.0 - 2.0 * eta;
        let s_f = s as f64;
        let l0 = (d as f64 / (delta * gap)).ln().max(1.0);
        let m = 81.0 * 2f64.powi(51) * s_f * (8.0 * d as f64 / delta).ln() / (gap * gap);
        let s_tilde = 81.0 * 2f64.powi(38) * s_f / (gap * gap);
        let cfg = InitConfig {
            m: m.ceil() as usize,
            s_tilde: (s_tilde.ceil() as usize).clamp(1, d),
            s,
            eta,
            delta,
            alpha: gap * gap / (l0 * l0),
            band: gap * gap,
            iterations: ((s_f * l0.powi(3) / gap.powi(4)).ceil() as usize).max(1),
            threshold: cone_threshold(eta),
            max_attempts: None,
            projection: ProjectionSettings::default(),
        };
        cfg.validate(d)?;
        Ok(cfg)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        check_basics(d, self.s, self.eta, self.delta)?;
        if self.m < 1 {
            return Err(Error::config("initialization needs m ≥ 1"));
        }
        if self.s_tilde < 1 || self.s_tilde > d {
            return Err(Error::config(format!("thresholding level {} is outside [1, {d}]", self.s_tilde)));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::config("cone threshold must be positive"));
        }
        Ok(())
    }

    /// Labels the initialization will request: `m + T`.
    pub fn planned_labels(&self) -> f64 {
        self.m as f64 + self.iterations as f64
    }
}

/// `(1/m) Σ y_i x_i` over `m` fresh labeled draws from the full distribution.
pub fn averaging_direction(oracles: &mut Oracles, m: usize) -> Result<Vector> {
    if m < 1 {
        return Err(Error::config("averaging needs m ≥ 1"));
    }
    let mut sum = Vector::zeros(oracles.dim());
    for _ in 0..m {
        let ex = oracles.draw_labeled();
        sum.axpy(ex.y, &ex.x);
    }
    Ok(sum.scaled(1.0 / m as f64))
}

/// `H_s̃(w_avg) / ‖H_s̃(w_avg)‖₂`
pub fn coarse_estimate(w_avg: &[f64], s_tilde: usize) -> Result<Vector> {
    normalize(&hard_threshold(w_avg, s_tilde)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitOutcome {
    /// Unit output direction `ṽ₀`.
    pub v0: Vector,
    pub w_sharp: Vector,
    pub average_norm: f64,
    /// `⟨w♯, u⟩`
    pub sharp_alignment: f64,
    /// Whether `u` satisfies the cone constraint, so lies in the refinement set.
    pub truth_feasible: bool,
    pub labels_average: u64,
    pub labels_refine: u64,
    pub ex_calls: u64,
    /// `θ(ṽ₀, u)`
    pub angle: f64,
}

/// Runs both stages. Consumes exactly `m + T` labels in active mode.
pub fn initialize<S: TraceSink + ?Sized>(cfg: &InitConfig, oracles: &mut Oracles, sink: &mut S) -> Result<InitOutcome> {
    let d = oracles.dim();
    cfg.validate(d)?;
    let start = oracles.stats();

    let w_avg = averaging_direction(oracles, cfg.m)?;
    let w_sharp = coarse_estimate(&w_avg, cfg.s_tilde)?;
    let after_average = oracles.stats();
    let u = &oracles.truth().u;
    let sharp_alignment = w_sharp.dot(u);
    let truth_feasible = sharp_alignment >= cfg.threshold && u.norm1() <= (cfg.s as f64).sqrt() + 1e-12;
    let summary = InitSummary {
        sharp_alignment,
        average_norm: w_avg.norm2(),
        labels: after_average.label_queries - start.label_queries,
    };
    sink.init_summary(&summary);

    let set = FeasibleSet::initialization(&w_sharp, cfg.s, cfg.threshold)?;
    let w1 = set.witness().clone();
    let rcfg = RefineConfig {
        reference: w1.clone(),
        w1,
        delta: cfg.delta / 2.0,
        eta: cfg.eta,
        alpha: cfg.alpha,
        band: cfg.band,
        set,
        iterations: cfg.iterations,
        params: PNormParams::for_dimension(d),
        max_attempts: cfg.max_attempts,
        projection: cfg.projection,
    };
    let v0 = refine(&rcfg, oracles, sink)?;
    sink.phase_end(0);
    let end = oracles.stats();
    let angle = angle(&v0, &oracles.truth().u)?;

    Ok(InitOutcome {
        v0,
        w_sharp,
        average_norm: summary.average_norm,
        sharp_alignment,
        truth_feasible,
        labels_average: summary.labels,
        labels_refine: end.label_queries - after_average.label_queries,
        ex_calls: end.ex_calls - start.ex_calls,
        angle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{GroundTruth, NoiseModel, SamplingMode, SeedStreams, Stream, UnlabeledDistribution};

    fn oracles(d: usize, s: usize, eta: f64, seed: u64) -> Oracles {
        let streams = SeedStreams::new(seed);
        let truth = GroundTruth::random(d, s, &mut streams.rng(Stream::Truth)).unwrap();
        Oracles::new(
            UnlabeledDistribution::gaussian(d),
            truth,
            NoiseModel::Constant { eta },
            SamplingMode::Active,
            &streams,
        )
        .unwrap()
    }

    #[test]
    fn single_sample_average_is_yx() {
        let mut a = oracles(4, 2, 0.1, 9);
        let mut b = oracles(4, 2, 0.1, 9);
        let avg = averaging_direction(&mut a, 1).unwrap();
        let ex = b.draw_labeled();
        assert_eq!(avg, ex.x.scaled(ex.y));
        assert_eq!(a.stats().label_queries, 1);
    }

    #[test]
    fn coarse_estimate_example() {
        let w = coarse_estimate(&[3.0, -1.0, 0.5, 2.0], 2).unwrap();
        let r = 13f64.sqrt();
        assert_eq!(w.as_slice(), &[3.0 / r, 0.0, 0.0, 2.0 / r]);
        assert!(matches!(coarse_estimate(&[0.0; 3], 2), Err(Error::DegenerateVector)));
    }

    #[test]
    fn label_accounting() {
        let mut o = oracles(20, 3, 0.2, 4);
        let mut cfg = InitConfig::scaled(20, 3, 0.2, 0.05, &InitPrefactors::default()).unwrap();
        cfg.m = 200;
        cfg.iterations = 50;
        let out = initialize(&cfg, &mut o, &mut ()).unwrap();
        assert_eq!(o.stats().label_queries, 250);
        assert_eq!(out.labels_average + out.labels_refine, 250);
        assert!(out.v0.dot(&out.w_sharp) >= cfg.threshold - 1e-9);
        assert!((out.v0.norm2() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn literal_schedule_is_huge() {
        let cfg = InitConfig::literal(100, 5, 0.2, 0.05).unwrap();
        assert!(cfg.planned_labels() > 1e18);
        assert_eq!(cfg.s_tilde, 100);
        assert!((cfg.threshold - 0.6 / (9.0 * 524288.0)).abs() < 1e-18);
    }

    #[test]
    fn scaled_schedule_caps_threshold_level() {
        let cfg = InitConfig::scaled(10, 5, 0.4, 0.05, &InitPrefactors::default()).unwrap();
        assert_eq!(cfg.s_tilde, 10);
        let cfg = InitConfig::scaled(1000, 2, 0.0, 0.05, &InitPrefactors::default()).unwrap();
        assert_eq!(cfg.s_tilde, 8);
        assert!(matches!(
            InitConfig::scaled(4, 5, 0.0, 0.05, &InitPrefactors::default()),
            Err(Error::InvalidSparsity { s: 5, d: 4 })
        ));
    }
}
