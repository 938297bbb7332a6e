//! Optional observers for per-iteration and per-stage records.

use serde::{Deserialize, Serialize};

use crate::linalg::{angle, norm_p};
use crate::oracles::{GroundTruth, LabeledExample};

/// View of one refinement iteration, handed to a [`TraceSink`] before the
/// mirror-descent update is applied.
#[derive(Debug)]
pub struct StepRecord<'a> {
    pub t: usize,
    /// `w_t`
    pub iterate: &'a [f64],
    pub example: &'a LabeledExample,
    /// `g_t`
    pub gradient: &'a [f64],
    /// Dual exponent used for `‖g_t‖_q`.
    pub q: f64,
    pub truth: &'a GroundTruth,
    /// Cumulative label queries after this example was labeled.
    pub labels: u64,
}

impl StepRecord<'_> {
    /// `θ(w_t, u)`; `NaN` if the iterate is zero.
    pub fn angle_to_truth(&self) -> f64 {
        angle(self.iterate, &self.truth.u).unwrap_or(f64::NAN)
    }

    pub fn gradient_dual_norm(&self) -> f64 {
        norm_p(self.gradient, self.q)
    }

    pub fn summary(&self) -> TraceRecord {
        TraceRecord {
            t: self.t,
            angle: self.angle_to_truth(),
            gradient_dual_norm: self.gradient_dual_norm(),
            labels: self.labels,
        }
    }
}

/// Serializable per-iteration record: `(t, θ(w_t, u), ‖g_t‖_q, labels)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub angle: f64,
    pub gradient_dual_norm: f64,
    pub labels: u64,
}

/// Summary of the coarse-estimate stage of initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitSummary {
    /// `⟨w♯, u⟩`
    pub sharp_alignment: f64,
    /// `‖w_avg‖₂`
    pub average_norm: f64,
    pub labels: u64,
}

pub trait TraceSink {
    /// Whether [`TraceSink::step`] should be called at all.
    fn wants_steps(&self) -> bool {
        true
    }

    fn step(&mut self, _record: &StepRecord<'_>) {}

    fn init_summary(&mut self, _summary: &InitSummary) {}

    /// Called when refinement phase `k` finishes (`k = 0` is initialization).
    fn phase_end(&mut self, _k: usize) {}
}

/// Discards everything.
impl TraceSink for () {
    fn wants_steps(&self) -> bool {
        false
    }
}

/// Collects records in memory.
#[derive(Debug, Clone, Default)]
pub struct TraceLog {
    pub steps: Vec<TraceRecord>,
    pub init: Option<InitSummary>,
    /// Index into `steps` at which each phase ended.
    pub phase_ends: Vec<(usize, usize)>,
}

impl TraceSink for TraceLog {
    fn step(&mut self, record: &StepRecord<'_>) {
        self.steps.push(record.summary());
    }

    fn init_summary(&mut self, summary: &InitSummary) {
        self.init = Some(*summary);
    }

    fn phase_end(&mut self, k: usize) {
        self.phase_ends.push((k, self.steps.len()));
    }
}
