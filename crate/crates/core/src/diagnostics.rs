//! Monte Carlo measurement tools: disagreement and excess error of a learned
//! halfspace, streaming mean/variance, and the lemma panel in [`panel`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Vector};
use crate::oracles::{sign, GroundTruth, NoiseModel, UnlabeledDistribution};

pub mod panel;

pub use panel::{check_lemma_panel, LemmaCheck, LemmaPanelReport, PanelSizes};

/// Sample mean with its standard error `sd / √n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

impl McEstimate {
    /// `mean ± z · stderr`
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.mean - z * self.stderr, self.mean + z * self.stderr)
    }
}

/// Welford's streaming mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (zero for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn estimate(&self) -> McEstimate {
        let stderr = if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        };
        McEstimate {
            mean: self.mean,
            stderr,
            n: self.n,
        }
    }
}

fn check_inputs(w: &[f64], u: &[f64], n: usize) -> Result<()> {
    if !(norm2(w) > 0.0) || !(norm2(u) > 0.0) {
        return Err(Error::DegenerateVector);
    }
    if w.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: w.len(),
        });
    }
    if n < 2 {
        return Err(Error::config("Monte Carlo estimates need n ≥ 2"));
    }
    Ok(())
}

/// `P_{x ~ D_X}(sign⟨w, x⟩ ≠ sign⟨u, x⟩)`
pub fn disagreement<R: Rng + ?Sized>(
    w: &[f64],
    u: &[f64],
    dist: &UnlabeledDistribution,
    n: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    check_inputs(w, u, n)?;
    let mut acc = Welford::default();
    let mut x = Vector::zeros(dist.dim);
    for _ in 0..n {
        dist.sample_into(rng, &mut x);
        let differs = sign(dot(w, &x)) != sign(dot(u, &x));
        acc.push(if differs { 1.0 } else { 0.0 });
    }
    Ok(acc.estimate())
}

/// `err(h_w) − err(h_u)` estimated on shared draws of `x`.
///
/// For each `x` the conditional error difference is exact given the flip
/// probability: `1{h_w(x) ≠ h_u(x)} · (1 − 2 η(x))`.
pub fn excess_error<R: Rng + ?Sized>(
    w: &[f64],
    truth: &GroundTruth,
    noise: &NoiseModel,
    dist: &UnlabeledDistribution,
    n: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    check_inputs(w, &truth.u, n)?;
    let mut acc = Welford::default();
    let mut x = Vector::zeros(dist.dim);
    for _ in 0..n {
        dist.sample_into(rng, &mut x);
        let value = if sign(dot(w, &x)) != truth.clean_label(&x) {
            1.0 - 2.0 * noise.flip_probability(&x, truth)
        } else {
            0.0
        };
        acc.push(value);
    }
    Ok(acc.estimate())
}

/// Median of a slice (mean of the middle pair for even length); `NaN` if empty.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile; `NaN` if empty.
pub fn quantile(values: &[f64], level: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = level.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}
