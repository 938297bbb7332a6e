//! Synthetic data: isotropic log-concave unlabeled generators, bounded-noise
//! label oracles, margin-band rejection sampling and query accounting.

use std::fmt;
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, normalize, Vector};

/// `sign(z) = +1` if `z ≥ 0`, else `−1`.
#[inline]
pub fn sign(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Independent RNG streams derived from a single master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Truth = 0,
    Distribution = 1,
    Noise = 2,
    Evaluation = 3,
    NoiseField = 4,
    Diagnostics = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    master: u64,
}

impl SeedStreams {
    pub fn new(master: u64) -> Self {
        SeedStreams { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn rng(&self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(stream as u64);
        rng
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    /// `N(0, I_d)`
    #[default]
    Gaussian,
    /// iid uniform on `[−√3, √3]`
    UniformCube,
    /// iid Laplace with unit variance
    IsotropicLaplace,
}

impl DistributionKind {
    pub const ALL: [DistributionKind; 3] = [
        DistributionKind::Gaussian,
        DistributionKind::UniformCube,
        DistributionKind::IsotropicLaplace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistributionKind::Gaussian => "gaussian",
            DistributionKind::UniformCube => "uniform_cube",
            DistributionKind::IsotropicLaplace => "isotropic_laplace",
        }
    }
}

/// An isotropic log-concave product distribution on `ℝ^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnlabeledDistribution {
    pub kind: DistributionKind,
    pub dim: usize,
}

impl UnlabeledDistribution {
    pub fn new(kind: DistributionKind, dim: usize) -> Self {
        UnlabeledDistribution { kind, dim }
    }

    pub fn gaussian(dim: usize) -> Self {
        UnlabeledDistribution::new(DistributionKind::Gaussian, dim)
    }

    /// Fills `out` with one sample. Does not touch any oracle counter.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match self.kind {
            DistributionKind::Gaussian => {
                for x in out.iter_mut() {
                    *x = rng.sample(StandardNormal);
                }
            }
            DistributionKind::UniformCube => {
                let half = 3f64.sqrt();
                for x in out.iter_mut() {
                    *x = (2.0 * rng.random::<f64>() - 1.0) * half;
                }
            }
            DistributionKind::IsotropicLaplace => {
                let scale = std::f64::consts::FRAC_1_SQRT_2;
                for x in out.iter_mut() {
                    let e: f64 = rng.sample(Exp1);
                    *x = if rng.random::<bool>() { e * scale } else { -e * scale };
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let mut v = Vector::zeros(self.dim);
        self.sample_into(rng, &mut v);
        v
    }
}

/// The target halfspace: an `s`-sparse unit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub u: Vector,
    pub s: usize,
}

impl GroundTruth {
    pub fn new(u: Vector, s: usize) -> Result<Self> {
        if s < 1 || s > u.dim() {
            return Err(Error::InvalidSparsity { s, d: u.dim() });
        }
        if (u.norm2() - 1.0).abs() > 1e-9 {
            return Err(Error::config("ground truth must be a unit vector"));
        }
        if u.l0() > s {
            return Err(Error::config(format!(
                "ground truth has {} nonzeros, more than s = {s}",
                u.l0()
            )));
        }
        Ok(GroundTruth { u, s })
    }

    /// Support chosen uniformly, standard-normal entries, then normalized.
    pub fn random<R: Rng + ?Sized>(d: usize, s: usize, rng: &mut R) -> Result<Self> {
        if s < 1 || s > d {
            return Err(Error::InvalidSparsity { s, d });
        }
        loop {
            let mut u = Vector::zeros(d);
            for i in index::sample(rng, d, s) {
                u[i] = rng.sample(StandardNormal);
            }
            if let Ok(unit) = normalize(&u) {
                return Ok(GroundTruth { u: unit, s });
            }
        }
    }

    /// Noise-free label `sign(⟨u, x⟩)`.
    pub fn clean_label(&self, x: &[f64]) -> f64 {
        sign(dot(&self.u, x))
    }
}

/// A pluggable flip-probability function for custom bounded-noise adversaries.
pub trait FlipFunction: Send + Sync + fmt::Debug {
    fn flip_probability(&self, x: &[f64], truth: &GroundTruth) -> f64;
    /// Upper bound `η` on every value returned by `flip_probability`.
    fn eta_bound(&self) -> f64;
}

/// Piecewise-constant flip rates: the cell of `x` is its sign pattern against a
/// few fixed random directions, and each cell carries an iid rate in `[0, η]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomField {
    eta: f64,
    directions: Vec<Vector>,
    rates: Vec<f64>,
}

impl RandomField {
    pub fn new<R: Rng + ?Sized>(eta: f64, dim: usize, cuts: usize, rng: &mut R) -> Self {
        let directions = (0..cuts)
            .map(|_| {
                let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                normalize(&v).unwrap_or_else(|_| Vector::basis(dim, 0))
            })
            .collect();
        let rates = (0..1usize << cuts).map(|_| eta * rng.random::<f64>()).collect();
        RandomField {
            eta,
            directions,
            rates,
        }
    }

    fn cell(&self, x: &[f64]) -> usize {
        self.directions
            .iter()
            .enumerate()
            .map(|(i, v)| usize::from(dot(v, x) >= 0.0) << i)
            .sum()
    }
}

/// Label noise satisfying `P(y ≠ sign⟨u, x⟩ | x) ≤ η` for every `x`.
#[derive(Debug, Clone)]
pub enum NoiseModel {
    /// Flip with probability `η` everywhere.
    Constant { eta: f64 },
    /// Flip with probability `η` when `|⟨u, x⟩| ≤ τ`, never otherwise.
    MarginConcentrated { eta: f64, tau: f64 },
    RandomField(RandomField),
    Custom(Arc<dyn FlipFunction>),
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel::Constant { eta: 0.0 }
    }

    pub fn eta_bound(&self) -> f64 {
        match self {
            NoiseModel::Constant { eta } | NoiseModel::MarginConcentrated { eta, .. } => *eta,
            NoiseModel::RandomField(f) => f.eta,
            NoiseModel::Custom(f) => f.eta_bound(),
        }
    }

    pub fn flip_probability(&self, x: &[f64], truth: &GroundTruth) -> f64 {
        match self {
            NoiseModel::Constant { eta } => *eta,
            NoiseModel::MarginConcentrated { eta, tau } => {
                if dot(&truth.u, x).abs() <= *tau {
                    *eta
                } else {
                    0.0
                }
            }
            NoiseModel::RandomField(f) => f.rates[f.cell(x)],
            NoiseModel::Custom(f) => f.flip_probability(x, truth),
        }
    }

    fn validate(&self) -> Result<()> {
        let eta = self.eta_bound();
        if !(0.0..0.5).contains(&eta) {
            return Err(Error::config(format!("noise bound {eta} is outside [0, 0.5)")));
        }
        if let NoiseModel::MarginConcentrated { tau, .. } = self {
            if !(*tau >= 0.0) {
                return Err(Error::config("margin width must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// Counters for the unlabeled-example oracle and the label oracle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleStats {
    pub ex_calls: u64,
    pub label_queries: u64,
}

/// Whether rejected band draws are labeled too.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Only points that are actually used get labeled.
    #[default]
    Active,
    /// Every drawn example is labeled, as a supervised learner would.
    Passive,
}

impl SamplingMode {
    pub fn name(self) -> &'static str {
        match self {
            SamplingMode::Active => "active",
            SamplingMode::Passive => "passive",
        }
    }
}

/// A feature vector and its `±1` label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub x: Vector,
    pub y: f64,
}

/// Default cap on rejection-sampling attempts for band width `b`.
pub fn default_max_attempts(b: f64) -> u64 {
    (200.0 / b).ceil() as u64
}

/// The oracle pair `(EX, O)` for one run, with its own RNG streams and counters.
#[derive(Debug, Clone)]
pub struct Oracles {
    dist: UnlabeledDistribution,
    truth: GroundTruth,
    noise: NoiseModel,
    mode: SamplingMode,
    dist_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    stats: OracleStats,
    scratch: Vector,
}

impl Oracles {
    pub fn new(
        dist: UnlabeledDistribution,
        truth: GroundTruth,
        noise: NoiseModel,
        mode: SamplingMode,
        streams: &SeedStreams,
    ) -> Result<Self> {
        if truth.u.dim() != dist.dim {
            return Err(Error::DimensionMismatch {
                expected: dist.dim,
                got: truth.u.dim(),
            });
        }
        noise.validate()?;
        Ok(Oracles {
            dist,
            truth,
            noise,
            mode,
            dist_rng: streams.rng(Stream::Distribution),
            noise_rng: streams.rng(Stream::Noise),
            stats: OracleStats::default(),
            scratch: Vector::zeros(dist.dim),
        })
    }

    pub fn stats(&self) -> OracleStats {
        self.stats
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    pub fn distribution(&self) -> &UnlabeledDistribution {
        &self.dist
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dist.dim
    }

    /// One call to `EX`.
    pub fn draw_unlabeled(&mut self) -> Vector {
        self.stats.ex_calls += 1;
        self.dist.sample(&mut self.dist_rng)
    }

    /// One call to `O`: `sign⟨u, x⟩`, flipped with the model's probability at `x`.
    pub fn query_label(&mut self, x: &[f64]) -> f64 {
        self.stats.label_queries += 1;
        let clean = self.truth.clean_label(x);
        let flip = self.noise.flip_probability(x, &self.truth);
        if flip > 0.0 && self.noise_rng.random::<f64>() < flip {
            -clean
        } else {
            clean
        }
    }

    /// `EX` followed by `O`.
    pub fn draw_labeled(&mut self) -> LabeledExample {
        let x = self.draw_unlabeled();
        let y = self.query_label(&x);
        LabeledExample { x, y }
    }

    /// Rejection-samples `x` with `|⟨ŵ, x⟩| ≤ b` and labels it.
    ///
    /// Every attempt is an `EX` call. In active mode only the accepted point is
    /// labeled; in passive mode every attempt is.
    ///
    /// For the Gaussian in active mode a rejected attempt only needs its
    /// coordinate along `ŵ`, which is itself standard normal, so the
    /// orthogonal part is drawn only on acceptance. The accepted point has the
    /// same law as under full rejection sampling.
    pub fn sample_band(&mut self, w_hat: &[f64], b: f64, max_attempts: u64) -> Result<LabeledExample> {
        if self.dist.kind == DistributionKind::Gaussian && self.mode == SamplingMode::Active {
            return self.sample_gaussian_band(w_hat, b, max_attempts);
        }
        for _ in 0..max_attempts {
            self.stats.ex_calls += 1;
            self.dist.sample_into(&mut self.dist_rng, &mut self.scratch);
            let inside = dot(w_hat, &self.scratch).abs() <= b;
            if inside || self.mode == SamplingMode::Passive {
                let x = std::mem::take(&mut self.scratch);
                let y = self.query_label(&x);
                if inside {
                    self.scratch = Vector::zeros(self.dist.dim);
                    return Ok(LabeledExample { x, y });
                }
                self.scratch = x;
            }
        }
        Err(Error::BandSamplingExhausted {
            attempts: max_attempts,
            band: b,
        })
    }

    fn sample_gaussian_band(&mut self, w_hat: &[f64], b: f64, max_attempts: u64) -> Result<LabeledExample> {
        let unit = normalize(w_hat)?;
        for _ in 0..max_attempts {
            self.stats.ex_calls += 1;
            let z: f64 = self.dist_rng.sample(StandardNormal);
            if z.abs() <= b {
                let mut x = self.dist.sample(&mut self.dist_rng);
                let shift = z - unit.dot(&x);
                x.axpy(shift, &unit);
                let y = self.query_label(&x);
                return Ok(LabeledExample { x, y });
            }
        }
        Err(Error::BandSamplingExhausted {
            attempts: max_attempts,
            band: b,
        })
    }
}
