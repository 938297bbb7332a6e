//! The refinement loop: band sampling around the current iterate, the
//! noise-aware update vector, mirror-descent steps and the online-to-batch
//! output.

use rand::Rng;

use crate::diagnostics::{McEstimate, Welford};
use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::linalg::{dot, normalize, PNormParams, Vector};
use crate::mirror::{BatchAverager, OmdState, ProjectionSettings, Regularizer};
use crate::oracles::{default_max_attempts, sign, GroundTruth, NoiseModel, Oracles, UnlabeledDistribution};
use crate::trace::{StepRecord, TraceSink};

#[derive(Debug, Clone)]
pub struct RefineConfig {
    /// Initial halfspace; must lie in `set`.
    pub w1: Vector,
    /// Failure probability. Recorded only; it does not change the loop.
    pub delta: f64,
    pub eta: f64,
    pub alpha: f64,
    pub band: f64,
    pub set: FeasibleSet,
    pub iterations: usize,
    /// Centre `v` of the regularizer `Φ_v`.
    pub reference: Vector,
    pub params: PNormParams,
    /// Rejection-sampling cap per example; `None` means `⌈200 / b⌉`.
    pub max_attempts: Option<u64>,
    pub projection: ProjectionSettings,
}

impl RefineConfig {
    /// Configuration with `Φ_{w1}` as regularizer and the dimension's `p`.
    pub fn new(w1: Vector, set: FeasibleSet, eta: f64, alpha: f64, band: f64, iterations: usize) -> Self {
        let params = PNormParams::for_dimension(w1.dim());
        RefineConfig {
            reference: w1.clone(),
            w1,
            delta: 0.05,
            eta,
            alpha,
            band,
            set,
            iterations,
            params,
            max_attempts: None,
            projection: ProjectionSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::config("refine step size must be positive"));
        }
        if !(self.band > 0.0) {
            return Err(Error::config("band width must be positive"));
        }
        if self.iterations < 1 {
            return Err(Error::config("refine needs at least one iteration"));
        }
        if !(0.0..0.5).contains(&self.eta) {
            return Err(Error::config("noise bound must be in [0, 0.5)"));
        }
        if self.reference.dim() != self.w1.dim() || self.set.dim() != self.w1.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.w1.dim(),
                got: self.set.dim(),
            });
        }
        if !self.set.contains(&self.w1, 1e-8) {
            return Err(Error::InfeasibleSet);
        }
        Ok(())
    }
}

/// `g = (−½ y + (½ − η) ŷ) x` with `ŷ = sign⟨w, x⟩`.
///
/// Equals `−η y x` when the prediction agrees with the label and
/// `−(1 − η) y x` when it does not.
pub fn noise_aware_gradient(x: &[f64], y: f64, w: &[f64], eta: f64) -> Vector {
    let y_hat = sign(dot(w, x));
    let coef = -0.5 * y + (0.5 - eta) * y_hat;
    Vector::from(x).scaled(coef)
}

/// Runs `T` band-sampled mirror-descent steps and returns the normalized
/// average of the normalized iterates `ŵ_1..ŵ_T`. Consumes exactly `T` labels
/// in active mode.
pub fn refine<S: TraceSink + ?Sized>(cfg: &RefineConfig, oracles: &mut Oracles, sink: &mut S) -> Result<Vector> {
    cfg.validate()?;
    let d = cfg.w1.dim();
    if oracles.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: oracles.dim(),
        });
    }
    let reg = Regularizer::new(cfg.reference.clone(), cfg.params);
    let mut state = OmdState::new(cfg.w1.clone(), cfg.alpha, cfg.set.clone(), reg)?;
    state.projection = cfg.projection;
    let max_attempts = cfg.max_attempts.unwrap_or_else(|| default_max_attempts(cfg.band));
    let mut average = BatchAverager::new(d);

    for t in 1..=cfg.iterations {
        let w_hat = normalize(&state.iterate)?;
        average.push(&w_hat)?;
        let example = oracles.sample_band(&w_hat, cfg.band, max_attempts)?;
        let g = noise_aware_gradient(&example.x, example.y, &state.iterate, cfg.eta);
        if sink.wants_steps() {
            sink.step(&StepRecord {
                t,
                iterate: &state.iterate,
                example: &example,
                gradient: &g,
                q: cfg.params.q,
                truth: oracles.truth(),
                labels: oracles.stats().label_queries,
            });
        }
        state.step(&g)?;
    }
    average.finish()
}

/// Draws one point of `D_X` conditioned on `|⟨ŵ, x⟩| ≤ b`, outside any oracle.
fn band_draw<R: Rng + ?Sized>(
    dist: &UnlabeledDistribution,
    w_hat: &[f64],
    b: f64,
    rng: &mut R,
    buf: &mut Vector,
) -> Result<()> {
    let cap = default_max_attempts(b);
    for _ in 0..cap {
        dist.sample_into(rng, buf);
        if dot(w_hat, buf).abs() <= b {
            return Ok(());
        }
    }
    Err(Error::BandSamplingExhausted { attempts: cap, band: b })
}

/// Monte Carlo estimate of
/// `f_{u,b}(w) = E_{x ~ D_{w,b}}[ |⟨u,x⟩| · 1{sign⟨w,x⟩ ≠ sign⟨u,x⟩} ]`.
pub fn estimate_f_ub<R: Rng + ?Sized>(
    w: &[f64],
    u: &[f64],
    b: f64,
    dist: &UnlabeledDistribution,
    n_mc: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    if n_mc < 1 || !(b > 0.0) {
        return Err(Error::config("f_ub estimate needs n_mc ≥ 1 and b > 0"));
    }
    let w_hat = normalize(w)?;
    let mut acc = Welford::default();
    let mut x = Vector::zeros(dist.dim);
    for _ in 0..n_mc {
        band_draw(dist, &w_hat, b, rng, &mut x)?;
        let ux = dot(u, &x);
        let value = if sign(dot(w, &x)) != sign(ux) { ux.abs() } else { 0.0 };
        acc.push(value);
    }
    Ok(acc.estimate())
}

/// Paired Monte Carlo estimate of `⟨u, −g⟩ − (1 − 2η) |⟨u,x⟩| 1{disagree}` over
/// labeled band samples around `w`; its mean is nonnegative under bounded noise.
pub fn estimate_gradient_gap<R: Rng + ?Sized>(
    w: &[f64],
    truth: &GroundTruth,
    noise: &NoiseModel,
    b: f64,
    dist: &UnlabeledDistribution,
    n_mc: usize,
    rng: &mut R,
) -> Result<(McEstimate, McEstimate)> {
    let eta = noise.eta_bound();
    let w_hat = normalize(w)?;
    let mut gap = Welford::default();
    let mut progress = Welford::default();
    let mut x = Vector::zeros(dist.dim);
    for _ in 0..n_mc {
        band_draw(dist, &w_hat, b, rng, &mut x)?;
        let clean = truth.clean_label(&x);
        let flip = noise.flip_probability(&x, truth);
        let y = if rng.random::<f64>() < flip { -clean } else { clean };
        let g = noise_aware_gradient(&x, y, w, eta);
        let lhs = -dot(&truth.u, &g);
        let ux = dot(&truth.u, &x);
        let f = if sign(dot(w, &x)) != sign(ux) { ux.abs() } else { 0.0 };
        progress.push(lhs);
        gap.push(lhs - (1.0 - 2.0 * eta) * f);
    }
    Ok((progress.estimate(), gap.estimate()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{SamplingMode, SeedStreams, Stream};

    #[test]
    fn gradient_reduces_to_perceptron_without_noise() {
        let x = [1.0, -2.0, 0.5];
        let w = [1.0, 0.0, 0.0];
        // ŷ = +1, y = −1: −y x = x
        assert_eq!(noise_aware_gradient(&x, -1.0, &w, 0.0).as_slice(), &x);
        assert_eq!(noise_aware_gradient(&x, 1.0, &w, 0.0).as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_scaled_by_noise_rate() {
        let x = [1.0, -2.0, 0.5];
        let w = [1.0, 0.0, 0.0];
        let g = noise_aware_gradient(&x, 1.0, &w, 0.4);
        for (gi, xi) in g.iter().zip(x) {
            assert!((gi + 0.4 * xi).abs() < 1e-15);
        }
        let g = noise_aware_gradient(&x, -1.0, &w, 0.4);
        for (gi, xi) in g.iter().zip(x) {
            assert!((gi - 0.6 * xi).abs() < 1e-15);
        }
        // ⟨w, x⟩ = 0 predicts +1.
        let g = noise_aware_gradient(&[0.0, 1.0, 0.0], 1.0, &w, 0.0);
        assert_eq!(g.as_slice(), &[0.0, 0.0, 0.0]);
    }

    fn setup(d: usize, seed: u64, eta: f64) -> Oracles {
        let streams = SeedStreams::new(seed);
        let truth = GroundTruth::random(d, d, &mut streams.rng(Stream::Truth)).unwrap();
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
    fn single_step_without_update_returns_start_direction() {
        let mut oracles = setup(3, 1, 0.0);
        let u = oracles.truth().u.clone();
        let set = FeasibleSet::phase(&u, 0.1).unwrap();
        let cfg = RefineConfig::new(u.clone(), set, 0.0, 0.1, 0.2, 1);
        let out = refine(&cfg, &mut oracles, &mut ()).unwrap();
        // Starting at u the prediction is always right, so g₁ = 0.
        assert!(out.dist2(&u) < 1e-15);
        assert_eq!(oracles.stats().label_queries, 1);
    }

    #[test]
    fn consumes_exactly_t_labels() {
        let mut oracles = setup(5, 2, 0.2);
        let v = normalize(&[1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let set = FeasibleSet::phase(&v, 0.3).unwrap();
        let cfg = RefineConfig::new(v, set, 0.2, 0.05, 0.1, 37);
        let out = refine(&cfg, &mut oracles, &mut ()).unwrap();
        assert_eq!(oracles.stats().label_queries, 37);
        assert!((out.norm2() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f_ub_vanishes_at_truth_and_is_scale_invariant() {
        let dist = UnlabeledDistribution::gaussian(4);
        let u = normalize(&[1.0, 0.0, 2.0, 0.0]).unwrap();
        let mut rng = SeedStreams::new(5).rng(Stream::Diagnostics);
        let est = estimate_f_ub(&u, &u, 0.2, &dist, 500, &mut rng).unwrap();
        assert_eq!(est.mean, 0.0);

        let w = [0.5, 1.0, 0.2, -0.3];
        let a = estimate_f_ub(&w, &u, 0.2, &dist, 2000, &mut SeedStreams::new(6).rng(Stream::Diagnostics)).unwrap();
        let w3: Vec<f64> = w.iter().map(|x| 3.0 * x).collect();
        let b = estimate_f_ub(&w3, &u, 0.2, &dist, 2000, &mut SeedStreams::new(6).rng(Stream::Diagnostics)).unwrap();
        assert_eq!(a, b);
        assert!(a.mean > 0.0);
    }
}
