//! Random instances shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sparse_halfspace::feasible::{AtomicConstraint, FeasibleSet};
use sparse_halfspace::mirror::Regularizer;
use sparse_halfspace::Vector;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vector {
    Vector::new((0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect())
}

pub fn unit(rng: &mut ChaCha8Rng, d: usize) -> Vector {
    let g = gaussian(rng, d, 1.0);
    g.scaled(1.0 / g.norm2())
}

pub fn sparse_unit(rng: &mut ChaCha8Rng, d: usize, s: usize) -> Vector {
    let mut v = vec![0.0; d];
    for _ in 0..s {
        v[rng.random_range(0..d)] = rng.sample(StandardNormal);
    }
    let v = Vector::new(v);
    let n = v.norm2();
    if n == 0.0 {
        Vector::basis(d, 0)
    } else {
        v.scaled(1.0 / n)
    }
}

/// A random constraint set of one of the shapes the learner builds, together
/// with the regularizer centre it is used with.
pub fn random_instance(rng: &mut ChaCha8Rng, d: usize) -> (FeasibleSet, Vector) {
    match rng.random_range(0..3) {
        0 => {
            let v = sparse_unit(rng, d, 3.min(d)).scaled(rng.random_range(0.7..1.0));
            let radius = rng.random_range(0.01..0.4);
            (FeasibleSet::phase(&v, radius).unwrap(), v)
        }
        1 => {
            let sharp = unit(rng, d);
            let s = rng.random_range(1..=d.min(5));
            let c = 10f64.powf(rng.random_range(-7.0..-3.0));
            let set = FeasibleSet::initialization(&sharp, s, c).unwrap();
            let w1 = set.witness().clone();
            (set, w1)
        }
        _ => {
            let v = Vector::zeros(d);
            let set = FeasibleSet::new(
                d,
                vec![
                    AtomicConstraint::L2Ball {
                        center: Vector::zeros(d),
                        radius: 1.0,
                    },
                    AtomicConstraint::L1Ball {
                        radius: rng.random_range(0.5..2.0),
                    },
                ],
                Vector::zeros(d),
            )
            .unwrap();
            (set, v)
        }
    }
}

/// `‖w − P_K(w − ∇F(w))‖₂` for `F = Φ − ⟨θ, ·⟩`, using Euclidean projections.
pub fn stationarity_residual(reg: &Regularizer, set: &FeasibleSet, theta: &[f64], w: &[f64]) -> f64 {
    let grad = reg.grad(w).sub(theta);
    let step = Vector::from(w).sub(&grad);
    let projected = set.project_euclidean(&step, 1e-11, 1_000_000).unwrap();
    projected.dist2(w)
}

