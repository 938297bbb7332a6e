//! Online mirror descent with the p-norm regularizer `Φ_v(w) = ‖w − v‖_p² / (2(p−1))`.
//!
//! Each step maps the iterate to the dual space, takes a linear step there,
//! maps back with the inverse link, and then Bregman-projects onto the
//! constraint set. The projection solver lives in [`projection`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::linalg::{dot, norm_p, normalize, pnorm_grad, pnorm_grad_inverse, PNormParams, Vector};

/// Below this `‖w − v‖_p` the regularizer gradient is taken to be exactly zero.
const LINK_GUARD: f64 = 1e-14;

mod projection;

use projection::Projector;

/// `Φ_v` for a reference point `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regularizer {
    pub reference: Vector,
    pub params: PNormParams,
}

impl Regularizer {
    pub fn new(reference: Vector, params: PNormParams) -> Self {
        Regularizer { reference, params }
    }

    /// Regularizer centred at `v` with the exponents chosen from its dimension.
    pub fn for_reference(reference: Vector) -> Self {
        let params = PNormParams::for_dimension(reference.dim());
        Regularizer { reference, params }
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        let diff = Vector::from(w).sub(&self.reference);
        let n = norm_p(&diff, self.params.p);
        n * n / (2.0 * (self.params.p - 1.0))
    }

    /// `∇Φ_v(w)`
    pub fn grad(&self, w: &[f64]) -> Vector {
        let diff = Vector::from(w).sub(&self.reference);
        if norm_p(&diff, self.params.p) < LINK_GUARD {
            return Vector::zeros(w.len());
        }
        pnorm_grad(&diff, self.params)
    }

    /// `∇Φ_v^{-1}(θ)`
    pub fn grad_inverse(&self, theta: &[f64]) -> Vector {
        pnorm_grad_inverse(theta, self.params).add(&self.reference)
    }
}

/// Bregman divergence `D_Φ(w, w′) = Φ(w) − Φ(w′) − ⟨∇Φ(w′), w − w′⟩`.
pub fn bregman(reg: &Regularizer, w: &[f64], w_prime: &[f64]) -> f64 {
    let g = reg.grad(w_prime);
    let diff = Vector::from(w).sub(w_prime);
    (reg.value(w) - reg.value(w_prime) - g.dot(&diff)).max(0.0)
}

/// Stopping rules for the Bregman projection solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionSettings {
    /// Bound on each constraint's violation, and on the slack of every
    /// constraint carrying a positive multiplier.
    pub tol: f64,
    /// Sweeps over the constraints before giving up.
    pub max_cycles: usize,
}

impl Default for ProjectionSettings {
    fn default() -> Self {
        ProjectionSettings {
            tol: 1e-10,
            max_cycles: 500,
        }
    }
}

/// `argmin_{w ∈ K} D_Φ(w, z)`.
pub fn bregman_project(
    reg: &Regularizer,
    set: &FeasibleSet,
    z: &[f64],
    settings: &ProjectionSettings,
) -> Result<Vector> {
    if set.contains(z, 0.0) {
        return Ok(Vector::from(z));
    }
    let theta = reg.grad(z);
    let mut projector = Projector::new(z.len());
    let mut multipliers = Vec::new();
    projector.project(
        reg.params,
        &reg.reference,
        set.constraints(),
        &theta,
        settings.tol,
        settings.max_cycles,
        &mut multipliers,
    )
}

/// State of one online mirror descent run.
#[derive(Debug, Clone)]
pub struct OmdState {
    pub iterate: Vector,
    pub step: f64,
    pub set: FeasibleSet,
    pub reg: Regularizer,
    pub t: usize,
    pub projection: ProjectionSettings,
    multipliers: Vec<f64>,
    projector: Projector,
}

impl OmdState {
    pub fn new(w1: Vector, step: f64, set: FeasibleSet, reg: Regularizer) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::config("step size must be positive"));
        }
        if !set.contains(&w1, 1e-8) {
            return Err(Error::InfeasibleSet);
        }
        let d = w1.dim();
        Ok(OmdState {
            iterate: w1,
            step,
            set,
            reg,
            t: 1,
            projection: ProjectionSettings::default(),
            multipliers: Vec::new(),
            projector: Projector::new(d),
        })
    }

    /// Dual-space step `z = ∇Φ^{-1}(∇Φ(w_t) − α g)` followed by the Bregman
    /// projection onto the set.
    pub fn step(&mut self, g: &[f64]) -> Result<()> {
        if g.iter().all(|x| *x == 0.0) {
            self.t += 1;
            return Ok(());
        }
        let mut theta = self.reg.grad(&self.iterate);
        theta.axpy(-self.step, g);
        let z = self.reg.grad_inverse(&theta);
        let next = if self.set.contains(&z, 0.0) {
            z
        } else {
            self.projector.project(
                self.reg.params,
                &self.reg.reference,
                self.set.constraints(),
                &theta,
                self.projection.tol,
                self.projection.max_cycles,
                &mut self.multipliers,
            )?
        };
        self.iterate = next;
        self.t += 1;
        Ok(())
    }
}

/// Functional form of [`OmdState::step`].
pub fn omd_step(mut state: OmdState, g: &[f64]) -> Result<OmdState> {
    state.step(g)?;
    Ok(state)
}

/// Running sum of normalized iterates for the online-to-batch conversion.
#[derive(Debug, Clone)]
pub struct BatchAverager {
    sum: Vector,
    count: usize,
}

impl BatchAverager {
    pub fn new(d: usize) -> Self {
        BatchAverager {
            sum: Vector::zeros(d),
            count: 0,
        }
    }

    /// Adds `ŵ` for a nonzero `w`.
    pub fn push(&mut self, w: &[f64]) -> Result<()> {
        let unit = normalize(w)?;
        self.sum.axpy(1.0, &unit);
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Normalized average of the pushed unit vectors.
    pub fn finish(&self) -> Result<Vector> {
        if self.count == 0 {
            return Err(Error::DegenerateVector);
        }
        normalize(&self.sum.scaled(1.0 / self.count as f64))
    }
}

/// `normalize(mean_t ŵ_t)`
pub fn online_to_batch(iterates: &[Vector]) -> Result<Vector> {
    let d = iterates.first().ok_or(Error::DegenerateVector)?.dim();
    let mut avg = BatchAverager::new(d);
    for w in iterates {
        avg.push(w)?;
    }
    avg.finish()
}

/// Cumulative linear-loss bookkeeping for regret against a fixed comparator.
#[derive(Debug, Clone)]
pub struct RegretTracker {
    learner_loss: f64,
    gradient_sum: Vector,
    dual_norm_sq_sum: f64,
    q: f64,
}

impl RegretTracker {
    pub fn new(d: usize, params: PNormParams) -> Self {
        RegretTracker {
            learner_loss: 0.0,
            gradient_sum: Vector::zeros(d),
            dual_norm_sq_sum: 0.0,
            q: params.q,
        }
    }

    /// Records the loss `⟨g_t, w_t⟩` suffered by the iterate played at round t.
    pub fn record(&mut self, w: &[f64], g: &[f64]) {
        self.learner_loss += dot(g, w);
        self.gradient_sum.axpy(1.0, g);
        let gq = norm_p(g, self.q);
        self.dual_norm_sq_sum += gq * gq;
    }

    /// `Σ_t ⟨g_t, w_t − u⟩`
    pub fn regret(&self, u: &[f64]) -> f64 {
        self.learner_loss - self.gradient_sum.dot(u)
    }

    pub fn gradient_sum(&self) -> &Vector {
        &self.gradient_sum
    }

    /// `Σ_t ‖g_t‖_q²`
    pub fn dual_norm_sq_sum(&self) -> f64 {
        self.dual_norm_sq_sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_ball(d: usize) -> FeasibleSet {
        FeasibleSet::l2_ball(Vector::zeros(d), 1.0).unwrap()
    }

    #[test]
    fn bregman_examples() {
        let reg = Regularizer::for_reference(Vector::new(vec![0.1, -0.2, 0.3]));
        let w = [0.5, 0.5, -1.0];
        assert_eq!(bregman(&reg, &w, &w), 0.0);

        let quad = Regularizer::new(Vector::zeros(3), PNormParams::euclidean());
        let w2 = [1.0, 2.0, -0.5];
        let expected = 0.5 * (0.5f64.powi(2) + 1.5f64.powi(2) + 0.5f64.powi(2));
        assert!((bregman(&quad, &w, &w2) - expected).abs() < 1e-12);

        let diff = Vector::from(&w[..]).sub(&w2);
        let pn = diff.norm_p(reg.params.p);
        assert!(bregman(&reg, &w, &w2) >= 0.5 * pn * pn);
    }

    #[test]
    fn zero_gradient_leaves_iterate() {
        let v = Vector::new(vec![0.6, 0.8, 0.0]);
        let set = FeasibleSet::phase(&v, 0.1).unwrap();
        let state = OmdState::new(v.clone(), 0.3, set, Regularizer::for_reference(v.clone())).unwrap();
        let next = omd_step(state, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(next.iterate, v);
        assert_eq!(next.t, 2);
    }

    #[test]
    fn euclidean_unconstrained_is_gradient_step() {
        let w1 = Vector::new(vec![0.5, -1.0]);
        let reg = Regularizer::new(Vector::zeros(2), PNormParams::euclidean());
        let state = OmdState::new(w1, 0.25, FeasibleSet::whole_space(2), reg).unwrap();
        let next = omd_step(state, &[2.0, 4.0]).unwrap();
        assert!((next.iterate[0] - 0.0).abs() < 1e-15);
        assert!((next.iterate[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn euclidean_ball_step_matches_radial_projection() {
        let e1 = Vector::basis(2, 0);
        let reg = Regularizer::new(Vector::zeros(2), PNormParams::euclidean());
        let state = OmdState::new(e1, 1.0, unit_ball(2), reg).unwrap();
        // z = e1 − (−e1) = (2, 0)
        let next = omd_step(state, &[-1.0, 0.0]).unwrap();
        let oracle = unit_ball(2).project_euclidean(&[2.0, 0.0], 1e-12, 100).unwrap();
        assert!(next.iterate.dist2(&oracle) < 1e-8);
    }

    #[test]
    fn bregman_projection_of_feasible_point_is_identity() {
        let reg = Regularizer::for_reference(Vector::zeros(3));
        let z = [0.2, -0.1, 0.4];
        let p = bregman_project(&reg, &unit_ball(3), &z, &ProjectionSettings::default()).unwrap();
        assert_eq!(p.as_slice(), &z);
    }

    #[test]
    fn quadratic_bregman_projection_is_euclidean() {
        let reg = Regularizer::new(Vector::new(vec![0.3, 0.1, 0.0]), PNormParams::euclidean());
        let set = FeasibleSet::phase(&Vector::new(vec![0.6, 0.8, 0.0]), 0.3).unwrap();
        let z = [1.5, -0.2, 0.7];
        let p = bregman_project(&reg, &set, &z, &ProjectionSettings { tol: 1e-12, max_cycles: 500 }).unwrap();
        let e = set.project_euclidean(&z, 1e-13, 100_000).unwrap();
        assert!(p.dist2(&e) < 1e-8, "{p:?} vs {e:?}");
    }

    #[test]
    fn online_to_batch_examples() {
        let w = normalize(&[1.0, 2.0, 2.0]).unwrap();
        let out = online_to_batch(&[w.clone(), w.scaled(3.0), w.clone()]).unwrap();
        assert!(out.dist2(&w) < 1e-15);
        let out = online_to_batch(&[Vector::basis(2, 0), Vector::basis(2, 1)]).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!(out.dist2(&[r, r]) < 1e-15);
        assert!(matches!(
            online_to_batch(&[Vector::basis(2, 0), Vector::basis(2, 0).scaled(-1.0)]),
            Err(Error::DegenerateVector)
        ));
        assert!(matches!(online_to_batch(&[]), Err(Error::DegenerateVector)));
    }

    #[test]
    fn rejects_infeasible_start() {
        let reg = Regularizer::for_reference(Vector::zeros(2));
        let r = OmdState::new(Vector::new(vec![2.0, 0.0]), 0.1, unit_ball(2), reg);
        assert!(matches!(r, Err(Error::InfeasibleSet)));
    }
}
