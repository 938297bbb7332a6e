//! Convex constraint sets built as intersections of a few atomic constraints,
//! with membership tests and Euclidean projection (Dykstra's algorithm).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Vector};

pub const DEFAULT_PROJECTION_TOL: f64 = 1e-10;
pub const DEFAULT_PROJECTION_MAX_ITER: usize = 10_000;

/// One closed convex constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AtomicConstraint {
    /// `‖w − center‖₂ ≤ radius`
    L2Ball { center: Vector, radius: f64 },
    /// `‖w‖₁ ≤ radius`
    L1Ball { radius: f64 },
    /// `⟨normal, w⟩ ≥ offset`, with a unit normal.
    Halfspace { normal: Vector, offset: f64 },
}

impl AtomicConstraint {
    /// Amount by which `w` violates the constraint (zero when satisfied).
    pub fn violation(&self, w: &[f64]) -> f64 {
        match self {
            AtomicConstraint::L2Ball { center, radius } => {
                (center.dist2(w) - radius).max(0.0)
            }
            AtomicConstraint::L1Ball { radius } => {
                (w.iter().map(|x| x.abs()).sum::<f64>() - radius).max(0.0)
            }
            AtomicConstraint::Halfspace { normal, offset } => (offset - dot(normal, w)).max(0.0),
        }
    }

    /// Euclidean projection of `w` onto this constraint, in place.
    pub fn project_in_place(&self, w: &mut [f64]) {
        match self {
            AtomicConstraint::L2Ball { center, radius } => {
                let dist = center.dist2(w);
                if dist > *radius {
                    let scale = radius / dist;
                    for (wi, ci) in w.iter_mut().zip(center.iter()) {
                        *wi = ci + scale * (*wi - ci);
                    }
                }
            }
            AtomicConstraint::L1Ball { radius } => project_l1_ball(w, *radius),
            AtomicConstraint::Halfspace { normal, offset } => {
                let gap = offset - dot(normal, w);
                if gap > 0.0 {
                    for (wi, ni) in w.iter_mut().zip(normal.iter()) {
                        *wi += gap * ni;
                    }
                }
            }
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        let check_dim = |v: &Vector| {
            if v.dim() != d {
                Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.dim(),
                })
            } else {
                Ok(())
            }
        };
        match self {
            AtomicConstraint::L2Ball { center, radius } => {
                check_dim(center)?;
                if !(*radius > 0.0) {
                    return Err(Error::config("ball radius must be positive"));
                }
            }
            AtomicConstraint::L1Ball { radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::config("l1 radius must be positive"));
                }
            }
            AtomicConstraint::Halfspace { normal, offset } => {
                check_dim(normal)?;
                if (normal.norm2() - 1.0).abs() > 1e-9 || !offset.is_finite() {
                    return Err(Error::config("halfspace normal must be a unit vector"));
                }
            }
        }
        Ok(())
    }
}

/// Sort-based projection onto `{‖w‖₁ ≤ radius}`.
fn project_l1_ball(w: &mut [f64], radius: f64) {
    let l1: f64 = w.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return;
    }
    let mut mags: Vec<f64> = w.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, m) in mags.iter().enumerate() {
        cumsum += m;
        let t = (cumsum - radius) / (i + 1) as f64;
        if *m > t {
            theta = t;
        } else {
            break;
        }
    }
    for x in w.iter_mut() {
        *x = x.signum() * (x.abs() - theta).max(0.0);
    }
}

/// Intersection of atomic constraints in `ℝ^d`. An empty list is all of `ℝ^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    dim: usize,
    constraints: Vec<AtomicConstraint>,
    witness: Vector,
}

impl FeasibleSet {
    /// Builds the intersection, checking that `witness` lies inside it.
    pub fn new(dim: usize, constraints: Vec<AtomicConstraint>, witness: Vector) -> Result<Self> {
        for c in &constraints {
            c.validate(dim)?;
        }
        if witness.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: witness.dim(),
            });
        }
        let set = FeasibleSet {
            dim,
            constraints,
            witness,
        };
        if !set.contains(&set.witness, 1e-12) {
            return Err(Error::InfeasibleSet);
        }
        Ok(set)
    }

    pub fn whole_space(dim: usize) -> Self {
        FeasibleSet {
            dim,
            constraints: Vec::new(),
            witness: Vector::zeros(dim),
        }
    }

    /// `{‖w‖₂ ≤ radius}`.
    pub fn l2_ball(center: Vector, radius: f64) -> Result<Self> {
        let dim = center.dim();
        let witness = center.clone();
        FeasibleSet::new(
            dim,
            vec![AtomicConstraint::L2Ball { center, radius }],
            witness,
        )
    }

    /// Phase constraint set `{‖w − v‖₂ ≤ radius} ∩ {‖w‖₂ ≤ 1}`; `v` is the witness.
    pub fn phase(v: &Vector, radius: f64) -> Result<Self> {
        let dim = v.dim();
        FeasibleSet::new(
            dim,
            vec![
                AtomicConstraint::L2Ball {
                    center: v.clone(),
                    radius,
                },
                AtomicConstraint::L2Ball {
                    center: Vector::zeros(dim),
                    radius: 1.0,
                },
            ],
            v.clone(),
        )
    }

    /// Initialization set `{‖w‖₂ ≤ 1} ∩ {‖w‖₁ ≤ √s} ∩ {⟨w, w♯⟩ ≥ threshold}`
    /// for a unit `w_sharp`. The witness is `threshold · w♯`.
    pub fn initialization(w_sharp: &Vector, s: usize, threshold: f64) -> Result<Self> {
        let dim = w_sharp.dim();
        let witness = w_sharp.scaled(threshold);
        FeasibleSet::new(
            dim,
            vec![
                AtomicConstraint::L2Ball {
                    center: Vector::zeros(dim),
                    radius: 1.0,
                },
                AtomicConstraint::L1Ball {
                    radius: (s as f64).sqrt(),
                },
                AtomicConstraint::Halfspace {
                    normal: w_sharp.clone(),
                    offset: threshold,
                },
            ],
            witness,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[AtomicConstraint] {
        &self.constraints
    }

    /// A point known to lie in the set.
    pub fn witness(&self) -> &Vector {
        &self.witness
    }

    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        self.constraints.iter().all(|c| c.violation(w) <= tol)
    }

    pub fn max_violation(&self, w: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.violation(w))
            .fold(0.0, f64::max)
    }

    /// Euclidean projection of `z` onto the intersection.
    ///
    /// Runs Dykstra's cyclic projections until a full sweep moves the iterate
    /// by at most `tol` and the result satisfies every constraint within `tol`.
    pub fn project_euclidean(&self, z: &[f64], tol: f64, max_iter: usize) -> Result<Vector> {
        let mut x = Vector::from(z);
        self.project_into(&mut x, tol, max_iter)?;
        Ok(x)
    }

    /// In-place variant of [`FeasibleSet::project_euclidean`].
    pub fn project_into(&self, x: &mut Vector, tol: f64, max_iter: usize) -> Result<()> {
        match self.constraints.len() {
            0 => return Ok(()),
            1 => {
                self.constraints[0].project_in_place(x);
                return Ok(());
            }
            _ => {}
        }
        if self.contains(x, 0.0) {
            return Ok(());
        }
        let d = self.dim;
        let m = self.constraints.len();
        let mut increments = vec![vec![0.0; d]; m];
        let mut y = vec![0.0; d];
        let mut last_change = f64::INFINITY;
        for _ in 0..max_iter {
            let mut change_sq = 0.0;
            for (c, inc) in self.constraints.iter().zip(increments.iter_mut()) {
                for j in 0..d {
                    y[j] = x[j] + inc[j];
                }
                c.project_in_place(&mut y);
                for j in 0..d {
                    inc[j] = x[j] + inc[j] - y[j];
                    let delta = y[j] - x[j];
                    change_sq += delta * delta;
                    x[j] = y[j];
                }
            }
            last_change = change_sq.sqrt();
            if last_change <= tol && self.max_violation(x) <= tol {
                return Ok(());
            }
        }
        Err(Error::ProjectionNotConverged {
            best: x.clone(),
            iterations: max_iter,
            residual: last_change.max(self.max_violation(x)),
        })
    }
}
