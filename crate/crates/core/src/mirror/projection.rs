//! Bregman projection by scalar Lagrange multipliers.
//!
//! With one multiplier per atom the stationarity condition for
//! `min_{w ∈ K} Φ_v(w) − ⟨θ, w⟩` splits across coordinates once the scale
//! `M = ‖η‖_q^{2−q}` of the inverse link is fixed, where `η = ∇Φ_v(w)`:
//!
//! `η_j + N u_j(η_j) + ρ s_j = τ_j`, `u_j(η) = (p−1) M sgn(η) |η|^{q−1}`,
//!
//! with `N` the summed ball multipliers, `ρ` the ℓ1 multiplier and `τ` the
//! dual point shifted by the halfspace normals and ball centres. Each
//! coordinate is a monotone scalar equation, `M` is a monotone fixed point,
//! and the multipliers are found by cyclic one-dimensional root finding on
//! the (concave) dual.

use crate::error::{Error, Result};
use crate::feasible::AtomicConstraint;
use crate::linalg::{norm_p, PNormParams, Vector};

const SCALAR_MAX_ITER: usize = 100;
const SCALE_MAX_ITER: usize = 200;
const ROOT_MAX_ITER: usize = 200;
const WARM_CYCLES: usize = 20;
const SUPPORT_CYCLES: usize = 60;

/// Solves `x + a x^r = y` for `x ≥ 0`, given `y ≥ 0`, `a ≥ 0`, `r > 1`.
///
/// The left side is convex and increasing, so Newton's method started above
/// the root decreases monotonically onto it. `hint` is used as the start when
/// it lies above the root.
fn solve_scalar(a: f64, r: f64, y: f64, hint: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    if a == 0.0 {
        return y;
    }
    let f = |x: f64| x + a * x.powf(r) - y;
    let mut x = if hint > 0.0 && hint < y && f(hint) >= 0.0 {
        hint
    } else {
        y.min((y / a).powf(1.0 / r))
    };
    for _ in 0..SCALAR_MAX_ITER {
        let xr1 = x.powf(r - 1.0);
        let fx = x + a * xr1 * x - y;
        if fx <= 0.0 {
            break;
        }
        let next = x - fx / (1.0 + a * r * xr1);
        if !(next < x) || next <= 0.0 {
            if next <= 0.0 {
                x *= 0.5;
                continue;
            }
            break;
        }
        x = next;
    }
    x
}

/// Odd extension: solves `x + a sgn(x)|x|^r = y` for any real `y`.
fn signed_solve(a: f64, r: f64, y: f64, hint: f64) -> f64 {
    solve_scalar(a, r, y.abs(), hint).copysign(y)
}

/// Which way a one-dimensional root search is bracketed.
struct Bracket {
    lo: f64,
    g_lo: f64,
    hi: f64,
    g_hi: f64,
}

/// Illinois regula falsi on a decreasing function with `g(lo) > 0 > g(hi)`.
fn falsi<F: FnMut(f64) -> f64>(mut b: Bracket, tol: f64, mut g: F) -> Option<(f64, f64)> {
    let mut side = 0i8;
    for _ in 0..ROOT_MAX_ITER {
        let x = (b.lo * (-b.g_hi) + b.hi * b.g_lo) / (b.g_lo - b.g_hi);
        let x = if x > b.lo && x < b.hi { x } else { 0.5 * (b.lo + b.hi) };
        let gx = g(x);
        if gx.abs() <= tol || b.hi - b.lo <= 1e-15 * b.hi.abs().max(1e-300) {
            return Some((x, gx));
        }
        if gx > 0.0 {
            b.lo = x;
            b.g_lo = gx;
            if side == 1 {
                b.g_hi *= 0.5;
            }
            side = 1;
        } else {
            b.hi = x;
            b.g_hi = gx;
            if side == -1 {
                b.g_lo *= 0.5;
            }
            side = -1;
        }
    }
    None
}

/// Workspace for repeated projections in one dimension.
#[derive(Debug, Clone)]
pub(crate) struct Projector {
    tau: Vec<f64>,
    eta: Vec<f64>,
    w: Vec<f64>,
    log_scale: Option<f64>,
}

impl Projector {
    pub(crate) fn new(d: usize) -> Self {
        Projector {
            tau: vec![0.0; d],
            eta: vec![0.0; d],
            w: vec![0.0; d],
            log_scale: None,
        }
    }

    /// Minimiser of `Φ_v(w) − ⟨θ, w⟩` over the intersection of `atoms`.
    ///
    /// `multipliers` is read as a warm start and overwritten with the solution.
    /// Stops when every atom is satisfied within `tol` and every positive
    /// multiplier's constraint is active within `tol`.
    pub(crate) fn project(
        &mut self,
        params: PNormParams,
        reference: &[f64],
        atoms: &[AtomicConstraint],
        theta: &[f64],
        tol: f64,
        max_cycles: usize,
        multipliers: &mut Vec<f64>,
    ) -> Result<Vector> {
        let d = theta.len();
        if self.w.len() != d {
            *self = Projector::new(d);
        }
        let m = atoms.len();
        if multipliers.len() != m || multipliers.iter().any(|x| !(*x >= 0.0)) {
            *multipliers = vec![0.0; m];
        }
        let ctx = Context {
            params,
            reference,
            atoms,
            theta,
        };
        let base = 1e-3 * (1.0 + theta.iter().fold(0.0f64, |a, x| a.max(x.abs())));
        let all: Vec<usize> = (0..m).collect();
        let mut best = (f64::INFINITY, multipliers.clone());
        // Warm start first, then every support of size one and two with the
        // remaining multipliers at zero. Degenerate vertices make the dual flat
        // along some directions and coordinate ascent crawls there, while the
        // right support settles in a handful of roots.
        let mut candidates: Vec<(Vec<usize>, usize)> = Vec::new();
        if multipliers.iter().any(|&l| l > 0.0) {
            candidates.push((all.clone(), WARM_CYCLES));
        }
        candidates.extend((0..m).map(|i| (vec![i], SUPPORT_CYCLES)));
        for i in 0..m {
            for j in i + 1..m {
                candidates.push((vec![i, j], SUPPORT_CYCLES));
            }
        }
        for (support, cycles) in candidates {
            let mut lambda = if support.len() == m { multipliers.clone() } else { vec![0.0; m] };
            let residual = self.run(&ctx, &mut lambda, &support, cycles, tol, base)?;
            if residual <= tol {
                *multipliers = lambda;
                return Ok(Vector::from(&self.w[..]));
            }
            if residual < best.0 {
                best = (residual, lambda);
            }
        }
        let mut lambda = best.1;
        let residual = self.run(&ctx, &mut lambda, &all, max_cycles, tol, base)?;
        *multipliers = lambda;
        if residual <= tol {
            return Ok(Vector::from(&self.w[..]));
        }
        Err(Error::ProjectionNotConverged {
            best: Vector::from(&self.w[..]),
            iterations: max_cycles,
            residual,
        })
    }

    /// Cyclic multiplier roots and joint steps over `support`; the other
    /// multipliers stay fixed. Returns the full KKT residual and leaves
    /// `self.w` at `lambda`.
    fn run(
        &mut self,
        ctx: &Context,
        lambda: &mut [f64],
        support: &[usize],
        cycles: usize,
        tol: f64,
        base: f64,
    ) -> Result<f64> {
        self.evaluate(ctx, lambda);
        let mut residual = kkt_residual(ctx.atoms, lambda, &self.w);
        for _ in 0..cycles {
            if residual <= tol {
                break;
            }
            let mut moved = false;
            for &i in support {
                let g = atom_gap(&ctx.atoms[i], &self.w);
                let settled = if lambda[i] > 0.0 { g.abs() <= tol } else { g <= tol };
                if !settled {
                    self.solve_multiplier(ctx, lambda, i, g, base, 0.25 * tol)?;
                    moved = true;
                }
            }
            residual = kkt_residual(ctx.atoms, lambda, &self.w);
            if residual > tol {
                let before = lambda.to_vec();
                residual = self.joint_step(ctx, lambda, support, residual, base);
                moved |= lambda != &before[..];
            }
            if !moved {
                break;
            }
        }
        Ok(residual)
    }

    /// Sets `lambda[i]` so that atom `i` is active, or zero if it is slack
    /// there. Leaves `self.w` at the accepted multipliers.
    fn solve_multiplier(
        &mut self,
        ctx: &Context,
        lambda: &mut [f64],
        i: usize,
        g_now: f64,
        base: f64,
        tol: f64,
    ) -> Result<()> {
        let atom = &ctx.atoms[i];
        let current = lambda[i];
        let gap_at = |this: &mut Projector, lambda: &mut [f64], x: f64| {
            lambda[i] = x;
            this.evaluate(ctx, lambda);
            atom_gap(atom, &this.w)
        };
        let bracket = if g_now > 0.0 {
            let mut lo = current;
            let mut g_lo = g_now;
            let mut step = current.max(base);
            loop {
                let hi = lo + step;
                let g_hi = gap_at(self, lambda, hi);
                if g_hi <= tol {
                    if g_hi >= -tol {
                        return Ok(());
                    }
                    break Bracket { lo, g_lo, hi, g_hi };
                }
                if !hi.is_finite() {
                    return Err(Error::InfeasibleSet);
                }
                lo = hi;
                g_lo = g_hi;
                step *= 4.0;
            }
        } else {
            let g_zero = gap_at(self, lambda, 0.0);
            if g_zero <= tol {
                return Ok(());
            }
            Bracket {
                lo: 0.0,
                g_lo: g_zero,
                hi: current,
                g_hi: g_now,
            }
        };
        let hi = bracket.hi;
        match falsi(bracket, tol, |x| gap_at(self, lambda, x)) {
            Some(_) => Ok(()),
            None => {
                gap_at(self, lambda, hi);
                Ok(())
            }
        }
    }

    /// Damped projected Newton ascent step on the dual function over the
    /// multipliers that are positive or want to grow, with a finite-difference
    /// Hessian. Coordinate sweeps alone crawl when active constraints have
    /// nearly parallel normals. The step is kept only if the dual value does
    /// not drop and the KKT residual falls; returns the residual at the
    /// multipliers left in place.
    fn joint_step(
        &mut self,
        ctx: &Context,
        lambda: &mut [f64],
        support: &[usize],
        residual: f64,
        base: f64,
    ) -> f64 {
        let grad0: Vec<f64> = ctx.atoms.iter().map(|a| lagrangian_gap(a, &self.w)).collect();
        let free: Vec<usize> = support
            .iter()
            .copied()
            .filter(|&i| lambda[i] > 0.0 || grad0[i] > 0.0)
            .collect();
        let n = free.len();
        if n < 2 {
            return residual;
        }
        let q0 = self.dual_value(ctx, lambda);
        let mut hess = vec![vec![0.0; n]; n];
        let mut trial = lambda.to_vec();
        for (col, &j) in free.iter().enumerate() {
            let h = 1e-7 * lambda[j].max(base);
            trial[j] = lambda[j] + h;
            self.evaluate(ctx, &trial);
            trial[j] = lambda[j];
            for (row, &i) in free.iter().enumerate() {
                hess[row][col] = (lagrangian_gap(&ctx.atoms[i], &self.w) - grad0[i]) / h;
            }
        }
        // Levenberg–Marquardt: (−H + μI) Δ = ∇q on the free block.
        let scale = (0..n).map(|a| hess[a][a].abs()).fold(0.0, f64::max);
        let mut system = vec![vec![0.0; n + 1]; n];
        for a in 0..n {
            for b in 0..n {
                system[a][b] = -0.5 * (hess[a][b] + hess[b][a]);
            }
            system[a][a] += 1e-10 * scale.max(f64::MIN_POSITIVE);
            system[a][n] = grad0[free[a]];
        }
        let Some(delta) = solve_dense(system) else {
            self.evaluate(ctx, lambda);
            return residual;
        };
        let mut t = 1.0;
        for _ in 0..8 {
            for (k, &i) in free.iter().enumerate() {
                trial[i] = (lambda[i] + t * delta[k]).max(0.0);
            }
            self.evaluate(ctx, &trial);
            let r = kkt_residual(ctx.atoms, &trial, &self.w);
            let q = self.dual_value(ctx, &trial);
            if r < residual && q >= q0 - 1e-14 * q0.abs().max(1.0) {
                lambda.copy_from_slice(&trial);
                return r;
            }
            t *= 0.5;
        }
        self.line_search(ctx, lambda, &free, &delta, q0, residual)
    }

    /// Exact ascent along `direction` up to the nonnegativity boundary. The
    /// dual is concave, so its slope along the ray is decreasing. Where `w`
    /// stays put while the multipliers trade off, the dual is affine and the
    /// Newton step is useless, but the slope is still informative.
    fn line_search(
        &mut self,
        ctx: &Context,
        lambda: &mut [f64],
        free: &[usize],
        direction: &[f64],
        q0: f64,
        residual: f64,
    ) -> f64 {
        let mut trial = lambda.to_vec();
        let slope_at = |this: &mut Projector, trial: &mut Vec<f64>, s: f64| {
            for (k, &i) in free.iter().enumerate() {
                trial[i] = (lambda[i] + s * direction[k]).max(0.0);
            }
            this.evaluate(ctx, trial);
            free.iter()
                .zip(direction)
                .map(|(&i, dk)| dk * lagrangian_gap(&ctx.atoms[i], &this.w))
                .sum::<f64>()
        };
        let boundary = free
            .iter()
            .zip(direction)
            .filter(|(_, dk)| **dk < 0.0)
            .map(|(&i, dk)| lambda[i] / -dk)
            .fold(f64::INFINITY, f64::min);
        let d0 = slope_at(self, &mut trial, 0.0);
        let accepted = if !(d0 > 0.0) {
            None
        } else if boundary.is_finite() {
            let d_end = slope_at(self, &mut trial, boundary);
            if d_end >= 0.0 {
                Some(boundary)
            } else {
                let b = Bracket {
                    lo: 0.0,
                    g_lo: d0,
                    hi: boundary,
                    g_hi: d_end,
                };
                falsi(b, 1e-9 * d0, |s| slope_at(self, &mut trial, s)).map(|(s, _)| s)
            }
        } else {
            let mut hi = 1.0;
            let mut found = None;
            for _ in 0..200 {
                let d_hi = slope_at(self, &mut trial, hi);
                if d_hi < 0.0 {
                    let b = Bracket {
                        lo: 0.0,
                        g_lo: d0,
                        hi,
                        g_hi: d_hi,
                    };
                    found = falsi(b, 1e-9 * d0, |s| slope_at(self, &mut trial, s)).map(|(s, _)| s);
                    break;
                }
                hi *= 4.0;
            }
            found
        };
        if let Some(s) = accepted {
            slope_at(self, &mut trial, s);
            if self.dual_value(ctx, &trial) > q0 {
                lambda.copy_from_slice(&trial);
                return kkt_residual(ctx.atoms, lambda, &self.w);
            }
        }
        self.evaluate(ctx, lambda);
        residual
    }

    /// Lagrangian at the current `w`, which minimises it for `lambda`.
    fn dual_value(&self, ctx: &Context, lambda: &[f64]) -> f64 {
        let p = ctx.params.p;
        let u: Vec<f64> = self.w.iter().zip(ctx.reference).map(|(a, b)| a - b).collect();
        let n = norm_p(&u, p);
        let mut value = n * n / (2.0 * (p - 1.0)) - self.w.iter().zip(ctx.theta).map(|(a, b)| a * b).sum::<f64>();
        for (atom, &l) in ctx.atoms.iter().zip(lambda) {
            if l > 0.0 {
                value += l * lagrangian_gap(atom, &self.w);
            }
        }
        value
    }

    /// `w(λ)`: solves the separable stationarity system for fixed multipliers.
    fn evaluate(&mut self, ctx: &Context, lambda: &[f64]) {
        let v = ctx.reference;
        self.tau.copy_from_slice(ctx.theta);
        let mut ball_sum = 0.0;
        let mut rho = 0.0;
        for (atom, &l) in ctx.atoms.iter().zip(lambda) {
            if l == 0.0 {
                continue;
            }
            match atom {
                AtomicConstraint::Halfspace { normal, .. } => {
                    for (t, a) in self.tau.iter_mut().zip(normal.iter()) {
                        *t += l * a;
                    }
                }
                AtomicConstraint::L2Ball { center, .. } => {
                    ball_sum += l;
                    for ((t, vj), cj) in self.tau.iter_mut().zip(v).zip(center.iter()) {
                        *t -= l * (vj - cj);
                    }
                }
                AtomicConstraint::L1Ball { .. } => rho += l,
            }
        }
        let q = ctx.params.q;
        let pm1 = ctx.params.p - 1.0;
        if q == 2.0 {
            // Linear link: the scale is 1 and no fixed point is needed.
            self.fill(ctx, pm1, ball_sum, rho);
            return;
        }
        let mut t = match self.log_scale {
            Some(t) if t.is_finite() => t,
            _ => {
                let n = norm_p(&self.tau, q);
                if n > 0.0 {
                    (2.0 - q) * n.ln()
                } else {
                    0.0
                }
            }
        };
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for _ in 0..SCALE_MAX_ITER {
            let scale = t.exp();
            let (norm, elasticity) = self.fill(ctx, pm1 * scale, ball_sum, rho);
            if norm == 0.0 {
                break;
            }
            let phi = t + (q - 2.0) * norm.ln();
            if phi.abs() <= 1e-14 * t.abs().max(1.0) {
                break;
            }
            if phi > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let slope = 1.0 + (q - 2.0) * elasticity;
            let mut next = t - phi / slope.max(1.0 / (q - 1.0));
            if !(next > lo && next < hi) {
                next = if lo.is_finite() && hi.is_finite() {
                    0.5 * (lo + hi)
                } else {
                    t - (q - 1.0) * phi
                };
            }
            if (next - t).abs() <= 1e-15 * t.abs().max(1.0) {
                break;
            }
            t = next;
        }
        self.log_scale = Some(t);
    }

    /// Per-coordinate solve for link factor `k = (p−1) M`. Returns `‖η‖_q`
    /// and the elasticity `d ln‖η‖_q / d ln M`.
    fn fill(&mut self, ctx: &Context, k: f64, ball_sum: f64, rho: f64) -> (f64, f64) {
        let q = ctx.params.q;
        let r = q - 1.0;
        let a = ball_sum * k;
        let v = ctx.reference;
        let mut big = 0.0f64;
        for j in 0..self.tau.len() {
            let t = self.tau[j];
            let hint = self.eta[j].abs();
            let (eta, at_zero) = if rho > 0.0 {
                let h = if v[j] == 0.0 {
                    0.0
                } else {
                    -v[j].signum() * (v[j].abs() / k).powf(1.0 / r)
                };
                let g_h = h - ball_sum * v[j];
                if t > g_h + rho {
                    (signed_solve(a, r, t - rho, hint), false)
                } else if t < g_h - rho {
                    (signed_solve(a, r, t + rho, hint), false)
                } else {
                    (h, true)
                }
            } else {
                (signed_solve(a, r, t, hint), false)
            };
            self.eta[j] = eta;
            self.w[j] = if at_zero {
                0.0
            } else {
                v[j] + k * eta.signum() * eta.abs().powf(r)
            };
            big = big.max(eta.abs());
        }
        if big == 0.0 {
            return (0.0, 0.0);
        }
        // Elasticities: −a|η|^{r−1}/(1 + a r |η|^{r−1}) on solved coordinates,
        // −1/r on coordinates pinned at w_j = 0.
        let mut sum_q = 0.0;
        let mut weighted = 0.0;
        for j in 0..self.eta.len() {
            let e = self.eta[j].abs();
            if e == 0.0 {
                continue;
            }
            let wq = (e / big).powf(q);
            let el = if self.w[j] == 0.0 && rho > 0.0 && v[j] != 0.0 {
                -1.0 / r
            } else if a > 0.0 {
                let er = a * e.powf(r - 1.0);
                -er / (1.0 + r * er)
            } else {
                0.0
            };
            sum_q += wq;
            weighted += wq * el;
        }
        (big * sum_q.powf(1.0 / q), weighted / sum_q)
    }
}

/// Gaussian elimination with partial pivoting on an augmented `n × (n+1)` system.
fn solve_dense(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col] == 0.0 || !m[pivot][col].is_finite() {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][n] - tail) / m[row][row];
    }
    Some(x)
}

struct Context<'a> {
    params: PNormParams,
    reference: &'a [f64],
    atoms: &'a [AtomicConstraint],
    theta: &'a [f64],
}

/// Signed constraint value: positive when violated, zero on the boundary.
fn atom_gap(atom: &AtomicConstraint, w: &[f64]) -> f64 {
    match atom {
        AtomicConstraint::L2Ball { center, radius } => center.dist2(w) - radius,
        AtomicConstraint::L1Ball { radius } => w.iter().map(|x| x.abs()).sum::<f64>() - radius,
        AtomicConstraint::Halfspace { normal, offset } => {
            offset - normal.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
        }
    }
}

/// Constraint function in the form whose multiplier enters the stationarity
/// system: `½(‖w − c‖² − r²)` for balls, `‖w‖₁ − R`, `c − ⟨a, w⟩`.
fn lagrangian_gap(atom: &AtomicConstraint, w: &[f64]) -> f64 {
    match atom {
        AtomicConstraint::L2Ball { center, radius } => {
            let dist = center.dist2(w);
            0.5 * (dist - radius) * (dist + radius)
        }
        _ => atom_gap(atom, w),
    }
}

fn kkt_residual(atoms: &[AtomicConstraint], lambda: &[f64], w: &[f64]) -> f64 {
    atoms
        .iter()
        .zip(lambda)
        .map(|(atom, &l)| {
            let g = atom_gap(atom, w);
            if l > 0.0 {
                g.abs()
            } else {
                g.max(0.0)
            }
        })
        .fold(0.0, f64::max)
}
