//! Dense vector primitives, sparsity operators, angles and the p-norm link
//! maps used by the mirror-descent engine.
//!
//! All norms are evaluated with max-scaling so that `|x|^p` never overflows or
//! underflows for exponents close to one.

use std::cmp::Ordering;
use std::ops::{Deref, DerefMut, Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense real vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Self {
        Vector(entries)
    }

    pub fn zeros(d: usize) -> Self {
        Vector(vec![0.0; d])
    }

    /// Standard basis vector `e_i` in dimension `d`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = Vector::zeros(d);
        v.0[i] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn norm1(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.0)
    }

    pub fn norm_p(&self, p: f64) -> f64 {
        norm_p(&self.0, p)
    }

    /// Number of nonzero entries.
    pub fn l0(&self) -> usize {
        self.0.iter().filter(|x| **x != 0.0).count()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn scaled(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|x| c * x).collect())
    }

    pub fn sub(&self, other: &[f64]) -> Vector {
        debug_assert_eq!(self.dim(), other.len());
        Vector(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &[f64]) -> Vector {
        debug_assert_eq!(self.dim(), other.len());
        Vector(self.0.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    /// `self += c * x`
    pub fn axpy(&mut self, c: f64, x: &[f64]) {
        debug_assert_eq!(self.dim(), x.len());
        for (a, b) in self.0.iter_mut().zip(x) {
            *a += c * b;
        }
    }

    /// Euclidean distance to `other`.
    pub fn dist2(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `‖a‖_p` for `p ≥ 1`, computed as `m · (Σ |a_j/m|^p)^{1/p}` with `m = ‖a‖_∞`.
pub fn norm_p(a: &[f64], p: f64) -> f64 {
    let m = norm_inf(a);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = a.iter().map(|x| (x.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

/// Conjugate exponents `(p, q)` with `1/p + 1/q = 1`, `p ∈ (1, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PNormParams {
    pub p: f64,
    pub q: f64,
}

impl PNormParams {
    /// `q = ln(8d)`, `p = q / (q - 1)`.
    pub fn for_dimension(d: usize) -> Self {
        let q = (8.0 * d as f64).ln();
        PNormParams { p: q / (q - 1.0), q }
    }

    /// The quadratic case `p = q = 2`, where the link map is the identity.
    pub fn euclidean() -> Self {
        PNormParams { p: 2.0, q: 2.0 }
    }

    pub fn from_p(p: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::config(format!("p = {p} is outside (1, 2]")));
        }
        Ok(PNormParams { p, q: p / (p - 1.0) })
    }
}

/// Keeps the `s` largest-magnitude entries of `v` and zeroes the rest.
///
/// Ties at the cut-off are resolved in favour of the lower index.
pub fn hard_threshold(v: &[f64], s: usize) -> Result<Vector> {
    let d = v.len();
    if s < 1 || s > d {
        return Err(Error::InvalidSparsity { s, d });
    }
    if s == d {
        return Ok(Vector::from(v));
    }
    let mut idx: Vec<usize> = (0..d).collect();
    let by_magnitude = |&i: &usize, &j: &usize| -> Ordering {
        v[j].abs()
            .partial_cmp(&v[i].abs())
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    };
    idx.select_nth_unstable_by(s - 1, by_magnitude);
    let mut out = Vector::zeros(d);
    for &i in &idx[..s] {
        out[i] = v[i];
    }
    Ok(out)
}

/// Unit vector in the direction of `v`.
pub fn normalize(v: &[f64]) -> Result<Vector> {
    let n = norm2(v);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::DegenerateVector);
    }
    Ok(Vector(v.iter().map(|x| x / n).collect()))
}

/// Angle in `[0, π]` between two nonzero vectors.
///
/// Uses `2·atan2(‖â − b̂‖, ‖â + b̂‖)`, which stays accurate for nearly
/// parallel and nearly opposite vectors where `acos` of the cosine does not.
pub fn angle(a: &[f64], b: &[f64]) -> Result<f64> {
    let na = norm2(a);
    let nb = norm2(b);
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if !(na > 0.0 && nb > 0.0) {
        return Err(Error::DegenerateVector);
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x / na, y / nb);
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    Ok(2.0 * diff.sqrt().atan2(sum.sqrt()))
}

/// Gradient of `w ↦ ‖w‖_p² / (2(p−1))` at `u`.
///
/// Component `j` is `sign(u_j) |u_j|^{p−1} ‖u‖_p^{2−p} / (p−1)`; the origin maps
/// to the origin.
pub fn pnorm_grad(u: &[f64], params: PNormParams) -> Vector {
    let p = params.p;
    if p == 2.0 {
        return Vector::from(u);
    }
    let m = norm_inf(u);
    if m == 0.0 {
        return Vector::zeros(u.len());
    }
    // With r = u/m: grad_j = m · S^{(2−p)/p} · sign(r_j)|r_j|^{p−1} / (p−1).
    let s: f64 = u.iter().map(|x| (x.abs() / m).powf(p)).sum();
    let scale = m * s.powf((2.0 - p) / p) / (p - 1.0);
    Vector(
        u.iter()
            .map(|x| {
                let r = x.abs() / m;
                x.signum() * scale * r.powf(p - 1.0)
            })
            .map(|g| if g.is_nan() { 0.0 } else { g })
            .collect(),
    )
}

/// Inverse of [`pnorm_grad`]: component `j` is
/// `(p−1) sign(θ_j) |θ_j|^{q−1} ‖θ‖_q^{2−q}`.
pub fn pnorm_grad_inverse(theta: &[f64], params: PNormParams) -> Vector {
    let PNormParams { p, q } = params;
    if p == 2.0 {
        return Vector::from(theta);
    }
    let m = norm_inf(theta);
    if m == 0.0 {
        return Vector::zeros(theta.len());
    }
    let s: f64 = theta.iter().map(|x| (x.abs() / m).powf(q)).sum();
    let scale = (p - 1.0) * m * s.powf((2.0 - q) / q);
    Vector(
        theta
            .iter()
            .map(|x| {
                let r = x.abs() / m;
                x.signum() * scale * r.powf(q - 1.0)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn hard_threshold_keeps_largest() {
        let out = hard_threshold(&[3.0, -1.0, 0.5, 2.0], 2).unwrap();
        assert_eq!(out.as_slice(), &[3.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn hard_threshold_sparse_input_unchanged() {
        let v = [0.0, 4.0, 0.0, -1.0, 0.0];
        assert_eq!(hard_threshold(&v, 2).unwrap().as_slice(), &v);
        assert_eq!(hard_threshold(&v, 3).unwrap().as_slice(), &v);
    }

    #[test]
    fn hard_threshold_ties_go_to_lower_index() {
        let out = hard_threshold(&[1.0, -1.0, 1.0], 2).unwrap();
        assert_eq!(out.as_slice(), &[1.0, -1.0, 0.0]);
        let out = hard_threshold(&[2.0, 2.0, 2.0, 2.0], 1).unwrap();
        assert_eq!(out.as_slice(), &[2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn hard_threshold_rejects_bad_sparsity() {
        assert!(matches!(
            hard_threshold(&[1.0, 2.0], 0),
            Err(Error::InvalidSparsity { s: 0, d: 2 })
        ));
        assert!(matches!(
            hard_threshold(&[1.0, 2.0], 3),
            Err(Error::InvalidSparsity { s: 3, d: 2 })
        ));
    }

    #[test]
    fn angle_examples() {
        let pi = std::f64::consts::PI;
        assert!((angle(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - pi / 2.0).abs() < 1e-15);
        assert_eq!(angle(&[0.3, -2.0, 5.0], &[0.3, -2.0, 5.0]).unwrap(), 0.0);
        assert!((angle(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - pi / 4.0).abs() < 1e-15);
        assert!((angle(&[1.0, 0.0], &[-1.0, 0.0]).unwrap() - pi).abs() < 1e-15);
        assert!(matches!(angle(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::DegenerateVector)));
    }

    #[test]
    fn normalize_examples() {
        let n = normalize(&[3.0, 4.0]).unwrap();
        assert!(close(&n, &[0.6, 0.8], 1e-15));
        let e = Vector::basis(3, 1);
        assert_eq!(normalize(&e).unwrap(), e);
        assert!(matches!(normalize(&[0.0, 0.0]), Err(Error::DegenerateVector)));
    }

    #[test]
    fn pnorm_params_from_dimension() {
        let pp = PNormParams::for_dimension(4);
        assert!((pp.q - 32f64.ln()).abs() < 1e-15);
        assert!((1.0 / pp.p + 1.0 / pp.q - 1.0).abs() < 1e-12);
        assert!(pp.p > 1.0 && pp.p <= 2.0);
    }

    #[test]
    fn pnorm_grad_fixes_origin_and_is_identity_for_p2() {
        let pp = PNormParams::for_dimension(10);
        assert_eq!(pnorm_grad(&[0.0; 3], pp).as_slice(), &[0.0; 3]);
        assert_eq!(pnorm_grad_inverse(&[0.0; 3], pp).as_slice(), &[0.0; 3]);
        let u = [1.5, -0.25, 3.0];
        assert_eq!(pnorm_grad(&u, PNormParams::euclidean()).as_slice(), &u);
        assert_eq!(pnorm_grad_inverse(&u, PNormParams::euclidean()).as_slice(), &u);
    }

    #[test]
    fn pnorm_grad_matches_central_differences() {
        let pp = PNormParams::for_dimension(4);
        let u = [1.0, 2.0, -2.0];
        let phi = |w: &[f64]| norm_p(w, pp.p).powi(2) / (2.0 * (pp.p - 1.0));
        let h = 1e-6;
        let g = pnorm_grad(&u, pp);
        for j in 0..3 {
            let mut up = u;
            let mut dn = u;
            up[j] += h;
            dn[j] -= h;
            let fd = (phi(&up) - phi(&dn)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-6, "coordinate {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let pp = PNormParams::for_dimension(8);
        let u = [0.3, -1.2, 0.0, 4.5, -0.001];
        let back = pnorm_grad_inverse(&pnorm_grad(&u, pp), pp);
        assert!(close(&back, &u, 1e-12));
    }

    #[test]
    fn norm_p_matches_direct_formula() {
        let a = [1.0, -2.0, 3.0];
        let direct = (1.0f64 + 2f64.powf(1.3) + 3f64.powf(1.3)).powf(1.0 / 1.3);
        assert!((norm_p(&a, 1.3) - direct).abs() < 1e-12);
        assert_eq!(norm_p(&[0.0, 0.0], 1.3), 0.0);
        // Huge magnitudes do not overflow.
        assert!(norm_p(&[1e300, 1e300], 1.1).is_finite());
    }
}
