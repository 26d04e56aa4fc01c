//! Oracles for the two sparse-recovery ratio models:
//!
//! * L1/L2: `(||x||_1 + (lambda/2)||x||_2 ||Ax - b||^2) / ||x||_2`
//! * L1/SK: `(||x||_1 + (lambda/2)||Ax - b||^2) / ||x||_(K)`
//!
//! both over a box `lower <= x <= upper`.

use crate::ext::ExtReal;
use crate::linalg::{block_mat_vec_acc, block_tmat_vec, dist2, dot, norm1, norm2, norm2_sq, norm_inf, residual, tmat_vec};
use crate::problem::{BlockPartition, Denominator, FractionalProblem, SeparableTerm, SmoothTerm};
use crate::prox::{k_norm, order_by_magnitude, project_knorm_dual_ball, project_l2_ball, prox_l1_box_slice, BoxBounds};
use nalgebra::DMatrix;
use std::ops::Range;
use std::sync::Arc;

/// Relative slack allowed when testing membership in a dual-norm ball.
///
/// Conjugate prox outputs land on the ball boundary up to rounding; without
/// slack they would read as infeasible and `eta` would jump to `-inf`.
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-9;

/// Band used to classify a coordinate as sitting on a box bound.
pub const BOUND_TOL: f64 = 1e-12;

/// `f_i = ||.||_1 + indicator(box)` on every block.
#[derive(Debug, Clone)]
pub struct L1Box {
    bounds: BoxBounds,
}

impl L1Box {
    pub fn new(bounds: BoxBounds) -> Self {
        Self { bounds }
    }

    pub fn bounds(&self) -> &BoxBounds {
        &self.bounds
    }
}

/// Interval `partial|.|(xj) + N_[lo,hi](xj)` as `(left, right)`.
pub(crate) fn l1_box_subdiff_interval(xj: f64, lo: f64, hi: f64) -> (f64, f64) {
    let (mut left, mut right) = if xj > 0.0 {
        (1.0, 1.0)
    } else if xj < 0.0 {
        (-1.0, -1.0)
    } else {
        (-1.0, 1.0)
    };
    // The normal cone is [0, inf) at the upper bound and (-inf, 0] at the lower one.
    if xj >= hi - BOUND_TOL * hi.abs().max(1.0) {
        right = f64::INFINITY;
    }
    if xj <= lo + BOUND_TOL * lo.abs().max(1.0) {
        left = f64::NEG_INFINITY;
    }
    (left, right)
}

pub(crate) fn interval_distance(v: f64, (left, right): (f64, f64)) -> f64 {
    if v < left {
        left - v
    } else if v > right {
        v - right
    } else {
        0.0
    }
}

impl SeparableTerm for L1Box {
    fn block_value(&self, block: Range<usize>, xb: &[f64]) -> ExtReal {
        let lo = &self.bounds.lower()[block.clone()];
        let hi = &self.bounds.upper()[block];
        let mut s = 0.0;
        for ((v, l), u) in xb.iter().zip(lo).zip(hi) {
            if !(l <= v && v <= u) {
                return ExtReal::PosInf;
            }
            s += v.abs();
        }
        ExtReal::Finite(s)
    }

    fn block_prox(&self, block: Range<usize>, v: &[f64], alpha: f64) -> Vec<f64> {
        prox_l1_box_slice(v, alpha, &self.bounds.lower()[block.clone()], &self.bounds.upper()[block])
    }

    fn subdiff_distance(&self, x: &[f64], v: &[f64]) -> Option<f64> {
        let mut s = 0.0;
        for j in 0..x.len() {
            let iv = l1_box_subdiff_interval(x[j], self.bounds.lower()[j], self.bounds.upper()[j]);
            let d = interval_distance(v[j], iv);
            s += d * d;
        }
        Some(s.sqrt())
    }
}

/// `h(x) = (lambda/2) ||Ax - b||^2`. The cache is the residual `Ax - b`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub a: Arc<DMatrix<f64>>,
    pub b: Vec<f64>,
    pub lambda: f64,
}

impl SmoothTerm for LeastSquares {
    type Cache = Vec<f64>;

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.lambda * norm2_sq(&residual(&self.a, x, &self.b))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = residual(&self.a, x, &self.b);
        tmat_vec(&self.a, &r).into_iter().map(|v| self.lambda * v).collect()
    }

    fn partial_gradient(&self, x: &[f64], block: Range<usize>) -> Vec<f64> {
        let r = residual(&self.a, x, &self.b);
        self.partial_gradient_cached(x, &r, block)
    }

    fn prepare(&self, x: &[f64]) -> Vec<f64> {
        residual(&self.a, x, &self.b)
    }

    fn value_cached(&self, _x: &[f64], r: &Vec<f64>) -> f64 {
        0.5 * self.lambda * norm2_sq(r)
    }

    fn partial_gradient_cached(&self, _x: &[f64], r: &Vec<f64>, block: Range<usize>) -> Vec<f64> {
        block_tmat_vec(&self.a, block, r).into_iter().map(|v| self.lambda * v).collect()
    }

    fn shift_cache(&self, r: &Vec<f64>, block: Range<usize>, delta: &[f64]) -> Vec<f64> {
        let mut out = r.clone();
        block_mat_vec_acc(&self.a, block, delta, &mut out);
        out
    }
}

/// `h(x) = (lambda/2) ||x||_2 ||Ax - b||^2`.
///
/// The gradient `(lambda/2)(x/||x||)||r||^2 + lambda ||x|| A^T r` exists only
/// for `x != 0`; at the origin the first term is taken as zero.
#[derive(Debug, Clone)]
pub struct ScaledLeastSquares {
    pub a: Arc<DMatrix<f64>>,
    pub b: Vec<f64>,
    pub lambda: f64,
}

impl ScaledLeastSquares {
    fn assemble(&self, xb: &[f64], xnorm: f64, rr: f64, atr: Vec<f64>) -> Vec<f64> {
        let lam = self.lambda;
        let radial = if xnorm > 0.0 { 0.5 * lam * rr / xnorm } else { 0.0 };
        xb.iter().zip(atr).map(|(xj, g)| radial * xj + lam * xnorm * g).collect()
    }
}

impl SmoothTerm for ScaledLeastSquares {
    type Cache = Vec<f64>;

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.lambda * norm2(x) * norm2_sq(&residual(&self.a, x, &self.b))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = residual(&self.a, x, &self.b);
        self.assemble(x, norm2(x), norm2_sq(&r), tmat_vec(&self.a, &r))
    }

    fn partial_gradient(&self, x: &[f64], block: Range<usize>) -> Vec<f64> {
        let r = residual(&self.a, x, &self.b);
        self.partial_gradient_cached(x, &r, block)
    }

    fn prepare(&self, x: &[f64]) -> Vec<f64> {
        residual(&self.a, x, &self.b)
    }

    fn value_cached(&self, x: &[f64], r: &Vec<f64>) -> f64 {
        0.5 * self.lambda * norm2(x) * norm2_sq(r)
    }

    fn partial_gradient_cached(&self, x: &[f64], r: &Vec<f64>, block: Range<usize>) -> Vec<f64> {
        let atr = block_tmat_vec(&self.a, block.clone(), r);
        self.assemble(&x[block], norm2(x), norm2_sq(r), atr)
    }

    fn shift_cache(&self, r: &Vec<f64>, block: Range<usize>, delta: &[f64]) -> Vec<f64> {
        let mut out = r.clone();
        block_mat_vec_acc(&self.a, block, delta, &mut out);
        out
    }
}

/// `g = ||.||_2`; `g*` is the indicator of the unit l2 ball.
#[derive(Debug, Clone, Copy, Default)]
pub struct L2Norm;

impl Denominator for L2Norm {
    fn value(&self, x: &[f64]) -> f64 {
        norm2(x)
    }

    fn conj_value(&self, y: &[f64]) -> ExtReal {
        if norm2(y) <= 1.0 + DUAL_FEASIBILITY_TOL {
            ExtReal::Finite(0.0)
        } else {
            ExtReal::PosInf
        }
    }

    fn prox_conj(&self, z: &[f64], _alpha: f64) -> Vec<f64> {
        project_l2_ball(z)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let nx = norm2(x);
        if nx == 0.0 {
            vec![0.0; x.len()]
        } else {
            x.iter().map(|v| v / nx).collect()
        }
    }

    /// `partial g*(y)` is `{0}` inside the ball and the ray `{beta y : beta >= 0}`
    /// on its boundary.
    fn conj_subdiff_distance(&self, y: &[f64], x: &[f64]) -> Option<f64> {
        let ny = norm2(y);
        if ny > 1.0 + DUAL_FEASIBILITY_TOL {
            return None;
        }
        if ny < 1.0 - BOUND_TOL {
            return Some(norm2(x));
        }
        let beta = (dot(x, y) / (ny * ny)).max(0.0);
        let proj: Vec<f64> = y.iter().map(|v| beta * v).collect();
        Some(dist2(x, &proj))
    }
}

/// `g = ||.||_(K)`; `g*` is the indicator of `{||y||_inf <= 1, ||y||_1 <= K}`.
#[derive(Debug, Clone, Copy)]
pub struct KNorm {
    k: usize,
}

impl KNorm {
    /// # Panics
    /// Panics unless `1 <= k <= n`.
    pub fn new(k: usize, n: usize) -> Self {
        assert!(k >= 1 && k <= n, "K-norm order must satisfy 1 <= K <= n");
        Self { k }
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl Denominator for KNorm {
    fn value(&self, x: &[f64]) -> f64 {
        k_norm(x, self.k)
    }

    fn conj_value(&self, y: &[f64]) -> ExtReal {
        if norm_inf(y) <= 1.0 + DUAL_FEASIBILITY_TOL && norm1(y) <= self.k as f64 * (1.0 + DUAL_FEASIBILITY_TOL) {
            ExtReal::Finite(0.0)
        } else {
            ExtReal::PosInf
        }
    }

    /// Direct projection onto `dom(g*)`; agrees with the Moreau route
    /// `z - alpha prox_{g/alpha}(z/alpha)` but is exact at fixed points,
    /// where the subtraction would cancel.
    fn prox_conj(&self, z: &[f64], _alpha: f64) -> Vec<f64> {
        project_knorm_dual_ball(z, self.k).expect("K validated at construction")
    }

    /// Signs of the `K` largest-magnitude entries, lowest index first on ties.
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for &j in order_by_magnitude(x).iter().take(self.k) {
            y[j] = if x[j] > 0.0 {
                1.0
            } else if x[j] < 0.0 {
                -1.0
            } else {
                0.0
            };
        }
        y
    }
}

pub type L1L2Problem = FractionalProblem<L1Box, ScaledLeastSquares, L2Norm>;
pub type L1SkProblem = FractionalProblem<L1Box, LeastSquares, KNorm>;

pub fn l1l2_problem(a: Arc<DMatrix<f64>>, b: Vec<f64>, lambda: f64, bounds: BoxBounds, partition: BlockPartition) -> L1L2Problem {
    assert_eq!(a.ncols(), partition.dim());
    assert_eq!(a.nrows(), b.len());
    FractionalProblem::new(partition, L1Box::new(bounds), ScaledLeastSquares { a, b, lambda }, L2Norm)
}

pub fn l1sk_problem(
    a: Arc<DMatrix<f64>>,
    b: Vec<f64>,
    lambda: f64,
    k: usize,
    bounds: BoxBounds,
    partition: BlockPartition,
) -> L1SkProblem {
    assert_eq!(a.ncols(), partition.dim());
    assert_eq!(a.nrows(), b.len());
    let n = partition.dim();
    FractionalProblem::new(partition, L1Box::new(bounds), LeastSquares { a, b, lambda }, KNorm::new(k, n))
}
