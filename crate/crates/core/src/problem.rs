//! Fractional programs `min (f(x) + h(x)) / g(x)` and their primal-dual
//! lifting `Q(x, y) = zeta(x) / eta(x, y)` with `zeta = f + h` and
//! `eta(x, y) = <x, y> - g*(y)`.

use crate::ext::ExtReal;
use crate::linalg::dot;
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("block partition must have at least one block")]
    EmptyPartition,
    #[error("block {0} has size zero")]
    EmptyBlock(usize),
    #[error("cannot split {n} coordinates into {blocks} nonempty blocks")]
    TooManyBlocks { n: usize, blocks: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("g(x) = 0: point lies outside the ratio's domain")]
    ZeroDenominator,
}

/// Partition of `0..n` into consecutive nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockPartition {
    pub fn new(sizes: Vec<usize>) -> Result<Self, ProblemError> {
        if sizes.is_empty() {
            return Err(ProblemError::EmptyPartition);
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(ProblemError::EmptyBlock(i));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        for s in &sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        Ok(Self { sizes, offsets })
    }

    /// Splits `n` coordinates into `blocks` consecutive blocks whose sizes
    /// differ by at most one; the first `n % blocks` blocks get the extra
    /// coordinate.
    pub fn uniform(n: usize, blocks: usize) -> Result<Self, ProblemError> {
        if blocks == 0 {
            return Err(ProblemError::EmptyPartition);
        }
        if blocks > n {
            return Err(ProblemError::TooManyBlocks { n, blocks });
        }
        let base = n / blocks;
        let extra = n % blocks;
        Self::new((0..blocks).map(|i| base + usize::from(i < extra)).collect())
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Prefix sums, starting at 0 and ending at `dim()`.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Coordinate range of block `i` (0-based).
    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.num_blocks()).map(|i| self.range(i))
    }
}

/// The block-separable numerator term `f(x) = sum_i f_i(x_i)`.
///
/// Blocks are identified by their coordinate range so coordinate-wise
/// data (box bounds) can be looked up.
pub trait SeparableTerm {
    fn block_value(&self, block: Range<usize>, xb: &[f64]) -> ExtReal;

    /// An element of `prox_{alpha f_i}(v)`.
    fn block_prox(&self, block: Range<usize>, v: &[f64], alpha: f64) -> Vec<f64>;

    fn in_domain(&self, block: Range<usize>, xb: &[f64]) -> bool {
        self.block_value(block, xb).is_finite()
    }

    /// `dist(v, partial f(x))` over the full vector, when the subdifferential
    /// has a closed form.
    fn subdiff_distance(&self, _x: &[f64], _v: &[f64]) -> Option<f64> {
        None
    }
}

/// The smooth numerator term `h`.
///
/// `Cache` holds whatever makes repeated evaluation along block updates
/// cheap (for least-squares terms, the residual `Ax - b`).
pub trait SmoothTerm {
    type Cache: Clone;

    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    fn partial_gradient(&self, x: &[f64], block: Range<usize>) -> Vec<f64> {
        self.gradient(x)[block].to_vec()
    }

    fn prepare(&self, x: &[f64]) -> Self::Cache;
    fn value_cached(&self, x: &[f64], cache: &Self::Cache) -> f64;
    fn partial_gradient_cached(&self, x: &[f64], cache: &Self::Cache, block: Range<usize>) -> Vec<f64>;

    /// Cache for `x + delta` where `delta` is zero outside `block`.
    fn shift_cache(&self, cache: &Self::Cache, block: Range<usize>, delta: &[f64]) -> Self::Cache;
}

/// The convex, nonnegative denominator `g` together with its conjugate.
pub trait Denominator {
    fn value(&self, x: &[f64]) -> f64;

    /// `g*(y)`.
    fn conj_value(&self, y: &[f64]) -> ExtReal;

    /// `prox_{alpha g*}(z)`.
    fn prox_conj(&self, z: &[f64], alpha: f64) -> Vec<f64>;

    /// A deterministic element of `partial g(x)`.
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;

    /// `dist(x, partial g*(y))`, when available in closed form.
    fn conj_subdiff_distance(&self, _y: &[f64], _x: &[f64]) -> Option<f64> {
        None
    }
}

/// A single-ratio fractional program over a block partition.
#[derive(Debug, Clone)]
pub struct FractionalProblem<F, H, G> {
    partition: BlockPartition,
    pub f: F,
    pub h: H,
    pub g: G,
}

impl<F, H, G> FractionalProblem<F, H, G>
where
    F: SeparableTerm,
    H: SmoothTerm,
    G: Denominator,
{
    pub fn new(partition: BlockPartition, f: F, h: H, g: G) -> Self {
        Self { partition, f, h, g }
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    /// Same oracles over a different partition of the same coordinates.
    pub fn with_partition(mut self, partition: BlockPartition) -> Result<Self, ProblemError> {
        if partition.dim() != self.dim() {
            return Err(ProblemError::DimensionMismatch { expected: self.dim(), got: partition.dim() });
        }
        self.partition = partition;
        Ok(self)
    }

    /// `f(x)`, summed block by block in block order.
    pub fn separable_value(&self, x: &[f64]) -> ExtReal {
        let mut total = 0.0;
        for block in self.partition.ranges() {
            match self.f.block_value(block.clone(), &x[block]) {
                ExtReal::Finite(v) => total += v,
                _ => return ExtReal::PosInf,
            }
        }
        ExtReal::Finite(total)
    }

    /// `zeta(x) = f(x) + h(x)`; `+inf` outside `dom(f)`.
    pub fn zeta(&self, x: &[f64]) -> ExtReal {
        debug_assert_eq!(x.len(), self.dim());
        match self.separable_value(x) {
            ExtReal::Finite(fv) => ExtReal::Finite(fv + self.h.value(x)),
            other => other,
        }
    }

    pub(crate) fn zeta_cached(&self, x: &[f64], cache: &H::Cache) -> ExtReal {
        match self.separable_value(x) {
            ExtReal::Finite(fv) => ExtReal::Finite(fv + self.h.value_cached(x, cache)),
            other => other,
        }
    }

    /// `eta(x, y) = <x, y> - g*(y)`; `-inf` when `g*(y) = +inf`.
    pub fn eta(&self, x: &[f64], y: &[f64]) -> ExtReal {
        match self.g.conj_value(y) {
            ExtReal::Finite(c) => ExtReal::Finite(dot(x, y) - c),
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::NegInf => ExtReal::PosInf,
        }
    }

    /// `Q(x, y) = zeta(x) / eta(x, y)` on its domain, `+inf` elsewhere.
    pub fn q(&self, x: &[f64], y: &[f64]) -> ExtReal {
        ratio(self.zeta(x), self.eta(x, y))
    }

    pub(crate) fn q_cached(&self, x: &[f64], y: &[f64], cache: &H::Cache) -> ExtReal {
        ratio(self.zeta_cached(x, cache), self.eta(x, y))
    }

    /// `F(x) = zeta(x) / g(x)`; `+inf` outside `dom(f)` or where `g(x) = 0`.
    pub fn objective(&self, x: &[f64]) -> ExtReal {
        ratio(self.zeta(x), ExtReal::Finite(self.g.value(x)))
    }

    /// Starting dual point: an element of `partial g(x)`.
    pub fn initial_dual(&self, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
        if x.len() != self.dim() {
            return Err(ProblemError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if self.g.value(x) <= 0.0 {
            return Err(ProblemError::ZeroDenominator);
        }
        Ok(self.g.subgradient(x))
    }
}

fn ratio(num: ExtReal, den: ExtReal) -> ExtReal {
    match (num, den) {
        (ExtReal::Finite(z), ExtReal::Finite(e)) if e > 0.0 => ExtReal::Finite(z / e),
        _ => ExtReal::PosInf,
    }
}
