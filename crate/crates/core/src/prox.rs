//! Proximity operators for the sparse-recovery models.
//!
//! `prox_{a phi}(v) = argmin_w a*phi(w) + 0.5*||w - v||^2`.

use crate::linalg::norm2;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProxError {
    #[error("K-norm order {k} must satisfy 1 <= K <= n = {n}")]
    InvalidOrder { k: usize, n: usize },
    #[error("brute-force prox supports at most 3 dimensions, got {0}")]
    DimensionTooLarge(usize),
    #[error("box bounds invalid at coordinate {index}: [{lower}, {upper}]")]
    InvalidBox { index: usize, lower: f64, upper: f64 },
    #[error("box lower/upper lengths differ: {0} vs {1}")]
    BoxLengthMismatch(usize, usize),
}

/// Componentwise finite bounds `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ProxError> {
        if lower.len() != upper.len() {
            return Err(ProxError::BoxLengthMismatch(lower.len(), upper.len()));
        }
        for (index, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(ProxError::InvalidBox { index, lower: lo, upper: hi });
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[-radius, radius]^n`.
    pub fn symmetric(n: usize, radius: f64) -> Result<Self, ProxError> {
        Self::new(vec![-radius; n], vec![radius; n])
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Prox of `alpha*|.|` plus the interval indicator, applied to one coordinate.
///
/// In one dimension the objective is convex, so thresholding and then
/// clamping gives the exact minimizer.
#[inline]
pub fn prox_l1_interval(v: f64, alpha: f64, lower: f64, upper: f64) -> f64 {
    soft_threshold(v, alpha).clamp(lower, upper)
}

/// Prox of `alpha*||.||_1 + indicator(box)` on a slice, with bounds given as slices.
pub fn prox_l1_box_slice(v: &[f64], alpha: f64, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    v.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&vj, (&lo, &hi))| prox_l1_interval(vj, alpha, lo, hi))
        .collect()
}

/// Prox of `alpha*||.||_1 + indicator(box)`.
pub fn prox_l1_box(v: &[f64], alpha: f64, bounds: &BoxBounds) -> Vec<f64> {
    assert_eq!(v.len(), bounds.len(), "box dimension mismatch");
    prox_l1_box_slice(v, alpha, bounds.lower(), bounds.upper())
}

/// Euclidean projection onto the closed unit l2 ball.
///
/// This is `prox_{alpha g*}` for `g = ||.||_2` and every `alpha > 0`; the
/// conjugate is an indicator, so the step size has no effect.
pub fn project_l2_ball(z: &[f64]) -> Vec<f64> {
    let nz = norm2(z);
    if nz <= 1.0 {
        z.to_vec()
    } else {
        z.iter().map(|v| v / nz).collect()
    }
}

/// Vector K-norm: sum of the `k` largest absolute entries.
///
/// The selected magnitudes are summed in index order.
pub fn k_norm(x: &[f64], k: usize) -> f64 {
    let mut selected = vec![false; x.len()];
    for &j in order_by_magnitude(x).iter().take(k) {
        selected[j] = true;
    }
    let mut s = 0.0;
    for (v, keep) in x.iter().zip(&selected) {
        if *keep {
            s += v.abs();
        }
    }
    s
}

/// Indices of `z` ordered by decreasing magnitude; ties keep input order.
pub(crate) fn order_by_magnitude(z: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..z.len()).collect();
    idx.sort_by(|&a, &b| z[b].abs().total_cmp(&z[a].abs()));
    idx
}

/// Prox of the sorted-weighted l1 norm `sum_i w_i |x|_[i]` for nonincreasing,
/// nonnegative `weights`.
///
/// Stack-based pool-adjacent-violators on the magnitudes sorted in
/// decreasing order; signs and the permutation are restored at the end.
fn prox_sorted_l1(z: &[f64], weights: &[f64]) -> Vec<f64> {
    debug_assert_eq!(z.len(), weights.len());
    let order = order_by_magnitude(z);

    // (start, end exclusive, sum of shifted values)
    let mut stack: Vec<(usize, usize, f64)> = Vec::with_capacity(z.len());
    for (pos, &j) in order.iter().enumerate() {
        stack.push((pos, pos + 1, z[j].abs() - weights[pos]));
        while stack.len() > 1 {
            let (s1, e1, t1) = stack[stack.len() - 1];
            let (s0, e0, t0) = stack[stack.len() - 2];
            // merge while the block means fail to decrease
            if t1 / (e1 - s1) as f64 >= t0 / (e0 - s0) as f64 {
                stack.pop();
                let last = stack.len() - 1;
                stack[last] = (s0, e1, t0 + t1);
            } else {
                break;
            }
        }
    }

    let mut out = vec![0.0; z.len()];
    for &(s, e, total) in &stack {
        let level = (total / (e - s) as f64).max(0.0);
        for &j in &order[s..e] {
            out[j] = if z[j] < 0.0 { -level } else { level };
        }
    }
    out
}

/// `argmin_w beta*||w||_(K) + 0.5*||w - z||^2`.
///
/// The K-norm is the sorted-weighted l1 norm with weight `beta` in the
/// first `k` slots and zero elsewhere.
pub fn prox_knorm(z: &[f64], beta: f64, k: usize) -> Result<Vec<f64>, ProxError> {
    if k < 1 || k > z.len() {
        return Err(ProxError::InvalidOrder { k, n: z.len() });
    }
    let weights: Vec<f64> = (0..z.len()).map(|i| if i < k { beta } else { 0.0 }).collect();
    Ok(prox_sorted_l1(z, &weights))
}

/// Conjugate prox through the Moreau decomposition,
/// `prox_{alpha g*}(z) = z - alpha * prox_{g/alpha}(z/alpha)`.
///
/// `primal_prox(w, s)` must return `prox_{s g}(w)` exactly.
pub fn prox_conj_via_moreau<P>(z: &[f64], alpha: f64, primal_prox: P) -> Vec<f64>
where
    P: Fn(&[f64], f64) -> Vec<f64>,
{
    assert!(alpha > 0.0, "step must be positive");
    let scaled: Vec<f64> = z.iter().map(|v| v / alpha).collect();
    let p = primal_prox(&scaled, 1.0 / alpha);
    z.iter().zip(&p).map(|(zi, pi)| zi - alpha * pi).collect()
}

/// Euclidean projection onto `{u : ||u||_inf <= 1, ||u||_1 <= k}`, the unit
/// ball of the dual K-norm.
///
/// This is `prox_{alpha g*}` for `g = ||.||_(K)` and every `alpha > 0`. The
/// result is `sign(z) min(1, max(|z| - tau, 0))` with the smallest `tau >= 0`
/// meeting the l1 constraint; `tau` is located between sorted breakpoints
/// and then solved from the linear piece.
pub fn project_knorm_dual_ball(z: &[f64], k: usize) -> Result<Vec<f64>, ProxError> {
    if k < 1 || k > z.len() {
        return Err(ProxError::InvalidOrder { k, n: z.len() });
    }
    let kf = k as f64;
    let mags: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    let mass = |tau: f64| mags.iter().map(|m| (m - tau).clamp(0.0, 1.0)).sum::<f64>();
    let shrink = |tau: f64| -> Vec<f64> {
        z.iter().zip(&mags).map(|(v, m)| (m - tau).clamp(0.0, 1.0).copysign(*v)).collect()
    };
    if mass(0.0) <= kf {
        return Ok(shrink(0.0));
    }

    let mut breaks: Vec<f64> = mags.iter().flat_map(|&m| [m - 1.0, m]).filter(|&b| b > 0.0).collect();
    breaks.push(0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    // mass is nonincreasing in tau; find the last breakpoint with mass >= k.
    let (mut lo, mut hi) = (0, breaks.len() - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if mass(breaks[mid]) >= kf {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (t0, t1) = (breaks[lo], breaks[hi]);
    let mid = 0.5 * (t0 + t1);
    let slope = mags.iter().filter(|&&m| m - 1.0 < mid && mid < m).count() as f64;
    let tau = if slope > 0.0 { t0 + (mass(t0) - kf) / slope } else { t0 };
    Ok(shrink(tau.clamp(t0, t1)))
}

/// Result of [`brute_prox_oracle`]: the best grid point and the finest
/// grid spacing used to find it.
#[derive(Debug, Clone)]
pub struct GridMinimizer {
    pub point: Vec<f64>,
    pub step: f64,
}

const GRID_POINTS: usize = 401;
const COARSE_POINTS_3D: usize = 101;

/// Exhaustive grid minimizer of `objective(w) + ||w - z||^2 / (2 alpha)`.
///
/// Independent ground truth for the analytic proximity operators, limited
/// to dimension 3. The grid spans `[lo, hi]` on every axis with
/// `lo = min(z, 0) - 2 alpha - 1` and `hi = max(z, 0) + 2 alpha + 1`; the
/// true minimizer must lie inside it. One and two dimensions use a single
/// 401-point grid per axis. Three dimensions use a 101-point grid followed by
/// a 101-point refinement over two coarse cells around the best coarse point.
/// `objective` may return `f64::INFINITY` outside its domain.
pub fn brute_prox_oracle<O>(z: &[f64], alpha: f64, objective: O) -> Result<GridMinimizer, ProxError>
where
    O: Fn(&[f64]) -> f64,
{
    let dim = z.len();
    if dim == 0 || dim > 3 {
        return Err(ProxError::DimensionTooLarge(dim));
    }
    let zmin = z.iter().cloned().fold(0.0, f64::min);
    let zmax = z.iter().cloned().fold(0.0, f64::max);
    let lo = zmin - 2.0 * alpha - 1.0;
    let hi = zmax + 2.0 * alpha + 1.0;
    let total = |w: &[f64]| {
        let quad: f64 = w.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        objective(w) + quad / (2.0 * alpha)
    };

    if dim < 3 {
        let step = (hi - lo) / (GRID_POINTS - 1) as f64;
        let center = vec![(lo + hi) / 2.0; dim];
        let point = grid_search(&center, (hi - lo) / 2.0, GRID_POINTS, &total);
        return Ok(GridMinimizer { point, step });
    }

    let coarse_step = (hi - lo) / (COARSE_POINTS_3D - 1) as f64;
    let center = vec![(lo + hi) / 2.0; dim];
    let coarse = grid_search(&center, (hi - lo) / 2.0, COARSE_POINTS_3D, &total);
    let half_width = 2.0 * coarse_step;
    let point = grid_search(&coarse, half_width, COARSE_POINTS_3D, &total);
    let step = 2.0 * half_width / (COARSE_POINTS_3D - 1) as f64;
    Ok(GridMinimizer { point, step })
}

/// Lexicographic scan of a regular grid centred at `center`; the first
/// strict minimum wins.
fn grid_search<T: Fn(&[f64]) -> f64>(center: &[f64], half_width: f64, points: usize, total: &T) -> Vec<f64> {
    let dim = center.len();
    let step = 2.0 * half_width / (points - 1) as f64;
    let coord = |axis: usize, k: usize| center[axis] - half_width + step * k as f64;
    let mut best = vec![0.0; dim];
    let mut best_val = f64::INFINITY;
    let mut w = vec![0.0; dim];
    let count = points.pow(dim as u32);
    for flat in 0..count {
        let mut rem = flat;
        for (axis, wa) in w.iter_mut().enumerate() {
            *wa = coord(axis, rem % points);
            rem /= points;
        }
        let v = total(&w);
        if v < best_val {
            best_val = v;
            best.copy_from_slice(&w);
        }
    }
    best
}
