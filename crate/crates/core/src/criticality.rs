//! Termination certificates.
//!
//! Two measures of stationarity are provided. The fixed-point residual
//! checks that one dual step and one step on every primal block leave
//! `(x, y)` unchanged, which characterizes critical points of `F` with
//! `y` in `partial g(x)`. The subdifferential distance
//! `dist(0, partial Q(x, y))` is available when both the separable term and
//! the conjugate have closed-form subdifferentials (the L1/L2 model).

use crate::ext::ExtReal;
use crate::linalg::{dist2, dot, norm1, norm2, norm2_sq, residual, tmat_vec};
use crate::models::{interval_distance, l1_box_subdiff_interval, BOUND_TOL, DUAL_FEASIBILITY_TOL};
use crate::problem::{Denominator, FractionalProblem, SeparableTerm, SmoothTerm};
use crate::prox::BoxBounds;
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CriticalityError {
    #[error("(x, y) is outside dom(Q): eta(x, y) = {0}")]
    OutsideDomain(f64),
    #[error("dual point has ||y||_2 = {0} > 1")]
    DualInfeasible(f64),
    #[error("reference vector is zero")]
    ZeroReference,
    #[error("model has no closed-form subdifferential distance")]
    Unsupported,
    #[error("expected {expected} primal step sizes, got {got}")]
    StepCount { expected: usize, got: usize },
}

/// When the solver checks for termination (once per epoch of `N + 1`
/// iterations, at the start of the epoch).
#[derive(Debug, Clone, PartialEq)]
pub enum StoppingRule {
    /// `||x - target|| / ||target|| < tol`.
    RelErr { target: Vec<f64>, tol: f64 },
    /// `dist(0, partial Q(x, y)) / ||(x, y)|| < tol`.
    SubdiffResidual { tol: f64 },
    /// `fixed_point_residual(x, y) < tol` with the given step sizes.
    FixedPointResidual { tol: f64, alpha_dual: f64, alpha_primal: f64 },
    /// Run until the epoch limit.
    Never,
}

/// `||x - x_ref||_2 / ||x_ref||_2`.
pub fn rel_err(x: &[f64], x_ref: &[f64]) -> Result<f64, CriticalityError> {
    let nr = norm2(x_ref);
    if nr == 0.0 {
        return Err(CriticalityError::ZeroReference);
    }
    Ok(dist2(x, x_ref) / nr)
}

/// `||y - prox_{a0 g*}(y + a0 x)|| + sum_i ||x_i - prox_{a_i f_i}(x_i - a_i grad_i h(x) + a_i Q(x,y) y_i)||`.
///
/// Zero exactly when `x` is a critical point of `F` and `y` is in
/// `partial g(x)`.
pub fn fixed_point_residual<F, H, G>(
    problem: &FractionalProblem<F, H, G>,
    x: &[f64],
    y: &[f64],
    alpha_dual: f64,
    alpha_blocks: &[f64],
) -> Result<f64, CriticalityError>
where
    F: SeparableTerm,
    H: SmoothTerm,
    G: Denominator,
{
    let blocks = problem.partition().num_blocks();
    if alpha_blocks.len() != blocks {
        return Err(CriticalityError::StepCount { expected: blocks, got: alpha_blocks.len() });
    }
    let eta = problem.eta(x, y);
    let q = match (eta, problem.q(x, y)) {
        (ExtReal::Finite(e), ExtReal::Finite(q)) if e > 0.0 => q,
        _ => return Err(CriticalityError::OutsideDomain(eta.to_f64())),
    };

    let z: Vec<f64> = y.iter().zip(x).map(|(yi, xi)| yi + alpha_dual * xi).collect();
    let mut total = dist2(y, &problem.g.prox_conj(&z, alpha_dual));

    let grad = problem.h.gradient(x);
    for (block, &alpha) in problem.partition().ranges().zip(alpha_blocks) {
        let v: Vec<f64> = block
            .clone()
            .map(|j| x[j] - alpha * grad[j] + alpha * q * y[j])
            .collect();
        let p = problem.f.block_prox(block.clone(), &v, alpha);
        total += dist2(&x[block], &p);
    }
    Ok(total)
}

/// `dist(0, partial Q(x, y))` assembled from the separable term's and the
/// conjugate's closed-form subdifferentials:
///
/// `eta^-2 (dist^2(Q y - grad h(x), partial f(x)) + Q^2 dist^2(x, partial g*(y)))`,
/// and zero when `zeta(x) = 0`.
pub fn dist_subdiff_q<F, H, G>(problem: &FractionalProblem<F, H, G>, x: &[f64], y: &[f64]) -> Result<f64, CriticalityError>
where
    F: SeparableTerm,
    H: SmoothTerm,
    G: Denominator,
{
    let eta = match problem.eta(x, y) {
        ExtReal::Finite(e) if e > 0.0 => e,
        other => return Err(CriticalityError::OutsideDomain(other.to_f64())),
    };
    let zeta = match problem.zeta(x) {
        ExtReal::Finite(z) => z,
        _ => return Err(CriticalityError::OutsideDomain(eta)),
    };
    if zeta == 0.0 {
        return Ok(0.0);
    }
    let q = zeta / eta;
    let grad = problem.h.gradient(x);
    let v: Vec<f64> = y.iter().zip(&grad).map(|(yi, gi)| q * yi - gi).collect();
    let primal = problem.f.subdiff_distance(x, &v).ok_or(CriticalityError::Unsupported)?;
    let dual = problem.g.conj_subdiff_distance(y, x).ok_or(CriticalityError::Unsupported)?;
    Ok((primal * primal + q * q * dual * dual).sqrt() / eta)
}

/// `dist(0, partial Q(x, y))` for the L1/L2 model written out directly from
/// the model data, without going through the problem oracles.
pub fn dist_subdiff_q_l1l2(
    x: &[f64],
    y: &[f64],
    a: &DMatrix<f64>,
    b: &[f64],
    lambda: f64,
    bounds: &BoxBounds,
) -> Result<f64, CriticalityError> {
    let ny = norm2(y);
    if ny > 1.0 + DUAL_FEASIBILITY_TOL {
        return Err(CriticalityError::DualInfeasible(ny));
    }
    let eta = dot(x, y);
    if !(eta > 0.0) || !bounds.contains(x) {
        return Err(CriticalityError::OutsideDomain(eta));
    }
    let nx = norm2(x);
    let r = residual(a, x, b);
    let rr = norm2_sq(&r);
    let zeta = norm1(x) + 0.5 * lambda * nx * rr;
    if zeta == 0.0 {
        return Ok(0.0);
    }
    let q = zeta / eta;
    let atr = tmat_vec(a, &r);

    let mut primal_sq = 0.0;
    for j in 0..x.len() {
        let grad_j = 0.5 * lambda * rr * x[j] / nx + lambda * nx * atr[j];
        let target = q * y[j] - grad_j;
        let iv = l1_box_subdiff_interval(x[j], bounds.lower()[j], bounds.upper()[j]);
        let d = interval_distance(target, iv);
        primal_sq += d * d;
    }

    let dual = if ny < 1.0 - BOUND_TOL {
        nx
    } else {
        let beta = (eta / (ny * ny)).max(0.0);
        x.iter().zip(y).map(|(xi, yi)| (xi - beta * yi).powi(2)).sum::<f64>().sqrt()
    };
    Ok((primal_sq + q * q * dual * dual).sqrt() / eta)
}

/// Value of the quantity compared against the rule's tolerance; `None` for
/// [`StoppingRule::Never`] or when it cannot be evaluated.
pub fn stop_metric<F, H, G>(problem: &FractionalProblem<F, H, G>, rule: &StoppingRule, x: &[f64], y: &[f64]) -> Option<f64>
where
    F: SeparableTerm,
    H: SmoothTerm,
    G: Denominator,
{
    match rule {
        StoppingRule::RelErr { target, .. } => rel_err(x, target).ok(),
        StoppingRule::SubdiffResidual { .. } => {
            let scale = (norm2_sq(x) + norm2_sq(y)).sqrt();
            dist_subdiff_q(problem, x, y).ok().map(|d| d / scale)
        }
        StoppingRule::FixedPointResidual { alpha_dual, alpha_primal, .. } => {
            let steps = vec![*alpha_primal; problem.partition().num_blocks()];
            fixed_point_residual(problem, x, y, *alpha_dual, &steps).ok()
        }
        StoppingRule::Never => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_err_examples() {
        let r = [1.0, -2.0, 2.0];
        assert_eq!(rel_err(&r, &r), Ok(0.0));
        let scaled: Vec<f64> = r.iter().map(|v| 1.001 * v).collect();
        assert!((rel_err(&scaled, &r).unwrap() - 0.001).abs() < 1e-15);
        assert_eq!(rel_err(&r, &[0.0; 3]), Err(CriticalityError::ZeroReference));
    }

    #[test]
    fn l1l2_distance_second_term() {
        // A = 0, b = 0, lambda irrelevant: Q = ||x||_1 / <x, y>.
        let a = DMatrix::zeros(1, 2);
        let bounds = BoxBounds::symmetric(2, 10.0).unwrap();
        let x = [3.0, 4.0];
        // interior dual: second term is ||x||
        let y = [0.1, 0.2];
        let d = dist_subdiff_q_l1l2(&x, &y, &a, &[0.0], 1.0, &bounds).unwrap();
        let eta: f64 = 0.3 + 0.8;
        let q = 7.0 / eta;
        let primal = ((q * 0.1 - 1.0).powi(2) + (q * 0.2 - 1.0).powi(2)).sqrt();
        let expected = (primal * primal + q * q * 25.0).sqrt() / eta;
        assert!((d - expected).abs() < 1e-12 * expected);

        // boundary dual aligned with x: second term vanishes
        let y = [0.6, 0.8];
        let d = dist_subdiff_q_l1l2(&x, &y, &a, &[0.0], 1.0, &bounds).unwrap();
        let q: f64 = 7.0 / 5.0;
        let primal = ((q * 0.6 - 1.0).powi(2) + (q * 0.8 - 1.0).powi(2)).sqrt();
        assert!((d - primal / 5.0).abs() < 1e-12);

        assert!(matches!(
            dist_subdiff_q_l1l2(&x, &[1.0, 1.0], &a, &[0.0], 1.0, &bounds),
            Err(CriticalityError::DualInfeasible(_))
        ));
    }
}
