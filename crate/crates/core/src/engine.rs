//! Multi-proximity gradient iteration over the lifted objective `Q(x, y)`.
//!
//! Each iteration picks an index `i` in `0..=N`. Index `0` moves the dual
//! variable by a conjugate prox step (`y <- prox_{a g*}(y + a x)`); index
//! `i >= 1` moves primal block `i` by a proximal gradient step on
//! `zeta - Q_t * <., y>`, backtracked until the candidate passes a
//! nonmonotone sufficient-decrease test against the largest `Q` value of
//! the last `M + 1` iterations.

use crate::criticality::{self, StoppingRule};
use crate::ext::ExtReal;
use crate::linalg::{dist2_sq, dot, norm2_sq};
use crate::problem::{Denominator, FractionalProblem, SeparableTerm, SmoothTerm};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;
use std::time::{Duration, Instant};
use thiserror::Error;

/// Hard cap on backtracking steps in one line search.
pub const MAX_BACKTRACKS: usize = 10_000;

/// Below this `|<dx, d grad>|` the spectral step keeps its previous value.
pub const BB_CURVATURE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible starting point: {0}")]
    InfeasibleStart(String),
    #[error("line search on block {block} at iteration {t} exceeded {backtracks} backtracks")]
    LineSearchFailed { t: usize, block: usize, backtracks: usize },
    #[error("numerator became negative ({value}) at iteration {t}")]
    NegativeNumerator { t: usize, value: f64 },
    #[error("iterate left the domain of Q at iteration {t}")]
    LeftDomain { t: usize },
    #[error("stopping rule unavailable for this problem: {0}")]
    UnsupportedStopRule(String),
}

/// How the index `i` in `0..=N` is picked each iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// `i = t mod (N + 1)`.
    Cyclic,
    /// Independent draws with the given probabilities over `0..=N`.
    Randomized { probabilities: Vec<f64> },
}

impl Schedule {
    /// Uniform probabilities `1 / (N + 1)`.
    pub fn uniform(blocks: usize) -> Self {
        Schedule::Randomized { probabilities: vec![1.0 / (blocks + 1) as f64; blocks + 1] }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Schedule::Cyclic => "cmpga",
            Schedule::Randomized { .. } => "rmpga",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Nonmonotone memory `M`; `0` gives a monotone line search.
    pub memory: usize,
    /// Sufficient-decrease weight `sigma > 0`.
    pub sigma: f64,
    /// Backtracking factor in `(0, 1)`.
    pub gamma: f64,
    /// Lower step bound; also the floor of the spectral step.
    pub alpha_min: f64,
    /// Upper step bound; also the cap of the spectral step.
    pub alpha_max: f64,
    /// Fixed step of the dual (index 0) update.
    pub alpha_dual: f64,
    /// Initial spectral step.
    pub bb_init: f64,
    pub schedule: Schedule,
    pub seed: u64,
    pub max_epochs: usize,
    pub stop_rule: StoppingRule,
}

impl SolverConfig {
    /// Settings used for the sparse-recovery experiments: `M = 2`,
    /// `sigma = 1e-6`, `gamma = 0.5`, dual step 1000 and step cap 1e8.
    pub fn experiment_defaults(alpha_min: f64, bb_init: f64, stop_rule: StoppingRule) -> Self {
        Self {
            memory: 2,
            sigma: 1e-6,
            gamma: 0.5,
            alpha_min,
            alpha_max: 1e8,
            alpha_dual: 1000.0,
            bb_init,
            schedule: Schedule::Cyclic,
            seed: 0,
            max_epochs: 10_000,
            stop_rule,
        }
    }

    pub fn validate(&self, blocks: usize) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::InvalidConfig(m.to_string()));
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.alpha_min > 0.0 && self.alpha_min <= self.alpha_max) {
            return bad("step bounds must satisfy 0 < alpha_min <= alpha_max");
        }
        if !(self.alpha_min <= self.alpha_dual && self.alpha_dual <= self.alpha_max) {
            return bad("dual step must lie in [alpha_min, alpha_max]");
        }
        if !(self.alpha_min <= self.bb_init && self.bb_init <= self.alpha_max) {
            return bad("initial spectral step must lie in [alpha_min, alpha_max]");
        }
        if let Schedule::Randomized { probabilities } = &self.schedule {
            if probabilities.len() != blocks + 1 {
                return bad("randomized schedule needs one probability per index 0..=N");
            }
            if probabilities.iter().any(|&p| !(p > 0.0)) {
                return bad("randomized schedule probabilities must be positive");
            }
            let total: f64 = probabilities.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return bad("randomized schedule probabilities must sum to 1");
            }
        }
        if let StoppingRule::RelErr { tol, .. } | StoppingRule::SubdiffResidual { tol } = &self.stop_rule {
            if !(*tol > 0.0) {
                return bad("stopping tolerance must be positive");
            }
        }
        Ok(())
    }
}

/// Draws block indices for a solve; owns the seeded generator.
#[derive(Debug, Clone)]
pub struct BlockSampler {
    schedule: Schedule,
    blocks: usize,
    rng: ChaCha8Rng,
    weighted: Option<WeightedIndex<f64>>,
}

impl BlockSampler {
    pub fn new(schedule: Schedule, blocks: usize, seed: u64) -> Self {
        let weighted = match &schedule {
            Schedule::Randomized { probabilities } => {
                let uniform = probabilities.windows(2).all(|w| w[0] == w[1]);
                (!uniform).then(|| WeightedIndex::new(probabilities.clone()).expect("validated probabilities"))
            }
            Schedule::Cyclic => None,
        };
        Self { schedule, blocks, rng: ChaCha8Rng::seed_from_u64(seed), weighted }
    }

    /// Index for iteration `t`: `0` is the dual step, `1..=N` the primal blocks.
    pub fn next(&mut self, t: usize) -> usize {
        match &self.schedule {
            Schedule::Cyclic => t % (self.blocks + 1),
            Schedule::Randomized { .. } => match &self.weighted {
                Some(w) => w.sample(&mut self.rng),
                None => self.rng.gen_range(0..=self.blocks),
            },
        }
    }
}

/// `Q_(l(t))` and `l(t)` for a window holding `Q_(s)`, `s = t - len + 1 ..= t`.
///
/// `l(t)` is the largest index attaining the window maximum.
pub fn nonmonotone_reference(window: &[f64], t: usize) -> (usize, f64) {
    assert!(!window.is_empty() && window.len() <= t + 1, "window must cover s <= t");
    let start = t + 1 - window.len();
    let mut best = 0;
    for (k, &q) in window.iter().enumerate() {
        if q >= window[best] {
            best = k;
        }
    }
    (start + best, window[best])
}

/// Spectral step `||dx||^2 / |<dx, dgrad>|` clamped to `[floor, cap]`; keeps
/// `previous` when the curvature is below [`BB_CURVATURE_EPS`].
pub fn bb_stepsize(dx: &[f64], dgrad: &[f64], floor: f64, cap: f64, previous: f64) -> f64 {
    let curv = dot(dx, dgrad).abs();
    if curv >= BB_CURVATURE_EPS {
        (norm2_sq(dx) / curv).min(cap).max(floor)
    } else {
        previous
    }
}

/// Dual update `prox_{alpha g*}(y + alpha x)`.
pub fn step_y<F, H, G>(problem: &FractionalProblem<F, H, G>, x: &[f64], y: &[f64], alpha: f64) -> Vec<f64>
where
    F: SeparableTerm,
    H: SmoothTerm,
    G: Denominator,
{
    let z: Vec<f64> = y.iter().zip(x).map(|(yi, xi)| yi + alpha * xi).collect();
    problem.g.prox_conj(&z, alpha)
}

/// Primal block update `prox_{alpha f_i}(x_i - alpha grad_i h(x) + alpha q y_i)`
/// for 0-based block `block`.
pub fn step_x_block<F, H, G>(
    problem: &FractionalProblem<F, H, G>,
    x: &[f64],
    y: &[f64],
    block: usize,
    alpha: f64,
    q: f64,
) -> Vec<f64>
where
    F: SeparableTerm,
    H: SmoothTerm,
    G: Denominator,
{
    let range = problem.partition().range(block);
    let grad = problem.h.partial_gradient(x, range);
    block_prox_step(problem, x, y, block, alpha, q, &grad)
}

fn block_prox_step<F, H, G>(
    problem: &FractionalProblem<F, H, G>,
    x: &[f64],
    y: &[f64],
    block: usize,
    alpha: f64,
    q: f64,
    grad: &[f64],
) -> Vec<f64>
where
    F: SeparableTerm,
    H: SmoothTerm,
    G: Denominator,
{
    let range = problem.partition().range(block);
    let v: Vec<f64> = x[range.clone()]
        .iter()
        .zip(grad)
        .zip(&y[range.clone()])
        .map(|((xi, gi), yi)| xi - alpha * gi + alpha * q * yi)
        .collect();
    problem.f.block_prox(range, &v, alpha)
}

/// Accepted outcome of a block line search.
#[derive(Debug, Clone)]
pub struct LineSearchOutcome<C> {
    pub x: Vec<f64>,
    pub cache: C,
    pub alpha: f64,
    pub backtracks: usize,
    /// `Q(x_new, y)`.
    pub q: f64,
}

/// Backtracking on block `block` (0-based) from `alpha_init`:
/// shrink `alpha` by `gamma` until
/// `zeta(x+) + (sigma/2)||x+ - x||^2 <= q_ref * eta(x+, y)`,
/// evaluated as `(zeta + (sigma/2)||dx||^2) / eta <= q_ref` with `eta > 0`.
#[allow(clippy::too_many_arguments)]
pub fn line_search_x<F, H, G>(
    problem: &FractionalProblem<F, H, G>,
    x: &[f64],
    y: &[f64],
    block: usize,
    alpha_init: f64,
    sigma: f64,
    gamma: f64,
    q_t: f64,
    q_ref: f64,
) -> Result<LineSearchOutcome<H::Cache>, SolveError>
where
    F: SeparableTerm,
    H: SmoothTerm,
    G: Denominator,
{
    let cache = problem.h.prepare(x);
    let grad = problem.h.partial_gradient_cached(x, &cache, problem.partition().range(block));
    line_search_cached(problem, x, y, &cache, &grad, block, alpha_init, sigma, gamma, q_t, q_ref, 0)
}

#[allow(clippy::too_many_arguments)]
fn line_search_cached<F, H, G>(
    problem: &FractionalProblem<F, H, G>,
    x: &[f64],
    y: &[f64],
    cache: &H::Cache,
    grad: &[f64],
    block: usize,
    alpha_init: f64,
    sigma: f64,
    gamma: f64,
    q_t: f64,
    q_ref: f64,
    t: usize,
) -> Result<LineSearchOutcome<H::Cache>, SolveError>
where
    F: SeparableTerm,
    H: SmoothTerm,
    G: Denominator,
{
    let range = problem.partition().range(block);
    let conj = problem.g.conj_value(y).expect_finite("dual iterate stays in dom(g*)");
    let mut alpha = alpha_init;
    let mut candidate = x.to_vec();
    for backtracks in 0..=MAX_BACKTRACKS {
        let xb = block_prox_step(problem, x, y, block, alpha, q_t, grad);
        let delta: Vec<f64> = xb.iter().zip(&x[range.clone()]).map(|(a, b)| a - b).collect();
        candidate[range.clone()].copy_from_slice(&xb);
        let cand_cache = problem.h.shift_cache(cache, range.clone(), &delta);
        if let ExtReal::Finite(zeta) = problem.zeta_cached(&candidate, &cand_cache) {
            let eta = dot(&candidate, y) - conj;
            // Divided form of the test: it accepts the null step exactly and
            // keeps the recorded Q at or below the reference after rounding.
            if eta > 0.0 && (zeta + 0.5 * sigma * norm2_sq(&delta)) / eta <= q_ref {
                return Ok(LineSearchOutcome { x: candidate, cache: cand_cache, alpha, backtracks, q: zeta / eta });
            }
        }
        alpha *= gamma;
    }
    Err(SolveError::LineSearchFailed { t, block: block + 1, backtracks: MAX_BACKTRACKS })
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ResidualMet,
    RelErrMet,
    MaxEpochs,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ResidualMet => "ResidualMet",
            Termination::RelErrMet => "RelErrMet",
            Termination::MaxEpochs => "MaxEpochs",
        }
    }
}

/// `Q_(t)` and the nonmonotone reference `Q_(l(t))` at Step 1 of iteration `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QRecord {
    pub t: usize,
    pub q: f64,
    pub q_ref: f64,
}

/// One completed iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    /// `0` for the dual step, `1..=N` for primal blocks.
    pub index: usize,
    pub alpha: f64,
    pub backtracks: usize,
    /// `||x+ - x||^2 + Q_(l(t)) ||y+ - y||^2`.
    pub step_sq: f64,
    /// Dual step only: `eta(x, y)` before and after.
    pub eta_before: f64,
    pub eta_after: f64,
    /// Dual step only: the update was discarded because the computed
    /// `eta` would have decreased (a rounding-level fixed point).
    pub held: bool,
}

/// Stopping-rule evaluation at an epoch boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub t: usize,
    pub q: f64,
    pub metric: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub epochs: usize,
    pub q_trace: Vec<QRecord>,
    pub step_trace: Vec<StepRecord>,
    pub epoch_trace: Vec<EpochRecord>,
    pub termination: Termination,
    /// Seconds spent iterating, excluding stopping-rule evaluation.
    pub wall_time: f64,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub final_metric: Option<f64>,
    pub final_x: Vec<f64>,
    pub final_y: Vec<f64>,
}

impl SolveReport {
    /// Iterations at which `Q_(l(t+1)) > Q_(l(t))`.
    pub fn reference_increases(&self) -> Vec<usize> {
        self.q_trace.windows(2).filter(|w| w[1].q_ref > w[0].q_ref).map(|w| w[1].t).collect()
    }

    /// Iterations at which `Q_(t) > F(x0)`.
    pub fn bound_violations(&self) -> Vec<usize> {
        self.q_trace.iter().filter(|r| r.q > self.initial_objective).map(|r| r.t).collect()
    }

    /// Iterations at which `Q_(t+1) > Q_(t)`.
    pub fn q_increases(&self) -> Vec<usize> {
        self.q_trace.windows(2).filter(|w| w[1].q > w[0].q).map(|w| w[1].t).collect()
    }

    pub fn min_accepted_alpha(&self) -> f64 {
        self.step_trace.iter().map(|s| s.alpha).fold(f64::INFINITY, f64::min)
    }
}

/// Current primal-dual point with the cached smooth-term data.
#[derive(Debug, Clone)]
pub struct IterateState<C> {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub cache: C,
    pub t: usize,
    /// `Q_(s)` for the last `M + 1` iterations, oldest first.
    pub q_window: VecDeque<f64>,
    /// Spectral step to use at the next primal iteration.
    pub alpha_bb: f64,
}

/// Runs the iteration from `x0` with `y0 = initial_dual(x0)` until the stop
/// rule fires or `max_epochs` epochs of `N + 1` iterations have elapsed.
pub fn solve<F, H, G>(
    problem: &FractionalProblem<F, H, G>,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<SolveReport, SolveError>
where
    F: SeparableTerm,
    H: SmoothTerm,
    G: Denominator,
{
    let blocks = problem.partition().num_blocks();
    config.validate(blocks)?;
    if x0.len() != problem.dim() {
        return Err(SolveError::InfeasibleStart(format!("x0 has length {}, expected {}", x0.len(), problem.dim())));
    }
    let f0 = match problem.objective(x0) {
        ExtReal::Finite(v) => v,
        other => return Err(SolveError::InfeasibleStart(format!("F(x0) = {other}"))),
    };
    let y0 = problem.initial_dual(x0).map_err(|e| SolveError::InfeasibleStart(e.to_string()))?;
    if matches!(config.stop_rule, StoppingRule::SubdiffResidual { .. })
        && criticality::dist_subdiff_q(problem, x0, &y0).is_err()
    {
        return Err(SolveError::UnsupportedStopRule(
            "no closed-form subdifferential distance for this model".into(),
        ));
    }

    let period = blocks + 1;
    let mut sampler = BlockSampler::new(config.schedule.clone(), blocks, config.seed);
    let mut state = IterateState {
        cache: problem.h.prepare(x0),
        x: x0.to_vec(),
        y: y0,
        t: 0,
        q_window: VecDeque::with_capacity(config.memory + 1),
        alpha_bb: config.bb_init,
    };

    let mut q_trace = Vec::new();
    let mut step_trace = Vec::new();
    let mut epoch_trace = Vec::new();
    let mut stop_time = Duration::ZERO;
    let start = Instant::now();

    let (termination, final_metric) = loop {
        let t = state.t;
        let boundary = t % period == 0;

        // Step 1
        let q_t = match problem.q_cached(&state.x, &state.y, &state.cache) {
            ExtReal::Finite(v) => v,
            _ => return Err(SolveError::LeftDomain { t }),
        };
        if state.q_window.len() == config.memory + 1 {
            state.q_window.pop_front();
        }
        state.q_window.push_back(q_t);
        let (_, q_ref) = nonmonotone_reference(state.q_window.make_contiguous(), t);
        q_trace.push(QRecord { t, q: q_t, q_ref });

        if boundary {
            let epoch = t / period;
            let clock = Instant::now();
            let metric = criticality::stop_metric(problem, &config.stop_rule, &state.x, &state.y);
            stop_time += clock.elapsed();
            epoch_trace.push(EpochRecord { epoch, t, q: q_t, metric });
            if let Some(m) = metric {
                match &config.stop_rule {
                    StoppingRule::RelErr { tol, .. } if m < *tol => break (Termination::RelErrMet, metric),
                    StoppingRule::SubdiffResidual { tol } | StoppingRule::FixedPointResidual { tol, .. } if m < *tol => {
                        break (Termination::ResidualMet, metric)
                    }
                    _ => {}
                }
            }
            if epoch >= config.max_epochs {
                break (Termination::MaxEpochs, metric);
            }
        }

        // Step 2
        let index = sampler.next(t);
        if index == 0 {
            let alpha = config.alpha_dual;
            let y_new = step_y(problem, &state.x, &state.y, alpha);
            let eta_before = problem.eta(&state.x, &state.y).to_f64();
            let eta_after = problem.eta(&state.x, &y_new).to_f64();
            // In exact arithmetic eta cannot decrease here; a computed
            // decrease means y is a fixed point up to rounding.
            let held = !(eta_after >= eta_before);
            if held {
                step_trace.push(StepRecord { t, index, alpha, backtracks: 0, step_sq: 0.0, eta_before, eta_after: eta_before, held });
            } else {
                let step_sq = q_ref * dist2_sq(&state.y, &y_new);
                step_trace.push(StepRecord { t, index, alpha, backtracks: 0, step_sq, eta_before, eta_after, held });
                state.y = y_new;
            }
        } else {
            let block = index - 1;
            let range = problem.partition().range(block);
            let grad = problem.h.partial_gradient_cached(&state.x, &state.cache, range.clone());
            let outcome = line_search_cached(
                problem,
                &state.x,
                &state.y,
                &state.cache,
                &grad,
                block,
                state.alpha_bb,
                config.sigma,
                config.gamma,
                q_t,
                q_ref,
                t,
            )?;
            let zeta = problem.zeta_cached(&outcome.x, &outcome.cache).to_f64();
            if zeta < 0.0 {
                return Err(SolveError::NegativeNumerator { t, value: zeta });
            }
            let dx: Vec<f64> = outcome.x[range.clone()].iter().zip(&state.x[range.clone()]).map(|(a, b)| a - b).collect();
            let step_sq = norm2_sq(&dx);
            // x changed only on this block, so the spectral ratio needs only
            // the block slice of the gradient difference.
            let grad_new = problem.h.partial_gradient_cached(&outcome.x, &outcome.cache, range);
            let dgrad: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
            state.alpha_bb = bb_stepsize(&dx, &dgrad, config.alpha_min, config.alpha_max, state.alpha_bb);
            step_trace.push(StepRecord {
                t,
                index,
                alpha: outcome.alpha,
                backtracks: outcome.backtracks,
                step_sq,
                eta_before: f64::NAN,
                eta_after: f64::NAN,
                held: false,
            });
            state.x = outcome.x;
            state.cache = outcome.cache;
        }

        // Step 3
        state.t += 1;
    };

    let wall_time = start.elapsed().saturating_sub(stop_time).as_secs_f64();
    let final_objective = problem.objective(&state.x).to_f64();
    Ok(SolveReport {
        iterations: state.t,
        epochs: state.t / period,
        q_trace,
        step_trace,
        epoch_trace,
        termination,
        wall_time,
        initial_objective: f0,
        final_objective,
        final_metric,
        final_x: state.x,
        final_y: state.y,
    })
}
