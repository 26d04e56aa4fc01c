//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs the full-scale benchmarks, so build with optimizations.

use mpga::bench::{
    instance_seed, model_step_bounds, solve_instance, Algorithm, AlgorithmSpec, InvariantCounts, SolveOptions,
};
use mpga::engine::{line_search_x, nonmonotone_reference, step_y};
use mpga::instance::{init_point, make_l1l2_instance, make_l1sk_instance, Instance, Model, L1L2_CERTIFICATE_TOL, L1SK_CERTIFICATE_TOL};
use mpga::linalg::dist2_sq;
use mpga::prox::{brute_prox_oracle, project_knorm_dual_ball, project_l2_ball, prox_knorm, prox_l1_box, BoxBounds};
use mpga::{Denominator, FractionalProblem, SeparableTerm, SmoothTerm, SolveReport, Termination};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const L1SK_INSTANCES: usize = 50;
const L1L2_INSTANCES: usize = 10;
const MONOTONE_RUNS: usize = 10;
const ORACLE_CASES: usize = 1000;
const DUAL_STEP_STATES: usize = 1000;

struct Ledger {
    failed: usize,
}

impl Ledger {
    fn report(&mut self, id: u32, name: &str, ok: bool, detail: String) {
        println!("{} {id} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

#[derive(Default)]
struct Tally {
    invariants: InvariantCounts,
    traces: usize,
    worst_certificate_sk: f64,
    worst_certificate_l2: f64,
    certificates: usize,
}

impl Tally {
    fn absorb(&mut self, report: &SolveReport) {
        let c = InvariantCounts::from_report(report);
        self.invariants.reference_increases += c.reference_increases;
        self.invariants.bound_violations += c.bound_violations;
        self.traces += 1;
    }

    fn certificate(&mut self, inst: &Instance) {
        match inst.model {
            Model::L1SK => self.worst_certificate_sk = self.worst_certificate_sk.max(inst.certificate),
            Model::L1L2 => self.worst_certificate_l2 = self.worst_certificate_l2.max(inst.certificate),
        }
        self.certificates += 1;
    }
}

/// Options with the spectral-norm step bounds computed once per instance.
fn pinned_options(inst: &Instance) -> SolveOptions {
    let mut opts = SolveOptions::for_model(inst.model);
    let (floor, init) = model_step_bounds(inst);
    opts.alpha_min = Some(floor);
    opts.bb_init = Some(init);
    opts
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn norm_inf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

/// K-norm of a vector of length at most 3 without allocating.
fn small_k_norm(w: &[f64], k: usize) -> f64 {
    let mut a = [0.0f64; 3];
    for (ai, wi) in a.iter_mut().zip(w) {
        *ai = wi.abs();
    }
    a.sort_by(|x, y| y.total_cmp(x));
    a[..k].iter().sum()
}

fn within_half(value: f64, target: f64) -> bool {
    (value - target).abs() <= 0.5 * target
}

fn cmpga(blocks: usize, memory: usize) -> AlgorithmSpec {
    AlgorithmSpec { schedule: Algorithm::Cmpga, blocks, memory }
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
fn r_squared(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    (1.0 - ss_res / syy, slope)
}

/// `log10(rel-err)` against epoch over the final two-thirds of the trace.
fn final_two_thirds_fit(report: &SolveReport) -> (f64, f64, usize) {
    let trace: Vec<(f64, f64)> =
        report.epoch_trace.iter().filter_map(|e| e.metric.map(|m| (e.epoch as f64, m.log10()))).collect();
    let keep = (2 * trace.len()).div_ceil(3);
    let tail = &trace[trace.len() - keep..];
    let (x, y): (Vec<f64>, Vec<f64>) = tail.iter().cloned().unzip();
    let (r2, slope) = r_squared(&x, &y);
    (r2, slope, keep)
}

fn main() {
    let start = Instant::now();
    let mut ledger = Ledger { failed: 0 };
    let mut tally = Tally::default();

    // Criteria 1, 2, 5, 9: full-scale L1/SK.
    let (m, n, r, lambda) = (640, 5400, 100, 200.0);
    let mut epochs_d1 = Vec::new();
    let mut epochs_d10_n8 = Vec::new();
    let mut epochs_d10_n1 = Vec::new();
    let mut sk_unconverged = 0;
    let mut monotone_q_increases = 0;
    let mut monotone_unconverged = 0;
    let mut monotone_reports = Vec::new();
    for (cell, d) in [1.0, 10.0].into_iter().enumerate() {
        for i in 0..L1SK_INSTANCES {
            let seed = instance_seed(0, cell, i);
            let inst = make_l1sk_instance(m, n, r, d, lambda, r, seed).expect("L1/SK instance");
            tally.certificate(&inst);
            let x0 = init_point(&inst, seed).expect("start").x;
            let opts = pinned_options(&inst);
            let mut run = |algo: AlgorithmSpec| {
                let report = solve_instance(&inst, &x0, &algo, &opts, seed).expect("solve");
                tally.absorb(&report);
                report
            };
            let n8 = run(cmpga(8, 2));
            sk_unconverged += usize::from(n8.termination != Termination::RelErrMet);
            if cell == 0 {
                epochs_d1.push(n8.epochs as f64);
                if i < MONOTONE_RUNS {
                    let mono = run(cmpga(8, 0));
                    monotone_q_increases += mono.q_increases().len();
                    monotone_unconverged += usize::from(mono.termination != Termination::RelErrMet);
                    monotone_reports.push(mono);
                }
            } else {
                epochs_d10_n8.push(n8.epochs as f64);
                let n1 = run(cmpga(1, 2));
                sk_unconverged += usize::from(n1.termination != Termination::RelErrMet);
                epochs_d10_n1.push(n1.epochs as f64);
            }
        }
    }
    let (mean_d1, mean_d10) = (mean(&epochs_d1), mean(&epochs_d10_n8));
    ledger.report(
        1,
        "L1/SK full-scale epochs",
        within_half(mean_d1, 65.0) && within_half(mean_d10, 148.0) && sk_unconverged == 0,
        format!(
            "mean epochs D=1 {mean_d1:.1} (target 65 +-50%), D=10 {mean_d10:.1} (target 148 +-50%), {sk_unconverged} runs missed rel-err < 1e-3"
        ),
    );
    let mean_n1 = mean(&epochs_d10_n1);
    ledger.report(
        2,
        "block-count trend",
        mean_d10 < mean_n1 && within_half(mean_n1, 253.0) && within_half(mean_d10, 148.0),
        format!("D=10 mean epochs N=1 {mean_n1:.1} (target 253 +-50%), N=8 {mean_d10:.1} (target 148 +-50%)"),
    );

    // Criterion 3: L1/L2 protocol.
    let variants = [cmpga(1, 2), cmpga(8, 2), AlgorithmSpec { schedule: Algorithm::Rmpga, blocks: 8, memory: 2 }];
    let mut l2_unconverged = 0;
    let mut worst_gap = 0.0f64;
    for i in 0..L1L2_INSTANCES {
        let seed = instance_seed(1000, 0, i);
        let inst = make_l1l2_instance(512, 4320, 48, 1.0, 2e-4, seed).expect("L1/L2 instance");
        tally.certificate(&inst);
        let x0 = init_point(&inst, seed).expect("start").x;
        let opts = pinned_options(&inst);
        let objectives: Vec<f64> = variants
            .iter()
            .enumerate()
            .map(|(ai, algo)| {
                let report = solve_instance(&inst, &x0, algo, &opts, seed.wrapping_add(ai as u64)).expect("solve");
                tally.absorb(&report);
                l2_unconverged += usize::from(report.termination != Termination::ResidualMet);
                report.final_objective
            })
            .collect();
        for a in 0..objectives.len() {
            for b in a + 1..objectives.len() {
                let gap = (objectives[a] - objectives[b]).abs() / objectives[a].abs().min(objectives[b].abs());
                worst_gap = worst_gap.max(gap);
            }
        }
    }
    ledger.report(
        3,
        "L1/L2 protocol",
        l2_unconverged == 0 && worst_gap <= 1e-3,
        format!(
            "{l2_unconverged} of {} runs missed the residual rule; worst pairwise objective gap {worst_gap:.2e} (<= 1e-3)",
            3 * L1L2_INSTANCES
        ),
    );

    ledger.report(
        4,
        "descent invariants",
        tally.invariants.reference_increases == 0 && tally.invariants.bound_violations == 0,
        format!(
            "{} traces: {} reference increases, {} values above F(x0)",
            tally.traces, tally.invariants.reference_increases, tally.invariants.bound_violations
        ),
    );
    ledger.report(
        5,
        "monotone variant",
        monotone_q_increases == 0 && monotone_unconverged == 0,
        format!("M=0 on {MONOTONE_RUNS} L1/SK runs: {monotone_q_increases} increases of Q, {monotone_unconverged} unconverged"),
    );
    ledger.report(
        6,
        "criticality certificates",
        tally.worst_certificate_sk <= L1SK_CERTIFICATE_TOL && tally.worst_certificate_l2 <= L1L2_CERTIFICATE_TOL,
        format!(
            "{} instances: worst L1/SK {:.2e} (<= 1e-6), worst L1/L2 {:.2e} (<= 1e-8)",
            tally.certificates, tally.worst_certificate_sk, tally.worst_certificate_l2
        ),
    );

    let (oracle_ok, oracle_detail) = prox_oracle_checks();
    ledger.report(7, "prox oracle equivalence", oracle_ok, oracle_detail);

    let worst = dual_step_worst();
    ledger.report(
        8,
        "dual step inequalities",
        worst <= 1e-10,
        format!("{DUAL_STEP_STATES} trajectory states, worst violation {worst:.2e} (<= 1e-10)"),
    );

    let fits: Vec<(f64, f64, usize)> = monotone_reports.iter().map(final_two_thirds_fit).collect();
    let (r2, slope, points) = fits[0];
    let (lo, hi) = fits.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f.0), hi.max(f.0)));
    ledger.report(
        9,
        "linear rate of monotone variant",
        r2 >= 0.9,
        format!(
            "R^2 {r2:.3} (>= 0.9) over the last {points} epochs, slope {slope:.3} decades/epoch; R^2 range over {} runs [{lo:.3}, {hi:.3}]",
            fits.len()
        ),
    );

    println!("{} criteria failed, {:.1} s", ledger.failed, start.elapsed().as_secs_f64());
    if ledger.failed > 0 {
        std::process::exit(1);
    }
}

fn prox_oracle_checks() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut misses = [0usize; 4];
    for _ in 0..ORACLE_CASES {
        let lo = rng.gen_range(-2.0..-0.1);
        let hi = rng.gen_range(0.1..2.0);
        let b = BoxBounds::new(vec![lo], vec![hi]).unwrap();
        let z = [rng.gen_range(-3.0..3.0)];
        let alpha = rng.gen_range(0.05..2.0);
        let grid = brute_prox_oracle(&z, alpha, |w| if b.contains(w) { w[0].abs() } else { f64::INFINITY }).unwrap();
        misses[0] += usize::from(norm_inf_diff(&prox_l1_box(&z, alpha, &b), &grid.point) > 2.0 * grid.step);
    }
    for (slot, dim) in [(1, 2), (2, 3)] {
        for _ in 0..ORACLE_CASES {
            let z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let beta = rng.gen_range(0.05..2.0);
            let k = rng.gen_range(1..=dim);
            let grid = brute_prox_oracle(&z, beta, |w| small_k_norm(w, k)).unwrap();
            misses[slot] += usize::from(norm_inf_diff(&prox_knorm(&z, beta, k).unwrap(), &grid.point) > 2.0 * grid.step);
        }
    }
    // Side evidence for the l2 ball: whether the analytic point is at least
    // as close to z as the grid point, and the offset relative to sqrt(step).
    let (mut no_worse, mut sqrt_ratio) = (0usize, 0.0f64);
    for _ in 0..ORACLE_CASES {
        let z: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let alpha = rng.gen_range(0.05..2.0);
        let inside = |w: &[f64]| if w[0] * w[0] + w[1] * w[1] <= 1.0 { 0.0 } else { f64::INFINITY };
        let grid = brute_prox_oracle(&z, alpha, inside).unwrap();
        let p = project_l2_ball(&z);
        let offset = norm_inf_diff(&p, &grid.point);
        misses[3] += usize::from(offset > 2.0 * grid.step);
        no_worse += usize::from(dist2_sq(&p, &z) <= dist2_sq(&grid.point, &z));
        sqrt_ratio = sqrt_ratio.max(offset / grid.step.sqrt());
    }
    let mut moreau = 0.0f64;
    for _ in 0..ORACLE_CASES {
        let n = rng.gen_range(1..12);
        let k = rng.gen_range(1..=n);
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let alpha: f64 = 10f64.powf(rng.gen_range(-1.5..2.0));
        let dual = project_knorm_dual_ball(&z, k).unwrap();
        let scaled: Vec<f64> = z.iter().map(|v| v / alpha).collect();
        let primal = prox_knorm(&scaled, 1.0 / alpha, k).unwrap();
        let sum: Vec<f64> = dual.iter().zip(&primal).map(|(d, p)| d + alpha * p).collect();
        moreau = moreau.max(norm_inf_diff(&sum, &z));
    }
    let ok = misses.iter().all(|&c| c == 0) && moreau <= 1e-12;
    let detail = format!(
        "misses beyond 2 grid steps: l1-box 1-D {}, K-norm 2-D {}, K-norm 3-D {}, l2-ball 2-D {} (of {ORACLE_CASES} each; \
         analytic no farther from z than the grid point in {no_worse}, offset <= {sqrt_ratio:.2} sqrt(step)); Moreau residual {moreau:.2e} (<= 1e-12)",
        misses[0], misses[1], misses[2], misses[3]
    );
    (ok, detail)
}

/// Worst violation of `eta(x, y) + ||y - y+||^2 / a <= eta(x, y+) <= g(x)`
/// over states sampled from cyclic trajectories of small instances.
fn dual_step_worst() -> f64 {
    const ALPHA_DUAL: f64 = 1000.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for (model, count) in [(Model::L1SK, DUAL_STEP_STATES / 2), (Model::L1L2, DUAL_STEP_STATES - DUAL_STEP_STATES / 2)] {
        let mut states = Vec::new();
        for seed in 0..4 {
            let inst = match model {
                Model::L1SK => make_l1sk_instance(96, 384, 8, 1.0, 50.0, 8, seed).unwrap(),
                Model::L1L2 => make_l1l2_instance(96, 384, 6, 1.0, 2e-4, seed).unwrap(),
            };
            let x0 = init_point(&inst, seed).unwrap().x;
            let (floor, init) = model_step_bounds(&inst);
            match model {
                Model::L1SK => states.extend(trajectory(&inst.l1sk_problem(4).unwrap(), &x0, floor.max(init), ALPHA_DUAL)),
                Model::L1L2 => states.extend(trajectory(&inst.l1l2_problem(4).unwrap(), &x0, init, ALPHA_DUAL)),
            }
            let picks: Vec<usize> = (0..count / 4).map(|_| rng.gen_range(0..states.len())).collect();
            for &p in &picks {
                let (x, y) = &states[p];
                let excess = match model {
                    Model::L1SK => dual_step_excess(&inst.l1sk_problem(4).unwrap(), x, y, ALPHA_DUAL),
                    Model::L1L2 => dual_step_excess(&inst.l1l2_problem(4).unwrap(), x, y, ALPHA_DUAL),
                };
                worst = worst.max(excess);
            }
            states.clear();
        }
    }
    worst
}

/// Every `(x, y)` visited by 60 cyclic epochs with memory 2.
fn trajectory<F, H, G>(p: &FractionalProblem<F, H, G>, x0: &[f64], alpha_x: f64, alpha_dual: f64) -> Vec<(Vec<f64>, Vec<f64>)>
where
    F: SeparableTerm,
    H: SmoothTerm,
    G: Denominator,
{
    let blocks = p.partition().num_blocks();
    let mut x = x0.to_vec();
    let mut y = p.initial_dual(x0).unwrap();
    let mut window: Vec<f64> = Vec::new();
    let mut states = Vec::new();
    for t in 0..60 * (blocks + 1) {
        states.push((x.clone(), y.clone()));
        let q = p.q(&x, &y).to_f64();
        window.push(q);
        if window.len() > 3 {
            window.remove(0);
        }
        let (_, q_ref) = nonmonotone_reference(&window, t);
        match t % (blocks + 1) {
            0 => y = step_y(p, &x, &y, alpha_dual),
            i => x = line_search_x(p, &x, &y, i - 1, alpha_x, 1e-6, 0.5, q, q_ref).unwrap().x,
        }
    }
    states
}

fn dual_step_excess<F, H, G>(p: &FractionalProblem<F, H, G>, x: &[f64], y: &[f64], alpha: f64) -> f64
where
    F: SeparableTerm,
    H: SmoothTerm,
    G: Denominator,
{
    let y_new = step_y(p, x, y, alpha);
    let before = p.eta(x, y).to_f64();
    let after = p.eta(x, &y_new).to_f64();
    let moved = dist2_sq(y, &y_new) / alpha;
    (before + moved - after).max(after - p.g.value(x)).max(0.0)
}
