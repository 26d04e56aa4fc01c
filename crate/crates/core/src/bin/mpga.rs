use clap::{Parser, Subcommand};
use mpga::bench::{
    aggregate, solve_instance, summary_path, write_runs, write_summary, Algorithm, AlgorithmSpec, ExperimentSpec,
    InvariantCounts, SolveOptions, StopKind,
};
use mpga::criticality::{dist_subdiff_q_l1l2, fixed_point_residual};
use mpga::engine::step_y;
use mpga::instance::{init_point, load_instance, make_l1l2_instance, make_l1sk_instance, save_instance, Instance, Model};
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mpga", version, about = "Block primal-dual solvers for sparse-recovery ratio models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file and its manifest.
    Gen {
        #[arg(long)]
        model: Model,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long = "D", alias = "d", default_value_t = 1.0)]
        d: f64,
        #[arg(long)]
        lambda: f64,
        /// K-norm order for L1SK; defaults to r.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one instance file.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value = "cmpga")]
        algo: Algorithm,
        #[arg(long, default_value_t = 8)]
        blocks: usize,
        #[arg(long, default_value_t = 2)]
        memory: usize,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long = "alpha-y")]
        alpha_y: Option<f64>,
        #[arg(long = "alpha-cap")]
        alpha_cap: Option<f64>,
        /// Seed for the starting point and the randomized schedule.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "max-epochs")]
        max_epochs: Option<usize>,
        #[arg(long)]
        stop: Option<StopKind>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run an experiment spec (TOML) and write per-run and summary CSVs.
    Bench {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check an instance file: construction certificate, descent invariants
    /// along a default solve, and the dual-step inequalities on its trajectory.
    Verify {
        instance: PathBuf,
        #[arg(long, default_value_t = 8)]
        blocks: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen { model, m, n, r, d, lambda, k, seed, out } => {
            let built = match model {
                Model::L1SK => make_l1sk_instance(m, n, r, d, lambda, k.unwrap_or(r), seed),
                Model::L1L2 => make_l1l2_instance(m, n, r, d, lambda, seed),
            };
            let inst = match built {
                Ok(i) => i,
                Err(e) => return fail(2, &e),
            };
            if let Err(e) = save_instance(&inst, &out) {
                return fail(1, &e);
            }
            println!("wrote {} (certificate {:e})", out.display(), inst.certificate);
            ExitCode::SUCCESS
        }
        Command::Solve { instance, algo, blocks, memory, sigma, gamma, alpha_y, alpha_cap, seed, max_epochs, stop, tol } => {
            let inst = match load_instance(&instance) {
                Ok(i) => i,
                Err(e) => return fail(2, &e),
            };
            let mut opts = SolveOptions::for_model(inst.model);
            opts.sigma = sigma.unwrap_or(opts.sigma);
            opts.gamma = gamma.unwrap_or(opts.gamma);
            opts.alpha_dual = alpha_y.unwrap_or(opts.alpha_dual);
            opts.alpha_max = alpha_cap.unwrap_or(opts.alpha_max);
            opts.max_epochs = max_epochs.unwrap_or(opts.max_epochs);
            opts.stop = stop.unwrap_or(opts.stop);
            opts.tol = tol.unwrap_or(opts.tol);
            if blocks < 1 || blocks > inst.n {
                return fail(2, &format!("--blocks must lie in 1..={}", inst.n));
            }
            let algo = AlgorithmSpec { schedule: algo, blocks, memory };
            let x0 = match init_point(&inst, seed) {
                Ok(p) => p,
                Err(e) => return fail(1, &e),
            };
            match solve_instance(&inst, &x0.x, &algo, &opts, seed) {
                Ok(report) => {
                    let inv = InvariantCounts::from_report(&report);
                    println!("algorithm={} N={} M={}", algo.schedule, algo.blocks, algo.memory);
                    println!("termination={}", report.termination.as_str());
                    println!("epochs={}", report.epochs);
                    println!("iterations={}", report.iterations);
                    println!("wall_time_sec={:.6}", report.wall_time);
                    println!("initial_objective={:.16e}", report.initial_objective);
                    println!("final_objective={:.16e}", report.final_objective);
                    println!("final_metric={}", report.final_metric.map_or("NaN".into(), |m| format!("{m:.16e}")));
                    println!("reference_increases={} bound_violations={}", inv.reference_increases, inv.bound_violations);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(1, &e),
            }
        }
        Command::Bench { config, out, jobs } => {
            let spec = match ExperimentSpec::load(&config) {
                Ok(s) => s,
                Err(e) => return fail(2, &e),
            };
            let Some(out) = out.or_else(|| spec.output.clone()) else {
                return fail(2, &"no output path: pass --out or set `output` in the spec");
            };
            let rows = match mpga::bench::run_experiment(&spec, jobs) {
                Ok(r) => r,
                Err(e) => return fail(2, &e),
            };
            let written = File::create(&out)
                .map_err(mpga::bench::BenchError::from)
                .and_then(|f| write_runs(&rows, BufWriter::new(f)))
                .and_then(|_| File::create(summary_path(&out)).map_err(Into::into))
                .and_then(|f| write_summary(&aggregate(&rows), BufWriter::new(f)));
            if let Err(e) = written {
                return fail(1, &e);
            }
            let errors: Vec<_> = rows.iter().filter(|r| r.is_error()).collect();
            for r in &errors {
                eprintln!("error: cell {} seed {} {}: {}", r.cell_index, r.seed, r.algorithm.schedule, r.error.as_deref().unwrap_or(""));
            }
            println!("{} rows -> {}", rows.len(), out.display());
            if errors.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Verify { instance, blocks, seed } => {
            let inst = match load_instance(&instance) {
                Ok(i) => i,
                Err(e) => return fail(2, &e),
            };
            match verify(&inst, blocks, seed) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(1),
                Err(e) => fail(1, &e),
            }
        }
    }
}

fn fail(code: u8, err: &dyn std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

fn check(name: &str, ok: bool, detail: String) -> bool {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn verify(inst: &Instance, blocks: usize, seed: u64) -> Result<bool, Box<dyn std::error::Error>> {
    let mut all = true;
    match inst.model {
        Model::L1SK => {
            let p = inst.l1sk_problem(1)?;
            let y = p.initial_dual(&inst.x_true)?;
            let res = fixed_point_residual(&p, &inst.x_true, &y, 1000.0, &[1.0])?;
            all &= check("certificate", res <= 1e-6, format!("fixed-point residual {res:e} (<= 1e-6)"));
        }
        Model::L1L2 => {
            let nx = mpga::linalg::norm2(&inst.x_true);
            let y: Vec<f64> = inst.x_true.iter().map(|v| v / nx).collect();
            let d = dist_subdiff_q_l1l2(&inst.x_true, &y, &inst.a, &inst.b, inst.lambda, &inst.bounds)?;
            all &= check("certificate", d <= 1e-8, format!("dist(0, dQ) {d:e} (<= 1e-8)"));
        }
    }

    let blocks = blocks.clamp(1, inst.n);
    let algo = AlgorithmSpec { schedule: Algorithm::Cmpga, blocks, memory: 2 };
    let opts = SolveOptions::for_model(inst.model);
    let x0 = init_point(inst, seed)?;
    let report = solve_instance(inst, &x0.x, &algo, &opts, seed)?;
    let inv = InvariantCounts::from_report(&report);
    all &= check(
        "reference non-increasing",
        inv.reference_increases == 0,
        format!("{} increases over {} iterations", inv.reference_increases, report.iterations),
    );
    all &= check("bounded by F(x0)", inv.bound_violations == 0, format!("{} violations", inv.bound_violations));
    all &= check(
        "termination",
        report.final_metric.is_some_and(|m| m < opts.tol),
        format!("{} after {} epochs", report.termination.as_str(), report.epochs),
    );

    // Replay the trajectory's dual steps and check
    // eta(x, y) + ||y - y+||^2 / a <= eta(x, y+) <= g(x).
    let mut worst = 0.0f64;
    let problem_check = |x: &[f64], y: &[f64]| -> Result<f64, Box<dyn std::error::Error>> {
        let a = opts.alpha_dual;
        let excess = match inst.model {
            Model::L1SK => dual_step_excess(&inst.l1sk_problem(1)?, x, y, a),
            Model::L1L2 => dual_step_excess(&inst.l1l2_problem(1)?, x, y, a),
        };
        Ok(excess)
    };
    worst = worst.max(problem_check(&x0.x, &initial_dual(inst, &x0.x)?)?);
    worst = worst.max(problem_check(&report.final_x, &report.final_y)?);
    all &= check("dual step inequalities", worst <= 1e-10, format!("max violation {worst:e} (<= 1e-10)"));
    Ok(all)
}

fn initial_dual(inst: &Instance, x: &[f64]) -> Result<Vec<f64>, Box<dyn std::error::Error>> {
    Ok(match inst.model {
        Model::L1SK => inst.l1sk_problem(1)?.initial_dual(x)?,
        Model::L1L2 => inst.l1l2_problem(1)?.initial_dual(x)?,
    })
}

fn dual_step_excess<F, H, G>(p: &mpga::FractionalProblem<F, H, G>, x: &[f64], y: &[f64], alpha: f64) -> f64
where
    F: mpga::SeparableTerm,
    H: mpga::SmoothTerm,
    G: mpga::Denominator,
{
    let y_new = step_y(p, x, y, alpha);
    let before = p.eta(x, y).to_f64();
    let after = p.eta(x, &y_new).to_f64();
    let gx = p.g.value(x);
    let moved = mpga::linalg::dist2_sq(y, &y_new) / alpha;
    (before + moved - after).max(after - gx).max(0.0)
}
