//! Batch experiments over instance grids, with CSV output.

use crate::criticality::StoppingRule;
use crate::engine::{solve, Schedule, SolveError, SolveReport, SolverConfig, Termination};
use crate::instance::{init_point, make_l1l2_instance, make_l1sk_instance, mix_seed, Instance, InstanceError, Model};
use crate::linalg::spectral_norm;
use rayon::prelude::*;
use serde::Deserialize;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment spec: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Cmpga,
    Rmpga,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Cmpga => "CMPGA",
            Algorithm::Rmpga => "RMPGA",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cmpga" => Ok(Algorithm::Cmpga),
            "rmpga" => Ok(Algorithm::Rmpga),
            other => Err(format!("unknown algorithm '{other}' (expected cmpga or rmpga)")),
        }
    }
}

/// One algorithm column: schedule, block count `N` and memory `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
pub struct AlgorithmSpec {
    pub schedule: Algorithm,
    pub blocks: usize,
    #[serde(default = "default_memory")]
    pub memory: usize,
}

fn default_memory() -> usize {
    2
}

/// One grid cell `(m, n, r, D, lambda)`; `k` defaults to `r` for L1/SK.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct GridCell {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    #[serde(rename = "D", alias = "d")]
    pub d: f64,
    pub lambda: f64,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopKind {
    /// `||x - x_true|| / ||x_true||`.
    Relerr,
    /// `dist(0, partial Q) / ||(x, y)||` for L1/L2, fixed-point residual for L1/SK.
    Residual,
}

impl FromStr for StopKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "relerr" => Ok(StopKind::Relerr),
            "residual" => Ok(StopKind::Residual),
            other => Err(format!("unknown stop rule '{other}' (expected relerr or residual)")),
        }
    }
}

/// Solver settings shared by every run of an experiment.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOptions {
    pub sigma: f64,
    pub gamma: f64,
    pub alpha_dual: f64,
    pub alpha_max: f64,
    /// Step floor and initial spectral step; model default when absent.
    pub alpha_min: Option<f64>,
    pub bb_init: Option<f64>,
    pub max_epochs: usize,
    pub stop: StopKind,
    pub tol: f64,
}

impl SolveOptions {
    /// Experiment settings: relative error below `1e-3` for L1/SK and the
    /// scaled subdifferential residual below `1e-7` for L1/L2.
    pub fn for_model(model: Model) -> Self {
        let (stop, tol) = match model {
            Model::L1SK => (StopKind::Relerr, 1e-3),
            Model::L1L2 => (StopKind::Residual, 1e-7),
        };
        Self {
            sigma: 1e-6,
            gamma: 0.5,
            alpha_dual: 1000.0,
            alpha_max: 1e8,
            alpha_min: None,
            bb_init: None,
            max_epochs: 20_000,
            stop,
            tol,
        }
    }
}

/// Partial overrides of [`SolveOptions`] as read from a spec file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveOverrides {
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha_dual: Option<f64>,
    pub alpha_max: Option<f64>,
    pub alpha_min: Option<f64>,
    pub bb_init: Option<f64>,
    pub max_epochs: Option<usize>,
    pub stop: Option<StopKind>,
    pub tol: Option<f64>,
}

impl SolveOverrides {
    pub fn apply(&self, mut base: SolveOptions) -> SolveOptions {
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { base.$f = v; })* };
        }
        take!(sigma, gamma, alpha_dual, alpha_max, max_epochs, stop, tol);
        if self.alpha_min.is_some() {
            base.alpha_min = self.alpha_min;
        }
        if self.bb_init.is_some() {
            base.bb_init = self.bb_init;
        }
        base
    }
}

/// A batch of runs: every grid cell, `instances_per_cell` seeds, every algorithm.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(deserialize_with = "de_model")]
    pub model: Model,
    #[serde(default)]
    pub grid: Vec<GridCell>,
    #[serde(default)]
    pub algorithms: Vec<AlgorithmSpec>,
    pub instances_per_cell: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolveOverrides,
}

fn de_model<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Model, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let spec: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn options(&self) -> SolveOptions {
        self.solver.apply(SolveOptions::for_model(self.model))
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.instances_per_cell < 1 {
            return bad("instances_per_cell must be at least 1".into());
        }
        for (i, c) in self.grid.iter().enumerate() {
            if c.m == 0 || c.n == 0 || c.r == 0 || !(c.d > 0.0) || !(c.lambda > 0.0) {
                return bad(format!("grid cell {i}: m, n, r, D, lambda must be positive"));
            }
            if let Some(k) = c.k {
                if k < 1 || k > c.n {
                    return bad(format!("grid cell {i}: K = {k} outside 1..={}", c.n));
                }
            }
            for a in &self.algorithms {
                if a.blocks < 1 || a.blocks > c.n {
                    return bad(format!("grid cell {i}: N = {} outside 1..={}", a.blocks, c.n));
                }
            }
        }
        let o = self.options();
        if !(o.sigma > 0.0 && o.gamma > 0.0 && o.gamma < 1.0 && o.tol > 0.0) {
            return bad("solver: need sigma > 0, 0 < gamma < 1, tol > 0".into());
        }
        Ok(())
    }
}

/// Descent-invariant counts over one trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InvariantCounts {
    /// `Q_(l(t+1)) > Q_(l(t))`.
    pub reference_increases: usize,
    /// `Q_(t) > F(x0)`.
    pub bound_violations: usize,
    /// `Q_(t+1) > Q_(t)`.
    pub q_increases: usize,
    /// Dual steps discarded as rounding-level fixed points.
    pub held_dual_steps: usize,
}

impl InvariantCounts {
    pub fn from_report(report: &SolveReport) -> Self {
        Self {
            reference_increases: report.reference_increases().len(),
            bound_violations: report.bound_violations().len(),
            q_increases: report.q_increases().len(),
            held_dual_steps: report.step_trace.iter().filter(|s| s.held).count(),
        }
    }
}

/// Outcome of one (cell, instance, algorithm) run.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub model: Model,
    pub cell_index: usize,
    pub cell: GridCell,
    pub algorithm: AlgorithmSpec,
    pub seed: u64,
    pub epochs: usize,
    pub wall_time_sec: f64,
    pub final_objective: f64,
    /// `RelErrMet`, `ResidualMet`, `MaxEpochs` or `Error`.
    pub termination: String,
    pub final_residual: f64,
    pub invariants: InvariantCounts,
    pub error: Option<String>,
}

impl RunRow {
    pub fn is_error(&self) -> bool {
        self.termination == "Error"
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::RelErrMet.as_str() || self.termination == Termination::ResidualMet.as_str()
    }
}

/// Step floor and initial spectral step: `1.99/(lambda ||A||^2)` for both on
/// L1/SK, `1e-8` and `1` on L1/L2.
pub fn model_step_bounds(inst: &Instance) -> (f64, f64) {
    match inst.model {
        Model::L1SK => {
            let s = spectral_norm(&inst.a, 1e-12, 10_000);
            let a = 1.99 / (inst.lambda * s * s);
            (a, a)
        }
        Model::L1L2 => (1e-8, 1.0),
    }
}

pub fn solver_config(inst: &Instance, algo: &AlgorithmSpec, opts: &SolveOptions, seed: u64) -> SolverConfig {
    let (floor, init) = model_step_bounds(inst);
    let alpha_min = opts.alpha_min.unwrap_or(floor);
    let bb_init = opts.bb_init.unwrap_or(init);
    let stop_rule = match (opts.stop, inst.model) {
        (StopKind::Relerr, _) => StoppingRule::RelErr { target: inst.x_true.clone(), tol: opts.tol },
        (StopKind::Residual, Model::L1L2) => StoppingRule::SubdiffResidual { tol: opts.tol },
        (StopKind::Residual, Model::L1SK) => {
            StoppingRule::FixedPointResidual { tol: opts.tol, alpha_dual: opts.alpha_dual, alpha_primal: alpha_min }
        }
    };
    SolverConfig {
        memory: algo.memory,
        sigma: opts.sigma,
        gamma: opts.gamma,
        alpha_min,
        alpha_max: opts.alpha_max,
        alpha_dual: opts.alpha_dual,
        bb_init,
        schedule: match algo.schedule {
            Algorithm::Cmpga => Schedule::Cyclic,
            Algorithm::Rmpga => Schedule::uniform(algo.blocks),
        },
        seed,
        max_epochs: opts.max_epochs,
        stop_rule,
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Solves `inst` from `x0` with one algorithm.
pub fn solve_instance(
    inst: &Instance,
    x0: &[f64],
    algo: &AlgorithmSpec,
    opts: &SolveOptions,
    seed: u64,
) -> Result<SolveReport, RunError> {
    let config = solver_config(inst, algo, opts, seed);
    let report = match inst.model {
        Model::L1SK => solve(&inst.l1sk_problem(algo.blocks)?, x0, &config)?,
        Model::L1L2 => solve(&inst.l1l2_problem(algo.blocks)?, x0, &config)?,
    };
    Ok(report)
}

/// Builds the instance of a grid cell for a given seed.
pub fn build_instance(model: Model, cell: &GridCell, seed: u64) -> Result<Instance, InstanceError> {
    match model {
        Model::L1SK => make_l1sk_instance(cell.m, cell.n, cell.r, cell.d, cell.lambda, cell.k.unwrap_or(cell.r), seed),
        Model::L1L2 => make_l1l2_instance(cell.m, cell.n, cell.r, cell.d, cell.lambda, seed),
    }
}

/// `base_seed xor hash(cell, instance)`.
pub fn instance_seed(base_seed: u64, cell: usize, instance: usize) -> u64 {
    base_seed ^ mix_seed(0, cell as u64, instance as u64)
}

/// Runs every algorithm of `spec` on one generated instance.
pub fn run_instance(spec: &ExperimentSpec, cell_index: usize, instance_index: usize) -> Vec<RunRow> {
    let cell = spec.grid[cell_index];
    let seed = instance_seed(spec.base_seed, cell_index, instance_index);
    let opts = spec.options();
    let prepared = build_instance(spec.model, &cell, seed).and_then(|inst| {
        let x0 = init_point(&inst, seed)?;
        Ok((inst, x0))
    });
    spec.algorithms
        .iter()
        .enumerate()
        .map(|(ai, algo)| {
            let base = RunRow {
                model: spec.model,
                cell_index,
                cell,
                algorithm: *algo,
                seed,
                epochs: 0,
                wall_time_sec: f64::NAN,
                final_objective: f64::NAN,
                termination: "Error".into(),
                final_residual: f64::NAN,
                invariants: InvariantCounts::default(),
                error: None,
            };
            let outcome = match &prepared {
                Ok((inst, x0)) => {
                    solve_instance(inst, &x0.x, algo, &opts, mix_seed(seed, 0x5EED, ai as u64)).map_err(|e| e.to_string())
                }
                Err(e) => Err(e.to_string()),
            };
            match outcome {
                Ok(report) => RunRow {
                    epochs: report.epochs,
                    wall_time_sec: report.wall_time,
                    final_objective: report.final_objective,
                    termination: report.termination.as_str().into(),
                    final_residual: report.final_metric.unwrap_or(f64::NAN),
                    invariants: InvariantCounts::from_report(&report),
                    ..base
                },
                Err(e) => RunRow { error: Some(e), ..base },
            }
        })
        .collect()
}

/// Runs the whole spec on a pool of `jobs` worker threads. Rows come back
/// ordered by (cell, instance, algorithm) regardless of completion order.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<Vec<RunRow>, BenchError> {
    spec.validate()?;
    let tasks: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|c| (0..spec.instances_per_cell).map(move |i| (c, i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    let nested: Vec<Vec<RunRow>> = pool.install(|| tasks.par_iter().map(|&(c, i)| run_instance(spec, c, i)).collect());
    Ok(nested.into_iter().flatten().collect())
}

/// Per-(cell, algorithm) means over the rows that did not error.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub model: Model,
    pub cell: GridCell,
    pub algorithm: AlgorithmSpec,
    pub runs: usize,
    pub mean_epochs: f64,
    pub mean_wall_time_sec: f64,
    pub mean_final_objective: f64,
    /// Fraction of runs that met the stopping rule.
    pub success_rate: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Groups rows by (cell, algorithm) in order of first appearance.
pub fn aggregate(rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, AlgorithmSpec)> = Vec::new();
    for r in rows {
        let key = (r.cell_index, r.algorithm);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(cell_index, algorithm)| {
            let group: Vec<&RunRow> =
                rows.iter().filter(|r| r.cell_index == cell_index && r.algorithm == algorithm).collect();
            let ok = || group.iter().filter(|r| !r.is_error());
            SummaryRow {
                model: group[0].model,
                cell: group[0].cell,
                algorithm,
                runs: group.len(),
                mean_epochs: mean(ok().map(|r| r.epochs as f64)),
                mean_wall_time_sec: mean(ok().map(|r| r.wall_time_sec)),
                mean_final_objective: mean(ok().map(|r| r.final_objective)),
                success_rate: group.iter().filter(|r| r.converged()).count() as f64 / group.len() as f64,
            }
        })
        .collect()
}

/// Floats with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub const RUN_HEADER: [&str; 15] = [
    "model",
    "m",
    "n",
    "r",
    "D",
    "lambda",
    "algorithm",
    "N",
    "M",
    "seed",
    "epochs",
    "wall_time_sec",
    "final_objective",
    "termination",
    "final_residual",
];

pub const SUMMARY_HEADER: [&str; 14] = [
    "model",
    "m",
    "n",
    "r",
    "D",
    "lambda",
    "algorithm",
    "N",
    "M",
    "runs",
    "mean_epochs",
    "mean_wall_time_sec",
    "mean_final_objective",
    "success_rate",
];

fn cell_fields(model: Model, c: &GridCell, a: &AlgorithmSpec) -> Vec<String> {
    vec![
        model.to_string(),
        c.m.to_string(),
        c.n.to_string(),
        c.r.to_string(),
        fmt_float(c.d),
        fmt_float(c.lambda),
        a.schedule.to_string(),
        a.blocks.to_string(),
        a.memory.to_string(),
    ]
}

pub fn write_runs<W: Write>(rows: &[RunRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_HEADER)?;
    for r in rows {
        let mut rec = cell_fields(r.model, &r.cell, &r.algorithm);
        rec.extend([
            r.seed.to_string(),
            r.epochs.to_string(),
            fmt_float(r.wall_time_sec),
            fmt_float(r.final_objective),
            r.termination.clone(),
            fmt_float(r.final_residual),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for s in rows {
        let mut rec = cell_fields(s.model, &s.cell, &s.algorithm);
        rec.extend([
            s.runs.to_string(),
            fmt_float(s.mean_epochs),
            fmt_float(s.mean_wall_time_sec),
            fmt_float(s.mean_final_objective),
            fmt_float(s.success_rate),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `results.csv` -> `results.summary.csv`.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    out.with_file_name(format!("{stem}.summary.csv"))
}
