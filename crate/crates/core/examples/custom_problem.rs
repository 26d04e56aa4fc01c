//! Plugging a user-defined smooth term into the generic solver:
//! minimize (||x||_1 + 0.5||x - c||^2) / ||x||_2 over a box.

use mpga::criticality::StoppingRule;
use mpga::engine::{solve, SolverConfig};
use mpga::models::{L1Box, L2Norm};
use mpga::prox::BoxBounds;
use mpga::{BlockPartition, FractionalProblem, SmoothTerm};
use std::ops::Range;

struct Quadratic {
    c: Vec<f64>,
}

impl SmoothTerm for Quadratic {
    type Cache = ();

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(&self.c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.c).map(|(a, b)| a - b).collect()
    }

    fn prepare(&self, _x: &[f64]) {}

    fn value_cached(&self, x: &[f64], _cache: &()) -> f64 {
        self.value(x)
    }

    fn partial_gradient_cached(&self, x: &[f64], _cache: &(), block: Range<usize>) -> Vec<f64> {
        block.map(|j| x[j] - self.c[j]).collect()
    }

    fn shift_cache(&self, _cache: &(), _block: Range<usize>, _delta: &[f64]) {}
}

fn main() {
    let c = vec![3.0, -0.5, 0.2, 2.0, 0.0, -4.0];
    let n = c.len();
    let problem = FractionalProblem::new(
        BlockPartition::uniform(n, 3).unwrap(),
        L1Box::new(BoxBounds::symmetric(n, 10.0).unwrap()),
        Quadratic { c: c.clone() },
        L2Norm,
    );
    let config = SolverConfig::experiment_defaults(1e-8, 1.0, StoppingRule::SubdiffResidual { tol: 1e-8 });
    let report = solve(&problem, &c, &config).unwrap();
    println!("{} after {} epochs", report.termination.as_str(), report.epochs);
    println!("F(x0) = {:.8}, F(x*) = {:.8}", report.initial_objective, report.final_objective);
    println!("x* = {:?}", report.final_x.iter().map(|v| (v * 1e6).round() / 1e6).collect::<Vec<_>>());
}
