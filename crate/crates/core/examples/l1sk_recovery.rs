//! Recover a +-1 sparse signal by minimizing (||x||_1 + (lambda/2)||Ax - b||^2) / ||x||_(K)
//! over a box, with the cyclic block method.
//!
//! `cargo run --release --example l1sk_recovery -- [D] [N]`

use mpga::bench::{solve_instance, Algorithm, AlgorithmSpec, SolveOptions};
use mpga::instance::{init_point, make_l1sk_instance};
use mpga::Model;

fn main() {
    let mut args = std::env::args().skip(1);
    let d: f64 = args.next().map_or(2.0, |s| s.parse().expect("D"));
    let blocks: usize = args.next().map_or(8, |s| s.parse().expect("N"));

    let inst = make_l1sk_instance(160, 1350, 25, d, 200.0, 25, 42).expect("instance");
    println!("m={} n={} r={} D={} certificate={:e}", inst.m, inst.n, inst.r, inst.d, inst.certificate);

    let x0 = init_point(&inst, 42).unwrap();
    let algo = AlgorithmSpec { schedule: Algorithm::Cmpga, blocks, memory: 2 };
    let report = solve_instance(&inst, &x0.x, &algo, &SolveOptions::for_model(Model::L1SK), 0).unwrap();

    for e in report.epoch_trace.iter().step_by(10) {
        println!("epoch {:4}  Q = {:.10}  rel-err = {:.3e}", e.epoch, e.q, e.metric.unwrap_or(f64::NAN));
    }
    println!(
        "{} after {} epochs ({:.3} s), F = {:.10}",
        report.termination.as_str(),
        report.epochs,
        report.wall_time,
        report.final_objective
    );
}
