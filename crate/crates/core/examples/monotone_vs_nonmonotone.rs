//! Memory M = 0 makes the line search monotone in Q; M = 2 only keeps the
//! running maximum over the last three values non-increasing.

use mpga::bench::{solve_instance, Algorithm, AlgorithmSpec, InvariantCounts, SolveOptions};
use mpga::instance::{init_point, make_l1sk_instance};
use mpga::Model;

fn main() {
    let inst = make_l1sk_instance(160, 1350, 25, 5.0, 200.0, 25, 3).unwrap();
    let x0 = init_point(&inst, 3).unwrap();
    let opts = SolveOptions::for_model(Model::L1SK);
    for memory in [0, 2, 5] {
        let algo = AlgorithmSpec { schedule: Algorithm::Cmpga, blocks: 8, memory };
        let r = solve_instance(&inst, &x0.x, &algo, &opts, 0).unwrap();
        let inv = InvariantCounts::from_report(&r);
        let backtracks: usize = r.step_trace.iter().map(|s| s.backtracks).sum();
        println!(
            "M={memory}: {} epochs, {backtracks} backtracks, Q increases {}, reference increases {}",
            r.epochs, inv.q_increases, inv.reference_increases
        );
    }
}
