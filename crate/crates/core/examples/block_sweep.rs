//! Epochs to reach relative error 1e-3 as the number of primal blocks grows,
//! on coherent (D = 10) L1/SK instances.

use mpga::bench::{solve_instance, Algorithm, AlgorithmSpec, SolveOptions};
use mpga::instance::{init_point, make_l1sk_instance};
use mpga::Model;

fn main() {
    let seeds = 0..4u64;
    let instances: Vec<_> = seeds
        .map(|s| {
            let inst = make_l1sk_instance(128, 1080, 20, 10.0, 200.0, 20, s).unwrap();
            let x0 = init_point(&inst, s).unwrap();
            (inst, x0)
        })
        .collect();
    let opts = SolveOptions::for_model(Model::L1SK);
    println!("{:>4} {:>12}", "N", "mean epochs");
    for blocks in [1, 2, 4, 8, 16, 32] {
        let algo = AlgorithmSpec { schedule: Algorithm::Cmpga, blocks, memory: 2 };
        let total: usize = instances
            .iter()
            .map(|(inst, x0)| solve_instance(inst, &x0.x, &algo, &opts, 0).unwrap().epochs)
            .sum();
        println!("{blocks:>4} {:>12.1}", total as f64 / instances.len() as f64);
    }
}
