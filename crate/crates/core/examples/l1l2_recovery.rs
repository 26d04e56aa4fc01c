//! L1/L2 recovery of a high-dynamic-range signal with three block schedules,
//! stopped on the scaled subdifferential residual.

use mpga::bench::{solve_instance, Algorithm, AlgorithmSpec, SolveOptions};
use mpga::instance::{init_point, make_l1l2_instance};
use mpga::{rel_err, Model};

fn main() {
    let inst = make_l1l2_instance(128, 1080, 12, 1.0, 2e-4, 7).expect("instance");
    println!("critical-point certificate at x_true: {:e}", inst.certificate);

    let x0 = init_point(&inst, 7).unwrap();
    let opts = SolveOptions::for_model(Model::L1L2);
    let objective_at_truth = inst.l1l2_problem(1).unwrap().objective(&inst.x_true).to_f64();
    println!("F(x_true) = {objective_at_truth:.10}");

    for (schedule, blocks) in [(Algorithm::Cmpga, 1), (Algorithm::Cmpga, 8), (Algorithm::Rmpga, 8)] {
        let algo = AlgorithmSpec { schedule, blocks, memory: 2 };
        let r = solve_instance(&inst, &x0.x, &algo, &opts, 1).unwrap();
        println!(
            "{schedule}(N={blocks}): {} in {} epochs, F = {:.10}, rel-err to x_true = {:.2e}",
            r.termination.as_str(),
            r.epochs,
            r.final_objective,
            rel_err(&r.final_x, &inst.x_true).unwrap()
        );
    }
}
