//! Run a small experiment spec in-process and print the per-cell summary.

use mpga::bench::{aggregate, run_experiment, write_summary, ExperimentSpec};

const SPEC: &str = r#"
model = "L1SK"
instances_per_cell = 4
base_seed = 2024

[[grid]]
m = 96
n = 810
r = 15
D = 1.0
lambda = 200.0

[[grid]]
m = 96
n = 810
r = 15
D = 10.0
lambda = 200.0

[[algorithms]]
schedule = "cmpga"
blocks = 1

[[algorithms]]
schedule = "cmpga"
blocks = 8

[[algorithms]]
schedule = "rmpga"
blocks = 8
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ExperimentSpec::from_toml(SPEC)?;
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let rows = run_experiment(&spec, jobs)?;
    write_summary(&aggregate(&rows), std::io::stdout())?;
    Ok(())
}
