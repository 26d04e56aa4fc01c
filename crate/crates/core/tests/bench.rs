use mpga::bench::{aggregate, run_experiment, summary_path, write_runs, write_summary, ExperimentSpec, RunRow, RUN_HEADER};
use std::path::Path;

const SPEC: &str = r#"
model = "L1SK"
instances_per_cell = 3
base_seed = 42

[[grid]]
m = 64
n = 256
r = 5
D = 1
lambda = 40

[[grid]]
m = 64
n = 256
r = 5
D = 3
lambda = 40

[[algorithms]]
schedule = "cmpga"
blocks = 1

[[algorithms]]
schedule = "rmpga"
blocks = 4
memory = 0
"#;

fn key(r: &RunRow) -> (usize, u64, String, usize, usize, String, u64) {
    (
        r.cell_index,
        r.seed,
        r.algorithm.schedule.to_string(),
        r.algorithm.blocks,
        r.epochs,
        r.termination.clone(),
        r.final_objective.to_bits(),
    )
}

#[test]
fn rows_reproduce_across_worker_counts() {
    let spec = ExperimentSpec::from_toml(SPEC).unwrap();
    let one = run_experiment(&spec, 1).unwrap();
    let three = run_experiment(&spec, 3).unwrap();
    assert_eq!(one.len(), 2 * 3 * 2);
    assert_eq!(one.iter().map(key).collect::<Vec<_>>(), three.iter().map(key).collect::<Vec<_>>());
    for r in &one {
        assert!(r.converged(), "{r:?}");
        assert_eq!(r.invariants.reference_increases, 0);
        assert_eq!(r.invariants.bound_violations, 0);
        if r.algorithm.memory == 0 {
            assert_eq!(r.invariants.q_increases, 0);
        }
    }
    let mut order: Vec<usize> = one.iter().map(|r| r.cell_index).collect();
    order.dedup();
    assert_eq!(order, vec![0, 1]);
}

#[test]
fn failures_become_error_rows() {
    // r = 40 cannot be placed with separation 20 in 256 slots.
    let spec = ExperimentSpec::from_toml(&SPEC.replace("D = 3", "D = 10").replace("r = 5\nD = 10", "r = 40\nD = 10")).unwrap();
    let rows = run_experiment(&spec, 2).unwrap();
    let errors: Vec<&RunRow> = rows.iter().filter(|r| r.is_error()).collect();
    assert_eq!(errors.len(), 3 * 2);
    assert!(errors.iter().all(|r| r.cell_index == 1 && r.error.as_deref().unwrap().contains("separation")));
    let summary = aggregate(&rows);
    let failed = summary.iter().find(|s| s.cell.r == 40).unwrap();
    assert_eq!(failed.success_rate, 0.0);
}

#[test]
fn csv_outputs() {
    let spec = ExperimentSpec::from_toml(&SPEC.replace("instances_per_cell = 3", "instances_per_cell = 1")).unwrap();
    let rows = run_experiment(&spec, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs.csv");
    write_runs(&rows, std::fs::File::create(&out).unwrap()).unwrap();
    write_summary(&aggregate(&rows), std::fs::File::create(summary_path(&out)).unwrap()).unwrap();

    let mut reader = csv::Reader::from_path(&out).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), RUN_HEADER.to_vec());
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), rows.len());
    let objective = RUN_HEADER.iter().position(|h| *h == "final_objective").unwrap();
    for (rec, row) in records.iter().zip(&rows) {
        let parsed: f64 = rec[objective].parse().unwrap();
        assert_eq!(parsed.to_bits(), row.final_objective.to_bits());
    }
    assert!(Path::new(&summary_path(&out)).exists());
    assert_eq!(csv::Reader::from_path(summary_path(&out)).unwrap().records().count(), 4);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let spec = ExperimentSpec::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!spec.grid.is_empty() && !spec.algorithms.is_empty());
            seen += 1;
        }
    }
    assert_eq!(seen, 4);
}
