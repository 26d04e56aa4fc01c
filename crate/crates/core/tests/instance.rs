use mpga::instance::{
    init_point, load_instance, make_l1l2_instance, make_l1sk_instance, read_instance, save_instance, write_instance,
    Instance, InstanceError, Model,
};
use mpga::linalg::{mat_vec, norm_inf};
use mpga::ExtReal;

fn same(a: &Instance, b: &Instance) {
    assert_eq!(a.model, b.model);
    assert_eq!((a.m, a.n, a.r, a.k, a.seed), (b.m, b.n, b.r, b.k, b.seed));
    assert_eq!(a.d.to_bits(), b.d.to_bits());
    assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
    assert_eq!(a.a, b.a);
    assert_eq!(a.b, b.b);
    assert_eq!(a.x_true, b.x_true);
    assert_eq!(a.bounds, b.bounds);
}

#[test]
fn generation_is_deterministic() {
    same(&make_l1sk_instance(32, 128, 4, 2.0, 10.0, 4, 5).unwrap(), &make_l1sk_instance(32, 128, 4, 2.0, 10.0, 4, 5).unwrap());
    same(&make_l1l2_instance(48, 160, 4, 1.0, 1e-3, 5).unwrap(), &make_l1l2_instance(48, 160, 4, 1.0, 1e-3, 5).unwrap());
}

#[test]
fn l1sk_instances_are_consistent() {
    for seed in 0..5 {
        let inst = make_l1sk_instance(64, 320, 6, 10.0, 50.0, 6, seed).unwrap();
        assert_eq!(mat_vec(&inst.a, &inst.x_true), inst.b);
        assert!(inst.certificate <= 1e-6);
        assert_eq!(inst.support().len(), 6);
        let x0 = init_point(&inst, seed).unwrap();
        assert!(!x0.clamped);
        let gap: Vec<f64> = x0.x.iter().zip(&inst.x_true).map(|(a, b)| a - b).collect();
        assert!(norm_inf(&gap) <= 0.2);
    }
}

#[test]
fn l1l2_starts_lie_below_the_level_bound() {
    for seed in 0..50 {
        let inst = make_l1l2_instance(40, 160, 4, 1.0, 2e-4, seed).unwrap();
        assert!(inst.certificate <= 1e-8);
        let x0 = init_point(&inst, seed).unwrap().x;
        assert_eq!(x0.iter().filter(|v| **v != 0.0).count(), 1);
        match inst.l1l2_problem(1).unwrap().objective(&x0) {
            ExtReal::Finite(v) => assert!(v < inst.l1l2_level_bound()),
            other => panic!("F(x0) = {other}"),
        }
    }
}

#[test]
fn infeasible_parameters_are_rejected() {
    assert!(matches!(make_l1sk_instance(16, 20, 6, 2.0, 1.0, 6, 0), Err(InstanceError::InfeasibleSupport { .. })));
    assert!(matches!(make_l1sk_instance(16, 40, 2, 0.0, 1.0, 2, 0), Err(InstanceError::InvalidParameter(_))));
    assert!(make_l1sk_instance(16, 40, 2, 1.0, 1.0, 41, 0).is_err());
}

#[test]
fn binary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for inst in [
        make_l1sk_instance(24, 96, 3, 1.5, 20.0, 3, 8).unwrap(),
        make_l1l2_instance(32, 96, 3, 1.0, 1e-3, 8).unwrap(),
    ] {
        let mut buf = Vec::new();
        write_instance(&inst, &mut buf).unwrap();
        let back = read_instance(buf.as_slice()).unwrap();
        same(&inst, &back);

        let path = dir.path().join(format!("{}.bin", inst.model));
        save_instance(&inst, &path).unwrap();
        same(&inst, &load_instance(&path).unwrap());
        let manifest = std::fs::read_to_string(path.with_extension("bin.manifest")).unwrap();
        assert!(manifest.contains(&format!("model={}", inst.model)));
        assert!(manifest.contains("n=96"));
    }
}

#[test]
fn corrupt_files_are_rejected() {
    let inst = make_l1sk_instance(8, 24, 2, 1.0, 5.0, 2, 1).unwrap();
    let mut buf = Vec::new();
    write_instance(&inst, &mut buf).unwrap();

    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(read_instance(bad.as_slice()), Err(InstanceError::Format(_))));

    let truncated = &buf[..buf.len() - 8];
    assert!(read_instance(truncated).is_err());
    assert_eq!(Model::L1SK, "l1sk".parse().unwrap());
}
