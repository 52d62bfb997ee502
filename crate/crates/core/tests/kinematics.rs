use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ftarm::kinematics::*;

mod common;
use common::*;

fn random_q(rng: &mut impl Rng) -> [f64; 7] {
    let lim = JointLimits::panda();
    std::array::from_fn(|i| rng.random_range(lim.min[i]..lim.max[i]))
}

#[test]
fn fk_matches_matrix_chain_oracle() {
    let table = DhTable::panda();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let q = random_q(&mut rng);
        let got = forward_kinematics(&table, &JointVector(q)).to_homogeneous();
        assert!(max_abs_diff(&got, &oracle_fk(&q)) <= 1e-9);
    }
    let home: [f64; 7] = PANDA.map(|r| r.3);
    assert_eq!(table.home().0, home);
    let got = forward_kinematics(&table, &JointVector(home)).to_homogeneous();
    assert!(max_abs_diff(&got, &oracle_fk(&home)) <= 1e-12);
}

#[test]
fn link_transform_layout() {
    assert_eq!(
        link_transform(&DhRow::new(0.0, 0.0, 0.0, 0.0), 0.0),
        Pose::identity()
    );
    let p = link_transform(&DhRow::new(0.333, 0.0, 0.0, 0.0), 0.0);
    assert_eq!(p.translation, Vector3::new(0.0, 0.0, 0.333));
    let got = link_transform(&DhRow::new(0.0, 0.0825, FRAC_PI_2, 0.0), FRAC_PI_2).to_homogeneous();
    assert!(max_abs_diff(&got, &link(0.0, 0.0825, FRAC_PI_2, FRAC_PI_2)) <= 1e-15);
    // cos(pi/2) is not exactly zero; compare against the symbolic entries.
    let symbolic = [
        [0.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 0.0, 0.0825],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    assert!(max_abs_diff(&got, &symbolic) <= 1e-15);
}

#[test]
fn base_joint_rotates_about_world_z() {
    let table = DhTable::panda();
    let zero = forward_kinematics(&table, &JointVector::zeros()).translation;
    let phi = 0.7;
    let mut q = JointVector::zeros();
    q.0[0] = phi;
    let turned = forward_kinematics(&table, &q).translation;
    let expected = Vector3::new(
        zero.x * phi.cos() - zero.y * phi.sin(),
        zero.x * phi.sin() + zero.y * phi.cos(),
        zero.z,
    );
    assert!((turned - expected).norm() < 1e-12);
}

#[test]
fn jacobian_matches_finite_differences() {
    let table = DhTable::panda();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let h = 1e-6;
    for _ in 0..20 {
        let q = random_q(&mut rng);
        let jac = geometric_jacobian(&table, &JointVector(q), &JointMask::none()).unwrap();
        let base = forward_kinematics(&table, &JointVector(q));
        for i in 0..7 {
            let (mut qp, mut qm) = (q, q);
            qp[i] += h;
            qm[i] -= h;
            let fp = forward_kinematics(&table, &JointVector(qp));
            let fm = forward_kinematics(&table, &JointVector(qm));
            let lin = (fp.translation - fm.translation) / (2.0 * h);
            // Angular rate from the rotation increments on either side.
            let ang = (rotation_log(&(fp.rotation * base.rotation.transpose()))
                - rotation_log(&(fm.rotation * base.rotation.transpose())))
                / (2.0 * h);
            let col = jac.entries.column(i);
            let analytic = Vector3::new(col[0], col[1], col[2]);
            let analytic_ang = Vector3::new(col[3], col[4], col[5]);
            assert!(
                (lin - analytic).norm() <= 1e-5 * analytic.norm().max(1e-3),
                "joint {i}"
            );
            assert!(
                (ang - analytic_ang).norm() <= 1e-5 * analytic_ang.norm().max(1e-3),
                "joint {i}"
            );
        }
        let z0 = jac.entries.column(0);
        assert_eq!((z0[3], z0[4], z0[5]), (0.0, 0.0, 1.0));
    }
}

#[test]
fn locking_removes_one_column() {
    let table = DhTable::panda();
    let q = table.home();
    let full = geometric_jacobian(&table, &q, &JointMask::none()).unwrap();
    let locked = geometric_jacobian(&table, &q, &JointMask::single(2).unwrap()).unwrap();
    assert_eq!(locked.entries.ncols(), 6);
    assert_eq!(locked.joints, vec![0, 1, 3, 4, 5, 6]);
    for (k, &j) in locked.joints.iter().enumerate() {
        assert_eq!(locked.entries.column(k), full.entries.column(j));
    }
    assert!(matches!(
        geometric_jacobian(&table, &q, &JointMask::all()),
        Err(ftarm::Error::UnactuatedChain)
    ));
}

fn check_moore_penrose(a: &DMatrix<f64>, tol: f64) {
    let p = pseudo_inverse(a);
    assert!((a * &p * a - a).abs().max() <= tol);
    assert!((&p * a * &p - &p).abs().max() <= tol);
    let ap = a * &p;
    let pa = &p * a;
    assert!((&ap - ap.transpose()).abs().max() <= tol);
    assert!((&pa - pa.transpose()).abs().max() <= tol);
}

#[test]
fn pseudo_inverse_examples() {
    assert_eq!(
        pseudo_inverse(&DMatrix::identity(6, 6)),
        DMatrix::identity(6, 6)
    );
    let d = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
    assert_eq!(
        pseudo_inverse(&d),
        DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0])
    );
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let a = DMatrix::from_fn(6, 7, |_, _| rng.random_range(-1.0..1.0));
        check_moore_penrose(&a, 1e-8);
    }
}

#[test]
fn pose_error_examples() {
    let a = Pose::from_euler_xyz([0.3, -0.2, 1.0], [0.1, 0.2, 0.3]);
    assert_eq!(pose_error(&a, &a), nalgebra::Vector6::zeros());
    let b = Pose::new(a.rotation, a.translation + Vector3::new(0.1, 0.0, 0.0));
    let e = pose_error(&a, &b);
    assert!((e - nalgebra::Vector6::new(0.1, 0.0, 0.0, 0.0, 0.0, 0.0)).norm() < 1e-15);
    let rz = Pose::from_euler_xyz([0.0, 0.0, FRAC_PI_2], [0.0; 3]);
    let e = pose_error(&Pose::identity(), &rz);
    assert!((e - nalgebra::Vector6::new(0.0, 0.0, 0.0, 0.0, 0.0, FRAC_PI_2)).norm() < 1e-12);
    // Half turn: deterministic axis with a positive sign.
    let rx = Pose::from_euler_xyz([PI, 0.0, 0.0], [0.0; 3]);
    let e = pose_error(&Pose::identity(), &rx);
    assert!((e.fixed_rows::<3>(3) - Vector3::new(PI, 0.0, 0.0)).norm() < 1e-9);
}

#[test]
fn ik_drawer_pose_invariants() {
    let robot = Robot::panda();
    let target = Pose::from_euler_xyz([0.0, 0.0, FRAC_PI_2], [0.75, 0.0, 0.317]);
    let home = robot.home();
    let opts = IkOptions::default();
    for mask in [JointMask::none(), JointMask::single(2).unwrap()] {
        let r = ik_solve(&robot, &home, &target, &mask, &opts).unwrap();
        if mask.is_locked(2) {
            assert_eq!(r.joints.0[2].to_bits(), home.0[2].to_bits());
        }
        assert!(r.iterations <= opts.max_iters);
        assert_eq!(r.converged, r.residual <= opts.tolerance);
        assert!(robot.limits.contains(&r.joints));
        let fk = forward_kinematics(&robot.table, &r.joints);
        assert!((pose_error(&fk, &target).norm() - r.residual).abs() < 1e-12);
    }
}

#[test]
fn ik_fixed_point() {
    let robot = Robot::panda();
    let home = robot.home();
    let target = forward_kinematics(&robot.table, &home);
    let r = ik_solve(
        &robot,
        &home,
        &target,
        &JointMask::none(),
        &IkOptions::default(),
    )
    .unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 0);
    assert_eq!(r.residual, 0.0);
    assert!(matches!(
        ik_solve(
            &robot,
            &home,
            &target,
            &JointMask::all(),
            &IkOptions::default()
        ),
        Err(ftarm::Error::UnactuatedChain)
    ));
}

fn arb_q() -> impl Strategy<Value = [f64; 7]> {
    let lim = JointLimits::panda();
    let ranges: Vec<_> = (0..7).map(|i| lim.min[i]..lim.max[i]).collect();
    ranges.prop_map(|v| std::array::from_fn(|i| v[i]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fk_rotation_is_orthonormal(q in arb_q()) {
        let p = forward_kinematics(&DhTable::panda(), &JointVector(q));
        prop_assert!((p.rotation.determinant() - 1.0).abs() <= 1e-9);
        prop_assert!(p.is_valid(1e-9));
    }

    #[test]
    fn ik_keeps_locked_joint_and_reports_true_residual(q0 in arb_q(), q1 in arb_q(), joint in 0usize..7) {
        let robot = Robot::panda();
        let target = forward_kinematics(&robot.table, &JointVector(q1));
        let opts = IkOptions { step: 0.3, tolerance: 1e-6, max_iters: 60 };
        let r = ik_solve(&robot, &JointVector(q0), &target, &JointMask::single(joint).unwrap(), &opts).unwrap();
        prop_assert_eq!(r.joints.0[joint].to_bits(), q0[joint].to_bits());
        let recomputed = pose_error(&forward_kinematics(&robot.table, &r.joints), &target).norm();
        prop_assert!((recomputed - r.residual).abs() <= 1e-12);
        prop_assert_eq!(r.converged, r.residual <= opts.tolerance);
        prop_assert!(robot.limits.contains(&r.joints));
    }

    #[test]
    fn pseudo_inverse_identities(entries in proptest::collection::vec(-2.0f64..2.0, 42), rank_drop in 0usize..3) {
        let mut a = DMatrix::from_row_slice(6, 7, &entries);
        // Duplicate rows to exercise rank-deficient inputs.
        for r in 0..rank_drop {
            let row = a.row(r).into_owned();
            a.set_row(5 - r, &row);
        }
        // Identity error scales with the condition number of the kept
        // spectrum; skip draws that are nearly but not exactly singular.
        let sv = a.clone().svd(false, false).singular_values;
        let top = sv.max();
        prop_assume!(sv.iter().all(|&s| s <= 1e-12 * top || s >= 1e-4 * top));
        check_moore_penrose(&a, 1e-8);
    }
}
