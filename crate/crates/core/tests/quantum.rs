//! Born-rule predictions checked against a brute-force 16×16 projector
//! contraction that never factorizes the trace.

use approx::assert_abs_diff_eq;
use biloc_core::quantum::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn to_dyn2(m: &Mat2) -> DMatrix<Complex64> {
    DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
}

fn to_dyn4(m: &Mat4) -> DMatrix<Complex64> {
    DMatrix::from_fn(4, 4, |i, j| m[(i, j)])
}

/// Oracle: full tensor-product contraction, then marginalize to parity.
fn projector_contraction(
    rho1: &TwoQubitState,
    rho2: &TwoQubitState,
    plan: &MeasurementPlan,
) -> [[f64; 8]; 8] {
    let joint = to_dyn4(rho1.matrix()).kronecker(&to_dyn4(rho2.matrix()));
    let mut out = [[0.0; 8]; 8];
    for s in 0..8 {
        let (xa, xb, xc) = settings_bits(s);
        for a in 0..2 {
            for ba in 0..2 {
                for bc in 0..2 {
                    for c in 0..2 {
                        let proj = to_dyn2(&plan.a[xa].projector(a))
                            .kronecker(&to_dyn2(&plan.b_arm_a[xb].projector(ba)))
                            .kronecker(&to_dyn2(&plan.b_arm_c[xb].projector(bc)))
                            .kronecker(&to_dyn2(&plan.c[xc].projector(c)));
                        let p = (&proj * &joint).trace().re;
                        out[s][settings_index(a, ba ^ bc, c)] += p;
                    }
                }
            }
        }
    }
    out
}

fn oracle_correlator(table: &[[f64; 8]; 8], s: usize) -> f64 {
    table[s]
        .iter()
        .enumerate()
        .map(|(o, p)| if o.count_ones() % 2 == 0 { *p } else { -*p })
        .sum()
}

#[test]
fn singlet_is_isotropic() {
    let s = singlet_state();
    for obs in [
        DichotomicObservable::sigma_x(),
        DichotomicObservable::new([0.0, 1.0, 0.0], "sigma_y").unwrap(),
        DichotomicObservable::sigma_z(),
    ] {
        let beh = born_bipartite(&s, &[obs.clone(), obs.clone()], &[obs.clone(), obs]);
        assert_abs_diff_eq!(beh.correlator(0, 0), -1.0, epsilon = 1e-12);
    }
}

#[test]
fn born_matches_projector_contraction_on_optimal_plan() {
    let plan = MeasurementPlan::optimal();
    let (s1, s2) = (singlet_state(), werner_state(0.7).unwrap());
    let fast = born_behavior(&s1, &s2, &plan);
    let slow = projector_contraction(&s1, &s2, &plan);
    for s in 0..8 {
        for o in 0..8 {
            assert_abs_diff_eq!(fast.table()[s][o], slow[s][o], epsilon = 1e-12);
        }
    }
}

#[test]
fn frozen_correlators_for_two_singlets() {
    // Values produced by the projector-contraction oracle.
    let plan = MeasurementPlan::optimal();
    let oracle = projector_contraction(&singlet_state(), &singlet_state(), &plan);
    assert_abs_diff_eq!(
        oracle_correlator(&oracle, settings_index(0, 0, 0)),
        0.5,
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(
        oracle_correlator(&oracle, settings_index(1, 1, 1)),
        0.5,
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(
        oracle_correlator(&oracle, settings_index(0, 1, 1)),
        -0.5,
        epsilon = 1e-12
    );

    let beh = born_behavior(&singlet_state(), &singlet_state(), &plan);
    assert_abs_diff_eq!(correlator(&beh, 0, 0, 0), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(correlator(&beh, 1, 1, 1), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(correlator(&beh, 0, 1, 1), -0.5, epsilon = 1e-12);
}

fn correlator(beh: &Behavior, xa: usize, xb: usize, xc: usize) -> f64 {
    beh.correlator(xa, xb, xc)
}

#[test]
fn maximally_mixed_sources_give_uniform_behavior() {
    let m = TwoQubitState::maximally_mixed();
    let beh = born_behavior(&m, &m, &MeasurementPlan::optimal());
    assert!(beh.max_abs_diff(&Behavior::uniform()) < 1e-12);
}

#[test]
fn uncorrelated_second_source_kills_c_correlators() {
    let beh = born_behavior(
        &singlet_state(),
        &TwoQubitState::maximally_mixed(),
        &MeasurementPlan::optimal(),
    );
    for s in 0..8 {
        let (xa, xb, xc) = settings_bits(s);
        assert_abs_diff_eq!(beh.correlator(xa, xb, xc), 0.0, epsilon = 1e-12);
    }
}

#[test]
fn quantum_maximum_is_sqrt2_peripheral_and_one_literal() {
    let beh = born_behavior(
        &singlet_state(),
        &singlet_state(),
        &MeasurementPlan::optimal(),
    );
    let p = biloc_functional(&beh, Convention::Peripheral);
    assert_abs_diff_eq!(p.i1, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(p.i2, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(p.b, SQRT2, epsilon = 1e-12);

    // The literal index order, evaluated on the oracle table.
    let oracle = projector_contraction(
        &singlet_state(),
        &singlet_state(),
        &MeasurementPlan::optimal(),
    );
    let mut i1 = 0.0;
    let mut i2 = 0.0;
    for xa in 0..2 {
        for xb in 0..2 {
            let sgn = if (xa + xb) % 2 == 0 { 1.0 } else { -1.0 };
            i1 += oracle_correlator(&oracle, settings_index(xa, xb, 0)) / 4.0;
            i2 += sgn * oracle_correlator(&oracle, settings_index(xa, xb, 1)) / 4.0;
        }
    }
    let lit = biloc_functional(&beh, Convention::Literal);
    assert_abs_diff_eq!(lit.i1, i1, epsilon = 1e-12);
    assert_abs_diff_eq!(lit.i2, i2, epsilon = 1e-12);
    assert_abs_diff_eq!(lit.b, 1.0, epsilon = 1e-12);
}

#[test]
fn uniform_behavior_has_zero_functional() {
    let r = biloc_functional(&Behavior::uniform(), Convention::Peripheral);
    assert_eq!((r.i1, r.i2, r.b), (0.0, 0.0, 0.0));
}

#[test]
fn calibrated_werner_pair() {
    let v1 = visibility_for_chsh(2.484);
    let v2 = visibility_for_chsh(2.699);
    let beh = born_behavior(
        &werner_state(v1).unwrap(),
        &werner_state(v2).unwrap(),
        &MeasurementPlan::optimal(),
    );
    let r = biloc_functional(&beh, Convention::Peripheral);
    assert_abs_diff_eq!(r.i1, v1 * v2 / 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r.i2, v1 * v2 / 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r.b, SQRT2 * (v1 * v2).sqrt(), epsilon = 1e-12);
    assert!((r.i1 - 0.4191).abs() < 1e-4);
    assert!((r.b - 1.2947).abs() < 5e-4);
}

#[test]
fn werner_grid_follows_sqrt_product() {
    let plan = MeasurementPlan::optimal();
    for i in 0..10 {
        for j in 0..10 {
            let v1 = (i as f64 + 0.5) / 10.0;
            let v2 = (j as f64 + 0.5) / 10.0;
            let beh = born_behavior(
                &werner_state(v1).unwrap(),
                &werner_state(v2).unwrap(),
                &plan,
            );
            let b = biloc_functional(&beh, Convention::Peripheral).b;
            assert_abs_diff_eq!(b, SQRT2 * (v1 * v2).sqrt(), epsilon = 1e-10);
        }
    }
}

#[test]
fn chsh_tsirelson_and_calibration() {
    let a = [
        DichotomicObservable::diag_plus(),
        DichotomicObservable::diag_minus(),
    ];
    let b = [
        DichotomicObservable::sigma_z(),
        DichotomicObservable::sigma_x(),
    ];
    let s = chsh(&born_bipartite(&singlet_state(), &a, &b));
    assert_abs_diff_eq!(s, 2.0 * SQRT2, epsilon = 1e-12);
    for target in [2.484, 2.699] {
        let rho = werner_state(visibility_for_chsh(target)).unwrap();
        assert_abs_diff_eq!(chsh(&born_bipartite(&rho, &a, &b)), target, epsilon = 1e-12);
    }
}

#[test]
fn local_deterministic_chsh_reaches_two() {
    // a = b = 0 for every setting
    let mut t = [[0.0; 4]; 4];
    for row in t.iter_mut() {
        row[0] = 1.0;
    }
    assert_abs_diff_eq!(chsh(&BipartiteBehavior::new(t).unwrap()), 2.0);
}

#[test]
fn fidelity_examples() {
    assert_abs_diff_eq!(
        fidelity(&singlet_state(), &singlet_ket()),
        1.0,
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(
        fidelity(&TwoQubitState::maximally_mixed(), &singlet_ket()),
        0.25,
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(
        fidelity(&werner_state(0.94).unwrap(), &singlet_ket()),
        0.955,
        epsilon = 1e-12
    );
}

#[test]
fn parity_bit_alone_shows_no_ab_correlation() {
    // AB marginal of the tripartite behavior with the central parity bit.
    let beh = born_behavior(
        &singlet_state(),
        &singlet_state(),
        &MeasurementPlan::optimal(),
    );
    let mut s = 0.0;
    for xa in 0..2 {
        for xb in 0..2 {
            let mut e = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        let sg = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                        e += sg * beh.prob(xa, xb, 0, a, b, c);
                    }
                }
            }
            s += if xa * xb == 1 { -e } else { e };
        }
    }
    assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
    assert!(s.abs() <= 2.0 + 1e-12);
}

fn unit_xz(angle: f64) -> DichotomicObservable {
    let (s, c) = angle.sin_cos();
    let n = (s * s + c * c).sqrt();
    DichotomicObservable::new([s / n, 0.0, c / n], "rand").unwrap()
}

fn unit_sphere(theta: f64, phi: f64) -> DichotomicObservable {
    let v = [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ];
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    DichotomicObservable::new(v.map(|c| c / n), "rand").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn product_correlators_for_two_singlets(
        angles in proptest::collection::vec((0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU), 8)
    ) {
        let o: Vec<_> = angles.iter().map(|&(t, p)| unit_sphere(t, p)).collect();
        let plan = MeasurementPlan {
            a: [o[0].clone(), o[1].clone()],
            b_arm_a: [o[2].clone(), o[3].clone()],
            b_arm_c: [o[4].clone(), o[5].clone()],
            c: [o[6].clone(), o[7].clone()],
        };
        let beh = born_behavior(&singlet_state(), &singlet_state(), &plan);
        let oracle = projector_contraction(&singlet_state(), &singlet_state(), &plan);
        for s in 0..8 {
            let (xa, xb, xc) = settings_bits(s);
            let closed = plan.a[xa].dot(&plan.b_arm_a[xb]) * plan.b_arm_c[xb].dot(&plan.c[xc]);
            prop_assert!((beh.correlator(xa, xb, xc) - closed).abs() < 1e-10);
            prop_assert!((oracle_correlator(&oracle, s) - closed).abs() < 1e-10);
        }
    }

    #[test]
    fn born_behavior_is_normalized(v1 in 0.0..=1.0f64, v2 in 0.0..=1.0f64, t in 0.0..6.3f64) {
        let mut plan = MeasurementPlan::optimal();
        plan.a[1] = unit_xz(t);
        let beh = born_behavior(&werner_state(v1).unwrap(), &werner_state(v2).unwrap(), &plan);
        for row in beh.table() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn double_relabel_of_peripheral_parties_keeps_functional(v1 in 0.0..=1.0f64, v2 in 0.0..=1.0f64) {
        let beh = born_behavior(&werner_state(v1).unwrap(), &werner_state(v2).unwrap(), &MeasurementPlan::optimal());
        let flipped = beh.relabel(0, 0).relabel(0, 1).relabel(2, 0).relabel(2, 1);
        let a = biloc_functional(&beh, Convention::Peripheral);
        let b = biloc_functional(&flipped, Convention::Peripheral);
        prop_assert!((a.i1 - b.i1).abs() < 1e-12 && (a.i2 - b.i2).abs() < 1e-12);
    }

    #[test]
    fn chsh_ignores_global_relabeling(v in 0.0..=1.0f64, t in 0.0..6.3f64) {
        let a = [unit_xz(t), DichotomicObservable::diag_minus()];
        let b = [DichotomicObservable::sigma_z(), DichotomicObservable::sigma_x()];
        let beh = born_bipartite(&werner_state(v).unwrap(), &a, &b);
        prop_assert!((chsh(&beh) - chsh(&beh.relabel_first())).abs() < 1e-12);
    }

    #[test]
    fn functional_b_is_sum_of_roots(i1 in -1.0..=1.0f64, i2 in -1.0..=1.0f64) {
        let r = FunctionalResult::from_correlations(i1, i2);
        prop_assert!((r.b - (i1.abs().sqrt() + i2.abs().sqrt())).abs() < 1e-12);
    }
}
