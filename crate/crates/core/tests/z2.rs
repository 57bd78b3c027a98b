use chaincert::builtins;
use chaincert::chain::LocalOperator;
use chaincert::linalg::{self, c, from_real_rows, kron, pauli_x, pauli_y, pauli_z, scale, CMat};
use chaincert::z2::*;
use chaincert::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn op(support: Vec<i64>, m: CMat, d: usize) -> LocalOperator {
    LocalOperator::new(support, m, d).unwrap()
}

/// `V = W Wᵀ` (sign +1) or `W J Wᵀ` with `J = iσ^y` (sign −1).
fn random_tr(sign: i8, rng: &mut ChaCha8Rng) -> TimeReversal {
    let w = linalg::haar_unitary(2, rng);
    let j = from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
    let v = if sign > 0 { &w * w.transpose() } else { &w * &j * w.transpose() };
    TimeReversal::new(v).unwrap()
}

fn real_mps(d: usize, dbond: usize, rng: &mut ChaCha8Rng) -> MpsTensor {
    let tensors = (0..d)
        .map(|_| CMat::from_fn(dbond, dbond, |_, _| c(rng.random_range(-1.0..1.0), 0.0)))
        .collect();
    MpsTensor::new(tensors).unwrap()
}

/// `A^i = a + i(bσ^x + cσ^y + dσ^z)`, real `a, b, c, d`: conjugation acts as `σ^y · σ^y`.
fn quaternionic_mps(d: usize, rng: &mut ChaCha8Rng) -> MpsTensor {
    let tensors = (0..d)
        .map(|_| {
            let mut m = scale(&linalg::identity(2), c(rng.random_range(-1.0..1.0), 0.0));
            for p in [pauli_x(), pauli_y(), pauli_z()] {
                m += scale(&p, c(0.0, rng.random_range(-1.0..1.0)));
            }
            m
        })
        .collect();
    MpsTensor::new(tensors).unwrap()
}

fn random_mps(sign: i8, rng: &mut ChaCha8Rng) -> MpsTensor {
    if sign > 0 {
        real_mps(2, 2, rng)
    } else {
        quaternionic_mps(2, rng)
    }
}

#[test]
fn pauli_and_model_invariance() {
    let cc = TimeReversal::conjugation(2);
    let flip = TimeReversal::spin_flip(2).unwrap();
    assert_eq!(cc.square_sign(), Some(1));
    assert_eq!(flip.square_sign(), Some(-1));

    for (p, sign) in [(pauli_x(), 1.0), (pauli_y(), -1.0), (pauli_z(), 1.0)] {
        let a = op(vec![0], p.clone(), 2);
        let out = cc.apply(&a).unwrap();
        assert!(linalg::max_abs_diff(&out.matrix, &scale(&p, c(sign, 0.0))) < 1e-15);
        let out = flip.apply(&a).unwrap();
        assert!(linalg::max_abs_diff(&out.matrix, &scale(&p, c(-1.0, 0.0))) < 1e-14);
    }

    let izz = op(vec![3], scale(&pauli_z(), c(0.0, 1.0)), 2);
    assert!((cc.invariance_defect(&izz).unwrap() - 2.0).abs() < 1e-14);
    let zz = op(vec![0, 1], kron(&pauli_z(), &pauli_z()), 2);
    assert!(flip.invariance_defect(&zz).unwrap() < 1e-14);

    let heis = builtins::heisenberg(1.0).instantiate(0, 4).unwrap();
    assert!(check_interaction_invariance(&flip, &heis, 5).unwrap().invariant);
    assert!(check_interaction_invariance(&cc, &heis, 5).unwrap().invariant);

    let aklt = builtins::aklt().instantiate(0, 3).unwrap();
    let flip3 = TimeReversal::spin_flip(3).unwrap();
    assert_eq!(flip3.square_sign(), Some(1));
    assert!(check_interaction_invariance(&flip3, &aklt, 5).unwrap().invariant);

    let tfim = builtins::tfim(1.0, 0.7).instantiate(0, 4).unwrap();
    assert!(check_interaction_invariance(&cc, &tfim, 5).unwrap().invariant);
    let r = check_interaction_invariance(&flip, &tfim, 5).unwrap();
    assert!(!r.invariant);
    assert!((r.worst_defect - 1.4).abs() < 1e-12);

    assert!(matches!(
        check_interaction_invariance(&flip3, &heis, 3),
        Err(Error::OnsiteDimMismatch { .. })
    ));
}

#[test]
fn involutive_on_random_operators() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..100 {
        let xi = random_tr(if k % 2 == 0 { 1 } else { -1 }, &mut rng);
        let n = 1 + k % 3;
        let m = linalg::ginibre(1 << n, &mut rng);
        let a = op((0..n as i64).collect(), m, 2);
        let twice = xi.apply(&xi.apply(&a).unwrap()).unwrap();
        assert!(linalg::max_abs_diff(&twice.matrix, &a.matrix) < 1e-13, "instance {k}");
    }
}

#[test]
fn product_and_aklt_indices() {
    let s = 0.5f64.sqrt();
    let plus = MpsTensor::product(&[c(s, 0.0), c(s, 0.0)]).unwrap();
    let r = mps_tr_index(&plus, &TimeReversal::conjugation(2)).unwrap();
    assert_eq!(r.index, 1);

    let aklt = MpsTensor::aklt();
    let flip3 = TimeReversal::spin_flip(3).unwrap();
    let r = mps_tr_index(&aklt, &flip3).unwrap();
    assert_eq!(r.index, -1);
    assert!(r.residual < 1e-10 && r.sign_defect < 1e-10);
    assert!((r.overlap - 1.0).abs() < 1e-10);
    assert!(aklt.canonical().unwrap().right_canonical_defect() < 1e-12);

    let two = aklt.stack(&aklt);
    let r = mps_tr_index(&two, &flip3.stack(&flip3)).unwrap();
    assert_eq!(r.index, 1);
}

#[test]
fn entanglement_degeneracy() {
    let aklt = entanglement_degeneracy_probe(&MpsTensor::aklt()).unwrap();
    assert_eq!(aklt.groups.len(), 1);
    assert_eq!(aklt.groups[0].1, 2);
    assert!((aklt.groups[0].0 - 0.5).abs() < 1e-12);
    assert!(aklt.all_even());

    let prod = entanglement_degeneracy_probe(&MpsTensor::product(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap()).unwrap();
    assert_eq!(prod.groups, vec![(1.0, 1)]);
    assert!(!prod.all_even());

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let r = entanglement_degeneracy_probe(&quaternionic_mps(3, &mut rng)).unwrap();
        assert!(r.all_even(), "{:?}", r.groups);
        assert!((r.spectrum.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn random_indices_stack_multiplicatively() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cc = TimeReversal::conjugation(2);
    for k in 0..10 {
        let (sa, sb) = ([1i8, -1][k % 2], [1i8, -1][(k / 2) % 2]);
        let a = random_mps(sa, &mut rng);
        let b = random_mps(sb, &mut rng);
        assert_eq!(mps_tr_index(&a, &cc).unwrap().index, sa);
        assert_eq!(mps_tr_index(&b, &cc).unwrap().index, sb);
        let ab = mps_tr_index(&a.stack(&b), &cc.stack(&cc)).unwrap();
        assert_eq!(ab.index, sa * sb, "pair {k}");
    }
}

#[test]
fn failure_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let generic = MpsTensor::new((0..2).map(|_| linalg::ginibre(2, &mut rng)).collect()).unwrap();
    assert!(matches!(mps_tr_index(&generic, &TimeReversal::conjugation(2)), Err(Error::NotInvariant(_))));

    let ghz = MpsTensor::new(vec![
        from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]),
        from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]),
    ])
    .unwrap();
    assert!(matches!(ghz.canonical(), Err(Error::NotInjective(_))));

    assert!(TimeReversal::new(scale(&linalg::identity(2), c(2.0, 0.0))).is_err());
    assert!(MpsTensor::new(vec![]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn index_is_gauge_invariant(seed in 0u64..10_000, phase in -3.0f64..3.0, negative in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sign = if negative { -1 } else { 1 };
        let a = random_mps(sign, &mut rng);
        let u = linalg::haar_unitary(2, &mut rng);
        let cc = TimeReversal::conjugation(2);
        let r = mps_tr_index(&a.gauge(&u, phase), &cc).unwrap();
        prop_assert_eq!(r.index, sign);
        prop_assert!(r.residual < 1e-8);
    }

    #[test]
    fn involution_under_random_symmetric_unitaries(seed in 0u64..10_000, negative in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi = random_tr(if negative { -1 } else { 1 }, &mut rng);
        prop_assert_eq!(xi.square_sign(), Some(if negative { -1 } else { 1 }));
        let a = op(vec![0, 1], linalg::ginibre(4, &mut rng), 2);
        let twice = xi.apply(&xi.apply(&a).unwrap()).unwrap();
        prop_assert!(linalg::max_abs_diff(&twice.matrix, &a.matrix) < 1e-13);
    }
}
