use chaincert::builtins;
use chaincert::chain::{LocalOperator, Volume};
use chaincert::fnorm::{FSpec, Interaction, Restriction};
use chaincert::linalg::{self, c, identity, kron, pauli_x, pauli_z, scale};
use chaincert::lrcert;
use chaincert::splitlab::*;
use chaincert::Error;

fn p4() -> FSpec {
    FSpec::power_law(4.0).unwrap()
}

fn sz(x: i64) -> LocalOperator {
    LocalOperator::new(vec![x], pauli_z(), 2).unwrap()
}

#[test]
fn envelopes_decrease_in_n() {
    let k = lrcert::lr_constants(&p4(), 16.0).unwrap();
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for n in 1..40 {
        let tr = truncation_envelope(&k, 1.0, n, 0.5).unwrap();
        let dc = decoupling_envelope(&k, 16.0, 1.0, n, 0.5).unwrap();
        assert!(tr < prev.0);
        if n > 1 {
            assert!(dc < prev.1, "n = {n}");
        }
        prev = (tr, dc);
    }
    assert_eq!(delta(4.0), 1.0);
    assert_eq!(delta(3.0), 0.5);
}

#[test]
fn truncation_trivial_cases() {
    let v = Volume::new(-5, 2).unwrap();
    let phi = builtins::tfim(1.0, 1.0).instantiate(-5, 2).unwrap();
    let dynamics = SplitDynamics::new(&phi, v, 0.0).unwrap();
    let d = truncation_defect(&phi, &p4(), &dynamics, &sz(-4), 2, 1).unwrap();
    assert_eq!(d.defect, 0.0);

    let free = Interaction::new(2).unwrap();
    let dynamics = SplitDynamics::new(&free, v, 1.3).unwrap();
    let d = truncation_defect(&free, &p4(), &dynamics, &sz(-4), 2, 1).unwrap();
    assert!(d.defect < 1e-14);
    assert!(matches!(truncation_defect(&free, &p4(), &dynamics, &sz(-1), 2, 1), Err(Error::BadGeometry(_))));
}

#[test]
fn truncation_tfim_below_envelope() {
    let v = Volume::new(-5, 2).unwrap();
    let phi = builtins::tfim(1.0, 1.0).instantiate(-5, 2).unwrap();
    let dynamics = SplitDynamics::new(&phi, v, 0.5).unwrap();
    let a = LocalOperator::new(vec![-5, -4], kron(&pauli_x(), &pauli_z()), 2).unwrap();
    let d = truncation_defect(&phi, &p4(), &dynamics, &a, 2, 1).unwrap();
    assert!(d.defect > 0.0 && d.holds());
}

#[test]
fn truncation_vanishes_for_commuting_dynamics() {
    let v = Volume::new(-6, 1).unwrap();
    let phi = builtins::tfim(1.0, 0.0).instantiate(-6, 1).unwrap();
    let dynamics = SplitDynamics::new(&phi, v, 0.9).unwrap();
    let a = LocalOperator::new(vec![-4], pauli_x(), 2).unwrap();
    let d = truncation_defect(&phi, &p4(), &dynamics, &a, 2, 1).unwrap();
    assert!(d.defect < 1e-12, "{}", d.defect);
}

#[test]
fn decoupling_trivial_cases() {
    let v = Volume::new(-4, 3).unwrap();
    let phi = builtins::tfim(1.0, 1.0).instantiate(-4, 3).unwrap();
    let dec = phi.restrict(Restriction::Decoupled);
    let dynamics = SplitDynamics::with_decoupled(&dec, v, 1.0).unwrap();
    assert!(decoupling_defect(&dec, &p4(), &dynamics, &sz(-2), 1).unwrap().defect < 1e-12);
    let dynamics = SplitDynamics::with_decoupled(&phi, v, 0.0).unwrap();
    assert_eq!(decoupling_defect(&phi, &p4(), &dynamics, &sz(-2), 1).unwrap().defect, 0.0);
}

#[test]
fn decoupling_curve_on_ten_sites() {
    let v = Volume::new(-5, 4).unwrap();
    let phi = builtins::tfim(1.0, 1.0).instantiate(-5, 4).unwrap();
    let dynamics = SplitDynamics::with_decoupled(&phi, v, 1.0).unwrap();
    let mut prev = f64::INFINITY;
    for n in 1..=2 {
        let d = decoupling_defect(&phi, &p4(), &dynamics, &sz(-2 * n), n).unwrap();
        assert!(d.holds());
        assert!(d.defect < prev);
        prev = d.defect;
    }
    // norm homogeneity
    let a = sz(-2);
    let a3 = LocalOperator::new(vec![-2], scale(&pauli_z(), c(-3.0, 0.0)), 2).unwrap();
    let d1 = dynamics.decoupling_norm(&a).unwrap();
    let d3 = dynamics.decoupling_norm(&a3).unwrap();
    assert!((d3 - 3.0 * d1).abs() < 1e-9 * d3);
}

#[test]
fn decoupling_matches_direct_difference() {
    let v = Volume::new(-3, 2).unwrap();
    let phi = builtins::heisenberg(0.7).instantiate(-3, 2).unwrap();
    let t = 0.8;
    let dynamics = SplitDynamics::with_decoupled(&phi, v, t).unwrap();
    let a = sz(-2);
    let full = chaincert::chain::heisenberg_evolve(&phi, v, &a, t).unwrap();
    let dec = chaincert::chain::heisenberg_evolve(&phi.restrict(Restriction::Decoupled), v, &a, t).unwrap();
    let direct = linalg::op_norm(&(&full.matrix - &dec.matrix));
    assert!((direct - dynamics.decoupling_norm(&a).unwrap()).abs() < 1e-10);
}

#[test]
fn quasi_equivalence_probe_cases() {
    let v = Volume::new(-3, 4).unwrap();
    let phi = builtins::tfim(1.0, 1.5).instantiate(-3, 4).unwrap();
    let gs = GroundState::new(&phi, v, 0.1).unwrap();
    let omega = ChainState::pure(v, 2, &gs.psi).unwrap();
    assert!(quasi_equivalence_probe(&omega, &omega, &[0, 1], 5, 1).unwrap() < 1e-14);

    // product states that differ on site 0 only
    let up = kron(&identity(1), &linalg::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]));
    let down = linalg::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]]);
    let mut a = linalg::identity(1);
    let mut b = linalg::identity(1);
    for x in v.sites() {
        a = kron(&a, &up);
        b = kron(&b, if x == 0 { &down } else { &up });
    }
    let sa = ChainState::mixed(v, 2, a).unwrap();
    let sb = ChainState::mixed(v, 2, b).unwrap();
    assert!(quasi_equivalence_probe(&sa, &sb, &[0], 5, 2).unwrap() < 1e-14);
    assert!(quasi_equivalence_probe(&sa, &sb, &[1], 5, 2).unwrap() > 0.5);

    // ground state vs product of its halves: both the probe and the trace-norm oracle shrink
    let split = omega.split_product().unwrap();
    let mut prev = f64::INFINITY;
    for k in 1..=3 {
        let x_eps: Vec<i64> = ((1 - k)..=k).collect();
        let probe = quasi_equivalence_probe(&omega, &split, &x_eps, 10, 3).unwrap();
        let outside: Vec<i64> = v.sites().filter(|x| !x_eps.contains(x)).collect();
        let oracle = trace_norm_hermitian(&(omega.reduced(&outside) - split.reduced(&outside))).unwrap();
        assert!(probe <= oracle + 1e-12);
        assert!(probe < prev, "k = {k}: {probe} vs {prev}");
        prev = probe;
    }
}

#[test]
fn correlations_of_product_and_gapped_states() {
    let spec = FSpec::new(4.0, 1.0, 0.5).unwrap();
    let v = Volume::new(0, 7).unwrap();
    let field = builtins::tfim(0.0, 1.0).instantiate(0, 7).unwrap();
    let gs = GroundState::new(&field, v, 1.0).unwrap();
    let chk = correlation_decay_check(&field, &spec, &gs, 1.0, &sz(0), &sz(3)).unwrap();
    assert!(chk.connected <= 1e-12);
    let one = LocalOperator::new(vec![1], identity(2), 2).unwrap();
    assert!(correlation_decay_check(&field, &spec, &gs, 1.0, &one, &sz(5)).unwrap().connected < 1e-14);

    let phi = builtins::tfim(1.0, 2.0).instantiate(0, 7).unwrap();
    let gs = GroundState::new(&phi, v, 1.0).unwrap();
    for x in 0..7 {
        for y in (x + 1)..8 {
            let chk = correlation_decay_check(&phi, &spec, &gs, 1.0, &sz(x), &sz(y)).unwrap();
            assert!(chk.holds());
        }
    }
    assert!(matches!(GroundState::new(&phi, v, 100.0), Err(Error::DegenerateSplit { .. })));
    assert!(correlation_envelope(&lrcert::lr_constants(&p4(), 1.0).unwrap(), &p4(), 1.0, 3, 1.0, 1.0).is_err());
}
