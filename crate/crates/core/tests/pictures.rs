use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_abs_diff_eq;
use qbundle::bundle::{lift_observable, lift_state, BundleAtlas, EvolutionTransport, ObserverPath};
use qbundle::linear::{identity, max_abs_diff, mean_value, pauli_x, pauli_y, pauli_z, scale, state, zeros};
use qbundle::pictures::*;
use qbundle::propagation::{HamiltonianFamily, IntegratorConfig, Propagator};
use qbundle::{family, random, OperatorFamily, StateVector, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn plus() -> StateVector {
    state(&[c(1.0, 0.0), c(1.0, 0.0)]) / c(2f64.sqrt(), 0.0)
}

fn propagator(h: HamiltonianFamily, lo: f64, hi: f64) -> Arc<Propagator> {
    Arc::new(Propagator::new(h, lo, hi, &IntegratorConfig::default()).unwrap())
}

fn eigenvalues_hermitian(a: &qbundle::Operator) -> Vec<f64> {
    let mut e: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

fn smooth_hamiltonian(seed: u64, dim: usize) -> HamiltonianFamily {
    let mut rng = random::stream(seed, "test/h");
    let h0 = random::hermitian(&mut rng, dim, 1.0);
    let h1 = random::hermitian(&mut rng, dim, 0.5);
    let (a, b) = (h0.clone(), h1.clone());
    let fam = OperatorFamily::smooth(dim, move |t| &a + scale(&b, t.cos())).unwrap().with_derivative(move |t| scale(&h1, -t.sin()));
    HamiltonianFamily::natural(fam).unwrap()
}

#[test]
fn heisenberg_observable_commuting_pair_is_static() {
    let u = propagator(HamiltonianFamily::constant(pauli_z()).unwrap(), 0.0, 2.0);
    let a = OperatorFamily::constant(pauli_z()).unwrap();
    assert!(max_abs_diff(&to_heisenberg_observable(&u, &a, 1.3, 0.0).unwrap(), &pauli_z()) < 1e-12);
}

#[test]
fn heisenberg_observable_golden_rotation() {
    let u = propagator(HamiltonianFamily::constant(pauli_z()).unwrap(), 0.0, 1.0);
    let a = OperatorFamily::constant(pauli_x()).unwrap();
    let ah = to_heisenberg_observable(&u, &a, PI / 4.0, 0.0).unwrap();
    // direct conjugation by U(0, t) = diag(e^{it}, e^{-it})
    let t = PI / 4.0;
    let back = qbundle::Operator::from_diagonal(&state(&[c(0.0, t).exp(), c(0.0, -t).exp()]));
    let oracle = &back * pauli_x() * back.adjoint();
    assert!(max_abs_diff(&ah, &oracle) < 1e-12);
    assert!(max_abs_diff(&ah, &(-pauli_y())) < 1e-8);
}

#[test]
fn heisenberg_observable_preserves_spectrum() {
    let mut rng = random::stream(11, "spectrum");
    let a0 = random::hermitian(&mut rng, 4, 2.0);
    let u = propagator(smooth_hamiltonian(3, 4), 0.0, 1.0);
    let a = OperatorFamily::constant(a0.clone()).unwrap();
    let ah = to_heisenberg_observable(&u, &a, 0.8, 0.1).unwrap();
    let (e0, e1) = (eigenvalues_hermitian(&a0), eigenvalues_hermitian(&ah));
    for (x, y) in e0.iter().zip(&e1) {
        assert_abs_diff_eq!(x, y, epsilon = 1e-10);
    }
}

#[test]
fn heisenberg_state_and_means() {
    let u = propagator(HamiltonianFamily::constant(pauli_z()).unwrap(), 0.0, 1.0);
    let traj = schrodinger_trajectory(Arc::clone(&u), plus(), 0.0).unwrap();
    let frozen = heisenberg_state(|t| traj(t), 0.0).unwrap();
    assert_eq!(frozen, plus());
    let a = OperatorFamily::constant(pauli_x()).unwrap();
    let t = PI / 4.0;
    let lhs = mean_value(&pauli_x(), &traj(t).unwrap()).unwrap();
    let rhs = mean_value(&to_heisenberg_observable(&u, &a, t, 0.0).unwrap(), &frozen).unwrap();
    assert!((lhs - rhs).norm() < 1e-10);
    let v = UnitaryFamily::heisenberg(Arc::clone(&u), 0.0).unwrap();
    assert_eq!(v_propagator(&v, &u, 0.7, 0.0).unwrap(), identity(2));
}

#[test]
fn heisenberg_equation_examples() {
    let u = propagator(HamiltonianFamily::constant(pauli_z()).unwrap(), 0.0, 2.0);
    let commuting = OperatorFamily::constant(pauli_z()).unwrap();
    assert!(heisenberg_eom_residual(&u, &commuting, 1.0, 0.0, 1e-4).unwrap() <= 1e-8);
    let sx = OperatorFamily::constant(pauli_x()).unwrap();
    assert!(heisenberg_eom_residual(&u, &sx, 1.0, 0.0, 1e-4).unwrap() <= 1e-6);
    let moving = family::modulated(pauli_x(), f64::cos, |t| -t.sin()).unwrap();
    assert!(heisenberg_eom_residual(&u, &moving, 1.0, 0.0, 1e-4).unwrap() <= 1e-6);
    assert!(heisenberg_eom_residual(&u, &moving, 2.0, 0.0, 1e-4).is_err());
}

#[test]
fn v_picture_identity_is_schrodinger() {
    let v = UnitaryFamily::identity(2, 0.0).unwrap();
    let psi = plus();
    let (p, a) = to_v_picture(&v, &psi, &pauli_x(), 0.4).unwrap();
    assert_eq!((p, a), (psi, pauli_x()));
    let h = HamiltonianFamily::constant(pauli_z()).unwrap();
    let hs = v_hamiltonians(&v, &h, 0.4, 1e-4).unwrap();
    assert_eq!(hs.transformed, pauli_z());
    assert_eq!(hs.generator, zeros(2));
    assert_eq!(hs.modified, pauli_z());
    let u = propagator(h, 0.0, 1.0);
    assert_eq!(v_propagator(&v, &u, 0.8, 0.1).unwrap(), u.evolution(0.8, 0.1).unwrap());
}

#[test]
fn heisenberg_v_matches_heisenberg_picture() {
    let u = propagator(smooth_hamiltonian(5, 3), 0.0, 1.0);
    let v = UnitaryFamily::heisenberg(Arc::clone(&u), 0.0).unwrap();
    let mut rng = random::stream(5, "v");
    let a0 = random::hermitian(&mut rng, 3, 1.0);
    let a = OperatorFamily::constant(a0.clone()).unwrap();
    let traj = schrodinger_trajectory(Arc::clone(&u), random::haar_state(&mut rng, 3), 0.0).unwrap();
    let t = 0.6;
    let (pv, av) = to_v_picture(&v, &traj(t).unwrap(), &a0, t).unwrap();
    assert!(max_abs_diff(&av, &to_heisenberg_observable(&u, &a, t, 0.0).unwrap()) < 1e-10);
    assert!((pv - traj(0.0).unwrap()).norm() < 1e-10);
}

#[test]
fn random_v_preserves_means() {
    let v = UnitaryFamily::random(3, 0.2, 9, 1.0).unwrap();
    let mut rng = random::stream(9, "means");
    for _ in 0..10 {
        let a = random::hermitian(&mut rng, 3, 1.5);
        let psi = random::haar_state(&mut rng, 3);
        let (pv, av) = to_v_picture(&v, &psi, &a, 0.9).unwrap();
        assert!((mean_value(&av, &pv).unwrap() - mean_value(&a, &psi).unwrap()).norm() < 1e-10);
    }
}

#[test]
fn v_hamiltonian_examples() {
    let h = HamiltonianFamily::constant(pauli_z()).unwrap();
    let u = propagator(h.clone(), 0.0, 1.0);
    let v = UnitaryFamily::heisenberg(Arc::clone(&u), 0.0).unwrap();
    assert!(v_hamiltonians(&v, &h, 0.5, 1e-4).unwrap().modified.norm() < 1e-6);

    let h1 = pauli_x() * c(0.3, 0.0);
    let total = HamiltonianFamily::constant(pauli_z() + &h1).unwrap();
    let free = UnitaryFamily::free(&pauli_z(), 1.0, 0.0).unwrap();
    let t = 0.7;
    let vt = free.eval(t).unwrap();
    let hs = v_hamiltonians(&free, &total, t, 1e-4).unwrap();
    assert!(max_abs_diff(&hs.modified, &(&vt * &h1 * vt.adjoint())) < 1e-6);
    let numeric = UnitaryFamily::from_fn(2, 0.0, Arc::new(move |t| free.eval(t))).unwrap();
    let hn = v_hamiltonians(&numeric, &total, t, 1e-4).unwrap();
    assert!(max_abs_diff(&hn.modified, &(&vt * &h1 * vt.adjoint())) < 1e-6);
}

#[test]
fn v_propagator_residual_is_small_for_random_families() {
    let u = propagator(smooth_hamiltonian(2, 3), 0.0, 1.0);
    let v = UnitaryFamily::random(3, 0.0, 4, 1.0).unwrap();
    for t in [0.2, 0.5, 0.8] {
        assert!(v_propagator_residual(&v, &u, t, 0.1, 1e-4).unwrap() <= 1e-6);
    }
    assert_eq!(v_propagator(&v, &u, 0.1, 0.1).unwrap(), v.eval(0.1).unwrap() * v.inverse(0.1).unwrap());
}

#[test]
fn v_equations_of_motion() {
    let h = smooth_hamiltonian(8, 3);
    let u = propagator(h.clone(), 0.0, 1.0);
    let mut rng = random::stream(8, "eom");
    let traj = schrodinger_trajectory(Arc::clone(&u), random::haar_state(&mut rng, 3), 0.0).unwrap();
    let a0 = random::hermitian(&mut rng, 3, 1.0);
    let a1 = random::hermitian(&mut rng, 3, 1.0);
    let a = family::modulated(a1.clone(), f64::sin, f64::cos).unwrap().sum(&OperatorFamily::constant(a0).unwrap()).unwrap();

    let id = UnitaryFamily::identity(3, 0.0).unwrap();
    let (s, _) = v_eom_residuals(&id, &h, |t| traj(t), &a, 0.5, 1e-4).unwrap();
    let schr = qbundle::propagation::schrodinger_residual(&h, |t| traj(t), &[0.5], 1e-4).unwrap();
    assert!(s <= 1e-6);
    assert_abs_diff_eq!(s, schr, epsilon = 1e-12);

    let heis = UnitaryFamily::heisenberg(Arc::clone(&u), 0.0).unwrap();
    let static_a = OperatorFamily::constant(pauli_x().insert_row(2, c(0.0, 0.0)).insert_column(2, c(0.0, 0.0))).unwrap();
    let (_, o) = v_eom_residuals(&heis, &h, |t| traj(t), &static_a, 0.5, 1e-4).unwrap();
    let direct = heisenberg_eom_residual(&u, &static_a, 0.5, 0.0, 1e-4).unwrap();
    assert!(o <= 1e-6 && direct <= 1e-6);

    let v = UnitaryFamily::random(3, 0.0, 3, 1.0).unwrap();
    for t in [0.3, 0.6] {
        let (s, o) = v_eom_residuals(&v, &h, |t| traj(t), &a, t, 1e-4).unwrap();
        assert!(s <= 1e-5 && o <= 1e-5, "{s} {o}");
    }
}

#[test]
fn bundle_v_residuals_match_hilbert_residuals() {
    let path = ObserverPath::new(0.0, 1.0, "γ").unwrap();
    let hc = HamiltonianFamily::constant(random::hermitian(&mut random::stream(1, "hc"), 3, 1.0)).unwrap();
    for (h, atlas) in [
        (hc.clone(), BundleAtlas::unitary_field(path.clone(), 3, 2).unwrap()),
        (hc, BundleAtlas::invertible_field(path.clone(), 3, 2, 100.0).unwrap()),
        (smooth_hamiltonian(6, 3), BundleAtlas::invertible_field(path.clone(), 3, 6, 100.0).unwrap()),
    ] {
        let u = propagator(h.clone(), 0.0, 1.0);
        let transport = EvolutionTransport::new(atlas.clone(), Arc::clone(&u)).unwrap();
        let mut rng = random::stream(4, "bundle-v");
        let traj = schrodinger_trajectory(Arc::clone(&u), random::haar_state(&mut rng, 3), 0.0).unwrap();
        let a = family::modulated(random::hermitian(&mut rng, 3, 1.0), f64::cos, |t| -t.sin()).unwrap();
        let t2 = Arc::clone(&traj);
        let section = lift_state(&atlas, move |t| t2(t));
        let field = lift_observable(&atlas, &a).unwrap();
        let v = UnitaryFamily::random(3, 0.3, 5, 1.0).unwrap();
        for t in [0.4, 0.7] {
            let (hs, ho) = v_eom_residuals(&v, &h, |t| traj(t), &a, t, 1e-4).unwrap();
            let (bs, bo) = bundle_v_eom_residuals(&transport, &v, &section, &field, t, 1e-4).unwrap();
            assert!(bs <= 1e-5 && bo <= 1e-5, "{bs} {bo}");
            assert!((hs - bs).abs() <= 1e-9 && (ho - bo).abs() <= 1e-9, "{hs} {bs} {ho} {bo}");
            let bu = bundle_v_propagator(&transport, &v, t, 0.2).unwrap();
            let hu = v_propagator(&v, &u, t, 0.2).unwrap();
            let l1 = atlas.triv(v.anchor()).unwrap();
            assert!(max_abs_diff(&(&l1 * bu * atlas.triv_inverse(v.anchor()).unwrap()), &hu) < 1e-10);
        }
    }
}

#[test]
fn interaction_split_examples() {
    let cfg = IntegratorConfig::with_step(1e-3).unwrap();
    let h0 = HamiltonianFamily::constant(pauli_z()).unwrap();
    let zero = HamiltonianFamily::constant(zeros(2)).unwrap();
    let hi = HamiltonianFamily::constant(pauli_x() * c(0.1, 0.0)).unwrap();

    let s = interaction_split(&h0, &zero, 1.0, 0.0, &cfg).unwrap();
    assert!(max_abs_diff(&s.u_interaction, &identity(2)) < 1e-14);
    assert!(max_abs_diff(&s.u_full, &s.u0) < 1e-14);

    let s = interaction_split(&zero, &hi, 1.0, 0.0, &cfg).unwrap();
    assert!(max_abs_diff(&s.u0, &identity(2)) < 1e-14);
    assert!(max_abs_diff(&s.u_interaction, &s.u_full) < 1e-12);

    let picture = InteractionPicture::new(h0, hi, 0.0, 1.0, 0.0, &cfg).unwrap();
    assert!(picture.splitting_residual(1.0).unwrap() <= 1e-7);
}

#[test]
fn interaction_equations_of_motion() {
    let cfg = IntegratorConfig::with_step(1e-3).unwrap();
    let h0 = HamiltonianFamily::constant(pauli_z()).unwrap();
    let hi = HamiltonianFamily::constant(pauli_x() * c(0.1, 0.0)).unwrap();
    let zero = HamiltonianFamily::constant(zeros(2)).unwrap();
    let a = OperatorFamily::constant(pauli_z()).unwrap();

    let free = InteractionPicture::new(h0.clone(), zero, 0.0, 1.0, 0.0, &cfg).unwrap();
    let traj = schrodinger_trajectory(Arc::new(free.full_propagator().clone()), plus(), 0.0).unwrap();
    let (s, _) = free.eom_residuals(|t| traj(t), &a, 0.5, 1e-4).unwrap();
    assert!(s <= 1e-9, "{s}");

    let picture = InteractionPicture::new(h0, hi, 0.0, 1.0, 0.0, &cfg).unwrap();
    let traj = schrodinger_trajectory(Arc::new(picture.full_propagator().clone()), plus(), 0.0).unwrap();
    let (s, o) = interaction_eom_residuals(&picture, |t| traj(t), &a, 0.5, 1e-4).unwrap();
    assert!(s <= 1e-5 && o <= 1e-5, "{s} {o}");
}

#[test]
fn picture_means_agree() {
    let h = smooth_hamiltonian(12, 2);
    let u = propagator(h.clone(), 0.0, 1.0);
    let traj = schrodinger_trajectory(Arc::clone(&u), plus(), 0.0).unwrap();
    let a = family::modulated(pauli_y(), f64::cos, |t| -t.sin()).unwrap();
    for v in [
        UnitaryFamily::identity(2, 0.0).unwrap(),
        UnitaryFamily::heisenberg(Arc::clone(&u), 0.0).unwrap(),
        UnitaryFamily::random(2, 0.5, 1, 1.0).unwrap(),
    ] {
        let pic = PictureBundle::new(v, h.clone(), Arc::clone(&traj), 1e-4).unwrap();
        assert!(picture_mean_gap(&pic, &a, &[0.1, 0.5, 0.9]).unwrap() <= 1e-9);
    }
}

#[test]
fn unitary_family_rejects_unnormalized_input() {
    let err = UnitaryFamily::from_fn(2, 0.0, Arc::new(|_| Ok(pauli_x())));
    assert!(err.is_err());
}
