use std::f64::consts::PI;
use std::sync::Arc;

use qbundle::bundle::{lift_observable, BundleAtlas, EvolutionTransport, FrameField, MorphismField, ObserverPath};
use qbundle::linear::{identity, max_abs_diff, pauli_x, pauli_y, pauli_z, scale, state, zeros};
use qbundle::motion::*;
use qbundle::propagation::{HamiltonianFamily, IntegratorConfig, Propagator};
use qbundle::{family, random, Error, Operator, OperatorFamily, StateVector, TimeFn, Tolerance, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn plus() -> StateVector {
    state(&[c(1.0, 0.0), c(1.0, 0.0)]) / c(2f64.sqrt(), 0.0)
}

fn sigma_z_propagator(hi: f64) -> Arc<Propagator> {
    Arc::new(Propagator::new(HamiltonianFamily::constant(pauli_z()).unwrap(), 0.0, hi, &IntegratorConfig::default()).unwrap())
}

fn transport(u: &Arc<Propagator>, atlas: BundleAtlas) -> EvolutionTransport {
    EvolutionTransport::new(atlas, Arc::clone(u)).unwrap()
}

fn samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

#[test]
fn mean_constancy_examples() {
    let u = sigma_z_propagator(PI / 2.0);
    let states = spanning_states(2, 1);
    let ts = samples(0.0, PI / 2.0, 16);
    let id = OperatorFamily::constant(identity(2)).unwrap();
    assert_eq!(mean_constancy_residual(&u, &id, &states, &ts, 0.0).unwrap(), 0.0);
    let z = OperatorFamily::constant(pauli_z()).unwrap();
    assert!(mean_constancy_residual(&u, &z, &states, &ts, 0.0).unwrap() <= 1e-9);
    let x = OperatorFamily::constant(pauli_x()).unwrap();
    let r = mean_constancy_residual(&u, &x, &[plus(), state(&[c(1.0, 0.0), c(0.0, 0.0)])], &ts, 0.0).unwrap();
    assert!(r >= 0.5, "{r}");
    let err = mean_constancy_residual(&u, &x, &[plus(), plus() * c(0.0, 1.0)], &ts, 0.0);
    assert!(matches!(err, Err(Error::InsufficientStates { rank: 1, dim: 2 })));
}

#[test]
fn commutation_examples() {
    let u = sigma_z_propagator(1.0);
    let ts = samples(0.0, 1.0, 10);
    let h = OperatorFamily::constant(pauli_z()).unwrap();
    assert!(commutation_residual(&u, &h, &ts, 0.0).unwrap() <= 1e-10);
    let built = constructed_integral(Arc::clone(&u), pauli_x(), 0.0).unwrap();
    assert!(commutation_residual(&u, &built, &ts, 0.0).unwrap() <= 1e-9);
    let x = OperatorFamily::constant(pauli_x()).unwrap();
    assert!(commutation_residual(&u, &x, &[PI / 4.0], 0.0).unwrap() > 0.5);
}

#[test]
fn heisenberg_constancy_examples() {
    let u = sigma_z_propagator(1.0);
    let ts = samples(0.0, 1.0, 10);
    let h = OperatorFamily::constant(pauli_z()).unwrap();
    assert!(heisenberg_constancy_residual(&u, &h, &ts, 0.0).unwrap() <= 1e-10);
    let built = constructed_integral(Arc::clone(&u), pauli_y(), 0.0).unwrap();
    assert!(heisenberg_constancy_residual(&u, &built, &ts, 0.0).unwrap() <= 1e-9);
    let x = OperatorFamily::constant(pauli_x()).unwrap();
    assert!(heisenberg_constancy_residual(&u, &x, &[PI / 4.0], 0.0).unwrap() > 1.0);
}

#[test]
fn lax_examples() {
    let u = sigma_z_propagator(2.0);
    let path = ObserverPath::new(0.0, 2.0, "γ").unwrap();
    let atlas = BundleAtlas::identity(path, 2).unwrap();
    let tr = transport(&u, atlas.clone());
    let frame = FrameField::atlas_frame(&tr);
    let ts = [0.5, 1.0, 1.5];
    assert!(lax_residual(&MorphismField::identity(atlas.clone()), &frame, &ts, 1e-4).unwrap() < 1e-12);

    // U(t, 0) σx U(0, t) = cos(2t) σx + sin(2t) σy
    let rotating = OperatorFamily::smooth(2, |t| scale(&pauli_x(), (2.0 * t).cos()) + scale(&pauli_y(), (2.0 * t).sin())).unwrap();
    let field = lift_observable(&atlas, &rotating).unwrap();
    assert!(lax_residual(&field, &frame, &ts, 1e-4).unwrap() <= 1e-5);

    // the Heisenberg-rotated family rotates the other way and is not Lax
    let counter = OperatorFamily::smooth(2, |t| scale(&pauli_x(), (2.0 * t).cos()) - scale(&pauli_y(), (2.0 * t).sin())).unwrap();
    assert!(lax_residual(&lift_observable(&atlas, &counter).unwrap(), &frame, &ts, 1e-4).unwrap() > 1.0);

    let sx = lift_observable(&atlas, &OperatorFamily::constant(pauli_x()).unwrap()).unwrap();
    let r = lax_residual(&sx, &frame, &[1.0], 1e-4).unwrap();
    // ‖(1/i)[σx, σz]‖_F = 2‖σy‖_F, normalized by ‖σx‖_F
    let expected = 2.0 * pauli_y().norm() / pauli_x().norm();
    assert!((r - expected).abs() < 1e-7, "{r} {expected}");
    assert!(matches!(lax_residual(&sx, &frame, &[2.0], 1e-4), Err(Error::BoundaryTime { .. })));
}

fn random_gauge(seed: u64, dim: usize) -> (TimeFn<Operator>, TimeFn<Operator>) {
    let mut rng = random::stream(seed, "gauge");
    let w0 = random::well_conditioned(&mut rng, dim, 10.0);
    let b = random::hermitian(&mut rng, dim, 0.5);
    let (w0b, bb) = (w0.clone(), b.clone());
    let w: TimeFn<Operator> = Arc::new(move |t| Ok(&w0 * qbundle::linear::matrix_exponential(&scale(&b, t.sin()))?));
    let dw: TimeFn<Operator> = Arc::new(move |t| {
        Ok(&w0b * qbundle::linear::matrix_exponential(&scale(&bb, t.sin()))? * scale(&bb, t.cos()))
    });
    (w, dw)
}

#[test]
fn gauge_transform_examples() {
    let u = sigma_z_propagator(2.0);
    let atlas = BundleAtlas::identity(ObserverPath::new(0.0, 2.0, "γ").unwrap(), 2).unwrap();
    let tr = transport(&u, atlas.clone());
    let frame = FrameField::atlas_frame(&tr);
    let built = constructed_integral(Arc::clone(&u), pauli_x(), 0.0).unwrap();
    let pair = LaxPair::in_frame(&lift_observable(&atlas, &built).unwrap(), &frame, 1e-4);
    let ts = [0.5, 1.0, 1.5];

    let id: TimeFn<Operator> = Arc::new(|_| Ok(identity(2)));
    let same = gauge_transform(&pair, id, None, 1e-4);
    for &t in &ts {
        assert!(max_abs_diff(&same.a(t).unwrap(), &pair.a(t).unwrap()) < 1e-15);
        assert!(max_abs_diff(&same.gamma(t).unwrap(), &pair.gamma(t).unwrap()) < 1e-15);
    }

    let w0 = random::well_conditioned(&mut random::stream(2, "w"), 2, 5.0);
    let w0c = w0.clone();
    let constant = gauge_transform(&pair, Arc::new(move |_| Ok(w0c.clone())), None, 1e-4);
    let w_inv = w0.clone().try_inverse().unwrap();
    assert!(max_abs_diff(&constant.gamma(1.0).unwrap(), &(&w0 * pair.gamma(1.0).unwrap() * &w_inv)) < 1e-12);

    for seed in 0..5 {
        let (w, dw) = random_gauge(seed, 2);
        let moved = gauge_transform(&pair, w.clone(), Some(dw), 1e-4);
        assert!(lax_pair_residual(&moved, &ts, 1e-4).unwrap() <= 1e-5);
        let numeric = gauge_transform(&pair, w, None, 1e-4);
        assert!(lax_pair_residual(&numeric, &ts, 1e-4).unwrap() <= 1e-5);
    }

    let singular: TimeFn<Operator> = Arc::new(|_| Ok(zeros(2)));
    let broken = gauge_transform(&pair, singular, None, 1e-4);
    assert!(matches!(broken.a(1.0), Err(Error::SingularGauge { .. })));
}

#[test]
fn gauge_covariance_of_the_residual() {
    let u = sigma_z_propagator(2.0);
    let atlas = BundleAtlas::identity(ObserverPath::new(0.0, 2.0, "γ").unwrap(), 2).unwrap();
    let frame = FrameField::atlas_frame(&transport(&u, atlas.clone()));
    let sx = lift_observable(&atlas, &OperatorFamily::constant(pauli_x()).unwrap()).unwrap();
    let pair = LaxPair::in_frame(&sx, &frame, 1e-4);
    let (w, dw) = random_gauge(3, 2);
    let moved = gauge_transform(&pair, w.clone(), Some(dw), 1e-4);
    let t = 0.9;
    let wt = w(t).unwrap();
    let expected = &wt * pair.residual(t, 1e-4).unwrap() * wt.clone().try_inverse().unwrap();
    assert!(max_abs_diff(&moved.residual(t, 1e-4).unwrap(), &expected) < 1e-6);
}

#[test]
fn eigenvalue_examples() {
    let u = sigma_z_propagator(1.0);
    let ts = samples(0.0, 1.0, 10);
    let id = OperatorFamily::constant(identity(2)).unwrap();
    let e = eigenvalue_constancy_check(&u, &id, &plus(), &ts, 0.0, 1e-8).unwrap();
    assert!(e.is_eigen_trajectory);
    assert_eq!(e.eigenvalue_drift, Some(0.0));
    assert_eq!(e.eigenvalue, Some(1.0));

    let z = OperatorFamily::constant(pauli_z()).unwrap();
    let up = state(&[c(1.0, 0.0), c(0.0, 0.0)]);
    let e = eigenvalue_constancy_check(&u, &z, &up, &ts, 0.0, 1e-8).unwrap();
    assert!(e.is_eigen_trajectory && e.eigenvalue_drift.unwrap() <= 1e-9);
    assert_eq!(e.eigenvalue, Some(1.0));

    let x = OperatorFamily::constant(pauli_x()).unwrap();
    let e = eigenvalue_constancy_check(&u, &x, &plus(), &[0.3], 0.0, 1e-8).unwrap();
    assert!(!e.is_eigen_trajectory);

    let e = eigenvalue_constancy_check(&u, &z, &plus(), &ts, 0.0, 1e-8).unwrap();
    assert_eq!(e, EigenTrajectory { is_eigen_trajectory: false, eigenvalue: None, eigenvalue_drift: None });
}

#[test]
fn certify_examples() {
    let cfg = CertifyConfig::default();
    let u = sigma_z_propagator(2.0);
    let atlas = BundleAtlas::identity(ObserverPath::new(0.0, 2.0, "γ").unwrap(), 2).unwrap();
    let tr = transport(&u, atlas.clone());

    let h = lift_observable(&atlas, &OperatorFamily::constant(pauli_z()).unwrap()).unwrap();
    let v = certify(&tr, &h, &cfg).unwrap();
    assert!(v.is_integral && v.max_residual() <= 1e-8, "{v:?}");

    let sx = lift_observable(&atlas, &OperatorFamily::constant(pauli_x()).unwrap()).unwrap();
    let v = certify(&tr, &sx, &cfg).unwrap();
    assert!(!v.is_integral && v.max_residual() > 0.5 && v.is_unanimous(), "{v:?}");

    let mut rng = random::stream(77, "certify");
    let (h0, h1) = (random::hermitian(&mut rng, 3, 1.0), random::hermitian(&mut rng, 3, 0.5));
    let hf = family::modulated(h1, f64::cos, |t| -t.sin()).unwrap().sum(&OperatorFamily::constant(h0).unwrap()).unwrap();
    let u3 = Arc::new(Propagator::new(HamiltonianFamily::natural(hf).unwrap(), 0.0, 1.0, &IntegratorConfig::default()).unwrap());
    let atlas3 = BundleAtlas::invertible_field(ObserverPath::new(0.0, 1.0, "γ").unwrap(), 3, 5, 100.0).unwrap();
    let a = constructed_integral(Arc::clone(&u3), random::hermitian(&mut rng, 3, 1.0), 0.0).unwrap();
    let v = certify(&transport(&u3, atlas3.clone()), &lift_observable(&atlas3, &a).unwrap(), &cfg).unwrap();
    assert!(v.is_integral, "{v:?}");
}

#[test]
fn verdict_threshold_semantics() {
    let tol = Tolerance::absolute(1e-5).unwrap();
    let cfg = CertifyConfig { tol, ..CertifyConfig::default() };
    assert_eq!(cfg.step, 1e-4);
    let u = sigma_z_propagator(1.0);
    let atlas = BundleAtlas::identity(ObserverPath::new(0.0, 1.0, "γ").unwrap(), 2).unwrap();
    let v = certify(&transport(&u, atlas.clone()), &MorphismField::identity(atlas), &cfg).unwrap();
    assert!(v.is_integral && v.is_unanimous() && v.is_separated(10.0));
    assert_eq!(v.criteria_passed(), [true; 5]);
}

#[test]
fn spanning_states_are_well_conditioned() {
    for dim in [1, 2, 3, 6] {
        let states = spanning_states(dim, 4);
        assert_eq!(states.len(), (2 * dim).max(8));
        let m = Operator::from_fn(dim, states.len(), |i, j| states[j][i]);
        let frame = &m * m.adjoint();
        assert!(qbundle::linear::condition_number(&frame) <= MAX_STATE_FRAME_COND);
    }
}
