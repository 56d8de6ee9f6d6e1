//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use qbundle::linear::{identity, polar_unitary};
use qbundle::{Operator, C64};

/// Classical fourth-order Runge–Kutta for `iħ U' = H(t) U` from `a` to `b`
/// with `n` steps, projected back onto the unitary group at the end.
pub fn rk4_propagator<F>(h: F, hbar: f64, dim: usize, a: f64, b: f64, n: usize) -> Operator
where
    F: Fn(f64) -> Operator,
{
    let dt = (b - a) / n as f64;
    let coeff = C64::new(0.0, -1.0 / hbar);
    let rhs = |t: f64, u: &Operator| h(t) * u * coeff;
    let mut u = identity(dim);
    for k in 0..n {
        let t = a + k as f64 * dt;
        let k1 = rhs(t, &u);
        let k2 = rhs(t + dt / 2.0, &(&u + &k1 * C64::new(dt / 2.0, 0.0)));
        let k3 = rhs(t + dt / 2.0, &(&u + &k2 * C64::new(dt / 2.0, 0.0)));
        let k4 = rhs(t + dt, &(&u + &k3 * C64::new(dt, 0.0)));
        u += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
    }
    polar_unitary(&u)
}

/// `exp(A)` through the eigendecomposition of a Hermitian `A` scaled by `c`.
pub fn hermitian_exp(a: &Operator, c: C64) -> Operator {
    let eig = a.clone().symmetric_eigen();
    let d = Operator::from_diagonal(&eig.eigenvalues.map(|l| (c * l).exp()));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

use std::sync::Arc;

use qbundle::bundle::{BundleAtlas, EvolutionTransport, ObserverPath};
use qbundle::linear::scale;
use qbundle::propagation::{HamiltonianFamily, IntegratorConfig, Propagator};
use qbundle::{family, random, OperatorFamily};
use rand::Rng;

/// `H(t) = H0 + sin(ωt + φ) H1` with random Hermitian parts; the second
/// element evaluates the same family without the library.
pub fn random_smooth_hamiltonian<R: Rng>(rng: &mut R, dim: usize, strength: f64) -> (HamiltonianFamily, Arc<dyn Fn(f64) -> Operator + Send + Sync>) {
    let h0 = random::hermitian(rng, dim, strength);
    let h1 = random::hermitian(rng, dim, 0.5 * strength);
    let omega: f64 = rng.random_range(0.5..3.0);
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (a, b) = (h0.clone(), h1.clone());
    let fam = family::modulated(h1, move |t| (omega * t + phase).sin(), move |t| omega * (omega * t + phase).cos())
        .unwrap()
        .sum(&OperatorFamily::constant(h0).unwrap())
        .unwrap();
    (HamiltonianFamily::natural(fam).unwrap(), Arc::new(move |t| &a + scale(&b, (omega * t + phase).sin())))
}

/// Random smooth observable `A0 + cos(νt) A1`, or static `A0` when `moving` is false.
pub fn random_observable<R: Rng>(rng: &mut R, dim: usize, moving: bool) -> OperatorFamily {
    let a0 = random::hermitian(rng, dim, 1.0);
    if !moving {
        return OperatorFamily::constant(a0).unwrap();
    }
    let a1 = random::hermitian(rng, dim, 0.7);
    let nu: f64 = rng.random_range(0.5..2.0);
    family::modulated(a1, move |t| (nu * t).cos(), move |t| -nu * (nu * t).sin())
        .unwrap()
        .sum(&OperatorFamily::constant(a0).unwrap())
        .unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtlasChoice {
    Identity,
    Unitary,
    Invertible,
}

pub const ATLASES: [AtlasChoice; 3] = [AtlasChoice::Identity, AtlasChoice::Unitary, AtlasChoice::Invertible];

pub fn make_atlas(choice: AtlasChoice, path: &ObserverPath, dim: usize, seed: u64) -> BundleAtlas {
    match choice {
        AtlasChoice::Identity => BundleAtlas::identity(path.clone(), dim).unwrap(),
        AtlasChoice::Unitary => BundleAtlas::unitary_field(path.clone(), dim, seed).unwrap(),
        AtlasChoice::Invertible => BundleAtlas::invertible_field(path.clone(), dim, seed, 100.0).unwrap(),
    }
}

pub fn make_transport(h: HamiltonianFamily, choice: AtlasChoice, dim: usize, seed: u64, lo: f64, hi: f64) -> EvolutionTransport {
    let u = Propagator::new(h, lo, hi, &IntegratorConfig::default()).unwrap();
    let path = ObserverPath::new(lo, hi, "γ").unwrap();
    EvolutionTransport::new(make_atlas(choice, &path, dim, seed), Arc::new(u)).unwrap()
}
