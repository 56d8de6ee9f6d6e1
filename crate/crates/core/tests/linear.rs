mod common;

use proptest::prelude::*;
use qbundle::linear::*;
use qbundle::{random, Operator, C64};

fn seeded(seed: u64, label: &str) -> rand_chacha::ChaCha8Rng {
    random::stream(seed, label)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn hermitian_means_are_real_and_scale_free(seed in any::<u64>(), dim in 1usize..7,
                                               re in -5.0f64..5.0, im in -5.0f64..5.0) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let mut rng = seeded(seed, "mean");
        let a = random::hermitian(&mut rng, dim, 3.0);
        let psi = random::haar_state(&mut rng, dim);
        let m = mean_value(&a, &psi).unwrap();
        prop_assert!(m.im.abs() <= 1e-12);
        let scaled = mean_value(&a, &(&psi * C64::new(re, im))).unwrap();
        prop_assert!((scaled - m).norm() <= 1e-12);
    }

    #[test]
    fn commutator_is_bilinear(seed in any::<u64>(), dim in 1usize..7, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut rng = seeded(seed, "comm");
        let (a, b, c) = (random::ginibre(&mut rng, dim), random::ginibre(&mut rng, dim), random::ginibre(&mut rng, dim));
        let lhs = commutator(&a, &(scale(&b, alpha) + scale(&c, beta))).unwrap();
        let rhs = scale(&commutator(&a, &b).unwrap(), alpha) + scale(&commutator(&a, &c).unwrap(), beta);
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn exponential_inverse(seed in any::<u64>(), dim in 1usize..7, norm in 0.0f64..5.0) {
        let mut rng = seeded(seed, "exp");
        let g = random::ginibre(&mut rng, dim);
        let a = if g.norm() > 0.0 { scale(&g, norm / g.norm()) } else { g };
        let product = matrix_exponential(&a).unwrap() * matrix_exponential(&(-&a)).unwrap();
        prop_assert!(max_abs_diff(&product, &identity(dim)) <= 1e-10);
    }

    #[test]
    fn exponential_commutes_with_adjoint(seed in any::<u64>(), dim in 1usize..7, norm in 0.0f64..5.0) {
        let mut rng = seeded(seed, "adj");
        let g = random::ginibre(&mut rng, dim);
        let a = scale(&g, norm / g.norm().max(1e-300));
        let lhs = matrix_exponential(&a.adjoint()).unwrap();
        let rhs = matrix_exponential(&a).unwrap().adjoint();
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn exponential_matches_eigen_oracle(seed in any::<u64>(), dim in 1usize..9, norm in 0.0f64..20.0) {
        let mut rng = seeded(seed, "oracle");
        let h = random::hermitian(&mut rng, dim, norm);
        let ours = unitary_step(&h, 1.0, 1.0).unwrap();
        let oracle = common::hermitian_exp(&h, C64::new(0.0, -1.0));
        prop_assert!(max_abs_diff(&ours, &oracle) <= 1e-11);
    }
}

#[test]
fn pauli_algebra() {
    let i2 = identity(2);
    for p in [pauli_x(), pauli_y(), pauli_z()] {
        assert_eq!(&p * &p, i2);
        assert_eq!(hermiticity_defect(&p), 0.0);
    }
    let zero: Operator = zeros(2);
    assert_eq!(matrix_exponential(&zero).unwrap(), i2);
}
