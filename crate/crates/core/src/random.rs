//! Seeded generators for test fixtures and scenario inputs.
//!
//! Every stochastic choice is drawn from a [`ChaCha8Rng`] derived from a root
//! seed and a label, so independent consumers never share a stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linear::{scale, Operator, StateVector, C64};

/// Derives an independent stream from `root` for the given label.
pub fn stream(root: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, label))
}

/// FNV-1a over the label, folded into the root seed with a splitmix64 finalizer.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = root ^ h.rotate_left(17);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) / 2f64.sqrt()
}

/// Ginibre matrix: i.i.d. standard complex normal entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    Operator::from_fn(dim, dim, |_, _| complex_normal(rng))
}

/// Random Hermitian matrix with Frobenius norm `norm`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize, norm: f64) -> Operator {
    let g = ginibre(rng, dim);
    let h = &g + g.adjoint();
    let n = h.norm();
    if n == 0.0 {
        return Operator::zeros(dim, dim);
    }
    scale(&h, norm / n)
}

/// Haar-random unit state.
pub fn haar_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    loop {
        let v = StateVector::from_fn(dim, |_, _| complex_normal(rng));
        let n = v.norm();
        if n > 1e-8 {
            return v / C64::new(n, 0.0);
        }
    }
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    let qr = ginibre(rng, dim).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Random invertible matrix with condition number at most `cond_cap`:
/// a Haar unitary times the exponential of a bounded Hermitian matrix.
pub fn well_conditioned<R: Rng + ?Sized>(rng: &mut R, dim: usize, cond_cap: f64) -> Operator {
    let u = haar_unitary(rng, dim);
    let b = hermitian(rng, dim, 0.5 * cond_cap.max(1.0).ln() * 0.999);
    let p = crate::linear::matrix_exponential(&b).expect("finite Hermitian input");
    u * p
}
