//! Dense complex linear algebra: the substrate every other module is built on.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
/// A square complex matrix acting on a finite-dimensional state space.
pub type Operator = DMatrix<C64>;
/// A column of complex amplitudes. Need not be normalized.
pub type StateVector = DVector<C64>;

/// Largest supported state-space dimension.
pub const MAX_DIM: usize = 64;

pub const I: C64 = C64::new(0.0, 1.0);

/// Absolute plus relative acceptance threshold: a residual `r` measured
/// against a quantity of size `scale` passes when `r <= abs + rel * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Result<Self> {
        if !(abs >= 0.0 && rel >= 0.0 && abs.is_finite() && rel.is_finite()) || abs + rel <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tolerance needs non-negative finite parts with abs + rel > 0, got abs={abs}, rel={rel}"
            )));
        }
        Ok(Self { abs, rel })
    }

    pub fn absolute(abs: f64) -> Result<Self> {
        Self::new(abs, 0.0)
    }

    pub fn bound(&self, scale: f64) -> f64 {
        self.abs + self.rel * scale.abs()
    }

    pub fn accepts(&self, residual: f64, scale: f64) -> bool {
        residual <= self.bound(scale)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-5, rel: 0.0 }
    }
}

pub fn check_dim(dim: usize) -> Result<usize> {
    if dim == 0 || dim > MAX_DIM {
        Err(Error::UnsupportedDimension(dim))
    } else {
        Ok(dim)
    }
}

/// Validates that `a` is square, finite and within the supported size.
pub fn check_operator(a: &Operator) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    check_dim(a.nrows())?;
    if !is_finite(a) {
        return Err(Error::NonFinite("operator"));
    }
    Ok(a.nrows())
}

pub fn check_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, found })
    }
}

pub fn is_finite(a: &Operator) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn identity(dim: usize) -> Operator {
    Operator::identity(dim, dim)
}

pub fn zeros(dim: usize) -> Operator {
    Operator::zeros(dim, dim)
}

pub fn pauli_x() -> Operator {
    Operator::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
}

pub fn pauli_y() -> Operator {
    Operator::from_row_slice(2, 2, &[C64::new(0.0, 0.0), -I, I, C64::new(0.0, 0.0)])
}

pub fn pauli_z() -> Operator {
    Operator::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)])
}

pub fn state(amplitudes: &[C64]) -> StateVector {
    StateVector::from_column_slice(amplitudes)
}

/// Real scalar times operator, kept as a helper since nalgebra only scales by
/// the element type.
pub fn scale(a: &Operator, s: f64) -> Operator {
    a * C64::new(s, 0.0)
}

/// Frobenius norm of `a - a†`.
pub fn hermiticity_defect(a: &Operator) -> f64 {
    (a - a.adjoint()).norm()
}

/// Frobenius norm of `u†u - 1`.
pub fn unitarity_defect(u: &Operator) -> f64 {
    (u.adjoint() * u - identity(u.nrows())).norm()
}

/// `⟨φ|ψ⟩`, antilinear in the first slot.
pub fn inner(phi: &StateVector, psi: &StateVector) -> C64 {
    phi.dotc(psi)
}

/// Normalized expectation `⟨ψ|Aψ⟩ / ⟨ψ|ψ⟩`.
///
/// The value is real (up to rounding) for Hermitian `a`; for other operators
/// the complex value is returned unchanged.
pub fn mean_value(a: &Operator, psi: &StateVector) -> Result<C64> {
    let dim = check_operator(a)?;
    check_same_dim(dim, psi.len())?;
    let norm_sq = psi.norm_squared();
    if norm_sq == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok(inner(psi, &(a * psi)) / norm_sq)
}

/// `[A, B]_- = AB - BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    let dim = check_operator(a)?;
    check_same_dim(dim, check_operator(b)?)?;
    Ok(a * b - b * a)
}

pub(crate) fn commutator_unchecked(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

pub fn inverse(a: &Operator) -> Option<Operator> {
    a.clone().try_inverse()
}

pub fn singular_values(a: &Operator) -> Vec<f64> {
    a.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Spectral norm.
pub fn operator_norm(a: &Operator) -> f64 {
    singular_values(a).into_iter().fold(0.0, f64::max)
}

/// 2-norm condition number; infinite for singular input.
pub fn condition_number(a: &Operator) -> f64 {
    let sv = singular_values(a);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Nearest unitary in Frobenius norm (unitary factor of the polar decomposition).
pub fn polar_unitary(a: &Operator) -> Operator {
    let svd = a.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => u * v_t,
        _ => a.clone(),
    }
}

/// Random-free Hermitian part `(A + A†)/2`.
pub fn hermitian_part(a: &Operator) -> Operator {
    scale(&(a + a.adjoint()), 0.5)
}

fn norm_1(a: &Operator) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.53939833006323e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068;
const THETA_13: f64 = 5.371920351148152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Odd and even parts `(U, V)` of a low-degree diagonal Padé approximant.
fn pade_low(a: &Operator, b: &[f64]) -> (Operator, Operator) {
    let n = a.nrows();
    let a2 = a * a;
    let mut odd = scale(&identity(n), b[1]);
    let mut even = scale(&identity(n), b[0]);
    let mut power = identity(n);
    for k in 1..b.len() / 2 {
        power = &power * &a2;
        odd += scale(&power, b[2 * k + 1]);
        even += scale(&power, b[2 * k]);
    }
    (a * odd, even)
}

fn pade_13(a: &Operator) -> (Operator, Operator) {
    let b = &PADE_13;
    let n = a.nrows();
    let id = identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (scale(&a6, b[13]) + scale(&a4, b[11]) + scale(&a2, b[9]))
        + scale(&a6, b[7])
        + scale(&a4, b[5])
        + scale(&a2, b[3])
        + scale(&id, b[1]);
    let u = a * inner_u;
    let v = &a6 * (scale(&a6, b[12]) + scale(&a4, b[10]) + scale(&a2, b[8]))
        + scale(&a6, b[6])
        + scale(&a4, b[4])
        + scale(&a2, b[2])
        + scale(&id, b[0]);
    (u, v)
}

/// `exp(A)` by scaling and squaring with a diagonal Padé approximant whose
/// degree (3, 5, 7, 9 or 13) is chosen from the 1-norm of `A`.
pub fn matrix_exponential(a: &Operator) -> Result<Operator> {
    let n = check_operator(a)?;
    let norm = norm_1(a);
    if norm == 0.0 {
        return Ok(identity(n));
    }
    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_low(a, &PADE_3);
        (u, v, 0)
    } else if norm <= THETA_5 {
        let (u, v) = pade_low(a, &PADE_5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let (u, v) = pade_low(a, &PADE_7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let (u, v) = pade_low(a, &PADE_9);
        (u, v, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        let scaled = scale(a, 2f64.powi(-s));
        let (u, v) = pade_13(&scaled);
        (u, v, s)
    };
    let numerator = &v + &u;
    let denominator = v - u;
    let mut r = denominator
        .lu()
        .solve(&numerator)
        .ok_or(Error::NonFinite("Padé denominator"))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if !is_finite(&r) {
        return Err(Error::NonFinite("matrix exponential"));
    }
    Ok(r)
}

/// `exp(-i H dt / ħ)` for Hermitian `H`.
pub fn unitary_step(h: &Operator, dt: f64, hbar: f64) -> Result<Operator> {
    matrix_exponential(&(h * C64::new(0.0, -dt / hbar)))
}

/// Largest absolute entry of `a - b`; a sharp comparison for golden values.
pub fn max_abs_diff(a: &Operator, b: &Operator) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
