//! Integrals of motion.
//!
//! An observable is an integral of motion when its mean value is the same at
//! every time in every state. Five equivalent criteria are evaluated here as
//! residuals that vanish exactly for integrals:
//!
//! 1. constancy of mean values over a spanning set of states;
//! 2. `U(t0, t) A(t) = A(t0) U(t0, t)`;
//! 3. the Lax equation `∂A^m/∂t = [A^m, Γ]` in a frame;
//! 4. vanishing of the induced derivation of the morphism along the path;
//! 5. constancy of the Heisenberg observable, `A^H_t(t0) = A(t0)`.
//!
//! Operator residuals are divided by `max(1, ‖A‖_F)` so that thresholds do
//! not depend on the scale of the observable.

use std::fmt;
use std::sync::Arc;

use crate::bundle::{invert_checked, EvolutionTransport, FrameField, MorphismField};
use crate::error::{Error, Result};
use crate::family::{central_difference, OperatorFamily, TimeFn};
use crate::linear::{
    check_same_dim, commutator_unchecked, mean_value, singular_values, Operator, StateVector, Tolerance, C64,
};
use crate::pictures::to_heisenberg_observable;
use crate::propagation::Propagator;
use crate::random;

/// Largest condition number accepted for the frame operator `Σ |ψ⟩⟨ψ|` of
/// the random state set.
pub const MAX_STATE_FRAME_COND: f64 = 1e4;

/// Outcome of [`certify`]: every residual plus the threshold decision.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralVerdict {
    pub mean_constancy_residual: f64,
    pub commutation_residual: f64,
    pub lax_residual: f64,
    pub derivation_residual: f64,
    pub heisenberg_constancy_residual: f64,
    pub is_integral: bool,
    pub tol: Tolerance,
}

impl IntegralVerdict {
    pub const CRITERIA: [&'static str; 5] = ["mean-constancy", "commutation", "lax", "derivation", "heisenberg-constancy"];

    fn from_residuals(residuals: [f64; 5], tol: Tolerance) -> Self {
        let is_integral = residuals.iter().all(|&r| tol.accepts(r, 1.0));
        Self {
            mean_constancy_residual: residuals[0],
            commutation_residual: residuals[1],
            lax_residual: residuals[2],
            derivation_residual: residuals[3],
            heisenberg_constancy_residual: residuals[4],
            is_integral,
            tol,
        }
    }

    /// Residuals in the order of [`IntegralVerdict::CRITERIA`].
    pub fn residuals(&self) -> [f64; 5] {
        [
            self.mean_constancy_residual,
            self.commutation_residual,
            self.lax_residual,
            self.derivation_residual,
            self.heisenberg_constancy_residual,
        ]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals().into_iter().fold(0.0, f64::max)
    }

    /// Per-criterion pass flags.
    pub fn criteria_passed(&self) -> [bool; 5] {
        self.residuals().map(|r| self.tol.accepts(r, 1.0))
    }

    /// True when all criteria pass or all fail.
    pub fn is_unanimous(&self) -> bool {
        let flags = self.criteria_passed();
        flags.iter().all(|&f| f) || flags.iter().all(|&f| !f)
    }

    /// True when the residuals are all within tolerance or the largest one
    /// exceeds it by at least `margin`.
    pub fn is_separated(&self, margin: f64) -> bool {
        self.is_integral || self.max_residual() >= margin * self.tol.bound(1.0)
    }
}

fn scale_of(a: &OperatorFamily, samples: &[f64], t0: f64) -> Result<f64> {
    let mut n = a.eval(t0)?.norm();
    for &t in samples {
        n = n.max(a.eval(t)?.norm());
    }
    Ok(n.max(1.0))
}

/// Rank of the state set, counting singular values above `1e-10` of the
/// largest.
fn state_rank(states: &[StateVector], dim: usize) -> usize {
    if states.is_empty() {
        return 0;
    }
    let m = Operator::from_fn(dim, states.len(), |i, j| states[j][i]);
    let sv = m.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-10 * top).count()
}

/// `max |⟨A(t)⟩_{ψ(t)} - ⟨A(t0)⟩_{ψ(t0)}| / max(1, ‖A‖)` over states and
/// samples, with `ψ(t) = U(t, t0) ψ`. The states must span the space.
pub fn mean_constancy_residual(
    u: &Propagator,
    a: &OperatorFamily,
    states: &[StateVector],
    samples: &[f64],
    t0: f64,
) -> Result<f64> {
    check_same_dim(u.dim(), a.dim())?;
    for psi in states {
        check_same_dim(u.dim(), psi.len())?;
    }
    let rank = state_rank(states, u.dim());
    if rank < u.dim() {
        return Err(Error::InsufficientStates { rank, dim: u.dim() });
    }
    let a0 = a.eval(t0)?;
    let mut worst: f64 = 0.0;
    for &t in samples {
        let at = a.eval(t)?;
        let ut = u.evolution(t, t0)?;
        for psi in states {
            let now = mean_value(&at, &(&ut * psi))?;
            let then = mean_value(&a0, psi)?;
            worst = worst.max((now - then).norm());
        }
    }
    Ok(worst / scale_of(a, samples, t0)?)
}

/// `max ‖U(t0, t) A(t) - A(t0) U(t0, t)‖_F / max(1, ‖A‖)` over the samples.
pub fn commutation_residual(u: &Propagator, a: &OperatorFamily, samples: &[f64], t0: f64) -> Result<f64> {
    check_same_dim(u.dim(), a.dim())?;
    let a0 = a.eval(t0)?;
    let mut worst: f64 = 0.0;
    for &t in samples {
        let back = u.evolution(t0, t)?;
        worst = worst.max((&back * a.eval(t)? - &a0 * &back).norm());
    }
    Ok(worst / scale_of(a, samples, t0)?)
}

/// `max ‖A^H_t(t0) - A(t0)‖_F / max(1, ‖A‖)` over the samples.
pub fn heisenberg_constancy_residual(u: &Propagator, a: &OperatorFamily, samples: &[f64], t0: f64) -> Result<f64> {
    let a0 = a.eval(t0)?;
    let mut worst: f64 = 0.0;
    for &t in samples {
        worst = worst.max((to_heisenberg_observable(u, a, t, t0)? - &a0).norm());
    }
    Ok(worst / scale_of(a, samples, t0)?)
}

/// `max ‖∂A^E/∂t - [A^E, Γ^E]‖_F / max(1, ‖A^E‖_F)` over the samples, with
/// `A^E` the components of the morphism in the given frame.
pub fn lax_residual(field: &MorphismField, frame: &FrameField, samples: &[f64], h: f64) -> Result<f64> {
    check_same_dim(field.dim(), frame.transport().dim())?;
    let mut worst: f64 = 0.0;
    let mut norm: f64 = 1.0;
    for &t in samples {
        worst = worst.max(frame.morphism_derivation(field, t, h)?.norm());
        norm = norm.max(frame.components(&field.value(t)?, t)?.norm());
    }
    Ok(worst / norm)
}

/// `max ‖°D(A_γ)‖ / max(1, ‖A‖)` over the samples, with both norms taken in
/// the fibre metric. Independent of the frame and the atlas.
pub fn derivation_residual(transport: &EvolutionTransport, field: &MorphismField, samples: &[f64], h: f64) -> Result<f64> {
    let atlas = transport.atlas();
    let mut worst: f64 = 0.0;
    let mut norm: f64 = 1.0;
    for &t in samples {
        let d = crate::bundle::morphism_derivation(transport, field, t, h)?;
        worst = worst.max(atlas.fibre_operator_norm(t, &d)?);
        norm = norm.max(atlas.fibre_operator_norm(t, &field.value(t)?)?);
    }
    Ok(worst / norm)
}

/// A matrix pair `(A(t), Γ(t))` for the Lax equation `∂A/∂t = [A, Γ]`.
#[derive(Clone)]
pub struct LaxPair {
    a: TimeFn<Operator>,
    gamma: TimeFn<Operator>,
}

impl fmt::Debug for LaxPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LaxPair")
    }
}

impl LaxPair {
    pub fn new(a: TimeFn<Operator>, gamma: TimeFn<Operator>) -> Self {
        Self { a, gamma }
    }

    /// The pair of a morphism field in a frame.
    pub fn in_frame(field: &MorphismField, frame: &FrameField, h: f64) -> Self {
        let (f1, fr1, fr2) = (field.clone(), frame.clone(), frame.clone());
        Self {
            a: Arc::new(move |t| fr1.components(&f1.value(t)?, t)),
            gamma: Arc::new(move |t| fr2.gamma(t, h)),
        }
    }

    pub fn a(&self, t: f64) -> Result<Operator> {
        (self.a)(t)
    }

    pub fn gamma(&self, t: f64) -> Result<Operator> {
        (self.gamma)(t)
    }

    /// `∂A/∂t - [A, Γ]` at `t` with a central difference of step `h`.
    pub fn residual(&self, t: f64, h: f64) -> Result<Operator> {
        let da = central_difference(|s| self.a(s), t, h)?;
        Ok(da - commutator_unchecked(&self.a(t)?, &self.gamma(t)?))
    }
}

/// Largest `‖∂A/∂t - [A, Γ]‖_F / max(1, ‖A‖_F)` over the samples.
pub fn lax_pair_residual(pair: &LaxPair, samples: &[f64], h: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut norm: f64 = 1.0;
    for &t in samples {
        worst = worst.max(pair.residual(t, h)?.norm());
        norm = norm.max(pair.a(t)?.norm());
    }
    Ok(worst / norm)
}

/// Gauge transformation of a Lax pair by an invertible `W(t)`:
/// `A' = W A W⁻¹`, `Γ' = W Γ W⁻¹ - (∂W/∂t) W⁻¹`. The Lax residual transforms
/// as `W · residual · W⁻¹`.
pub fn gauge_transform(pair: &LaxPair, w: TimeFn<Operator>, w_derivative: Option<TimeFn<Operator>>, h: f64) -> LaxPair {
    let invert = |w: &TimeFn<Operator>, t: f64| -> Result<(Operator, Operator)> {
        let wt = w(t)?;
        let inv = invert_checked(&wt, |cond| Error::SingularGauge { t, cond })?;
        Ok((wt, inv))
    };
    let (pa, pg) = (pair.clone(), pair.clone());
    let (wa, wg) = (Arc::clone(&w), w);
    LaxPair {
        a: Arc::new(move |t| {
            let (wt, inv) = invert(&wa, t)?;
            Ok(wt * pa.a(t)? * inv)
        }),
        gamma: Arc::new(move |t| {
            let (wt, inv) = invert(&wg, t)?;
            let dw = match &w_derivative {
                Some(d) => d(t)?,
                None => central_difference(|s| wg(s), t, h)?,
            };
            Ok(&wt * pg.gamma(t)? * &inv - dw * inv)
        }),
    }
}

/// Result of [`eigenvalue_constancy_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTrajectory {
    /// `ψ(t)` stays an eigenvector of `A(t)` at every sample.
    pub is_eigen_trajectory: bool,
    /// Eigenvalue at `t0`; `None` when `ψ0` is not an eigenvector of `A(t0)`.
    pub eigenvalue: Option<f64>,
    /// `max |a(t) - a(t0)|`; `None` when `ψ0` is not an eigenvector.
    pub eigenvalue_drift: Option<f64>,
}

/// Follows `ψ(t) = U(t, t0) ψ0` and tests whether it remains an eigenvector
/// of `A(t)` with a constant real eigenvalue. `tol` bounds the eigen-equation
/// defect `‖Aψ - aψ‖ / ‖ψ‖`.
pub fn eigenvalue_constancy_check(
    u: &Propagator,
    a: &OperatorFamily,
    psi0: &StateVector,
    samples: &[f64],
    t0: f64,
    tol: f64,
) -> Result<EigenTrajectory> {
    check_same_dim(u.dim(), a.dim())?;
    let rayleigh = |op: &Operator, psi: &StateVector| -> Result<(C64, f64)> {
        let m = mean_value(op, psi)?;
        let defect = (op * psi - psi * m).norm() / psi.norm();
        Ok((m, defect))
    };
    let (a0, defect0) = rayleigh(&a.eval(t0)?, psi0)?;
    if defect0 > tol || a0.im.abs() > tol {
        return Ok(EigenTrajectory { is_eigen_trajectory: false, eigenvalue: None, eigenvalue_drift: None });
    }
    let mut eigen = true;
    let mut drift: f64 = 0.0;
    for &t in samples {
        let psi = u.apply(psi0, t, t0)?;
        let (at, defect) = rayleigh(&a.eval(t)?, &psi)?;
        eigen &= defect <= tol;
        drift = drift.max((at - a0).norm());
    }
    Ok(EigenTrajectory { is_eigen_trajectory: eigen, eigenvalue: Some(a0.re), eigenvalue_drift: Some(drift) })
}

/// Parameters of [`certify`].
#[derive(Debug, Clone, PartialEq)]
pub struct CertifyConfig {
    pub tol: Tolerance,
    /// Differencing step for the Lax and derivation residuals.
    pub step: f64,
    /// Number of interior sample times.
    pub samples: usize,
    /// Root seed of the random state set.
    pub seed: u64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self { tol: Tolerance::default(), step: 1e-4, samples: 9, seed: 0 }
    }
}

/// `max(8, 2·dim)` Haar-random states whose frame operator has condition
/// number at most [`MAX_STATE_FRAME_COND`].
pub fn spanning_states(dim: usize, seed: u64) -> Vec<StateVector> {
    let mut rng = random::stream(seed, "motion/states");
    let count = (2 * dim).max(8);
    loop {
        let states: Vec<StateVector> = (0..count).map(|_| random::haar_state(&mut rng, dim)).collect();
        let m = Operator::from_fn(dim, count, |i, j| states[j][i]);
        let sv = singular_values(&m);
        let max = sv.iter().copied().fold(0.0, f64::max);
        let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        // frame operator M M† has condition (max/min)²
        if min > 0.0 && (max / min).powi(2) <= MAX_STATE_FRAME_COND {
            return states;
        }
    }
}

/// Runs all five criteria for a morphism along the transport's path, using
/// the atlas frame for the Lax criterion.
pub fn certify(transport: &EvolutionTransport, field: &MorphismField, cfg: &CertifyConfig) -> Result<IntegralVerdict> {
    certify_in_frame(&FrameField::atlas_frame(transport), field, cfg)
}

/// [`certify`] with the Lax criterion evaluated in the given frame.
pub fn certify_in_frame(frame: &FrameField, field: &MorphismField, cfg: &CertifyConfig) -> Result<IntegralVerdict> {
    let transport = frame.transport();
    check_same_dim(transport.dim(), field.dim())?;
    let path = transport.path();
    let (t0, _) = path.interval();
    let samples = path.interior_samples(cfg.samples, cfg.step);
    let u = transport.propagator();
    let f = field.clone();
    let observable = OperatorFamily::try_smooth(field.dim(), move |t| f.hilbert_value(t))?;
    let states = spanning_states(field.dim(), cfg.seed);
    let residuals = [
        mean_constancy_residual(u, &observable, &states, &samples, t0)?,
        commutation_residual(u, &observable, &samples, t0)?,
        lax_residual(field, frame, &samples, cfg.step)?,
        derivation_residual(transport, field, &samples, cfg.step)?,
        heisenberg_constancy_residual(u, &observable, &samples, t0)?,
    ];
    Ok(IntegralVerdict::from_residuals(residuals, cfg.tol))
}

/// The integral of motion `A(t) = U(t, t0) A0 U(t0, t)` generated by `A0`.
pub fn constructed_integral(u: Arc<Propagator>, a0: Operator, t0: f64) -> Result<OperatorFamily> {
    check_same_dim(u.dim(), crate::linear::check_operator(&a0)?)?;
    let (lo, hi) = u.interval();
    OperatorFamily::try_smooth(u.dim(), move |t| {
        let fwd = u.evolution(t, t0)?;
        Ok(&fwd * &a0 * fwd.adjoint())
    })?
    .with_domain(lo, hi)
}
