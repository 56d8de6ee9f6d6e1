//! Time-dependent Hamiltonians and the unitary evolution operator `U(t, t0)`.
//!
//! A [`Propagator`] steps the Schrödinger equation `iħ ∂U/∂t = H(t) U` across
//! a closed time grid and caches the cumulative products `W(t_k) = U(t_k, t_0)`.
//! Two-time operators are assembled as `U(t, s) = W(t) W(s)†`, so the group
//! law and the inverse law hold to rounding for every pair of times, on or off
//! the grid.

use std::fmt;

use crate::error::{Error, Result};
use crate::family::{FamilyKind, OperatorFamily};
use crate::linear::{
    check_same_dim, hermiticity_defect, identity, polar_unitary, scale, unitarity_defect, unitary_step, Operator,
    StateVector, Tolerance, C64,
};

/// A Hermitian operator family together with the value of ħ used to turn it
/// into a generator of time translations.
#[derive(Clone, Debug)]
pub struct HamiltonianFamily {
    family: OperatorFamily,
    hbar: f64,
}

impl HamiltonianFamily {
    pub fn new(family: OperatorFamily, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidArgument(format!("hbar must be positive and finite, got {hbar}")));
        }
        if let FamilyKind::Constant(op) = family.kind() {
            check_hermitian(op)?;
        }
        if let FamilyKind::PiecewiseConstant { values, .. } = family.kind() {
            for op in values {
                check_hermitian(op)?;
            }
        }
        Ok(Self { family, hbar })
    }

    /// Natural units, `ħ = 1`.
    pub fn natural(family: OperatorFamily) -> Result<Self> {
        Self::new(family, 1.0)
    }

    pub fn constant(op: Operator) -> Result<Self> {
        Self::natural(OperatorFamily::constant(op)?)
    }

    pub fn family(&self) -> &OperatorFamily {
        &self.family
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn eval(&self, t: f64) -> Result<Operator> {
        self.family.eval(t)
    }

    pub fn derivative(&self, t: f64, h: f64) -> Result<Operator> {
        self.family.derivative(t, h)
    }

    pub fn is_piecewise_constant(&self) -> bool {
        !matches!(self.family.kind(), FamilyKind::Smooth(_))
    }
}

const HERMITICITY_TOL: f64 = 1e-10;

fn check_hermitian(op: &Operator) -> Result<()> {
    let deviation = hermiticity_defect(op);
    if deviation > HERMITICITY_TOL * op.norm().max(1.0) {
        Err(Error::NonHermitianInput { deviation })
    } else {
        Ok(())
    }
}

/// Per-step discretization of the time-ordered exponential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Exact exponential of each constant segment; the grid includes every
    /// jump of the Hamiltonian.
    ExactPiecewiseConstant,
    /// `exp(-i H(midpoint) Δt / ħ)` per step: unitary and second order.
    MidpointMagnus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub max_step: f64,
    pub tol: Tolerance,
    /// Project every step factor onto the unitary group.
    pub reunitarize: bool,
}

impl IntegratorConfig {
    pub fn new(max_step: f64, tol: Tolerance, reunitarize: bool) -> Result<Self> {
        if !(max_step > 0.0 && max_step.is_finite()) {
            return Err(Error::InvalidArgument(format!("max_step must be positive, got {max_step}")));
        }
        Ok(Self { max_step, tol, reunitarize })
    }

    pub fn with_step(max_step: f64) -> Result<Self> {
        Self::new(max_step, Tolerance::default(), false)
    }

    /// Same step with a tolerance loose enough that the error estimate never
    /// rejects the grid. Used where the scheme error itself is under study.
    pub fn unchecked(max_step: f64) -> Result<Self> {
        Self::new(max_step, Tolerance { abs: f64::INFINITY, rel: 0.0 }, false)
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { max_step: 1e-3, tol: Tolerance::default(), reunitarize: false }
    }
}

/// The two-time evolution operator on a closed interval.
#[derive(Clone)]
pub struct Propagator {
    hamiltonian: HamiltonianFamily,
    grid: Vec<f64>,
    scheme: Scheme,
    reunitarize: bool,
    factors: Vec<Operator>,
    cumulative: Vec<Operator>,
    error_estimate: f64,
}

impl fmt::Debug for Propagator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Propagator")
            .field("dim", &self.dim())
            .field("interval", &self.interval())
            .field("steps", &self.factors.len())
            .field("scheme", &self.scheme)
            .field("error_estimate", &self.error_estimate)
            .finish()
    }
}

fn uniform_grid(lo: f64, hi: f64, max_step: f64) -> Vec<f64> {
    if lo == hi {
        return vec![lo];
    }
    let n = ((hi - lo) / max_step).ceil().max(1.0) as usize;
    let dt = (hi - lo) / n as f64;
    let mut grid: Vec<f64> = (0..n).map(|k| lo + k as f64 * dt).collect();
    grid.push(hi);
    grid
}

impl Propagator {
    /// Builds the propagator on `[min(a,b), max(a,b)]` with a uniform grid no
    /// coarser than `cfg.max_step`, refined at every jump of `H`.
    pub fn new(hamiltonian: HamiltonianFamily, a: f64, b: f64, cfg: &IntegratorConfig) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument("propagation interval must be finite".into()));
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let mut grid = uniform_grid(lo, hi, cfg.max_step);
        grid.extend(hamiltonian.family().breaks_within(lo, hi));
        grid.sort_by(|x, y| x.total_cmp(y));
        let eps = 1e-12 * (hi - lo).max(1.0);
        grid.dedup_by(|x, y| (*x - *y).abs() <= eps);
        Self::on_grid(hamiltonian, grid, cfg)
    }

    /// Builds the propagator on an explicit strictly increasing grid.
    pub fn on_grid(hamiltonian: HamiltonianFamily, grid: Vec<f64>, cfg: &IntegratorConfig) -> Result<Self> {
        if grid.is_empty() || grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("grid must be non-empty, finite and strictly increasing".into()));
        }
        hamiltonian.family().check_time(grid[0])?;
        hamiltonian.family().check_time(grid[grid.len() - 1])?;
        let scheme = if hamiltonian.is_piecewise_constant() {
            Scheme::ExactPiecewiseConstant
        } else {
            Scheme::MidpointMagnus
        };
        let hbar = hamiltonian.hbar();
        let dim = hamiltonian.dim();
        let mut factors = Vec::with_capacity(grid.len() - 1);
        let mut error_estimate = 0.0;
        for w in grid.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let dt = t1 - t0;
            let h_mid = hamiltonian.eval(0.5 * (t0 + t1))?;
            check_hermitian(&h_mid)?;
            let mut factor = unitary_step(&h_mid, dt, hbar)?;
            if scheme == Scheme::MidpointMagnus {
                // step doubling: the midpoint rule's local error is a third
                // of the gap between one step and two half steps
                let h1 = hamiltonian.eval(t0 + 0.25 * dt)?;
                let h2 = hamiltonian.eval(t0 + 0.75 * dt)?;
                let halves = unitary_step(&h2, 0.5 * dt, hbar)? * unitary_step(&h1, 0.5 * dt, hbar)?;
                error_estimate += (&factor - halves).norm() * 4.0 / 3.0;
            }
            if cfg.reunitarize {
                factor = polar_unitary(&factor);
            }
            factors.push(factor);
        }
        if error_estimate > cfg.tol.bound(1.0) {
            return Err(Error::StepFailure { estimate: error_estimate, tol: cfg.tol.bound(1.0), max_step: cfg.max_step });
        }
        let mut cumulative = Vec::with_capacity(grid.len());
        cumulative.push(identity(dim));
        for f in &factors {
            let next = f * cumulative.last().expect("non-empty");
            cumulative.push(next);
        }
        Ok(Self { hamiltonian, grid, scheme, reunitarize: cfg.reunitarize, factors, cumulative, error_estimate })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hbar(&self) -> f64 {
        self.hamiltonian.hbar()
    }

    pub fn hamiltonian(&self) -> &HamiltonianFamily {
        &self.hamiltonian
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Unitary factors `U(t_{k+1}, t_k)`.
    pub fn factors(&self) -> &[Operator] {
        &self.factors
    }

    /// Summed step-doubling estimate of the global discretization error.
    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = self.interval();
        t >= lo && t <= hi
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.interval();
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { t, lo, hi })
        }
    }

    /// `U(t, t_start)` where `t_start` is the left end of the grid.
    fn evolution_from_start(&self, t: f64) -> Result<Operator> {
        self.check_time(t)?;
        let k = self.grid.partition_point(|g| *g <= t) - 1;
        let gk = self.grid[k];
        if t == gk {
            return Ok(self.cumulative[k].clone());
        }
        let h_mid = self.hamiltonian.eval(0.5 * (gk + t))?;
        let mut partial = unitary_step(&h_mid, t - gk, self.hbar())?;
        if self.reunitarize {
            partial = polar_unitary(&partial);
        }
        Ok(partial * &self.cumulative[k])
    }

    /// `U(t, s)`. Exactly the identity when `t == s`.
    pub fn evolution(&self, t: f64, s: f64) -> Result<Operator> {
        self.check_time(t)?;
        self.check_time(s)?;
        if t == s {
            return Ok(identity(self.dim()));
        }
        Ok(self.evolution_from_start(t)? * self.evolution_from_start(s)?.adjoint())
    }

    pub fn apply(&self, psi: &StateVector, t: f64, s: f64) -> Result<StateVector> {
        check_same_dim(self.dim(), psi.len())?;
        Ok(self.evolution(t, s)? * psi)
    }

    /// Largest `‖F†F - 1‖_F` over the cached step factors.
    pub fn max_unitarity_defect(&self) -> f64 {
        self.factors.iter().map(unitarity_defect).fold(0.0, f64::max)
    }

    /// Checks that `[t - h, t + h]` lies inside the grid.
    pub fn check_interior(&self, t: f64, h: f64) -> Result<()> {
        let (lo, hi) = self.interval();
        if t - h >= lo && t + h <= hi && h > 0.0 {
            Ok(())
        } else {
            Err(Error::BoundaryTime { t, lo, hi, h })
        }
    }
}

/// `U(t, t0)` for the family `h`, integrated with `cfg`.
pub fn propagate(h: &HamiltonianFamily, t0: f64, t: f64, cfg: &IntegratorConfig) -> Result<Operator> {
    if t == t0 {
        return Ok(identity(h.dim()));
    }
    Propagator::new(h.clone(), t0, t, cfg)?.evolution(t, t0)
}

/// Recovers `H(t) = iħ ∂U(t,t0)/∂t ∘ U(t0,t)` from a propagator by central
/// differences with step `h`.
pub fn hamiltonian_from_propagator(u: &Propagator, t: f64, h: f64) -> Result<Operator> {
    u.check_interior(t, h)?;
    let t0 = u.interval().0;
    let forward = u.evolution(t + h, t0)?;
    let backward = u.evolution(t - h, t0)?;
    let derivative = scale(&(forward - backward), 0.5 / h);
    Ok(derivative * u.evolution(t0, t)? * C64::new(0.0, u.hbar()))
}

/// Largest `‖iħ dψ/dt - H(t)ψ(t)‖ / max(1, ‖ψ(t)‖)` over the samples, with the
/// time derivative taken by central differences of step `h`.
pub fn schrodinger_residual<F>(h: &HamiltonianFamily, trajectory: F, samples: &[f64], step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<StateVector>,
{
    let mut worst: f64 = 0.0;
    for &t in samples {
        let psi = trajectory(t)?;
        check_same_dim(h.dim(), psi.len())?;
        let dpsi = (trajectory(t + step)? - trajectory(t - step)?) * C64::new(0.5 / step, 0.0);
        let residual = dpsi * C64::new(0.0, h.hbar()) - h.eval(t)? * &psi;
        worst = worst.max(residual.norm() / psi.norm().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::modulated;
    use crate::linear::{max_abs_diff, pauli_x, pauli_y, pauli_z, zeros};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let h = HamiltonianFamily::constant(zeros(3)).unwrap();
        let u = propagate(&h, 0.2, 1.7, &IntegratorConfig::default()).unwrap();
        assert!(max_abs_diff(&u, &identity(3)) < 1e-15);
    }

    #[test]
    fn sigma_z_for_time_pi_is_minus_identity() {
        let h = HamiltonianFamily::constant(pauli_z()).unwrap();
        let u = propagate(&h, 0.0, PI, &IntegratorConfig::default()).unwrap();
        assert!(max_abs_diff(&u, &(-identity(2))) < 1e-12);
    }

    #[test]
    fn equal_times_return_exact_identity() {
        let h = HamiltonianFamily::constant(pauli_x()).unwrap();
        let p = Propagator::new(h, 0.0, 1.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(p.evolution(0.37, 0.37).unwrap(), identity(2));
    }

    #[test]
    fn piecewise_constant_is_exact() {
        let fam = OperatorFamily::piecewise_constant(vec![0.5], vec![pauli_z(), pauli_x()]).unwrap();
        let h = HamiltonianFamily::natural(fam).unwrap();
        let p = Propagator::new(h, 0.0, 1.3, &IntegratorConfig::with_step(0.3).unwrap()).unwrap();
        assert_eq!(p.scheme(), Scheme::ExactPiecewiseConstant);
        assert!(p.grid().contains(&0.5));
        let oracle = unitary_step(&pauli_x(), 0.8, 1.0).unwrap() * unitary_step(&pauli_z(), 0.5, 1.0).unwrap();
        assert!(max_abs_diff(&p.evolution(1.3, 0.0).unwrap(), &oracle) < 1e-13);
    }

    #[test]
    fn rejects_non_hermitian_hamiltonians() {
        let mut a = pauli_z();
        a[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(HamiltonianFamily::constant(a.clone()), Err(Error::NonHermitianInput { .. })));
        let fam = OperatorFamily::smooth(2, move |_| a.clone()).unwrap();
        let h = HamiltonianFamily::natural(fam).unwrap();
        assert!(matches!(propagate(&h, 0.0, 1.0, &IntegratorConfig::default()), Err(Error::NonHermitianInput { .. })));
    }

    #[test]
    fn coarse_step_fails_tight_tolerance() {
        let fam = modulated(pauli_x(), |t| 5.0 * (3.0 * t).sin(), |t| 15.0 * (3.0 * t).cos())
            .unwrap()
            .sum(&OperatorFamily::constant(pauli_z()).unwrap())
            .unwrap();
        let h = HamiltonianFamily::natural(fam).unwrap();
        let cfg = IntegratorConfig::new(0.5, Tolerance::absolute(1e-9).unwrap(), false).unwrap();
        assert!(matches!(propagate(&h, 0.0, 2.0, &cfg), Err(Error::StepFailure { .. })));
    }

    #[test]
    fn backward_propagation_inverts_forward() {
        let fam = modulated(pauli_x(), f64::sin, f64::cos).unwrap().sum(&OperatorFamily::constant(pauli_z()).unwrap()).unwrap();
        let h = HamiltonianFamily::natural(fam).unwrap();
        let cfg = IntegratorConfig::default();
        let fwd = propagate(&h, 0.0, 1.0, &cfg).unwrap();
        let bwd = propagate(&h, 1.0, 0.0, &cfg).unwrap();
        assert!(max_abs_diff(&(bwd * fwd), &identity(2)) < 1e-12);
    }

    #[test]
    fn hamiltonian_recovery_examples() {
        let zero = Propagator::new(HamiltonianFamily::constant(zeros(2)).unwrap(), 0.0, 1.0, &IntegratorConfig::default()).unwrap();
        assert!(hamiltonian_from_propagator(&zero, 0.5, 1e-4).unwrap().norm() < 1e-15);

        let z = Propagator::new(HamiltonianFamily::constant(pauli_z()).unwrap(), 0.0, 2.0, &IntegratorConfig::default()).unwrap();
        for t in [0.3, 1.0, 1.7] {
            assert!(max_abs_diff(&hamiltonian_from_propagator(&z, t, 1e-4).unwrap(), &pauli_z()) < 1e-6);
        }

        let fam = modulated(pauli_y(), f64::cos, |t| -t.sin()).unwrap();
        let y = Propagator::new(HamiltonianFamily::natural(fam).unwrap(), 0.0, 1.0, &IntegratorConfig::default()).unwrap();
        let recovered = hamiltonian_from_propagator(&y, 0.5, 1e-4).unwrap();
        assert!(max_abs_diff(&recovered, &(pauli_y() * c(0.5f64.cos(), 0.0))) < 1e-6);

        assert!(matches!(hamiltonian_from_propagator(&y, 0.0, 1e-4), Err(Error::BoundaryTime { .. })));
    }

    #[test]
    fn schrodinger_residual_examples() {
        let hz = HamiltonianFamily::constant(pauli_z()).unwrap();
        let r = 1.0 / 2f64.sqrt();
        let psi0 = StateVector::from_vec(vec![c(r, 0.0), c(r, 0.0)]);
        let p = psi0.clone();
        let exact = move |t: f64| Ok(StateVector::from_vec(vec![c(0.0, -t).exp() * p[0], c(0.0, t).exp() * p[1]]));
        assert!(schrodinger_residual(&hz, exact, &[0.5, 1.0, 2.0], 1e-4).unwrap() <= 1e-6);

        let h0 = HamiltonianFamily::constant(zeros(2)).unwrap();
        let p = psi0.clone();
        assert_eq!(schrodinger_residual(&h0, move |_| Ok(p.clone()), &[0.5], 1e-4).unwrap(), 0.0);

        // ‖σz (1,1)/√2‖ / max(1, 1) = 1
        let p = psi0.clone();
        let violation = schrodinger_residual(&hz, move |_| Ok(p.clone()), &[0.5], 1e-4).unwrap();
        assert!((violation - 1.0).abs() < 1e-15);
    }
}
