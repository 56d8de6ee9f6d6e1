//! Pictures of motion: Heisenberg, general unitary (V) and interaction.
//!
//! A picture is fixed by a unitary family `V(t1, t)` normalized so that
//! `V(t1, t1) = 1`. States and observables transform as
//! `ψ^V = V ψ`, `A^V = V A V⁻¹`, and the dynamics of the picture is carried
//! by the modified Hamiltonian `H̃^V = H^V - _VH^V`, where
//! `_VH^V = -iħ (∂V/∂t) V⁻¹` is the generator of `V` itself.
//!
//! The bundle versions conjugate everything through the trivialization at
//! the anchor time: `V_γ(t1, t) = l(t1)⁻¹ V(t1, t) l(t)`. Picture states of
//! the bundle description all live in the single fibre over `γ(t1)`.

use std::fmt;
use std::sync::Arc;

use crate::bundle::{atlas_hamiltonian, BundleAtlas, EvolutionTransport, MorphismField, StateSection};
use crate::error::{Error, Result};
use crate::family::{five_point_difference, FamilyKind, OperatorFamily, TimeFn};
use crate::linear::{
    check_operator, check_same_dim, commutator_unchecked, identity, matrix_exponential, mean_value,
    unitarity_defect, Operator, StateVector, C64,
};
use crate::propagation::{schrodinger_residual, HamiltonianFamily, IntegratorConfig, Propagator};
use crate::random;

/// Tolerance for the normalization and unitarity of a [`UnitaryFamily`].
pub const UNITARY_FAMILY_TOL: f64 = 1e-10;

/// A picture-defining family `t ↦ V(t1, t)` with `V(t1, t1) = 1`.
#[derive(Clone)]
pub struct UnitaryFamily {
    dim: usize,
    anchor: f64,
    eval: TimeFn<Operator>,
    derivative: Option<TimeFn<Operator>>,
    is_identity: bool,
    heisenberg_of: Option<Arc<Propagator>>,
}

impl fmt::Debug for UnitaryFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitaryFamily")
            .field("dim", &self.dim)
            .field("anchor", &self.anchor)
            .field("analytic_derivative", &self.derivative.is_some())
            .field("is_identity", &self.is_identity)
            .finish()
    }
}

impl UnitaryFamily {
    /// The Schrödinger picture.
    pub fn identity(dim: usize, anchor: f64) -> Result<Self> {
        crate::linear::check_dim(dim)?;
        let id = identity(dim);
        let zero = Operator::zeros(dim, dim);
        Ok(Self {
            dim,
            anchor,
            eval: Arc::new(move |_| Ok(id.clone())),
            derivative: Some(Arc::new(move |_| Ok(zero.clone()))),
            is_identity: true,
            heisenberg_of: None,
        })
    }

    /// A user-supplied family. Normalization and unitarity are checked at the
    /// anchor.
    pub fn from_fn(dim: usize, anchor: f64, eval: TimeFn<Operator>) -> Result<Self> {
        crate::linear::check_dim(dim)?;
        let v = eval(anchor)?;
        check_same_dim(dim, check_operator(&v)?)?;
        let deviation = (&v - identity(dim)).norm();
        if deviation > UNITARY_FAMILY_TOL {
            return Err(Error::InvalidArgument(format!("V(t1, t1) deviates from the identity by {deviation:e}")));
        }
        Ok(Self { dim, anchor, eval, derivative: None, is_identity: false, heisenberg_of: None })
    }

    pub fn with_derivative(mut self, d: TimeFn<Operator>) -> Self {
        self.derivative = Some(d);
        self
    }

    /// The Heisenberg picture `V(t0, t) = U(t0, t)`, with the analytic
    /// derivative `∂U(t0, t)/∂t = (i/ħ) U(t0, t) H(t)`.
    pub fn heisenberg(propagator: Arc<Propagator>, t0: f64) -> Result<Self> {
        let dim = propagator.dim();
        let p1 = Arc::clone(&propagator);
        let p2 = Arc::clone(&propagator);
        let hbar = propagator.hbar();
        let mut fam = Self::from_fn(dim, t0, Arc::new(move |t| p1.evolution(t0, t)))?;
        fam.heisenberg_of = Some(Arc::clone(&propagator));
        Ok(fam.with_derivative(Arc::new(move |t| {
            let u = p2.evolution(t0, t)?;
            Ok(u * p2.hamiltonian().eval(t)? * C64::new(0.0, 1.0 / hbar))
        })))
    }

    /// The free picture of a constant `H0`: `V(t0, t) = exp(i H0 (t - t0) / ħ)`,
    /// the inverse free evolution.
    pub fn free(h0: &Operator, hbar: f64, t0: f64) -> Result<Self> {
        let dim = check_operator(h0)?;
        let (g, g2) = (h0.clone(), h0.clone());
        let fam = Self::from_fn(
            dim,
            t0,
            Arc::new(move |t| matrix_exponential(&(&g * C64::new(0.0, (t - t0) / hbar)))),
        )?;
        Ok(fam.with_derivative(Arc::new(move |t| {
            let v = matrix_exponential(&(&g2 * C64::new(0.0, (t - t0) / hbar)))?;
            Ok(&g2 * v * C64::new(0.0, 1.0 / hbar))
        })))
    }

    /// Seeded smooth family `V(t1, t) = exp(-i ((t - t1) G0 + sin(t - t1) G1))`
    /// with random Hermitian `G`s of Frobenius norm `strength`.
    pub fn random(dim: usize, anchor: f64, seed: u64, strength: f64) -> Result<Self> {
        let mut rng = random::stream(seed, "picture/v");
        let g0 = random::hermitian(&mut rng, dim, strength);
        let g1 = random::hermitian(&mut rng, dim, strength);
        Self::from_fn(
            dim,
            anchor,
            Arc::new(move |t| {
                let s = t - anchor;
                matrix_exponential(&((&g0 * C64::new(s, 0.0) + &g1 * C64::new(s.sin(), 0.0)) * C64::new(0.0, -1.0)))
            }),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn is_identity(&self) -> bool {
        self.is_identity
    }

    /// True when this is the Heisenberg family `U(t1, ·)` of exactly this
    /// propagator.
    pub fn is_heisenberg_of(&self, u: &Propagator) -> bool {
        self.heisenberg_of.as_deref().is_some_and(|p| std::ptr::eq(p, u))
    }

    /// `V(t1, t)`.
    pub fn eval(&self, t: f64) -> Result<Operator> {
        let v = (self.eval)(t)?;
        check_same_dim(self.dim, v.nrows())?;
        Ok(v)
    }

    /// `V(t1, t)⁻¹ = V(t1, t)†`.
    pub fn inverse(&self, t: f64) -> Result<Operator> {
        Ok(self.eval(t)?.adjoint())
    }

    /// `∂V(t1, t)/∂t`: analytic when supplied, else a central difference.
    pub fn derivative(&self, t: f64, h: f64) -> Result<Operator> {
        match &self.derivative {
            Some(d) => d(t),
            None => five_point_difference(|s| self.eval(s), t, h),
        }
    }

    /// Largest unitarity defect over the samples.
    pub fn unitarity_defect(&self, samples: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &t in samples {
            worst = worst.max(unitarity_defect(&self.eval(t)?));
        }
        Ok(worst)
    }
}

/// The Hamiltonians of a V-picture at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct VHamiltonians {
    /// `H^V = V H V⁻¹`.
    pub transformed: Operator,
    /// `_VH^V = -iħ (∂V/∂t) V⁻¹`.
    pub generator: Operator,
    /// `H̃^V = H^V - _VH^V`.
    pub modified: Operator,
}

/// Five-point central difference of a vector-valued function.
fn vector_difference<F>(f: F, t: f64, h: f64) -> Result<StateVector>
where
    F: Fn(f64) -> Result<StateVector>,
{
    let near = f(t + h)? - f(t - h)?;
    let far = f(t + 2.0 * h)? - f(t - 2.0 * h)?;
    Ok((near * C64::new(8.0, 0.0) - far) * C64::new(1.0 / (12.0 * h), 0.0))
}

/// `∂A/∂t`: analytic or exact when the family provides it, otherwise a
/// five-point difference.
fn observable_rate(a: &OperatorFamily, t: f64, h: f64) -> Result<Operator> {
    match a.kind() {
        FamilyKind::Smooth(_) if !a.has_analytic_derivative() => five_point_difference(|s| a.eval(s), t, h),
        _ => a.derivative(t, h),
    }
}

/// The Schrödinger trajectory `t ↦ U(t, t0) ψ0`.
pub fn schrodinger_trajectory(propagator: Arc<Propagator>, psi0: StateVector, t0: f64) -> Result<TimeFn<StateVector>> {
    check_same_dim(propagator.dim(), psi0.len())?;
    Ok(Arc::new(move |t| propagator.apply(&psi0, t, t0)))
}

/// `A^H_t(t0) = U(t0, t) A(t) U(t, t0)`.
pub fn to_heisenberg_observable(u: &Propagator, a: &OperatorFamily, t: f64, t0: f64) -> Result<Operator> {
    check_same_dim(u.dim(), a.dim())?;
    let at = a.eval(t)?;
    if t == t0 {
        return Ok(at);
    }
    let back = u.evolution(t0, t)?;
    Ok(&back * at * back.adjoint())
}

/// Bundle Heisenberg morphism `°U(t0, t)(A_γ(t))`, an element of the fibre
/// over `γ(t0)`.
pub fn heisenberg_morphism(transport: &EvolutionTransport, field: &MorphismField, t: f64, t0: f64) -> Result<Operator> {
    crate::bundle::transport_morphism(transport, &field.value(t)?, t, t0)
}

/// The Heisenberg state is the Schrödinger state frozen at `t0`.
pub fn heisenberg_state<F>(trajectory: F, t0: f64) -> Result<StateVector>
where
    F: Fn(f64) -> Result<StateVector>,
{
    trajectory(t0)
}

/// `‖iħ ∂A^H/∂t - [A^H, H^H] - iħ (∂A/∂t)^H‖_F` at `t`, with
/// `H^H = U(t, t0)⁻¹ H(t) U(t, t0)`.
pub fn heisenberg_eom_residual(u: &Propagator, a: &OperatorFamily, t: f64, t0: f64, h: f64) -> Result<f64> {
    u.check_interior(t, 2.0 * h)?;
    let hbar = u.hbar();
    let back = u.evolution(t0, t)?;
    let conj = |x: &Operator| &back * x * back.adjoint();
    let a_h = conj(&a.eval(t)?);
    let h_h = conj(&u.hamiltonian().eval(t)?);
    let da_h = five_point_difference(|s| to_heisenberg_observable(u, a, s, t0), t, h)?;
    let explicit = conj(&observable_rate(a, t, h)?);
    let residual = (da_h - explicit) * C64::new(0.0, hbar) - commutator_unchecked(&a_h, &h_h);
    Ok(residual.norm())
}

/// `(V(t1, t) ψ, V(t1, t) A V(t1, t)⁻¹)`. The identity family returns its
/// inputs unchanged.
pub fn to_v_picture(v: &UnitaryFamily, psi: &StateVector, a: &Operator, t: f64) -> Result<(StateVector, Operator)> {
    check_same_dim(v.dim(), psi.len())?;
    check_same_dim(v.dim(), check_operator(a)?)?;
    if v.is_identity() {
        return Ok((psi.clone(), a.clone()));
    }
    let vt = v.eval(t)?;
    Ok((&vt * psi, &vt * a * vt.adjoint()))
}

/// `(H^V, _VH^V, H̃^V)` at `t`.
pub fn v_hamiltonians(v: &UnitaryFamily, h: &HamiltonianFamily, t: f64, step: f64) -> Result<VHamiltonians> {
    check_same_dim(v.dim(), h.dim())?;
    let ht = h.eval(t)?;
    if v.is_identity() {
        let zero = Operator::zeros(v.dim(), v.dim());
        return Ok(VHamiltonians { transformed: ht.clone(), generator: zero, modified: ht });
    }
    let vt = v.eval(t)?;
    let v_inv = vt.adjoint();
    let transformed = &vt * ht * &v_inv;
    let generator = v.derivative(t, step)? * &v_inv * C64::new(0.0, -h.hbar());
    let modified = &transformed - &generator;
    Ok(VHamiltonians { transformed, generator, modified })
}

/// `U^V(t, t1, t0) = V(t1, t) U(t, t0) V(t1, t0)⁻¹`. For the Heisenberg
/// family of `u` itself this is exactly the identity.
pub fn v_propagator(v: &UnitaryFamily, u: &Propagator, t: f64, t0: f64) -> Result<Operator> {
    check_same_dim(v.dim(), u.dim())?;
    if v.is_heisenberg_of(u) {
        u.evolution(t, t0)?;
        return Ok(identity(v.dim()));
    }
    let ut = u.evolution(t, t0)?;
    if v.is_identity() {
        return Ok(ut);
    }
    Ok(v.eval(t)? * ut * v.inverse(t0)?)
}

/// `‖iħ ∂U^V/∂t - H̃^V U^V‖_F` at `t`.
pub fn v_propagator_residual(v: &UnitaryFamily, u: &Propagator, t: f64, t0: f64, h: f64) -> Result<f64> {
    u.check_interior(t, 2.0 * h)?;
    let du = five_point_difference(|s| v_propagator(v, u, s, t0), t, h)?;
    let hs = v_hamiltonians(v, u.hamiltonian(), t, h)?;
    let residual = du * C64::new(0.0, u.hbar()) - hs.modified * v_propagator(v, u, t, t0)?;
    Ok(residual.norm())
}

/// State and observable residuals of the V-picture equations of motion,
/// `‖iħ ∂ψ^V/∂t - H̃^V ψ^V‖ / max(1, ‖ψ^V‖)` and
/// `‖iħ ∂A^V/∂t - [A^V, _VH^V] - iħ (∂A/∂t)^V‖_F`. For the identity family
/// the state residual is exactly the Schrödinger residual.
pub fn v_eom_residuals<F>(
    v: &UnitaryFamily,
    h: &HamiltonianFamily,
    trajectory: F,
    a: &OperatorFamily,
    t: f64,
    step: f64,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<StateVector>,
{
    check_same_dim(v.dim(), a.dim())?;
    let hbar = h.hbar();
    let hs = v_hamiltonians(v, h, t, step)?;
    let state_at = |s: f64| -> Result<StateVector> {
        let psi = trajectory(s)?;
        if v.is_identity() {
            return Ok(psi);
        }
        Ok(v.eval(s)? * psi)
    };
    let obs_at = |s: f64| -> Result<Operator> { Ok(to_v_picture(v, &trajectory(s)?, &a.eval(s)?, s)?.1) };
    let state_res = if v.is_identity() {
        schrodinger_residual(h, &trajectory, &[t], step)?
    } else {
        let psi_v = state_at(t)?;
        let dpsi = vector_difference(state_at, t, step)?;
        (dpsi * C64::new(0.0, hbar) - &hs.modified * &psi_v).norm() / psi_v.norm().max(1.0)
    };

    let vt = v.eval(t)?;
    let a_v = &vt * a.eval(t)? * vt.adjoint();
    let explicit = &vt * observable_rate(a, t, step)? * vt.adjoint();
    let da = five_point_difference(obs_at, t, step)?;
    let obs_res = ((da - explicit) * C64::new(0.0, hbar) - commutator_unchecked(&a_v, &hs.generator)).norm();
    Ok((state_res, obs_res))
}

/// A V-picture of one system: the Schrödinger trajectory, the Hamiltonian
/// and the picture-defining family.
#[derive(Clone)]
pub struct PictureBundle {
    v: UnitaryFamily,
    hamiltonian: HamiltonianFamily,
    trajectory: TimeFn<StateVector>,
    step: f64,
}

impl fmt::Debug for PictureBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PictureBundle").field("v", &self.v).field("step", &self.step).finish()
    }
}

impl PictureBundle {
    pub fn new(v: UnitaryFamily, hamiltonian: HamiltonianFamily, trajectory: TimeFn<StateVector>, step: f64) -> Result<Self> {
        check_same_dim(v.dim(), hamiltonian.dim())?;
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("differencing step must be positive, got {step}")));
        }
        Ok(Self { v, hamiltonian, trajectory, step })
    }

    pub fn family(&self) -> &UnitaryFamily {
        &self.v
    }

    /// `ψ^V_t(t1)`.
    pub fn state(&self, t: f64) -> Result<StateVector> {
        let psi = (self.trajectory)(t)?;
        if self.v.is_identity() {
            return Ok(psi);
        }
        Ok(self.v.eval(t)? * psi)
    }

    /// `A^V_t(t1)`.
    pub fn observable(&self, a: &OperatorFamily, t: f64) -> Result<Operator> {
        check_same_dim(self.v.dim(), a.dim())?;
        if self.v.is_identity() {
            return a.eval(t);
        }
        let vt = self.v.eval(t)?;
        Ok(&vt * a.eval(t)? * vt.adjoint())
    }

    pub fn hamiltonians(&self, t: f64) -> Result<VHamiltonians> {
        v_hamiltonians(&self.v, &self.hamiltonian, t, self.step)
    }

    /// `⟨A^V⟩` in `ψ^V`, equal to the Schrödinger mean at the same time.
    pub fn mean(&self, a: &OperatorFamily, t: f64) -> Result<C64> {
        mean_value(&self.observable(a, t)?, &self.state(t)?)
    }
}

/// `V_γ(t1, t) = l(t1)⁻¹ V(t1, t) l(t)`.
pub fn bundle_v_family(atlas: &BundleAtlas, v: &UnitaryFamily, t: f64) -> Result<Operator> {
    check_same_dim(atlas.dim(), v.dim())?;
    Ok(atlas.triv_inverse(v.anchor())? * v.eval(t)? * atlas.triv(t)?)
}

/// Bundle picture state `V_γ(t1, t) Ψ_γ(t)` in the fibre over `γ(t1)`.
pub fn bundle_v_state(v: &UnitaryFamily, section: &StateSection, t: f64) -> Result<StateVector> {
    Ok(bundle_v_family(section.atlas(), v, t)? * section.value(t)?)
}

/// Bundle picture observable `V_γ A_γ(t) V_γ⁻¹` in the fibre over `γ(t1)`.
pub fn bundle_v_observable(v: &UnitaryFamily, field: &MorphismField, t: f64) -> Result<Operator> {
    let atlas = field.atlas();
    let w = bundle_v_family(atlas, v, t)?;
    let w_inv = atlas.triv_inverse(t)? * v.inverse(t)? * atlas.triv(v.anchor())?;
    Ok(w * field.value(t)? * w_inv)
}

/// Bundle Hamiltonians over `γ(t1)`, computed from fibre data only:
/// `H^V_γ = V_γ H^m V_γ⁻¹`, `_VH^V_γ = -iħ (∂V_γ/∂t) V_γ⁻¹`.
pub fn bundle_v_hamiltonians(transport: &EvolutionTransport, v: &UnitaryFamily, t: f64, step: f64) -> Result<VHamiltonians> {
    let atlas = transport.atlas();
    let hm = atlas_hamiltonian(transport, t, step)?;
    let w = bundle_v_family(atlas, v, t)?;
    let w_inv = atlas.triv_inverse(t)? * v.inverse(t)? * atlas.triv(v.anchor())?;
    let dw = five_point_difference(|s| bundle_v_family(atlas, v, s), t, step)?;
    let transformed = &w * hm * &w_inv;
    let generator = dw * &w_inv * C64::new(0.0, -transport.hbar());
    let modified = &transformed - &generator;
    Ok(VHamiltonians { transformed, generator, modified })
}

/// `𝒰^V_γ(t, t1, t0) = V_γ(t1, t) 𝒰(t, t0) V_γ(t1, t0)⁻¹`.
pub fn bundle_v_propagator(transport: &EvolutionTransport, v: &UnitaryFamily, t: f64, t0: f64) -> Result<Operator> {
    let atlas = transport.atlas();
    if v.is_heisenberg_of(transport.propagator()) {
        transport.transport(t, t0)?;
        return Ok(identity(v.dim()));
    }
    let w0_inv = atlas.triv_inverse(t0)? * v.inverse(t0)? * atlas.triv(v.anchor())?;
    Ok(bundle_v_family(atlas, v, t)? * transport.transport(t, t0)? * w0_inv)
}

/// Bundle V-picture residuals, computed in fibre coordinates and measured
/// with the fibre metric over `γ(t1)`. They agree with [`v_eom_residuals`]
/// for the underlying Hilbert-space system.
pub fn bundle_v_eom_residuals(
    transport: &EvolutionTransport,
    v: &UnitaryFamily,
    section: &StateSection,
    field: &MorphismField,
    t: f64,
    step: f64,
) -> Result<(f64, f64)> {
    transport.path().check_interior(t, 2.0 * step)?;
    let atlas = transport.atlas();
    let t1 = v.anchor();
    let hbar = transport.hbar();
    let hs = bundle_v_hamiltonians(transport, v, t, step)?;
    let psi = bundle_v_state(v, section, t)?;
    let dpsi = vector_difference(|s| bundle_v_state(v, section, s), t, step)?;
    let state_residual = dpsi * C64::new(0.0, hbar) - &hs.modified * &psi;
    let state_res = atlas.fibre_norm(t1, &state_residual)? / atlas.fibre_norm(t1, &psi)?.max(1.0);

    let w = bundle_v_family(atlas, v, t)?;
    let w_inv = atlas.triv_inverse(t)? * v.inverse(t)? * atlas.triv(t1)?;
    let a_v = &w * field.value(t)? * &w_inv;
    let explicit = &w * five_point_difference(|s| field.value(s), t, step)? * &w_inv;
    let da = five_point_difference(|s| bundle_v_observable(v, field, s), t, step)?;
    let obs_residual = (da - explicit) * C64::new(0.0, hbar) - commutator_unchecked(&a_v, &hs.generator);
    Ok((state_res, atlas.fibre_operator_norm(t1, &obs_residual)?))
}

/// Free, interaction-picture and full propagators of `H = H0 + H_I` on a
/// shared grid.
#[derive(Debug, Clone)]
pub struct InteractionPicture {
    t0: f64,
    u0: Arc<Propagator>,
    u_interaction: Propagator,
    u_full: Propagator,
    h0: HamiltonianFamily,
    h_interaction: HamiltonianFamily,
}

/// The three propagators of [`interaction_split`] at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionSplit {
    pub u0: Operator,
    pub u_interaction: Operator,
    pub u_full: Operator,
}

impl InteractionPicture {
    /// Builds all three propagators on `[lo, hi]` with reference time `t0`.
    /// The interaction-picture Hamiltonian `U0(t0, τ) H_I(τ) U0(τ, t0)` is
    /// integrated on the grid of `U0`.
    pub fn new(
        h0: HamiltonianFamily,
        h_interaction: HamiltonianFamily,
        lo: f64,
        hi: f64,
        t0: f64,
        cfg: &IntegratorConfig,
    ) -> Result<Self> {
        check_same_dim(h0.dim(), h_interaction.dim())?;
        if h0.hbar() != h_interaction.hbar() {
            return Err(Error::InvalidArgument("H0 and H_I use different values of hbar".into()));
        }
        if !(lo <= t0 && t0 <= hi) {
            return Err(Error::OutOfDomain { t: t0, lo, hi });
        }
        let full = HamiltonianFamily::new(h0.family().sum(h_interaction.family())?, h0.hbar())?;
        let u_full = Propagator::new(full, lo, hi, cfg)?;
        let u0 = Arc::new(Propagator::new(h0.clone(), lo, hi, cfg)?);
        let (u0c, hic) = (Arc::clone(&u0), h_interaction.clone());
        let transformed = OperatorFamily::try_smooth(h0.dim(), move |tau| {
            let back = u0c.evolution(t0, tau)?;
            Ok(&back * hic.eval(tau)? * back.adjoint())
        })?;
        let u_interaction =
            Propagator::on_grid(HamiltonianFamily::new(transformed, h0.hbar())?, u0.grid().to_vec(), cfg)?;
        Ok(Self { t0, u0, u_interaction, u_full, h0, h_interaction })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn free_propagator(&self) -> &Propagator {
        &self.u0
    }

    pub fn interaction_propagator(&self) -> &Propagator {
        &self.u_interaction
    }

    pub fn full_propagator(&self) -> &Propagator {
        &self.u_full
    }

    /// The interaction picture as a V-picture, `V = U0(t0, ·)`.
    pub fn picture_family(&self) -> Result<UnitaryFamily> {
        UnitaryFamily::heisenberg(Arc::clone(&self.u0), self.t0)
    }

    /// `U0(t, t0)`, `U_I(t, t0)` and `U(t, t0)`.
    pub fn split(&self, t: f64) -> Result<InteractionSplit> {
        Ok(InteractionSplit {
            u0: self.u0.evolution(t, self.t0)?,
            u_interaction: self.u_interaction.evolution(t, self.t0)?,
            u_full: self.u_full.evolution(t, self.t0)?,
        })
    }

    /// `‖U0 U_I - U‖_F` at `t`.
    pub fn splitting_residual(&self, t: f64) -> Result<f64> {
        let s = self.split(t)?;
        Ok((s.u0 * s.u_interaction - s.u_full).norm())
    }

    /// `H_I` in the interaction picture, `U0(t0, t) H_I(t) U0(t, t0)`.
    pub fn interaction_hamiltonian(&self, t: f64) -> Result<Operator> {
        self.u_interaction.hamiltonian().eval(t)
    }

    /// State residual `‖iħ ∂ψ^(I)/∂t - H_I^(I) ψ^(I)‖ / max(1, ‖ψ^(I)‖)` and
    /// observable residual `‖iħ ∂A^(I)/∂t - [A^(I), H0^(I)] - iħ (∂A/∂t)^(I)‖_F`,
    /// with `ψ^(I) = U0(t0, t) ψ(t)`.
    pub fn eom_residuals<F>(&self, trajectory: F, a: &OperatorFamily, t: f64, step: f64) -> Result<(f64, f64)>
    where
        F: Fn(f64) -> Result<StateVector>,
    {
        check_same_dim(self.h0.dim(), a.dim())?;
        self.u0.check_interior(t, 2.0 * step)?;
        let hbar = self.h0.hbar();
        let back = |s: f64| self.u0.evolution(self.t0, s);
        let state_at = |s: f64| -> Result<StateVector> { Ok(back(s)? * trajectory(s)?) };
        let psi = state_at(t)?;
        let dpsi = vector_difference(state_at, t, step)?;
        let state_res = (dpsi * C64::new(0.0, hbar) - self.interaction_hamiltonian(t)? * &psi).norm() / psi.norm().max(1.0);

        let b = back(t)?;
        let conj = |x: &Operator| &b * x * b.adjoint();
        let a_i = conj(&a.eval(t)?);
        let h0_i = conj(&self.h0.eval(t)?);
        let explicit = conj(&observable_rate(a, t, step)?);
        let da = five_point_difference(
            |s| {
                let bs = back(s)?;
                Ok(&bs * a.eval(s)? * bs.adjoint())
            },
            t,
            step,
        )?;
        let obs_res = ((da - explicit) * C64::new(0.0, hbar) - commutator_unchecked(&a_i, &h0_i)).norm();
        Ok((state_res, obs_res))
    }

    pub fn interaction(&self) -> &HamiltonianFamily {
        &self.h_interaction
    }
}

/// `(U0(t, t0), U_I(t, t0), U(t, t0))` for `H = H0 + H_I` on `[min(t0, t), max(t0, t)]`.
pub fn interaction_split(
    h0: &HamiltonianFamily,
    h_interaction: &HamiltonianFamily,
    t: f64,
    t0: f64,
    cfg: &IntegratorConfig,
) -> Result<InteractionSplit> {
    if t == t0 {
        let id = identity(h0.dim());
        return Ok(InteractionSplit { u0: id.clone(), u_interaction: id.clone(), u_full: id });
    }
    InteractionPicture::new(h0.clone(), h_interaction.clone(), t0.min(t), t0.max(t), t0, cfg)?.split(t)
}

/// Residuals of the interaction-picture equations of motion at `t`; see
/// [`InteractionPicture::eom_residuals`].
pub fn interaction_eom_residuals<F>(
    picture: &InteractionPicture,
    trajectory: F,
    a: &OperatorFamily,
    t: f64,
    step: f64,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<StateVector>,
{
    picture.eom_residuals(trajectory, a, t, step)
}

/// Largest `|picture mean - Schrödinger mean|` for a V-picture over the
/// samples.
pub fn picture_mean_gap(picture: &PictureBundle, a: &OperatorFamily, samples: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in samples {
        let schrodinger = mean_value(&a.eval(t)?, &(picture.trajectory)(t)?)?;
        worst = worst.max((picture.mean(a, t)? - schrodinger).norm());
    }
    Ok(worst)
}
