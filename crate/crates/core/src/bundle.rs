//! Geometry of the state bundle along an observer's world line.
//!
//! The base of the bundle is parameterized by the observer's proper time `t`,
//! so a path never self-intersects and every section is single valued. Each
//! fibre is identified with the typical state space by an invertible
//! trivialization `l(t)`. Fibre vectors and fibre operators are stored in
//! these coordinates: a Hilbert-space vector `ψ` corresponds to `l(t)⁻¹ψ`, an
//! operator `A` to `l(t)⁻¹ A l(t)`. The fibre inner product is pulled back
//! through the trivialization, `⟨Φ|Ψ⟩_t = ⟨l(t)Φ | l(t)Ψ⟩`, which makes every
//! mean value independent of the choice of `l`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::family::{central_difference, five_point_difference, OperatorFamily, TimeFn};
use crate::linear::{
    check_operator, check_same_dim, commutator_unchecked, identity, inner, matrix_exponential, scale, unitarity_defect,
    Operator, StateVector, C64,
};
use crate::propagation::Propagator;
use crate::random;

/// Condition number above which a trivialization counts as singular.
pub const MAX_TRIVIALIZATION_COND: f64 = 1e6;

/// The observer's world line, parameterized by time on `[t_min, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverPath {
    t_min: f64,
    t_max: f64,
    label: String,
}

impl ObserverPath {
    pub fn new(t_min: f64, t_max: f64, label: impl Into<String>) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite() && t_min < t_max) {
            return Err(Error::InvalidArgument(format!("degenerate path interval [{t_min}, {t_max}]")));
        }
        Ok(Self { t_min, t_max, label: label.into() })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.t_max
    }

    pub fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { t, lo: self.t_min, hi: self.t_max })
        }
    }

    /// `[t - h, t + h]` must lie inside the path interval.
    pub fn check_interior(&self, t: f64, h: f64) -> Result<()> {
        if h > 0.0 && t - h >= self.t_min && t + h <= self.t_max {
            Ok(())
        } else {
            Err(Error::BoundaryTime { t, lo: self.t_min, hi: self.t_max, h })
        }
    }

    /// `n` equally spaced times strictly inside the interval, each at least
    /// `margin` away from either end.
    pub fn interior_samples(&self, n: usize, margin: f64) -> Vec<f64> {
        let lo = self.t_min + margin;
        let hi = self.t_max - margin;
        (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtlasKind {
    Identity,
    UnitaryField,
    InvertibleField,
}

/// Trivializations `l(t)` along a path.
#[derive(Clone)]
pub struct BundleAtlas {
    path: ObserverPath,
    dim: usize,
    kind: AtlasKind,
    triv: TimeFn<Operator>,
    triv_derivative: Option<TimeFn<Operator>>,
}

impl fmt::Debug for BundleAtlas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BundleAtlas")
            .field("path", &self.path)
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .finish()
    }
}

impl BundleAtlas {
    pub fn identity(path: ObserverPath, dim: usize) -> Result<Self> {
        crate::linear::check_dim(dim)?;
        let id = identity(dim);
        let zero = Operator::zeros(dim, dim);
        Ok(Self {
            path,
            dim,
            kind: AtlasKind::Identity,
            triv: Arc::new(move |_| Ok(id.clone())),
            triv_derivative: Some(Arc::new(move |_| Ok(zero.clone()))),
        })
    }

    /// A user-supplied trivialization field. Unitary fields are checked at
    /// nine points along the path.
    pub fn from_fn<F>(path: ObserverPath, dim: usize, kind: AtlasKind, triv: F) -> Result<Self>
    where
        F: Fn(f64) -> Operator + Send + Sync + 'static,
    {
        crate::linear::check_dim(dim)?;
        let atlas = Self { path, dim, kind, triv: Arc::new(move |t| Ok(triv(t))), triv_derivative: None };
        let (lo, hi) = atlas.path.interval();
        for k in 0..9 {
            let t = lo + (hi - lo) * k as f64 / 8.0;
            let l = atlas.triv(t)?;
            check_same_dim(dim, check_operator(&l)?)?;
            if kind == AtlasKind::UnitaryField && unitarity_defect(&l) > 1e-10 {
                return Err(Error::InvalidArgument(format!("trivialization not unitary at t = {t}")));
            }
            atlas.triv_inverse(t)?;
        }
        Ok(atlas)
    }

    pub fn with_derivative<F>(mut self, d: F) -> Self
    where
        F: Fn(f64) -> Operator + Send + Sync + 'static,
    {
        self.triv_derivative = Some(Arc::new(move |t| Ok(d(t))));
        self
    }

    /// Seeded smooth unitary field `l(t) = exp(-i (G0 + sin(t) G1 + cos(2t) G2))`
    /// with random Hermitian `G`s.
    pub fn unitary_field(path: ObserverPath, dim: usize, seed: u64) -> Result<Self> {
        let mut rng = random::stream(seed, "atlas/unitary");
        let gens = unitary_generators(&mut rng, dim);
        Self::from_fn(path, dim, AtlasKind::UnitaryField, move |t| unitary_at(&gens, t))
    }

    /// Seeded invertible field `l(t) = u(t) exp(B0 + sin(t) B1)` with `u` a
    /// unitary field as above and `B`s Hermitian, scaled so the condition
    /// number of `l(t)` never exceeds `cond_cap`.
    pub fn invertible_field(path: ObserverPath, dim: usize, seed: u64, cond_cap: f64) -> Result<Self> {
        if !(cond_cap > 1.0 && cond_cap <= MAX_TRIVIALIZATION_COND) {
            return Err(Error::InvalidArgument(format!("cond_cap must lie in (1, 1e6], got {cond_cap}")));
        }
        let mut rng = random::stream(seed, "atlas/invertible");
        let gens = unitary_generators(&mut rng, dim);
        // ‖B0 + sin(t) B1‖₂ ≤ ‖B0‖_F + ‖B1‖_F ≤ ln(cap)/2 bounds cond(exp B) by cap
        let budget = 0.25 * cond_cap.ln() * 0.99;
        let b0 = random::hermitian(&mut rng, dim, budget);
        let b1 = random::hermitian(&mut rng, dim, budget);
        Self::from_fn(path, dim, AtlasKind::InvertibleField, move |t| {
            let stretch = matrix_exponential(&(&b0 + scale(&b1, t.sin()))).expect("bounded Hermitian exponent");
            unitary_at(&gens, t) * stretch
        })
    }

    pub fn path(&self) -> &ObserverPath {
        &self.path
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> AtlasKind {
        self.kind
    }

    /// `l(t)`.
    pub fn triv(&self, t: f64) -> Result<Operator> {
        (self.triv)(t)
    }

    /// `l(t)⁻¹`, rejecting trivializations with condition number above
    /// [`MAX_TRIVIALIZATION_COND`].
    pub fn triv_inverse(&self, t: f64) -> Result<Operator> {
        let l = self.triv(t)?;
        if self.kind == AtlasKind::Identity {
            return Ok(l);
        }
        invert_checked(&l, |cond| Error::SingularTrivialization { t, cond })
    }

    /// `dl/dt`: analytic when supplied, else a central difference.
    pub fn triv_derivative(&self, t: f64, h: f64) -> Result<Operator> {
        match &self.triv_derivative {
            Some(d) => d(t),
            None => central_difference(|s| self.triv(s), t, h),
        }
    }

    /// Fibre coordinates of a Hilbert-space vector: `l(t)⁻¹ψ`.
    pub fn to_fibre(&self, t: f64, psi: &StateVector) -> Result<StateVector> {
        check_same_dim(self.dim, psi.len())?;
        Ok(self.triv_inverse(t)? * psi)
    }

    pub fn from_fibre(&self, t: f64, psi: &StateVector) -> Result<StateVector> {
        check_same_dim(self.dim, psi.len())?;
        Ok(self.triv(t)? * psi)
    }

    /// `l(t)⁻¹ A l(t)`.
    pub fn operator_to_fibre(&self, t: f64, a: &Operator) -> Result<Operator> {
        check_same_dim(self.dim, check_operator(a)?)?;
        Ok(self.triv_inverse(t)? * a * self.triv(t)?)
    }

    /// `l(t) A l(t)⁻¹`.
    pub fn operator_from_fibre(&self, t: f64, a: &Operator) -> Result<Operator> {
        check_same_dim(self.dim, check_operator(a)?)?;
        Ok(self.triv(t)? * a * self.triv_inverse(t)?)
    }

    /// `⟨Φ|Ψ⟩_t = ⟨l(t)Φ | l(t)Ψ⟩`.
    pub fn fibre_inner(&self, t: f64, phi: &StateVector, psi: &StateVector) -> Result<C64> {
        let l = self.triv(t)?;
        Ok(inner(&(&l * phi), &(&l * psi)))
    }

    pub fn fibre_norm(&self, t: f64, psi: &StateVector) -> Result<f64> {
        Ok((self.triv(t)? * psi).norm())
    }

    /// Frobenius norm of a fibre operator measured through the fibre metric,
    /// `‖l(t) A l(t)⁻¹‖_F`. Agrees with the Hilbert-space norm of the
    /// corresponding operator.
    pub fn fibre_operator_norm(&self, t: f64, a: &Operator) -> Result<f64> {
        Ok(self.operator_from_fibre(t, a)?.norm())
    }

    /// Metric adjoint of a fibre map `A: fibre(source) → fibre(target)`,
    /// i.e. the map `A‡: fibre(target) → fibre(source)` with
    /// `⟨A‡Φ | Ψ⟩_source = ⟨Φ | AΨ⟩_target`.
    pub fn fibre_adjoint(&self, a: &Operator, target: f64, source: f64) -> Result<Operator> {
        let lt = self.triv(target)?;
        let ls = self.triv(source)?;
        let gram_t = lt.adjoint() * &lt;
        let gram_s = ls.adjoint() * &ls;
        let gram_s_inv = invert_checked(&gram_s, |cond| Error::SingularTrivialization { t: source, cond })?;
        Ok(gram_s_inv * a.adjoint() * gram_t)
    }
}

fn unitary_generators<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> [Operator; 3] {
    [random::hermitian(rng, dim, 0.8), random::hermitian(rng, dim, 0.6), random::hermitian(rng, dim, 0.3)]
}

fn unitary_at(gens: &[Operator; 3], t: f64) -> Operator {
    let g = &gens[0] + scale(&gens[1], t.sin()) + scale(&gens[2], (2.0 * t).cos());
    matrix_exponential(&(g * C64::new(0.0, -1.0))).expect("bounded Hermitian exponent")
}

/// Inverse through the SVD, failing when the condition number exceeds
/// [`MAX_TRIVIALIZATION_COND`].
pub(crate) fn invert_checked<E>(a: &Operator, err: E) -> Result<Operator>
where
    E: FnOnce(f64) -> Error,
{
    let svd = a.clone().svd(true, true);
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let min = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if cond.is_nan() || cond > MAX_TRIVIALIZATION_COND {
        return Err(err(cond));
    }
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let inv_sigma = Operator::from_diagonal(&svd.singular_values.map(|s| C64::new(1.0 / s, 0.0)));
    Ok(v_t.adjoint() * inv_sigma * u.adjoint())
}

/// A state section: fibre coordinates `Ψ(t)` along the path.
#[derive(Clone)]
pub struct StateSection {
    atlas: BundleAtlas,
    values: TimeFn<StateVector>,
}

impl fmt::Debug for StateSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateSection").field("atlas", &self.atlas).finish()
    }
}

impl StateSection {
    pub fn from_fibre_values(atlas: BundleAtlas, values: TimeFn<StateVector>) -> Self {
        Self { atlas, values }
    }

    /// The section obtained by transporting `value` from time `s`.
    pub fn transported(transport: &EvolutionTransport, value: StateVector, s: f64) -> Result<Self> {
        check_same_dim(transport.dim(), value.len())?;
        let t2 = transport.clone();
        Ok(Self {
            atlas: transport.atlas().clone(),
            values: Arc::new(move |t| Ok(t2.transport(t, s)? * &value)),
        })
    }

    pub fn atlas(&self) -> &BundleAtlas {
        &self.atlas
    }

    pub fn value(&self, t: f64) -> Result<StateVector> {
        let v = (self.values)(t)?;
        check_same_dim(self.atlas.dim(), v.len())?;
        Ok(v)
    }

    /// The Hilbert-space vector `l(t)Ψ(t)`.
    pub fn hilbert_value(&self, t: f64) -> Result<StateVector> {
        self.atlas.from_fibre(t, &self.value(t)?)
    }
}

/// A morphism along the path: fibre endomorphisms `A_γ(t)` in atlas
/// coordinates.
#[derive(Clone)]
pub struct MorphismField {
    atlas: BundleAtlas,
    values: TimeFn<Operator>,
    derivative: Option<TimeFn<Operator>>,
    source: Option<OperatorFamily>,
}

impl fmt::Debug for MorphismField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MorphismField")
            .field("atlas", &self.atlas)
            .field("analytic_derivative", &self.derivative.is_some())
            .field("source", &self.source)
            .finish()
    }
}

impl MorphismField {
    pub fn from_fibre_values(atlas: BundleAtlas, values: TimeFn<Operator>) -> Self {
        Self { atlas, values, derivative: None, source: None }
    }

    pub fn identity(atlas: BundleAtlas) -> Self {
        let id = identity(atlas.dim());
        let zero = Operator::zeros(atlas.dim(), atlas.dim());
        Self {
            atlas,
            values: Arc::new(move |_| Ok(id.clone())),
            derivative: Some(Arc::new(move |_| Ok(zero.clone()))),
            source: None,
        }
    }

    /// The morphism `t ↦ °U(t, s)(A_s)`.
    pub fn transported(transport: &EvolutionTransport, a_at_s: Operator, s: f64) -> Result<Self> {
        check_same_dim(transport.dim(), check_operator(&a_at_s)?)?;
        let t2 = transport.clone();
        Ok(Self::from_fibre_values(
            transport.atlas().clone(),
            Arc::new(move |t| transport_morphism(&t2, &a_at_s, s, t)),
        ))
    }

    pub fn with_derivative(mut self, d: TimeFn<Operator>) -> Self {
        self.derivative = Some(d);
        self
    }

    pub fn atlas(&self) -> &BundleAtlas {
        &self.atlas
    }

    pub fn dim(&self) -> usize {
        self.atlas.dim()
    }

    /// The Hilbert-space observable this field was lifted from, if any.
    pub fn source_observable(&self) -> Option<&OperatorFamily> {
        self.source.as_ref()
    }

    pub fn value(&self, t: f64) -> Result<Operator> {
        let v = (self.values)(t)?;
        check_same_dim(self.atlas.dim(), v.nrows())?;
        Ok(v)
    }

    /// `∂A_γ/∂t` in atlas coordinates.
    pub fn derivative(&self, t: f64, h: f64) -> Result<Operator> {
        match &self.derivative {
            Some(d) => d(t),
            None => central_difference(|s| self.value(s), t, h),
        }
    }

    /// The Hilbert-space operator `l(t) A_γ(t) l(t)⁻¹`.
    pub fn hilbert_value(&self, t: f64) -> Result<Operator> {
        self.atlas.operator_from_fibre(t, &self.value(t)?)
    }
}

/// The evolution transport `𝒰(t, s) = l(t)⁻¹ U(t, s) l(s)` between fibres.
#[derive(Clone)]
pub struct EvolutionTransport {
    atlas: BundleAtlas,
    propagator: Arc<Propagator>,
}

impl fmt::Debug for EvolutionTransport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvolutionTransport")
            .field("atlas", &self.atlas)
            .field("propagator", &self.propagator)
            .finish()
    }
}

impl EvolutionTransport {
    /// The propagator's interval must cover the path.
    pub fn new(atlas: BundleAtlas, propagator: Arc<Propagator>) -> Result<Self> {
        check_same_dim(atlas.dim(), propagator.dim())?;
        let (lo, hi) = atlas.path().interval();
        let (plo, phi) = propagator.interval();
        if lo < plo || hi > phi {
            return Err(Error::InvalidArgument(format!(
                "propagator interval [{plo}, {phi}] does not cover the path [{lo}, {hi}]"
            )));
        }
        Ok(Self { atlas, propagator })
    }

    pub fn atlas(&self) -> &BundleAtlas {
        &self.atlas
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn shared_propagator(&self) -> Arc<Propagator> {
        Arc::clone(&self.propagator)
    }

    pub fn dim(&self) -> usize {
        self.atlas.dim()
    }

    pub fn hbar(&self) -> f64 {
        self.propagator.hbar()
    }

    pub fn path(&self) -> &ObserverPath {
        self.atlas.path()
    }

    /// `𝒰(t, s)`: fibre at `s` to fibre at `t`. Exactly the identity for `t == s`.
    pub fn transport(&self, t: f64, s: f64) -> Result<Operator> {
        self.atlas.path().check(t)?;
        self.atlas.path().check(s)?;
        if t == s {
            return Ok(identity(self.dim()));
        }
        let u = self.propagator.evolution(t, s)?;
        if self.atlas.kind() == AtlasKind::Identity {
            return Ok(u);
        }
        Ok(self.atlas.triv_inverse(t)? * u * self.atlas.triv(s)?)
    }
}

/// Pointwise lift of a state trajectory: `Ψ(t) = l(t)⁻¹ ψ(t)`.
pub fn lift_state<F>(atlas: &BundleAtlas, trajectory: F) -> StateSection
where
    F: Fn(f64) -> Result<StateVector> + Send + Sync + 'static,
{
    let a = atlas.clone();
    StateSection { atlas: atlas.clone(), values: Arc::new(move |t| a.to_fibre(t, &trajectory(t)?)) }
}

/// `𝒰(t, s) = l(t)⁻¹ ∘ U(t, s) ∘ l(s)` for an atlas and a propagator.
pub fn evolution_transport(atlas: &BundleAtlas, propagator: &Propagator, t: f64, s: f64) -> Result<Operator> {
    check_same_dim(atlas.dim(), propagator.dim())?;
    atlas.path().check(t)?;
    atlas.path().check(s)?;
    if t == s {
        return Ok(identity(atlas.dim()));
    }
    Ok(atlas.triv_inverse(t)? * propagator.evolution(t, s)? * atlas.triv(s)?)
}

/// `Ψ(t) = 𝒰(t, s) Ψ(s)`.
pub fn transport_state(transport: &EvolutionTransport, value: &StateVector, s: f64, t: f64) -> Result<StateVector> {
    check_same_dim(transport.dim(), value.len())?;
    if t == s {
        return Ok(value.clone());
    }
    Ok(transport.transport(t, s)? * value)
}

/// Pointwise lift of an observable: `A_γ(t) = l(t)⁻¹ A(t) l(t)`.
pub fn lift_observable(atlas: &BundleAtlas, observable: &OperatorFamily) -> Result<MorphismField> {
    check_same_dim(atlas.dim(), observable.dim())?;
    let (a, obs) = (atlas.clone(), observable.clone());
    let values: TimeFn<Operator> = if atlas.kind() == AtlasKind::Identity {
        Arc::new(move |t| obs.eval(t))
    } else {
        Arc::new(move |t| a.operator_to_fibre(t, &obs.eval(t)?))
    };
    Ok(MorphismField { atlas: atlas.clone(), values, derivative: None, source: Some(observable.clone()) })
}

/// Mean value of a morphism in a state section, computed with the fibre
/// metric. Equals the Hilbert-space mean of the underlying observable.
pub fn fibre_mean_value(field: &MorphismField, section: &StateSection, t: f64) -> Result<C64> {
    check_same_dim(field.dim(), section.atlas().dim())?;
    let psi = section.value(t)?;
    let a = field.value(t)?;
    let atlas = field.atlas();
    let norm_sq = atlas.fibre_inner(t, &psi, &psi)?.re;
    if norm_sq == 0.0 {
        return Err(Error::ZeroState);
    }
    Ok(atlas.fibre_inner(t, &psi, &(a * &psi))? / norm_sq)
}

/// Connection coefficients `Γ(t) = ∂𝒰(t, τ)/∂τ |_{τ=t}` in atlas
/// coordinates, with the matrix-bundle Hamiltonian `H^m = -iħ Γ`.
pub fn connection_coefficients(transport: &EvolutionTransport, t: f64, h: f64) -> Result<(Operator, Operator)> {
    FrameField::atlas_frame(transport).connection(t, h)
}

/// The matrix-bundle Hamiltonian in atlas coordinates from the Hilbert-space
/// Hamiltonian, `H^m = l⁻¹ H l - iħ l⁻¹ dl/dt`. Agrees with the `H^m` of
/// [`connection_coefficients`] up to the integrator and differencing errors;
/// `dl/dt` uses a five-point stencil of step `h` unless given analytically.
pub fn atlas_hamiltonian(transport: &EvolutionTransport, t: f64, h: f64) -> Result<Operator> {
    let atlas = transport.atlas();
    let ham = transport.propagator().hamiltonian().eval(t)?;
    if atlas.kind() == AtlasKind::Identity {
        return Ok(ham);
    }
    let l_inv = atlas.triv_inverse(t)?;
    let dl = match &atlas.triv_derivative {
        Some(d) => d(t)?,
        None => five_point_difference(|s| atlas.triv(s), t, h)?,
    };
    Ok(&l_inv * ham * atlas.triv(t)? - l_inv * dl * C64::new(0.0, transport.hbar()))
}

/// Largest `‖iħ dΨ/dt - H^m Ψ‖ / max(1, ‖Ψ‖)` over the samples, with norms in
/// the fibre metric. Vanishes exactly for transported sections.
pub fn section_derivation_residual(
    transport: &EvolutionTransport,
    section: &StateSection,
    samples: &[f64],
    h: f64,
) -> Result<f64> {
    let hbar = transport.hbar();
    let atlas = transport.atlas();
    let mut worst: f64 = 0.0;
    for &t in samples {
        transport.path().check_interior(t, h)?;
        let psi = section.value(t)?;
        let dpsi = (section.value(t + h)? - section.value(t - h)?) * C64::new(0.5 / h, 0.0);
        let (_, hm) = connection_coefficients(transport, t, h)?;
        let residual = dpsi * C64::new(0.0, hbar) - hm * &psi;
        worst = worst.max(atlas.fibre_norm(t, &residual)? / atlas.fibre_norm(t, &psi)?.max(1.0));
    }
    Ok(worst)
}

/// The derivation along the path induced by the transport on morphisms,
/// `∂A/∂t - [A, Γ]` in atlas coordinates (equivalently `dA/dt + [Γ, A]`).
pub fn morphism_derivation(transport: &EvolutionTransport, field: &MorphismField, t: f64, h: f64) -> Result<Operator> {
    FrameField::atlas_frame(transport).morphism_derivation(field, t, h)
}

/// Same map as [`morphism_derivation`], under the name used for the
/// derivation of morphism coefficient matrices.
pub fn induced_derivation(transport: &EvolutionTransport, field: &MorphismField, t: f64, h: f64) -> Result<Operator> {
    morphism_derivation(transport, field, t, h)
}

/// One-sided difference quotient of the induced transport,
/// `(°U(t, t+ε)(A(t+ε)) - A(t)) / ε`, which tends to the derivation as
/// `ε → 0` with error `O(ε)`.
pub fn morphism_derivation_limit(
    transport: &EvolutionTransport,
    field: &MorphismField,
    t: f64,
    eps: f64,
) -> Result<Operator> {
    let pulled = transport_morphism(transport, &field.value(t + eps)?, t + eps, t)?;
    Ok(scale(&(pulled - field.value(t)?), 1.0 / eps))
}

/// Induced transport of morphisms, `°U(t, s)(A) = 𝒰(t, s) ∘ A ∘ 𝒰(s, t)`.
pub fn transport_morphism(transport: &EvolutionTransport, a_at_s: &Operator, s: f64, t: f64) -> Result<Operator> {
    check_same_dim(transport.dim(), check_operator(a_at_s)?)?;
    if t == s {
        return Ok(a_at_s.clone());
    }
    Ok(transport.transport(t, s)? * a_at_s * transport.transport(s, t)?)
}

/// A field of bases `E(t)` (columns are frame vectors in atlas coordinates)
/// along the path, with the transport's connection in that frame.
#[derive(Clone)]
pub struct FrameField {
    transport: EvolutionTransport,
    basis: TimeFn<Operator>,
    is_atlas_frame: bool,
}

impl fmt::Debug for FrameField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrameField").field("transport", &self.transport).finish()
    }
}

impl FrameField {
    /// The frame of the atlas itself, `E(t) = 1`.
    pub fn atlas_frame(transport: &EvolutionTransport) -> Self {
        let id = identity(transport.dim());
        Self { transport: transport.clone(), basis: Arc::new(move |_| Ok(id.clone())), is_atlas_frame: true }
    }

    pub fn from_basis(transport: &EvolutionTransport, basis: TimeFn<Operator>) -> Self {
        Self { transport: transport.clone(), basis, is_atlas_frame: false }
    }

    /// The frame with component change `A ↦ W A W⁻¹`, i.e. `E'(t) = E(t) W(t)⁻¹`.
    pub fn regauged(&self, gauge: TimeFn<Operator>) -> Self {
        let basis = Arc::clone(&self.basis);
        Self {
            transport: self.transport.clone(),
            basis: Arc::new(move |t| {
                let w = gauge(t)?;
                let w_inv = invert_checked(&w, |cond| Error::SingularGauge { t, cond })?;
                Ok(basis(t)? * w_inv)
            }),
            is_atlas_frame: false,
        }
    }

    pub fn transport(&self) -> &EvolutionTransport {
        &self.transport
    }

    pub fn basis(&self, t: f64) -> Result<Operator> {
        (self.basis)(t)
    }

    fn basis_inverse(&self, t: f64) -> Result<Operator> {
        invert_checked(&self.basis(t)?, |cond| Error::SingularSeed { cond })
    }

    /// Matrix of `𝒰(t, s)` in this frame: `E(t)⁻¹ 𝒰(t, s) E(s)`.
    pub fn transport_matrix(&self, t: f64, s: f64) -> Result<Operator> {
        Ok(self.basis_inverse(t)? * self.transport.transport(t, s)? * self.basis(s)?)
    }

    /// Components of a fibre operator in this frame.
    pub fn components(&self, a: &Operator, t: f64) -> Result<Operator> {
        Ok(self.basis_inverse(t)? * a * self.basis(t)?)
    }

    /// `(Γ(t), H^m(t))` in this frame by central differences of the transport
    /// matrix in its second argument.
    pub fn connection(&self, t: f64, h: f64) -> Result<(Operator, Operator)> {
        self.transport.path().check_interior(t, h)?;
        let e_inv = self.basis_inverse(t)?;
        let forward = &e_inv * self.transport.transport(t, t + h)? * self.basis(t + h)?;
        let backward = &e_inv * self.transport.transport(t, t - h)? * self.basis(t - h)?;
        let gamma = scale(&(forward - backward), 0.5 / h);
        let hm = &gamma * C64::new(0.0, -self.transport.hbar());
        Ok((gamma, hm))
    }

    pub fn gamma(&self, t: f64, h: f64) -> Result<Operator> {
        Ok(self.connection(t, h)?.0)
    }

    pub fn hm(&self, t: f64, h: f64) -> Result<Operator> {
        Ok(self.connection(t, h)?.1)
    }

    /// `∂A^E/∂t - [A^E, Γ^E]` for the components `A^E` of the morphism in
    /// this frame.
    pub fn morphism_derivation(&self, field: &MorphismField, t: f64, h: f64) -> Result<Operator> {
        self.transport.path().check_interior(t, h)?;
        let gamma = self.gamma(t, h)?;
        let a = self.components(&field.value(t)?, t)?;
        let da = self.component_derivative(field, t, h)?;
        Ok(da - commutator_unchecked(&a, &gamma))
    }

    /// `∂A^E/∂t` by central differences of the components.
    pub fn component_derivative(&self, field: &MorphismField, t: f64, h: f64) -> Result<Operator> {
        if field.derivative.is_some() && self.is_atlas_frame {
            return field.derivative(t, h);
        }
        central_difference(|s| self.components(&field.value(s)?, s), t, h)
    }
}

/// The normal frame `E(t) = 𝒰(t, t0) E0` in which the transport matrix is the
/// identity and the connection and matrix-bundle Hamiltonian vanish.
pub fn normal_frame(transport: &EvolutionTransport, t0: f64, seed_basis: &Operator) -> Result<FrameField> {
    check_same_dim(transport.dim(), check_operator(seed_basis)?)?;
    transport.path().check(t0)?;
    invert_checked(seed_basis, |cond| Error::SingularSeed { cond })?;
    let tr = transport.clone();
    let seed = seed_basis.clone();
    Ok(FrameField::from_basis(transport, Arc::new(move |t| Ok(tr.transport(t, t0)? * &seed))))
}
