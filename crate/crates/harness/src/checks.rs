//! The check registry.
//!
//! Each check evaluates one identity of the engine on the scenario's system
//! and reduces it to a single residual. Stochastic inputs come from a stream
//! labelled with the check name, so enabling or disabling one check never
//! changes the draws of another.

use std::sync::Arc;

use qbundle::bundle::{
    atlas_hamiltonian, connection_coefficients, fibre_mean_value, lift_state, morphism_derivation, normal_frame,
    section_derivation_residual, FrameField, MorphismField, StateSection,
};
use qbundle::linear::{identity, matrix_exponential, mean_value, scale};
use qbundle::motion::{certify, certify_in_frame, CertifyConfig, IntegralVerdict};
use qbundle::pictures::{
    bundle_v_eom_residuals, schrodinger_trajectory, to_v_picture, v_eom_residuals, v_propagator_residual,
};
use qbundle::propagation::schrodinger_residual;
use qbundle::{random, Operator, Result, StateVector, TimeFn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::report::VerdictRecord;
use crate::scenario::Expectation;
use crate::system::{System, DERIVATIVE_SAMPLES, DIFF_STEP};

pub struct CheckInfo {
    pub name: &'static str,
    pub formula: &'static str,
}

/// Random time triples drawn by the group-law checks.
const TRIPLES: usize = 16;
/// Random gauges per observable in `gauge-covariance`.
const GAUGES: usize = 4;

pub const REGISTRY: [CheckInfo; 19] = [
    CheckInfo { name: "unitarity", formula: "U(t,t0)† U(t,t0) = 1" },
    CheckInfo { name: "composition", formula: "U(t2,t1) U(t1,t0) = U(t2,t0), U(t,t) = 1" },
    CheckInfo { name: "inverse-law", formula: "U†(t1,t2) = U⁻¹(t1,t2) = U(t2,t1)" },
    CheckInfo { name: "schrodinger-equation", formula: "iħ dψ/dt = H(t) ψ" },
    CheckInfo { name: "heisenberg-equation", formula: "iħ dA^H/dt = iħ (∂A/∂t)^H + [A^H, H^H]" },
    CheckInfo {
        name: "bundle-heisenberg-equation",
        formula: "Heisenberg-picture state and morphism equations in the fibre metric, H^m = l⁻¹ H l - iħ l⁻¹ dl/dt",
    },
    CheckInfo { name: "transport-composition", formula: "𝒰(t,s) 𝒰(s,r) = 𝒰(t,r), 𝒰(t,t) = id, 𝒰 = l⁻¹(t) U(t,s) l(s)" },
    CheckInfo { name: "fibre-metric", formula: "⟨𝒰(t,s)Φ | 𝒰(t,s)Ψ⟩_t = ⟨Φ | Ψ⟩_s" },
    CheckInfo { name: "connection", formula: "H^m = -iħ Γ = l⁻¹ H l - iħ l⁻¹ dl/dt" },
    CheckInfo { name: "normal-frame", formula: "E(t) = 𝒰(t,t0) E(t0): transport matrix = 1, Γ = 0" },
    CheckInfo { name: "section-derivation", formula: "iħ dΨ/dt - H^m Ψ = 0 for Ψ(t) = 𝒰(t,s) Ψ(s)" },
    CheckInfo { name: "morphism-derivation", formula: "∂A/∂t - [A, Γ] = 0 for A(t) = 𝒰(t,s) A(s) 𝒰(s,t)" },
    CheckInfo { name: "picture-means", formula: "⟨ψ^V | A^V ψ^V⟩ = ⟨ψ | A ψ⟩ = ⟨Ψ | A Ψ⟩_fibre / ⟨Ψ | Ψ⟩_fibre" },
    CheckInfo {
        name: "v-picture-equations",
        formula: "iħ dψ^V/dt = (H^V - _VH^V) ψ^V, iħ dA^V/dt = iħ (∂A/∂t)^V + [_VH^V, A^V], iħ dU^V/dt = (H^V - _VH^V) U^V",
    },
    CheckInfo { name: "bundle-v-picture", formula: "V-picture state and morphism equations in the fibre metric" },
    CheckInfo { name: "interaction-splitting", formula: "U(t,t0) = U0(t,t0) U_I(t,t0)" },
    CheckInfo { name: "interaction-equations", formula: "iħ dψ^I/dt = H_I^I ψ^I, iħ dA^I/dt = iħ (∂A/∂t)^I + [H0^I, A^I]" },
    CheckInfo { name: "integral", formula: "∂A^m/∂t = [A^m, Γ]: five criteria, unanimous, matching expectations" },
    CheckInfo { name: "gauge-covariance", formula: "Lax verdict invariant under E → E W(t)⁻¹" },
];

pub fn info(name: &str) -> Option<&'static CheckInfo> {
    REGISTRY.iter().find(|c| c.name == name)
}

/// Result of one check before it is wrapped into a report record.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: Option<String>,
    pub verdicts: Vec<VerdictRecord>,
    pub series: Vec<(String, Vec<f64>)>,
}

impl Outcome {
    fn measured(system: &System, residual: f64) -> Self {
        let tol = system.tol;
        Self { residual, threshold: tol.bound(1.0), pass: tol.accepts(residual, 1.0), ..Self::default() }
    }

    /// Pass when no case out of those examined failed.
    fn counted(failures: usize, detail: String) -> Self {
        Self { residual: failures as f64, threshold: 0.0, pass: failures == 0, detail: Some(detail), ..Self::default() }
    }

    fn vacuous(system: &System, why: &str) -> Self {
        Self { detail: Some(why.into()), ..Self::measured(system, 0.0) }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = Some(detail);
        self
    }
}

pub fn run(name: &str, system: &System) -> Result<Outcome> {
    let mut rng = random::stream(system.spec.seed, name);
    match name {
        "unitarity" => unitarity(system),
        "composition" => composition(system, &mut rng),
        "inverse-law" => inverse_law(system, &mut rng),
        "schrodinger-equation" => schrodinger_equation(system, &mut rng),
        "heisenberg-equation" => heisenberg_equation(system),
        "bundle-heisenberg-equation" => bundle_heisenberg_equation(system, &mut rng),
        "transport-composition" => transport_composition(system, &mut rng),
        "fibre-metric" => fibre_metric(system, &mut rng),
        "connection" => connection(system),
        "normal-frame" => normal_frame_check(system, &mut rng),
        "section-derivation" => section_derivation(system, &mut rng),
        "morphism-derivation" => morphism_derivation_check(system, &mut rng),
        "picture-means" => picture_means(system, &mut rng),
        "v-picture-equations" => v_picture_equations(system, &mut rng),
        "bundle-v-picture" => bundle_v_picture(system, &mut rng),
        "interaction-splitting" => interaction_splitting(system),
        "interaction-equations" => interaction_equations(system, &mut rng),
        "integral" => integral(system),
        "gauge-covariance" => gauge_covariance(system, &mut rng),
        _ => Err(qbundle::Error::InvalidArgument(format!("unknown check `{name}`"))),
    }
}

fn time<R: Rng>(system: &System, rng: &mut R) -> f64 {
    rng.random_range(system.t0()..=system.t1())
}

fn trajectory(system: &System, rng: &mut ChaCha8Rng) -> Result<TimeFn<StateVector>> {
    schrodinger_trajectory(system.shared_propagator(), random::haar_state(rng, system.dim()), system.t0())
}

fn max_of(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    values.into_iter().try_fold(0.0f64, |acc, r| r.map(|x| if acc.is_nan() || x.is_nan() { f64::NAN } else { acc.max(x) }))
}

fn unitarity(system: &System) -> Result<Outcome> {
    let u = system.propagator();
    let defects: Vec<f64> = system
        .grid
        .iter()
        .map(|&t| Ok(qbundle::linear::unitarity_defect(&u.evolution(t, system.t0())?)))
        .collect::<Result<_>>()?;
    let worst = max_of(defects.iter().copied().map(Ok))?;
    let mut outcome = Outcome::measured(system, worst);
    outcome.series.push(("unitarity".into(), defects));
    Ok(outcome)
}

fn composition(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let u = system.propagator();
    let worst = max_of((0..TRIPLES).map(|_| {
        let (a, b, c) = (time(system, rng), time(system, rng), time(system, rng));
        let composed = u.evolution(c, b)? * u.evolution(b, a)?;
        let same = (u.evolution(b, b)? - identity(system.dim())).norm();
        Ok((composed - u.evolution(c, a)?).norm().max(same))
    }))?;
    Ok(Outcome::measured(system, worst))
}

fn inverse_law(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let u = system.propagator();
    let worst = max_of((0..TRIPLES).map(|_| {
        let (t1, t2) = (time(system, rng), time(system, rng));
        let forward = u.evolution(t1, t2)?;
        let backward = u.evolution(t2, t1)?;
        let inverse = forward.clone().try_inverse().ok_or(qbundle::Error::NonFinite("propagator inverse"))?;
        Ok((forward.adjoint() - &backward).norm().max((inverse - backward).norm()))
    }))?;
    Ok(Outcome::measured(system, worst))
}

fn schrodinger_equation(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let psi = trajectory(system, rng)?;
    let r = schrodinger_residual(&system.hamiltonian, |t| psi(t), &system.samples, DIFF_STEP)?;
    Ok(Outcome::measured(system, r))
}

fn heisenberg_equation(system: &System) -> Result<Outcome> {
    if system.observables.is_empty() {
        return Ok(Outcome::vacuous(system, "no observables"));
    }
    let u = system.propagator();
    let worst = max_of(system.observables.iter().flat_map(|o| {
        system
            .samples
            .iter()
            .map(move |&t| qbundle::pictures::heisenberg_eom_residual(u, &o.family, t, system.t0(), DIFF_STEP))
    }))?;
    Ok(Outcome::measured(system, worst))
}

fn bundle_heisenberg_equation(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let v = qbundle::pictures::UnitaryFamily::heisenberg(system.shared_propagator(), system.t0())?;
    let section = StateSection::transported(&system.transport, random::haar_state(rng, system.dim()), system.t0())?;
    let fields = system.observable_fields();
    let mut worst = 0.0f64;
    for field in &fields {
        for &t in &system.samples {
            let (s, o) = bundle_v_eom_residuals(&system.transport, &v, &section, field, t, DIFF_STEP)?;
            worst = max_of([Ok(worst), Ok(s), Ok(o)])?;
        }
    }
    Ok(Outcome::measured(system, worst))
}

fn transport_composition(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let tr = &system.transport;
    let worst = max_of((0..TRIPLES).map(|_| {
        let (r, s, t) = (time(system, rng), time(system, rng), time(system, rng));
        let composed = tr.transport(t, s)? * tr.transport(s, r)?;
        let direct = tr.transport(t, r)?;
        let same = (tr.transport(s, s)? - identity(system.dim())).norm();
        Ok((composed - &direct).norm().max(same) / direct.norm().max(1.0))
    }))?;
    Ok(Outcome::measured(system, worst))
}

fn fibre_metric(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let tr = &system.transport;
    let atlas = tr.atlas();
    let worst = max_of((0..TRIPLES).map(|_| {
        let (s, t) = (time(system, rng), time(system, rng));
        let phi = atlas.to_fibre(s, &random::haar_state(rng, system.dim()))?;
        let psi = atlas.to_fibre(s, &random::haar_state(rng, system.dim()))?;
        let carried = tr.transport(t, s)?;
        let before = atlas.fibre_inner(s, &phi, &psi)?;
        let after = atlas.fibre_inner(t, &(&carried * &phi), &(&carried * &psi))?;
        Ok((after - before).norm())
    }))?;
    Ok(Outcome::measured(system, worst))
}

fn connection(system: &System) -> Result<Outcome> {
    let tr = &system.transport;
    let worst = max_of(system.samples.iter().map(|&t| {
        let (_, hm) = connection_coefficients(tr, t, DIFF_STEP)?;
        let formula = atlas_hamiltonian(tr, t, DIFF_STEP)?;
        Ok((&hm - formula).norm() / hm.norm().max(1.0))
    }))?;
    Ok(Outcome::measured(system, worst))
}

fn normal_frame_check(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let seed = random::well_conditioned(rng, system.dim(), 10.0);
    let frame = normal_frame(&system.transport, system.t0(), &seed)?;
    let flat = max_of(
        system
            .grid
            .iter()
            .map(|&t| Ok((frame.transport_matrix(t, system.t0())? - identity(system.dim())).norm())),
    )?;
    let gamma = max_of(system.samples.iter().map(|&t| Ok(frame.gamma(t, DIFF_STEP)?.norm())))?;
    Ok(Outcome::measured(system, flat.max(gamma))
        .with_detail(format!("transport matrix deviation {flat:.3e}, connection {gamma:.3e}")))
}

fn section_derivation(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let s = time(system, rng);
    let value = system.transport.atlas().to_fibre(s, &random::haar_state(rng, system.dim()))?;
    let section = StateSection::transported(&system.transport, value, s)?;
    let r = section_derivation_residual(&system.transport, &section, &system.samples, DIFF_STEP)?;
    Ok(Outcome::measured(system, r))
}

fn morphism_derivation_check(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let s = time(system, rng);
    let a = random::ginibre(rng, system.dim());
    let scale = a.norm().max(1.0);
    let field = MorphismField::transported(&system.transport, a, s)?;
    let worst = max_of(
        system
            .samples
            .iter()
            .map(|&t| Ok(morphism_derivation(&system.transport, &field, t, DIFF_STEP)?.norm() / scale)),
    )?;
    Ok(Outcome::measured(system, worst))
}

/// Mean values in every picture and in the fibre metric, compared with the
/// Schrödinger mean on the time grid. Also emits the plotted series.
fn picture_means(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    if system.observables.is_empty() {
        return Ok(Outcome::vacuous(system, "no observables"));
    }
    let psi = trajectory(system, rng)?;
    let traj = Arc::clone(&psi);
    let section = lift_state(system.transport.atlas(), move |t| traj(t));
    let mut worst = 0.0f64;
    let mut series = Vec::new();
    for o in &system.observables {
        let mut columns: Vec<(String, Vec<f64>)> =
            std::iter::once(format!("{}@schrodinger", o.name)).chain([format!("{}@fibre", o.name)]).map(|n| (n, Vec::new())).collect();
        columns.extend(system.pictures.iter().filter(|p| p.label != "schrodinger").map(|p| (format!("{}@{}", o.name, p.label), Vec::new())));
        for &t in &system.grid {
            let state = psi(t)?;
            let a = o.family.eval(t)?;
            let reference = mean_value(&a, &state)?;
            let fibre = fibre_mean_value(&o.field, &section, t)?;
            let mut values = vec![reference, fibre];
            for p in system.pictures.iter().filter(|p| p.label != "schrodinger") {
                let (pv, av) = to_v_picture(&p.family, &state, &a, t)?;
                values.push(mean_value(&av, &pv)?);
            }
            for (column, value) in columns.iter_mut().zip(&values) {
                worst = max_of([Ok(worst), Ok((value - reference).norm())])?;
                column.1.push(value.re);
            }
        }
        series.extend(columns);
    }
    let mut outcome = Outcome::measured(system, worst);
    outcome.series = series;
    Ok(outcome)
}

fn v_picture_equations(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let psi = trajectory(system, rng)?;
    let families = system.observable_families()?;
    let u = system.propagator();
    let mut worst = 0.0f64;
    for p in &system.pictures {
        for &t in &system.samples {
            worst = max_of([Ok(worst), v_propagator_residual(&p.family, u, t, system.t0(), DIFF_STEP)])?;
            for a in &families {
                let (s, o) = v_eom_residuals(&p.family, &system.hamiltonian, |x| psi(x), a, t, DIFF_STEP)?;
                worst = max_of([Ok(worst), Ok(s), Ok(o)])?;
            }
        }
    }
    Ok(Outcome::measured(system, worst))
}

fn bundle_v_picture(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let psi = trajectory(system, rng)?;
    let families = system.observable_families()?;
    let fields = system.observable_fields();
    let traj = Arc::clone(&psi);
    let section = lift_state(system.transport.atlas(), move |t| traj(t));
    let (mut worst, mut gap) = (0.0f64, 0.0f64);
    for p in &system.pictures {
        for &t in &system.samples {
            for (a, field) in families.iter().zip(&fields) {
                let (bs, bo) = bundle_v_eom_residuals(&system.transport, &p.family, &section, field, t, DIFF_STEP)?;
                let (hs, ho) = v_eom_residuals(&p.family, &system.hamiltonian, |x| psi(x), a, t, DIFF_STEP)?;
                worst = max_of([Ok(worst), Ok(bs), Ok(bo)])?;
                gap = max_of([Ok(gap), Ok((bs - hs).abs()), Ok((bo - ho).abs())])?;
            }
        }
    }
    Ok(Outcome::measured(system, worst).with_detail(format!("largest gap to the Hilbert-space residuals {gap:.3e}")))
}

fn interaction_splitting(system: &System) -> Result<Outcome> {
    let pictures: Vec<_> = system.pictures.iter().filter_map(|p| p.interaction.as_ref()).collect();
    if pictures.is_empty() {
        return Ok(Outcome::vacuous(system, "no interaction picture"));
    }
    let worst = max_of(pictures.iter().flat_map(|ip| system.grid.iter().map(move |&t| ip.splitting_residual(t))))?;
    Ok(Outcome::measured(system, worst))
}

fn interaction_equations(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let pictures: Vec<_> = system.pictures.iter().filter_map(|p| p.interaction.as_ref()).collect();
    if pictures.is_empty() {
        return Ok(Outcome::vacuous(system, "no interaction picture"));
    }
    let psi0 = random::haar_state(rng, system.dim());
    let families = system.observable_families()?;
    let mut worst = 0.0f64;
    for ip in pictures {
        let full = Arc::new(ip.full_propagator().clone());
        let psi = schrodinger_trajectory(full, psi0.clone(), system.t0())?;
        for &t in &system.samples {
            for a in &families {
                let (s, o) = ip.eom_residuals(|x| psi(x), a, t, DIFF_STEP)?;
                worst = max_of([Ok(worst), Ok(s), Ok(o)])?;
            }
        }
    }
    Ok(Outcome::measured(system, worst))
}

fn certify_config(system: &System) -> CertifyConfig {
    CertifyConfig {
        tol: system.tol,
        step: DIFF_STEP,
        samples: DERIVATIVE_SAMPLES,
        seed: random::derive_seed(system.spec.seed, "integral/states"),
    }
}

fn verdict_record(observable: &str, frame: &str, v: &IntegralVerdict) -> VerdictRecord {
    VerdictRecord {
        observable: observable.into(),
        frame: frame.into(),
        mean_constancy: v.mean_constancy_residual,
        commutation: v.commutation_residual,
        lax: v.lax_residual,
        derivation: v.derivation_residual,
        heisenberg_constancy: v.heisenberg_constancy_residual,
        is_integral: v.is_integral,
        unanimous: v.is_unanimous(),
    }
}

fn integral(system: &System) -> Result<Outcome> {
    if system.observables.is_empty() {
        return Ok(Outcome::counted(0, "no observables".into()));
    }
    let cfg = certify_config(system);
    let mut verdicts = Vec::new();
    let mut problems = Vec::new();
    for o in &system.observables {
        let v = certify(&system.transport, &o.field, &cfg)?;
        if !v.is_unanimous() {
            problems.push(format!("{}: criteria disagree", o.name));
        }
        let expected = o.expect.map(|e| e == Expectation::Integral);
        if expected.is_some_and(|e| e != v.is_integral) {
            problems.push(format!("{}: expected is_integral = {}", o.name, !v.is_integral));
        }
        verdicts.push(verdict_record(&o.name, "atlas", &v));
    }
    let summary = verdicts
        .iter()
        .map(|v| format!("{} {}", v.observable, if v.is_integral { "is an integral" } else { "is not an integral" }))
        .collect::<Vec<_>>()
        .join("; ");
    let detail = if problems.is_empty() { summary } else { problems.join("; ") };
    let mut outcome = Outcome::counted(problems.len(), detail);
    outcome.verdicts = verdicts;
    Ok(outcome)
}

fn random_gauge(rng: &mut ChaCha8Rng, dim: usize) -> TimeFn<Operator> {
    let w0 = random::well_conditioned(rng, dim, 10.0);
    let b = random::hermitian(rng, dim, 0.5);
    let nu: f64 = rng.random_range(0.5..2.0);
    Arc::new(move |t| Ok(&w0 * matrix_exponential(&scale(&b, (nu * t).sin()))?))
}

fn gauge_covariance(system: &System, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    if system.observables.is_empty() {
        return Ok(Outcome::counted(0, "no observables".into()));
    }
    let cfg = certify_config(system);
    let atlas_frame = FrameField::atlas_frame(&system.transport);
    let mut flips = 0;
    for o in &system.observables {
        let reference = certify_in_frame(&atlas_frame, &o.field, &cfg)?.is_integral;
        for _ in 0..GAUGES {
            let frame = atlas_frame.regauged(random_gauge(rng, system.dim()));
            flips += usize::from(certify_in_frame(&frame, &o.field, &cfg)?.is_integral != reference);
        }
    }
    Ok(Outcome::counted(flips, format!("{flips} verdict changes over {} regauged frames", GAUGES * system.observables.len())))
}
