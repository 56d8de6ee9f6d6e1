//! Construction of the numerical system described by a validated scenario.

use std::sync::Arc;

use qbundle::bundle::{lift_observable, BundleAtlas, EvolutionTransport, MorphismField, ObserverPath};
use qbundle::linear::{identity, pauli_x, pauli_y, pauli_z};
use qbundle::pictures::{InteractionPicture, UnitaryFamily};
use qbundle::propagation::{HamiltonianFamily, IntegratorConfig, Propagator};
use qbundle::{Error, Operator, OperatorFamily, Result, Tolerance, C64};

use crate::scenario::{AtlasSpec, Expectation, OperatorSpec, PauliTerm, PictureSpec, ScenarioSpec};

/// Differencing step of every derivative-based check.
pub const DIFF_STEP: f64 = 1e-4;
/// Largest integrator step; `time.steps` can only refine it.
pub const MAX_INTEGRATOR_STEP: f64 = 1e-3;
/// Interior sample times used by derivative-based checks.
pub const DERIVATIVE_SAMPLES: usize = 9;
/// Samples keep this many differencing steps away from kinks of the inputs.
const KINK_CLEARANCE: f64 = 4.0;

pub struct Observable {
    pub name: String,
    pub family: OperatorFamily,
    pub field: MorphismField,
    pub expect: Option<Expectation>,
}

pub struct Picture {
    pub label: String,
    pub family: UnitaryFamily,
    /// Present for interaction pictures.
    pub interaction: Option<InteractionPicture>,
}

/// Everything a check needs, built once per run.
pub struct System {
    pub spec: ScenarioSpec,
    pub tol: Tolerance,
    pub hamiltonian: HamiltonianFamily,
    pub transport: EvolutionTransport,
    pub observables: Vec<Observable>,
    pub pictures: Vec<Picture>,
    /// `time.steps + 1` equally spaced times on `[t0, t1]`.
    pub grid: Vec<f64>,
    /// Interior times for differencing, clear of kinks.
    pub samples: Vec<f64>,
}

impl System {
    pub fn build(spec: &ScenarioSpec) -> Result<Self> {
        let dim = spec.dimension;
        let (t0, t1, steps) = (spec.time.t0, spec.time.t1, spec.time.steps);
        let cfg = IntegratorConfig::with_step(MAX_INTEGRATOR_STEP.min((t1 - t0) / steps as f64))?;
        let hamiltonian = HamiltonianFamily::new(operator_family(&spec.hamiltonian, dim)?, spec.hbar)?;
        let propagator = Arc::new(Propagator::new(hamiltonian.clone(), t0, t1, &cfg)?);
        let path = ObserverPath::new(t0, t1, "scenario")?;
        let atlas = match spec.atlas {
            AtlasSpec::Identity => BundleAtlas::identity(path.clone(), dim)?,
            AtlasSpec::UnitaryField { seed } => BundleAtlas::unitary_field(path.clone(), dim, seed)?,
            AtlasSpec::InvertibleField { seed, cond_cap } => BundleAtlas::invertible_field(path.clone(), dim, seed, cond_cap)?,
        };
        let transport = EvolutionTransport::new(atlas, Arc::clone(&propagator))?;
        let observables = spec
            .observables
            .iter()
            .map(|o| {
                let family = operator_family(&o.operator, dim)?;
                let field = lift_observable(transport.atlas(), &family)?;
                Ok(Observable { name: o.name.clone(), family, field, expect: o.expect })
            })
            .collect::<Result<Vec<_>>>()?;
        let pictures = spec
            .pictures
            .iter()
            .map(|p| {
                let (family, interaction) = match *p {
                    PictureSpec::Schrodinger => (UnitaryFamily::identity(dim, t0)?, None),
                    PictureSpec::Heisenberg => (UnitaryFamily::heisenberg(Arc::clone(&propagator), t0)?, None),
                    PictureSpec::V { seed } => (UnitaryFamily::random(dim, t0, seed, 1.0)?, None),
                    PictureSpec::Interaction { split } => {
                        let frozen = hamiltonian.eval(split)?;
                        let h0 = HamiltonianFamily::new(OperatorFamily::constant(frozen.clone())?, spec.hbar)?;
                        let rest = hamiltonian.family().sum(&OperatorFamily::constant(-frozen)?)?;
                        let hi = HamiltonianFamily::new(rest, spec.hbar)?;
                        let picture = InteractionPicture::new(h0, hi, t0, t1, t0, &cfg)?;
                        (picture.picture_family()?, Some(picture))
                    }
                };
                Ok(Picture { label: p.label(), family, interaction })
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = (0..=steps).map(|k| if k == steps { t1 } else { t0 + (t1 - t0) * k as f64 / steps as f64 }).collect();
        let mut kinks = kinks_of(&spec.hamiltonian);
        for o in &spec.observables {
            kinks.extend(kinks_of(&o.operator));
        }
        let samples = clear_of_kinks(path.interior_samples(DERIVATIVE_SAMPLES, 2.0 * DIFF_STEP), &kinks, (t0, t1));
        Ok(Self { spec: spec.clone(), tol: spec.tolerance(), hamiltonian, transport, observables, pictures, grid, samples })
    }

    pub fn propagator(&self) -> &Propagator {
        self.transport.propagator()
    }

    pub fn shared_propagator(&self) -> Arc<Propagator> {
        self.transport.shared_propagator()
    }

    pub fn dim(&self) -> usize {
        self.spec.dimension
    }

    pub fn t0(&self) -> f64 {
        self.spec.time.t0
    }

    pub fn t1(&self) -> f64 {
        self.spec.time.t1
    }

    /// Observable families, or the identity when the scenario lists none.
    pub fn observable_families(&self) -> Result<Vec<OperatorFamily>> {
        if self.observables.is_empty() {
            return Ok(vec![OperatorFamily::constant(identity(self.dim()))?]);
        }
        Ok(self.observables.iter().map(|o| o.family.clone()).collect())
    }

    /// Morphism fields, or the identity morphism when the scenario lists no observables.
    pub fn observable_fields(&self) -> Vec<MorphismField> {
        if self.observables.is_empty() {
            return vec![MorphismField::identity(self.transport.atlas().clone())];
        }
        self.observables.iter().map(|o| o.field.clone()).collect()
    }
}

fn kinks_of(spec: &OperatorSpec) -> Vec<f64> {
    match spec {
        OperatorSpec::PiecewiseConstant { breaks, .. } => breaks.clone(),
        OperatorSpec::ExplicitSamples { times, .. } => times.clone(),
        _ => Vec::new(),
    }
}

fn clear_of_kinks(samples: Vec<f64>, kinks: &[f64], (lo, hi): (f64, f64)) -> Vec<f64> {
    let clearance = KINK_CLEARANCE * DIFF_STEP;
    let interior = |t: f64| t - 2.0 * DIFF_STEP >= lo && t + 2.0 * DIFF_STEP <= hi;
    let clear = |t: f64| kinks.iter().all(|k| (t - k).abs() >= clearance);
    samples
        .into_iter()
        .filter_map(|t| {
            if clear(t) {
                return Some(t);
            }
            // step past the nearest kinks on either side
            let mut candidates: Vec<f64> =
                kinks.iter().flat_map(|k| [k + clearance, k - clearance]).filter(|&s| interior(s) && clear(s)).collect();
            candidates.sort_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()));
            candidates.first().copied()
        })
        .collect()
}

pub fn operator_family(spec: &OperatorSpec, dim: usize) -> Result<OperatorFamily> {
    match spec {
        OperatorSpec::ConstantMatrix { re, im } => {
            OperatorFamily::constant(crate::scenario::MatrixSpec { re: re.clone(), im: im.clone() }.to_operator())
        }
        OperatorSpec::PiecewiseConstant { breaks, pieces } => {
            OperatorFamily::piecewise_constant(breaks.clone(), pieces.iter().map(|p| p.to_operator()).collect())
        }
        OperatorSpec::PauliSeries { terms } => pauli_series(terms, dim),
        OperatorSpec::ExplicitSamples { times, samples } => {
            let times = Arc::new(times.clone());
            let values: Arc<Vec<Operator>> = Arc::new(samples.iter().map(|s| s.to_operator()).collect());
            let (lo, hi) = (times[0], times[times.len() - 1]);
            let (tv, vv) = (Arc::clone(&times), Arc::clone(&values));
            let eval = move |t: f64| -> Result<Operator> {
                let (k, w) = locate(&tv, t)?;
                Ok(&vv[k] * C64::new(1.0 - w, 0.0) + &vv[k + 1] * C64::new(w, 0.0))
            };
            let slope = move |t: f64| -> Result<Operator> {
                let (k, _) = locate(&times, t)?;
                Ok((&values[k + 1] - &values[k]) * C64::new(1.0 / (times[k + 1] - times[k]), 0.0))
            };
            Ok(OperatorFamily::try_smooth(dim, eval)?.with_try_derivative(Arc::new(slope)).with_domain(lo, hi)?)
        }
    }
}

/// Segment index `k` and weight `w` with `t = (1 - w) t_k + w t_{k+1}`.
fn locate(times: &[f64], t: f64) -> Result<(usize, f64)> {
    let (lo, hi) = (times[0], times[times.len() - 1]);
    if !(lo..=hi).contains(&t) {
        return Err(Error::OutOfDomain { t, lo, hi });
    }
    let k = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1) - 1;
    Ok((k, (t - times[k]) / (times[k + 1] - times[k])))
}

/// Tensor product of Pauli matrices, first letter acting on the most significant qubit.
pub fn pauli_string(letters: &str) -> Operator {
    letters.chars().fold(identity(1), |acc, c| {
        let factor = match c.to_ascii_lowercase() {
            'x' => pauli_x(),
            'y' => pauli_y(),
            'z' => pauli_z(),
            _ => identity(2),
        };
        acc.kronecker(&factor)
    })
}

fn pauli_series(terms: &[PauliTerm], dim: usize) -> Result<OperatorFamily> {
    let parts: Arc<Vec<(Operator, crate::scenario::Coefficient)>> =
        Arc::new(terms.iter().map(|term| (pauli_string(&term.pauli), term.coeff.clone())).collect());
    for (op, _) in parts.iter() {
        if op.nrows() != dim {
            return Err(Error::DimMismatch { expected: dim, found: op.nrows() });
        }
    }
    if parts.iter().all(|(_, c)| c.is_constant()) {
        let sum = parts.iter().fold(Operator::zeros(dim, dim), |acc, (op, c)| acc + op * C64::new(c.eval(0.0), 0.0));
        return OperatorFamily::constant(sum);
    }
    let d = Arc::clone(&parts);
    let family = OperatorFamily::smooth(dim, move |t| {
        parts.iter().fold(Operator::zeros(dim, dim), |acc, (op, c)| acc + op * C64::new(c.eval(t), 0.0))
    })?;
    Ok(family.with_derivative(move |t| {
        d.iter().fold(Operator::zeros(dim, dim), |acc, (op, c)| acc + op * C64::new(c.derivative(t), 0.0))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qbundle::linear::max_abs_diff;

    #[test]
    fn pauli_strings_are_kronecker_products() {
        let zx = pauli_string("zx");
        assert_eq!(zx.nrows(), 4);
        assert_eq!(zx[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(zx[(2, 3)], C64::new(-1.0, 0.0));
        assert_eq!(max_abs_diff(&pauli_string("I"), &identity(2)), 0.0);
    }

    #[test]
    fn explicit_samples_interpolate_linearly() {
        let spec = OperatorSpec::ExplicitSamples {
            times: vec![0.0, 1.0, 3.0],
            samples: [0.0, 2.0, 0.0]
                .iter()
                .map(|&v| crate::scenario::MatrixSpec { re: vec![vec![v]], im: None })
                .collect(),
        };
        let f = operator_family(&spec, 1).unwrap();
        assert_eq!(f.eval(0.5).unwrap()[(0, 0)].re, 1.0);
        assert_eq!(f.eval(2.0).unwrap()[(0, 0)].re, 1.0);
        assert_eq!(f.eval(3.0).unwrap()[(0, 0)].re, 0.0);
        assert_eq!(f.derivative(2.0, 1e-4).unwrap()[(0, 0)].re, -1.0);
        assert!(f.eval(3.5).is_err());
    }

    #[test]
    fn samples_step_around_kinks() {
        let moved = clear_of_kinks(vec![0.25, 0.5], &[0.5], (0.0, 1.0));
        assert_eq!(moved[0], 0.25);
        assert!((moved[1] - 0.5).abs() >= KINK_CLEARANCE * DIFF_STEP * 0.999);
    }
}
