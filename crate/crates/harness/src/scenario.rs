//! Scenario documents.
//!
//! A scenario is a TOML document naming a Hamiltonian, an atlas, observables,
//! pictures and the checks to run. [`parse_scenario`] deserializes it, rejects
//! unknown keys, fills defaults and validates every invariant, so a
//! [`ScenarioSpec`] in hand is always runnable.
//!
//! ```toml
//! dimension = 2
//! seed = 7
//!
//! [hamiltonian]
//! kind = "pauli-series"
//! terms = [{ pauli = "z" }, { pauli = "x", coeff = { fn = "sin", amplitude = 0.3, frequency = 2.0 } }]
//!
//! [[observables]]
//! name = "sz"
//! operator = { kind = "pauli-series", terms = [{ pauli = "z" }] }
//! ```

use std::collections::BTreeSet;

use qbundle::linear::{hermiticity_defect, MAX_DIM};
use qbundle::{Operator, Tolerance, C64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::checks::REGISTRY;

pub const DEFAULT_HBAR: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_STEPS: usize = 200;
pub const MAX_STEPS: usize = 1_000_000;
/// Largest Hermiticity defect accepted for matrix entries, relative to `max(1, ‖A‖_F)`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Upper bound on the condition-number cap of an invertible atlas.
pub const MAX_COND_CAP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Validation { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub dimension: usize,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default)]
    pub time: TimeSpec,
    pub hamiltonian: OperatorSpec,
    #[serde(default)]
    pub atlas: AtlasSpec,
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    #[serde(default = "default_pictures")]
    pub pictures: Vec<PictureSpec>,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_t1")]
    pub t1: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self { t0: 0.0, t1: default_t1(), steps: DEFAULT_STEPS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tol")]
    pub abs: f64,
    #[serde(default)]
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { abs: DEFAULT_TOL, rel: 0.0 }
    }
}

impl Tolerances {
    pub fn tolerance(&self) -> Tolerance {
        Tolerance { abs: self.abs, rel: self.rel }
    }
}

/// Dense complex matrix given as real and (optional) imaginary parts, row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

/// Time-dependent Hermitian operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSpec {
    ConstantMatrix {
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<f64>>>,
    },
    /// `pieces[k]` holds on `[breaks[k-1], breaks[k])`.
    PiecewiseConstant { breaks: Vec<f64>, pieces: Vec<MatrixSpec> },
    /// `Σ c_k(t) P_k` with `P_k` a tensor product of Pauli matrices.
    PauliSeries { terms: Vec<PauliTerm> },
    /// Linear interpolation between samples at strictly increasing times.
    ExplicitSamples { times: Vec<f64>, samples: Vec<MatrixSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliTerm {
    /// Letters from `ixyz`, one per qubit; the dimension must be `2^len`.
    pub pauli: String,
    #[serde(default)]
    pub coeff: Coefficient,
}

/// Real coefficient functions of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fn", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Coefficient {
    Const {
        value: f64,
    },
    /// `amplitude · sin(frequency · t + phase)`
    Sin {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amplitude · cos(frequency · t + phase)`
    Cos {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `Σ coefficients[k] · t^k`
    Poly { coefficients: Vec<f64> },
}

impl Default for Coefficient {
    fn default() -> Self {
        Self::Const { value: 1.0 }
    }
}

impl Coefficient {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Self::Const { value } => value,
            Self::Sin { amplitude, frequency, phase } => amplitude * (frequency * t + phase).sin(),
            Self::Cos { amplitude, frequency, phase } => amplitude * (frequency * t + phase).cos(),
            Self::Poly { ref coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Self::Const { .. } => 0.0,
            Self::Sin { amplitude, frequency, phase } => amplitude * frequency * (frequency * t + phase).cos(),
            Self::Cos { amplitude, frequency, phase } => -amplitude * frequency * (frequency * t + phase).sin(),
            Self::Poly { ref coefficients } => {
                coefficients.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * t + k as f64 * c)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Const { .. } => true,
            Self::Sin { amplitude, frequency, .. } | Self::Cos { amplitude, frequency, .. } => {
                *amplitude == 0.0 || *frequency == 0.0
            }
            Self::Poly { coefficients } => coefficients.iter().skip(1).all(|&c| c == 0.0),
        }
    }

    fn parameters(&self) -> Vec<f64> {
        match self {
            Self::Const { value } => vec![*value],
            Self::Sin { amplitude, frequency, phase } | Self::Cos { amplitude, frequency, phase } => {
                vec![*amplitude, *frequency, *phase]
            }
            Self::Poly { coefficients } => coefficients.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AtlasSpec {
    #[default]
    Identity,
    UnitaryField {
        seed: u64,
    },
    InvertibleField {
        seed: u64,
        cond_cap: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Integral,
    NonIntegral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    /// Defaults to `A1`, `A2`, ... by position.
    #[serde(default)]
    pub name: String,
    pub operator: OperatorSpec,
    /// Expected outcome of the `integral` check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum PictureSpec {
    Schrodinger,
    Heisenberg,
    /// Random smooth unitary family drawn from `seed`.
    V { seed: u64 },
    /// `H0 = H(split)` and `H_I(t) = H(t) - H(split)`.
    Interaction { split: f64 },
}

impl PictureSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Schrodinger => "schrodinger".into(),
            Self::Heisenberg => "heisenberg".into(),
            Self::V { seed } => format!("v(seed={seed})"),
            Self::Interaction { split } => format!("interaction(split={split})"),
        }
    }
}

fn default_hbar() -> f64 {
    DEFAULT_HBAR
}

fn default_t1() -> f64 {
    1.0
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_pictures() -> Vec<PictureSpec> {
    vec![PictureSpec::Schrodinger, PictureSpec::Heisenberg]
}

fn default_checks() -> Vec<String> {
    REGISTRY.iter().map(|c| c.name.to_string()).collect()
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let spec: ScenarioSpec = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |span| line_column(text, span.start));
        ScenarioError::Parse { line, column, message: e.message().to_string() }
    })?;
    spec.validated()
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text.as_bytes()[..offset.min(text.len())];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = before.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
    (line, column)
}

impl ScenarioSpec {
    /// Checks every invariant and normalizes it: default observable
    /// names are filled and checks are put in registry order.
    pub fn validated(mut self) -> Result<Self, ScenarioError> {
        let dim = self.dimension;
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(ScenarioError::invalid("dimension", format!("must lie in 1..={MAX_DIM}, got {dim}")));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(ScenarioError::invalid("hbar", format!("must be positive and finite, got {}", self.hbar)));
        }
        let TimeSpec { t0, t1, steps } = self.time;
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(ScenarioError::invalid("time", format!("need finite t0 < t1, got [{t0}, {t1}]")));
        }
        if !(1..=MAX_STEPS).contains(&steps) {
            return Err(ScenarioError::invalid("time.steps", format!("must lie in 1..={MAX_STEPS}, got {steps}")));
        }
        validate_operator(&self.hamiltonian, "hamiltonian", dim, (t0, t1))?;
        match self.atlas {
            AtlasSpec::InvertibleField { cond_cap, .. } if !(cond_cap > 1.0 && cond_cap <= MAX_COND_CAP) => {
                return Err(ScenarioError::invalid(
                    "atlas.cond_cap",
                    format!("must lie in (1, {MAX_COND_CAP:e}], got {cond_cap}"),
                ));
            }
            _ => {}
        }
        let mut names = BTreeSet::new();
        for (i, obs) in self.observables.iter_mut().enumerate() {
            let field = format!("observables[{i}]");
            if obs.name.is_empty() {
                obs.name = format!("A{}", i + 1);
            }
            if !names.insert(obs.name.clone()) {
                return Err(ScenarioError::invalid(field, format!("duplicate observable name `{}`", obs.name)));
            }
            validate_operator(&obs.operator, &format!("{field}.operator"), dim, (t0, t1))?;
        }
        let mut labels = BTreeSet::new();
        for (i, picture) in self.pictures.iter().enumerate() {
            if let PictureSpec::Interaction { split } = picture {
                if !(t0..=t1).contains(split) {
                    return Err(ScenarioError::invalid(
                        format!("pictures[{i}].split"),
                        format!("split point {split} outside [{t0}, {t1}]"),
                    ));
                }
            }
            if !labels.insert(picture.label()) {
                return Err(ScenarioError::invalid(format!("pictures[{i}]"), format!("duplicate picture {}", picture.label())));
            }
        }
        let requested: BTreeSet<&str> = self.checks.iter().map(String::as_str).collect();
        if requested.len() != self.checks.len() {
            return Err(ScenarioError::invalid("checks", "duplicate check name"));
        }
        if let Some(unknown) = requested.iter().find(|name| !REGISTRY.iter().any(|c| c.name == **name)) {
            return Err(ScenarioError::invalid("checks", format!("unknown check `{unknown}` (see list-checks)")));
        }
        self.checks = REGISTRY.iter().filter(|c| requested.contains(c.name)).map(|c| c.name.to_string()).collect();
        let Tolerances { abs, rel } = self.tolerances;
        Tolerance::new(abs, rel).map_err(|e| ScenarioError::invalid("tolerances", e.to_string()))?;
        Ok(self)
    }

    /// Applies command-line overrides and revalidates.
    pub fn with_overrides(mut self, seed: Option<u64>, tol: Option<f64>, steps: Option<usize>) -> Result<Self, ScenarioError> {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        if let Some(tol) = tol {
            self.tolerances.abs = tol;
        }
        if let Some(steps) = steps {
            self.time.steps = steps;
        }
        self.validated()
    }

    /// SHA-256 of the canonical JSON form of the validated spec, in hex.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario specs always serialize");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerances.tolerance()
    }
}

fn validate_operator(spec: &OperatorSpec, field: &str, dim: usize, (t0, t1): (f64, f64)) -> Result<(), ScenarioError> {
    match spec {
        OperatorSpec::ConstantMatrix { re, im } => {
            validate_matrix(&MatrixSpec { re: re.clone(), im: im.clone() }, field, dim)?;
        }
        OperatorSpec::PiecewiseConstant { breaks, pieces } => {
            if pieces.len() != breaks.len() + 1 {
                return Err(ScenarioError::invalid(
                    format!("{field}.pieces"),
                    format!("{} breaks need {} pieces, got {}", breaks.len(), breaks.len() + 1, pieces.len()),
                ));
            }
            if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ScenarioError::invalid(format!("{field}.breaks"), "must be finite and strictly increasing"));
            }
            for (k, piece) in pieces.iter().enumerate() {
                validate_matrix(piece, &format!("{field}.pieces[{k}]"), dim)?;
            }
        }
        OperatorSpec::PauliSeries { terms } => {
            if terms.is_empty() {
                return Err(ScenarioError::invalid(format!("{field}.terms"), "needs at least one term"));
            }
            for (k, term) in terms.iter().enumerate() {
                let at = format!("{field}.terms[{k}]");
                if term.pauli.is_empty() || !term.pauli.chars().all(|c| "ixyzIXYZ".contains(c)) {
                    return Err(ScenarioError::invalid(
                        format!("{at}.pauli"),
                        format!("`{}` is not a string over i, x, y, z", term.pauli),
                    ));
                }
                let qubits = term.pauli.len();
                if qubits >= usize::BITS as usize || 1usize << qubits != dim {
                    return Err(ScenarioError::invalid(
                        format!("{at}.pauli"),
                        format!("dimension mismatch: `{}` acts on dimension 2^{qubits}, scenario has {dim}", term.pauli),
                    ));
                }
                if term.coeff.parameters().iter().any(|p| !p.is_finite()) {
                    return Err(ScenarioError::invalid(format!("{at}.coeff"), "coefficient parameters must be finite"));
                }
            }
        }
        OperatorSpec::ExplicitSamples { times, samples } => {
            if times.len() < 2 || samples.len() != times.len() {
                return Err(ScenarioError::invalid(
                    field,
                    format!("need at least two samples and one per time, got {} times and {} samples", times.len(), samples.len()),
                ));
            }
            if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ScenarioError::invalid(format!("{field}.times"), "must be finite and strictly increasing"));
            }
            if times[0] > t0 || times[times.len() - 1] < t1 {
                return Err(ScenarioError::invalid(
                    format!("{field}.times"),
                    format!("samples cover [{}, {}] but the scenario runs over [{t0}, {t1}]", times[0], times[times.len() - 1]),
                ));
            }
            for (k, sample) in samples.iter().enumerate() {
                validate_matrix(sample, &format!("{field}.samples[{k}]"), dim)?;
            }
        }
    }
    Ok(())
}

fn validate_matrix(m: &MatrixSpec, field: &str, dim: usize) -> Result<(), ScenarioError> {
    let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == dim && rows.iter().all(|r| r.len() == dim);
    let shape = |rows: &Vec<Vec<f64>>| format!("{}x{}", rows.len(), rows.first().map_or(0, Vec::len));
    if !shape_ok(&m.re) {
        return Err(ScenarioError::invalid(
            format!("{field}.re"),
            format!("dimension mismatch: expected {dim}x{dim}, found {}", shape(&m.re)),
        ));
    }
    if let Some(im) = &m.im {
        if !shape_ok(im) {
            return Err(ScenarioError::invalid(
                format!("{field}.im"),
                format!("dimension mismatch: expected {dim}x{dim}, found {}", shape(im)),
            ));
        }
    }
    let op = m.to_operator();
    if op.iter().any(|z| !z.is_finite()) {
        return Err(ScenarioError::invalid(field, "entries must be finite"));
    }
    let defect = hermiticity_defect(&op);
    if defect > HERMITIAN_TOL * op.norm().max(1.0) {
        return Err(ScenarioError::invalid(field, format!("operator is not Hermitian (deviation {defect:e})")));
    }
    Ok(())
}

impl MatrixSpec {
    /// Assumes the shape was validated.
    pub fn to_operator(&self) -> Operator {
        let dim = self.re.len();
        Operator::from_fn(dim, dim, |i, j| {
            C64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))
        })
    }
}
