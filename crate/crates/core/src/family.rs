//! Time-parameterized operators.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linear::{check_dim, check_operator, check_same_dim, hermiticity_defect, scale, zeros, Operator, C64};

/// A fallible, shareable function of time.
pub type TimeFn<T> = Arc<dyn Fn(f64) -> Result<T> + Send + Sync>;

/// Central-difference step used when no analytic derivative is supplied.
pub const DEFAULT_DIFF_STEP: f64 = 1e-4;

/// How an [`OperatorFamily`] depends on time. Propagators pick their
/// integration scheme from this.
#[derive(Clone)]
pub enum FamilyKind {
    Constant(Operator),
    /// `values[k]` holds on `[breaks[k-1], breaks[k])`, with the first and
    /// last values extending to the ends of the domain.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<Operator> },
    Smooth(TimeFn<Operator>),
}

impl fmt::Debug for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKind::Constant(_) => f.write_str("Constant"),
            FamilyKind::PiecewiseConstant { breaks, .. } => write!(f, "PiecewiseConstant({} breaks)", breaks.len()),
            FamilyKind::Smooth(_) => f.write_str("Smooth"),
        }
    }
}

/// A map `t ↦ A(t)` on a closed time domain, optionally with an analytic
/// time derivative. Used both for Hamiltonians and for observables.
#[derive(Clone)]
pub struct OperatorFamily {
    dim: usize,
    kind: FamilyKind,
    derivative: Option<TimeFn<Operator>>,
    domain: (f64, f64),
}

impl fmt::Debug for OperatorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorFamily")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("analytic_derivative", &self.derivative.is_some())
            .field("domain", &self.domain)
            .finish()
    }
}

impl OperatorFamily {
    pub fn constant(op: Operator) -> Result<Self> {
        let dim = check_operator(&op)?;
        Ok(Self { dim, kind: FamilyKind::Constant(op), derivative: None, domain: (f64::NEG_INFINITY, f64::INFINITY) })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Self::constant(zeros(dim))
    }

    pub fn piecewise_constant(breaks: Vec<f64>, values: Vec<Operator>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} breaks need {} values, got {}",
                breaks.len(),
                breaks.len() + 1,
                values.len()
            )));
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("breaks must be finite and strictly increasing".into()));
        }
        let dim = check_operator(&values[0])?;
        for v in &values[1..] {
            check_same_dim(dim, check_operator(v)?)?;
        }
        Ok(Self {
            dim,
            kind: FamilyKind::PiecewiseConstant { breaks, values },
            derivative: None,
            domain: (f64::NEG_INFINITY, f64::INFINITY),
        })
    }

    pub fn smooth<F>(dim: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Operator + Send + Sync + 'static,
    {
        Self::try_smooth(dim, move |t| Ok(f(t)))
    }

    pub fn try_smooth<F>(dim: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<Operator> + Send + Sync + 'static,
    {
        check_dim(dim)?;
        Ok(Self {
            dim,
            kind: FamilyKind::Smooth(Arc::new(f)),
            derivative: None,
            domain: (f64::NEG_INFINITY, f64::INFINITY),
        })
    }

    pub fn with_derivative<F>(mut self, df: F) -> Self
    where
        F: Fn(f64) -> Operator + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(move |t| Ok(df(t))));
        self
    }

    pub fn with_try_derivative(mut self, df: TimeFn<Operator>) -> Self {
        self.derivative = Some(df);
        self
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidArgument(format!("empty domain [{lo}, {hi}]")));
        }
        self.domain = (lo, hi);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some() || !matches!(self.kind, FamilyKind::Smooth(_))
    }

    /// Breakpoints inside `[lo, hi]` where the family may jump.
    pub fn breaks_within(&self, lo: f64, hi: f64) -> Vec<f64> {
        match &self.kind {
            FamilyKind::PiecewiseConstant { breaks, .. } => breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect(),
            _ => Vec::new(),
        }
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.domain;
        if t.is_finite() && t >= lo && t <= hi {
            Ok(())
        } else {
            Err(Error::OutOfDomain { t, lo, hi })
        }
    }

    pub fn eval(&self, t: f64) -> Result<Operator> {
        self.check_time(t)?;
        let op = match &self.kind {
            FamilyKind::Constant(op) => op.clone(),
            FamilyKind::PiecewiseConstant { breaks, values } => {
                let k = breaks.partition_point(|b| *b <= t);
                values[k].clone()
            }
            FamilyKind::Smooth(f) => f(t)?,
        };
        check_same_dim(self.dim, op.nrows())?;
        check_same_dim(self.dim, op.ncols())?;
        Ok(op)
    }

    /// `∂A/∂t` at `t`: analytic when available, otherwise a central
    /// difference with step `h`. Piecewise-constant families have zero
    /// derivative away from their breaks.
    pub fn derivative(&self, t: f64, h: f64) -> Result<Operator> {
        self.check_time(t)?;
        if let Some(df) = &self.derivative {
            return df(t);
        }
        match &self.kind {
            FamilyKind::Constant(_) | FamilyKind::PiecewiseConstant { .. } => Ok(zeros(self.dim)),
            FamilyKind::Smooth(_) => {
                let forward = self.eval(t + h)?;
                let backward = self.eval(t - h)?;
                Ok(scale(&(forward - backward), 0.5 / h))
            }
        }
    }

    /// Pointwise sum; the derivative is analytic only when both parts are.
    pub fn sum(&self, other: &OperatorFamily) -> Result<OperatorFamily> {
        check_same_dim(self.dim, other.dim)?;
        let (a, b) = (self.clone(), other.clone());
        let lo = self.domain.0.max(other.domain.0);
        let hi = self.domain.1.min(other.domain.1);
        let mut out = match (&a.kind, &b.kind) {
            (FamilyKind::Constant(x), FamilyKind::Constant(y)) => OperatorFamily::constant(x + y)?,
            _ => {
                let (a2, b2) = (a.clone(), b.clone());
                OperatorFamily::try_smooth(self.dim, move |t| Ok(a2.eval(t)? + b2.eval(t)?))?
            }
        };
        if a.has_analytic_derivative() && b.has_analytic_derivative() && matches!(out.kind, FamilyKind::Smooth(_)) {
            out.derivative = Some(Arc::new(move |t| Ok(a.derivative(t, DEFAULT_DIFF_STEP)? + b.derivative(t, DEFAULT_DIFF_STEP)?)));
        }
        if lo.is_finite() || hi.is_finite() {
            out = out.with_domain(lo, hi)?;
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Result<OperatorFamily> {
        match &self.kind {
            FamilyKind::Constant(op) => OperatorFamily::constant(scale(op, s)),
            _ => {
                let (a, b) = (self.clone(), self.clone());
                let mut out = OperatorFamily::try_smooth(self.dim, move |t| Ok(scale(&a.eval(t)?, s)))?;
                out.domain = self.domain;
                if self.has_analytic_derivative() {
                    out.derivative = Some(Arc::new(move |t| Ok(scale(&b.derivative(t, DEFAULT_DIFF_STEP)?, s))));
                }
                Ok(out)
            }
        }
    }

    /// Largest `‖A(t) - A(t)†‖_F` over the given samples.
    pub fn hermiticity_defect(&self, samples: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &t in samples {
            worst = worst.max(hermiticity_defect(&self.eval(t)?));
        }
        Ok(worst)
    }
}

/// `(f(t + h) - f(t - h)) / 2h`.
pub fn central_difference<F>(f: F, t: f64, h: f64) -> Result<Operator>
where
    F: Fn(f64) -> Result<Operator>,
{
    Ok(scale(&(f(t + h)? - f(t - h)?), 0.5 / h))
}

/// Five-point central difference
/// `(-f(t + 2h) + 8 f(t + h) - 8 f(t - h) + f(t - 2h)) / 12h`, exact for
/// quartic polynomials.
pub fn five_point_difference<F>(f: F, t: f64, h: f64) -> Result<Operator>
where
    F: Fn(f64) -> Result<Operator>,
{
    let near = f(t + h)? - f(t - h)?;
    let far = f(t + 2.0 * h)? - f(t - 2.0 * h)?;
    Ok(scale(&(scale(&near, 8.0) - far), 1.0 / (12.0 * h)))
}

/// Multiplies a family by a scalar time function, with optional derivative
/// of the coefficient. Handy for building Pauli-series Hamiltonians.
pub fn modulated<F, G>(op: Operator, coeff: F, coeff_derivative: G) -> Result<OperatorFamily>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
    G: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let dim = check_operator(&op)?;
    let op2 = op.clone();
    Ok(OperatorFamily::smooth(dim, move |t| op.clone() * C64::new(coeff(t), 0.0))?
        .with_derivative(move |t| op2.clone() * C64::new(coeff_derivative(t), 0.0)))
}
