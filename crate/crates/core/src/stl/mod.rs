//! Discrete-time Signal Temporal Logic.
//!
//! Formulae are evaluated over finite, uniformly sampled, multi-dimensional
//! traces. Both the Boolean semantics and the quantitative robustness are
//! provided; they agree in sign whenever the robustness is non-zero.
//!
//! Predicates are coordinate projections `x_j >= pi`. A strict predicate
//! `x_j < pi` is represented as the negation of `x_j >= pi`, so the robustness
//! recursion has a single predicate case.

mod text;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use text::{format_formula, format_threshold, parse_formula};

/// A finite discrete-time trace `s : [0, H] -> R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    dims: usize,
    /// Row-major, `(H + 1) * dims` values.
    values: Vec<f64>,
}

impl Signal {
    /// Builds a signal from one row per time-step.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dims = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidSignal("a signal needs at least one time-step".into()))?;
        let mut values = Vec::with_capacity(rows.len() * dims);
        for (k, row) in rows.into_iter().enumerate() {
            if row.len() != dims {
                return Err(Error::InvalidSignal(format!(
                    "time-step {k} has {} values, expected {dims}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        Self::from_flat(values, dims)
    }

    /// Builds a one-dimensional signal.
    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::from_flat(values, 1)
    }

    pub fn from_flat(values: Vec<f64>, dims: usize) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidSignal("a signal needs at least one dimension".into()));
        }
        if values.is_empty() || !values.len().is_multiple_of(dims) {
            return Err(Error::InvalidSignal(format!(
                "{} values cannot be arranged into rows of {dims}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "non-finite value at time-step {}",
                pos / dims
            )));
        }
        Ok(Signal { dims, values })
    }

    /// The last time-step index `H`.
    pub fn horizon(&self) -> usize {
        self.len() - 1
    }

    /// Number of time-steps, `H + 1`.
    pub fn len(&self) -> usize {
        self.values.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    #[inline]
    pub fn value(&self, k: usize, var: usize) -> f64 {
        self.values[k * self.dims + var]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dims..(k + 1) * self.dims]
    }

    /// Values of one coordinate over time.
    pub fn channel(&self, var: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(var).step_by(self.dims).copied()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }
}

/// A closed integer time interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    lo: usize,
    hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// STL abstract syntax.
///
/// `var` indices are zero-based; the text form prints them as `x1, x2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum StlFormula {
    True,
    /// `x_var >= threshold`
    Predicate {
        var: usize,
        threshold: f64,
    },
    Not(Box<StlFormula>),
    And(Box<StlFormula>, Box<StlFormula>),
    Or(Box<StlFormula>, Box<StlFormula>),
    Eventually(Interval, Box<StlFormula>),
    Always(Interval, Box<StlFormula>),
}

impl StlFormula {
    /// `x_var >= threshold`
    pub fn ge(var: usize, threshold: f64) -> Self {
        StlFormula::Predicate { var, threshold }
    }

    /// `x_var < threshold`, stored as `!(x_var >= threshold)`.
    pub fn lt(var: usize, threshold: f64) -> Self {
        StlFormula::ge(var, threshold).negate()
    }

    pub fn negate(self) -> Self {
        StlFormula::Not(Box::new(self))
    }

    pub fn and(self, other: StlFormula) -> Self {
        StlFormula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: StlFormula) -> Self {
        StlFormula::Or(Box::new(self), Box::new(other))
    }

    pub fn eventually(interval: Interval, body: StlFormula) -> Self {
        StlFormula::Eventually(interval, Box::new(body))
    }

    pub fn always(interval: Interval, body: StlFormula) -> Self {
        StlFormula::Always(interval, Box::new(body))
    }

    /// Number of future time-steps needed to evaluate the formula.
    pub fn horizon(&self) -> usize {
        match self {
            StlFormula::True | StlFormula::Predicate { .. } => 0,
            StlFormula::Not(f) => f.horizon(),
            StlFormula::And(a, b) | StlFormula::Or(a, b) => a.horizon().max(b.horizon()),
            StlFormula::Eventually(i, f) | StlFormula::Always(i, f) => i.hi + f.horizon(),
        }
    }

    /// Largest predicate index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            StlFormula::True => None,
            StlFormula::Predicate { var, .. } => Some(*var),
            StlFormula::Not(f) | StlFormula::Eventually(_, f) | StlFormula::Always(_, f) => f.max_var(),
            StlFormula::And(a, b) | StlFormula::Or(a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Negation normal form: negations only directly above predicates or `TRUE`.
    pub fn nnf(&self) -> StlFormula {
        self.nnf_signed(false)
    }

    fn nnf_signed(&self, negated: bool) -> StlFormula {
        use StlFormula::*;
        match (self, negated) {
            (True, false) => True,
            (True, true) => True.negate(),
            (Predicate { .. }, false) => self.clone(),
            (Predicate { .. }, true) => self.clone().negate(),
            (Not(f), neg) => f.nnf_signed(!neg),
            (And(a, b), false) => a.nnf_signed(false).and(b.nnf_signed(false)),
            (And(a, b), true) => a.nnf_signed(true).or(b.nnf_signed(true)),
            (Or(a, b), false) => a.nnf_signed(false).or(b.nnf_signed(false)),
            (Or(a, b), true) => a.nnf_signed(true).and(b.nnf_signed(true)),
            (Eventually(i, f), false) => StlFormula::eventually(*i, f.nnf_signed(false)),
            (Eventually(i, f), true) => StlFormula::always(*i, f.nnf_signed(true)),
            (Always(i, f), false) => StlFormula::always(*i, f.nnf_signed(false)),
            (Always(i, f), true) => StlFormula::eventually(*i, f.nnf_signed(true)),
        }
    }

    fn check_horizon(&self, signal: &Signal, k: usize) -> Result<()> {
        let required = k + self.horizon();
        if required > signal.horizon() {
            return Err(Error::Horizon {
                k,
                required,
                available: signal.horizon(),
            });
        }
        if let Some(var) = self.max_var() {
            if var >= signal.dims() {
                return Err(Error::InvalidSignal(format!(
                    "formula references x{} but the signal has {} dimension(s)",
                    var + 1,
                    signal.dims()
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for StlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_formula(self))
    }
}

impl std::str::FromStr for StlFormula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_formula(s)
    }
}

/// Quantitative robustness `rho(s, phi, k)`.
///
/// `TRUE` has robustness `+inf`, the supremum of all predicate robustness
/// values.
pub fn robustness(signal: &Signal, formula: &StlFormula, k: usize) -> Result<f64> {
    formula.check_horizon(signal, k)?;
    Ok(rho(signal, formula, k))
}

/// Boolean satisfaction `(s, k) |= phi`. Predicates use the non-strict `>=`.
pub fn satisfies(signal: &Signal, formula: &StlFormula, k: usize) -> Result<bool> {
    formula.check_horizon(signal, k)?;
    Ok(sat(signal, formula, k))
}

/// Robustness without the horizon check. Callers must guarantee that
/// `k + formula.horizon() <= signal.horizon()`.
pub(crate) fn rho(signal: &Signal, formula: &StlFormula, k: usize) -> f64 {
    match formula {
        StlFormula::True => f64::INFINITY,
        StlFormula::Predicate { var, threshold } => signal.value(k, *var) - threshold,
        StlFormula::Not(f) => -rho(signal, f, k),
        StlFormula::And(a, b) => rho(signal, a, k).min(rho(signal, b, k)),
        StlFormula::Or(a, b) => rho(signal, a, k).max(rho(signal, b, k)),
        StlFormula::Eventually(i, f) => (k + i.lo..=k + i.hi)
            .map(|t| rho(signal, f, t))
            .fold(f64::NEG_INFINITY, f64::max),
        StlFormula::Always(i, f) => (k + i.lo..=k + i.hi)
            .map(|t| rho(signal, f, t))
            .fold(f64::INFINITY, f64::min),
    }
}

pub(crate) fn sat(signal: &Signal, formula: &StlFormula, k: usize) -> bool {
    match formula {
        StlFormula::True => true,
        StlFormula::Predicate { var, threshold } => signal.value(k, *var) >= *threshold,
        StlFormula::Not(f) => !sat(signal, f, k),
        StlFormula::And(a, b) => sat(signal, a, k) && sat(signal, b, k),
        StlFormula::Or(a, b) => sat(signal, a, k) || sat(signal, b, k),
        StlFormula::Eventually(i, f) => (k + i.lo..=k + i.hi).any(|t| sat(signal, f, t)),
        StlFormula::Always(i, f) => (k + i.lo..=k + i.hi).all(|t| sat(signal, f, t)),
    }
}
