//! Parametric primitive templates, their time-parameter grids and the
//! zero-threshold robustness table.

mod table;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stl::{Interval, StlFormula};

pub use table::{candidate_thresholds, precompute_table, Column, RobustnessTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemporalOp {
    Eventually,
    Always,
}

impl TemporalOp {
    pub fn dual(self) -> Self {
        match self {
            TemporalOp::Eventually => TemporalOp::Always,
            TemporalOp::Always => TemporalOp::Eventually,
        }
    }

    fn symbol(self) -> char {
        match self {
            TemporalOp::Eventually => 'F',
            TemporalOp::Always => 'G',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    Ge,
    Lt,
}

impl Relation {
    pub fn dual(self) -> Self {
        match self {
            Relation::Ge => Relation::Lt,
            Relation::Lt => Relation::Ge,
        }
    }

    /// `+1` for `>=`, `-1` for `<`: the robustness of an instantiated
    /// primitive is `tau - sign * pi`.
    pub fn sign(self) -> f64 {
        match self {
            Relation::Ge => 1.0,
            Relation::Lt => -1.0,
        }
    }
}

/// `Gamma (x_var ~ pi)` with a chain of one or two temporal operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimitiveTemplate {
    pub chain: Vec<TemporalOp>,
    pub relation: Relation,
    pub var: usize,
}

impl PrimitiveTemplate {
    pub fn new(chain: Vec<TemporalOp>, relation: Relation, var: usize) -> Self {
        debug_assert!(matches!(chain.len(), 1 | 2));
        PrimitiveTemplate { chain, relation, var }
    }

    /// Number of temporal operators `q`.
    pub fn arity(&self) -> usize {
        self.chain.len()
    }

    /// The template whose robustness is the negation of this one's.
    pub fn dual(&self) -> Self {
        PrimitiveTemplate {
            chain: self.chain.iter().map(|op| op.dual()).collect(),
            relation: self.relation.dual(),
            var: self.var,
        }
    }

    /// Robustness at threshold `pi` from the zero-threshold value `tau`.
    #[inline]
    pub fn shift(&self, tau: f64, pi: f64) -> f64 {
        tau - self.relation.sign() * pi
    }

    /// The concrete formula, operators applied outermost first.
    pub fn instantiate(&self, theta: &TimeParams, pi: f64) -> Result<StlFormula> {
        if theta.intervals.len() != self.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                got: theta.intervals.len(),
            });
        }
        let mut formula = match self.relation {
            Relation::Ge => StlFormula::ge(self.var, pi),
            Relation::Lt => StlFormula::lt(self.var, pi),
        };
        for (op, interval) in self.chain.iter().zip(&theta.intervals).rev() {
            formula = match op {
                TemporalOp::Eventually => StlFormula::eventually(*interval, formula),
                TemporalOp::Always => StlFormula::always(*interval, formula),
            };
        }
        Ok(formula)
    }
}

impl fmt::Display for PrimitiveTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.chain {
            write!(f, "{}", op.symbol())?;
        }
        let rel = match self.relation {
            Relation::Ge => ">=",
            Relation::Lt => "<",
        };
        write!(f, "(x{} {rel} pi)", self.var + 1)
    }
}

/// One valuation `(I_1, ..., I_q)` of a template's intervals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeParams {
    pub intervals: Vec<Interval>,
}

impl TimeParams {
    pub fn new(intervals: Vec<Interval>) -> Self {
        TimeParams { intervals }
    }

    pub fn arity(&self) -> usize {
        self.intervals.len()
    }

    /// Horizon of any primitive instantiated with these intervals.
    pub fn joint_horizon(&self) -> usize {
        self.intervals.iter().map(Interval::hi).sum()
    }
}

impl fmt::Display for TimeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.intervals {
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

/// Grid spacing used when none is configured: 1 up to `H = 64`, then `ceil(H / 64)`.
pub fn default_stride(horizon: usize) -> usize {
    if horizon <= 64 {
        1
    } else {
        horizon.div_ceil(64)
    }
}

/// All interval tuples with bounds on the stride grid, `a_p <= b_p`,
/// `sum b_p <= H` and optionally `b_p - a_p <= max_width`, in lexicographic
/// order of `(a_1, b_1, ..., a_q, b_q)`.
pub fn enumerate_time_params(q: usize, horizon: usize, stride: usize, max_width: Option<usize>) -> Vec<TimeParams> {
    assert!(stride >= 1, "stride must be positive");
    let grid: Vec<usize> = (0..=horizon).step_by(stride).collect();
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(q);
    extend_params(q, horizon, &grid, max_width, &mut prefix, &mut out);
    out
}

fn extend_params(
    remaining: usize,
    budget: usize,
    grid: &[usize],
    max_width: Option<usize>,
    prefix: &mut Vec<Interval>,
    out: &mut Vec<TimeParams>,
) {
    if remaining == 0 {
        out.push(TimeParams::new(prefix.clone()));
        return;
    }
    for (ia, &a) in grid.iter().enumerate() {
        for &b in &grid[ia..] {
            if b > budget {
                break;
            }
            if max_width.is_some_and(|w| b - a > w) {
                break;
            }
            prefix.push(Interval::new(a, b).expect("a <= b on a sorted grid"));
            extend_params(remaining - 1, budget - b, grid, max_width, prefix, out);
            prefix.pop();
        }
    }
}

/// Level 1: `{F, G} x {>=, <} x d` (4d templates). Level 2 lists the nested
/// chains `FG` and `GF` first, followed by the level-1 templates (8d).
pub fn build_primitive_set(level: usize, dims: usize) -> Vec<PrimitiveTemplate> {
    use TemporalOp::*;
    let mut chains: Vec<Vec<TemporalOp>> = Vec::new();
    if level >= 2 {
        chains.push(vec![Eventually, Always]);
        chains.push(vec![Always, Eventually]);
    }
    chains.push(vec![Eventually]);
    chains.push(vec![Always]);
    let mut out = Vec::with_capacity(chains.len() * 2 * dims);
    for chain in chains {
        for relation in [Relation::Ge, Relation::Lt] {
            for var in 0..dims {
                out.push(PrimitiveTemplate::new(chain.clone(), relation, var));
            }
        }
    }
    out
}

/// Keeps one template of every dual pair, the one rooted at `F`.
///
/// `F_theta (x >= pi)` has exactly the negated robustness of
/// `G_theta (x < pi)`, so learning one is the same as learning the other.
pub fn reduce_by_symmetry(templates: &[PrimitiveTemplate]) -> Result<Vec<PrimitiveTemplate>> {
    for t in templates {
        if !templates.contains(&t.dual()) {
            return Err(Error::NotClosedUnderNegation(t.to_string()));
        }
    }
    Ok(templates
        .iter()
        .filter(|t| t.chain[0] == TemporalOp::Eventually)
        .cloned()
        .collect())
}
