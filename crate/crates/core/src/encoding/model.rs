use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::problem::InferenceProblem;
use crate::error::{Error, Result};

/// Margin forcing strictly negative robustness on the violated side.
pub const EPSILON: f64 = 1e-6;
/// Feasibility tolerance for continuous rows.
pub const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintTag {
    Flow,
    Node,
    TimeWindow,
    ClassSink,
    RhoLink,
    BigM,
    RouteLeft,
    RouteRight,
    Linearization,
    /// Not a row: a binary variable with a fractional value.
    Integrality,
    /// Not a row: a variable outside its bounds.
    Bounds,
}

impl ConstraintTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintTag::Flow => "flow",
            ConstraintTag::Node => "node",
            ConstraintTag::TimeWindow => "time-window",
            ConstraintTag::ClassSink => "class-sink",
            ConstraintTag::RhoLink => "rho-link",
            ConstraintTag::BigM => "big-M",
            ConstraintTag::RouteLeft => "route-left",
            ConstraintTag::RouteRight => "route-right",
            ConstraintTag::Linearization => "linearization",
            ConstraintTag::Integrality => "integrality",
            ConstraintTag::Bounds => "bounds",
        }
    }
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarKind {
    Binary,
    Continuous { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub tag: ConstraintTag,
    pub node: Option<usize>,
    pub sample: Option<usize>,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Index arithmetic for the variable blocks, in declaration order.
#[derive(Debug, Clone, Copy)]
struct Layout {
    samples: usize,
    nodes: usize,
    internal: usize,
    templates: usize,
    thetas: usize,
    classes: usize,
}

impl Layout {
    fn z_s(&self, i: usize) -> usize {
        i
    }
    fn z(&self, i: usize, n: usize) -> usize {
        self.samples + i * self.nodes + (n - 1)
    }
    fn z_t(&self, i: usize, n: usize) -> usize {
        self.samples * (1 + self.nodes) + i * self.nodes + (n - 1)
    }
    fn b_base(&self) -> usize {
        self.samples * (1 + 2 * self.nodes)
    }
    fn b(&self, n: usize, psi: usize) -> usize {
        self.b_base() + (n - 1) * self.templates + psi
    }
    fn w_base(&self) -> usize {
        self.b_base() + self.internal * self.templates
    }
    fn w(&self, n: usize, c: usize) -> usize {
        self.w_base() + (n - 1) * self.classes + (c - 1)
    }
    fn xi_base(&self) -> usize {
        self.w_base() + self.nodes * self.classes
    }
    fn xi(&self, n: usize, theta: usize) -> usize {
        self.xi_base() + (n - 1) * self.thetas + theta
    }
    fn per_sample_node_template(&self) -> usize {
        self.samples * self.internal * self.templates
    }
    fn y_base(&self) -> usize {
        self.xi_base() + self.internal * self.thetas
    }
    fn y(&self, i: usize, n: usize, psi: usize) -> usize {
        self.y_base() + (i * self.internal + (n - 1)) * self.templates + psi
    }
    fn kappa(&self, i: usize, n: usize, psi: usize) -> usize {
        self.y(i, n, psi) + self.per_sample_node_template()
    }
    fn pi_base(&self) -> usize {
        self.y_base() + 2 * self.per_sample_node_template()
    }
    fn pi(&self, n: usize) -> usize {
        self.pi_base() + (n - 1)
    }
    fn rho(&self, i: usize, n: usize, psi: usize) -> usize {
        self.pi_base() + self.internal + (i * self.internal + (n - 1)) * self.templates + psi
    }
    fn total(&self) -> usize {
        self.pi_base() + self.internal + self.per_sample_node_template()
    }
}

/// Variable names used in the LP export and in assignments.
pub mod names {
    pub fn z_s(i: usize) -> String {
        format!("zs_{i}")
    }
    pub fn z(i: usize, n: usize) -> String {
        format!("z_{i}_{n}")
    }
    pub fn z_t(i: usize, n: usize) -> String {
        format!("zt_{i}_{n}")
    }
    pub fn b(n: usize, psi: usize) -> String {
        format!("b_{n}_{psi}")
    }
    pub fn w(n: usize, c: usize) -> String {
        format!("w_{n}_{c}")
    }
    pub fn xi(n: usize, theta: usize) -> String {
        format!("xi_{n}_{theta}")
    }
    pub fn y(i: usize, n: usize, psi: usize) -> String {
        format!("y_{i}_{n}_{psi}")
    }
    pub fn kappa(i: usize, n: usize, psi: usize) -> String {
        format!("k_{i}_{n}_{psi}")
    }
    pub fn pi(n: usize) -> String {
        format!("pi_{n}")
    }
    pub fn rho(i: usize, n: usize, psi: usize) -> String {
        format!("rho_{i}_{n}_{psi}")
    }
}

/// The mixed-integer program for one inference problem. Variables are binary
/// except the thresholds `pi_n` and the robustness values `rho`.
#[derive(Debug, Clone)]
pub struct MilpModel {
    variables: Vec<Variable>,
    index: HashMap<String, usize>,
    constraints: Vec<Constraint>,
    objective: Vec<(usize, f64)>,
    big_m: f64,
    lambda: f64,
}

/// Variable values by name.
pub type Assignment = HashMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub tag: ConstraintTag,
    pub node: Option<usize>,
    pub sample: Option<usize>,
    /// Row index, or the variable name for integrality and bound violations.
    pub location: String,
    pub amount: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.tag, self.location)?;
        if let Some(n) = self.node {
            write!(f, ", node {n}")?;
        }
        if let Some(i) = self.sample {
            write!(f, ", sample {i}")?;
        }
        write!(f, " (off by {:.3e})", self.amount)
    }
}

struct Builder {
    constraints: Vec<Constraint>,
}

impl Builder {
    fn row(
        &mut self,
        tag: ConstraintTag,
        node: Option<usize>,
        sample: Option<usize>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        self.constraints.push(Constraint {
            tag,
            node,
            sample,
            terms,
            sense,
            rhs,
        });
    }
}

/// Builds the flow, node, time-window, class-sink, robustness, big-M,
/// routing and linearization constraints and the penalized objective.
pub fn encode(problem: &InferenceProblem) -> Result<MilpModel> {
    super::problem::check_lambda(problem.lambda())?;
    let skeleton = problem.skeleton();
    let templates = problem.templates();
    let thetas = problem.thetas();
    if templates.is_empty() || problem.n_classes() == 0 {
        return Err(Error::InconsistentProblem("no templates or no classes".into()));
    }
    let layout = Layout {
        samples: problem.n_samples(),
        nodes: skeleton.node_count(),
        internal: skeleton.internal().count(),
        templates: templates.len(),
        thetas: thetas.len(),
        classes: problem.n_classes(),
    };
    let (samples, classes) = (layout.samples, layout.classes);
    let big_m = problem.big_m();
    let pi_bound = problem.max_abs_threshold();

    let mut variables = vec![
        Variable {
            name: String::new(),
            kind: VarKind::Binary,
        };
        layout.total()
    ];
    let mut name = |idx: usize, name: String, kind: VarKind| variables[idx] = Variable { name, kind };
    let bin = VarKind::Binary;
    for i in 0..samples {
        name(layout.z_s(i), names::z_s(i), bin);
        for n in skeleton.nodes() {
            name(layout.z(i, n), names::z(i, n), bin);
            name(layout.z_t(i, n), names::z_t(i, n), bin);
        }
    }
    for n in skeleton.internal() {
        for psi in 0..templates.len() {
            name(layout.b(n, psi), names::b(n, psi), bin);
        }
    }
    for n in skeleton.nodes() {
        for c in 1..=classes {
            name(layout.w(n, c), names::w(n, c), bin);
        }
    }
    for n in skeleton.internal() {
        for theta in 0..thetas.len() {
            name(layout.xi(n, theta), names::xi(n, theta), bin);
        }
    }
    for i in 0..samples {
        for n in skeleton.internal() {
            for psi in 0..templates.len() {
                name(layout.y(i, n, psi), names::y(i, n, psi), bin);
                name(layout.kappa(i, n, psi), names::kappa(i, n, psi), bin);
                let free = VarKind::Continuous { lo: -big_m, hi: big_m };
                name(layout.rho(i, n, psi), names::rho(i, n, psi), free);
            }
        }
    }
    for n in skeleton.internal() {
        let bounds = VarKind::Continuous {
            lo: -pi_bound,
            hi: pi_bound,
        };
        name(layout.pi(n), names::pi(n), bounds);
    }

    use ConstraintTag::*;
    use Sense::*;
    let mut b = Builder {
        constraints: Vec::new(),
    };
    let arities: Vec<usize> = {
        let mut a: Vec<usize> = templates.iter().map(|t| t.arity()).collect();
        a.sort_unstable();
        a.dedup();
        a
    };

    for n in skeleton.internal() {
        let mut terms: Vec<(usize, f64)> = (0..templates.len()).map(|p| (layout.b(n, p), 1.0)).collect();
        terms.extend((1..=classes).map(|c| (layout.w(n, c), 1.0)));
        b.row(Node, Some(n), None, terms, Eq, 1.0);
        for &q in &arities {
            let mut terms: Vec<(usize, f64)> = thetas
                .iter()
                .enumerate()
                .filter(|(_, t)| t.arity() == q)
                .map(|(th, _)| (layout.xi(n, th), 1.0))
                .collect();
            terms.extend(
                templates
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| t.arity() == q)
                    .map(|(p, _)| (layout.b(n, p), -1.0)),
            );
            b.row(TimeWindow, Some(n), None, terms, Eq, 0.0);
        }
    }
    for n in skeleton.leaves() {
        let terms = (1..=classes).map(|c| (layout.w(n, c), 1.0)).collect();
        b.row(Node, Some(n), None, terms, Eq, 1.0);
    }

    for (i, &label) in problem.labels().iter().enumerate() {
        b.row(
            Flow,
            Some(1),
            Some(i),
            vec![(layout.z_s(i), 1.0), (layout.z(i, 1), -1.0)],
            Eq,
            0.0,
        );
        for n in skeleton.nodes() {
            let mut terms = vec![(layout.z(i, n), 1.0), (layout.z_t(i, n), -1.0)];
            if let (Some(l), Some(r)) = (skeleton.left(n), skeleton.right(n)) {
                terms.push((layout.z(i, l), -1.0));
                terms.push((layout.z(i, r), -1.0));
            }
            b.row(Flow, Some(n), Some(i), terms, Eq, 0.0);
            b.row(
                ClassSink,
                Some(n),
                Some(i),
                vec![(layout.z_t(i, n), 1.0), (layout.w(n, label), -1.0)],
                Le,
                0.0,
            );
        }
        for n in skeleton.internal() {
            let mut kappas = Vec::with_capacity(templates.len());
            for (p, template) in templates.iter().enumerate() {
                let (rho, y, k, bv) = (
                    layout.rho(i, n, p),
                    layout.y(i, n, p),
                    layout.kappa(i, n, p),
                    layout.b(n, p),
                );
                // rho = sum_theta xi * tau - sign * pi
                let mut terms = vec![(rho, 1.0), (layout.pi(n), template.relation.sign())];
                for (th, theta) in thetas.iter().enumerate() {
                    if theta.arity() != template.arity() {
                        continue;
                    }
                    let tau = problem.table().get(i, p, th).expect("compatible column");
                    if tau != 0.0 {
                        terms.push((layout.xi(n, th), -tau));
                    }
                }
                b.row(RhoLink, Some(n), Some(i), terms, Eq, 0.0);
                // y = 1 => rho >= 0; y = 0 => rho <= -eps.
                b.row(BigM, Some(n), Some(i), vec![(rho, 1.0), (y, -big_m)], Ge, -big_m);
                b.row(
                    BigM,
                    Some(n),
                    Some(i),
                    vec![(rho, 1.0), (y, -(big_m + EPSILON))],
                    Le,
                    -EPSILON,
                );
                b.row(Linearization, Some(n), Some(i), vec![(k, 1.0), (y, -1.0)], Le, 0.0);
                b.row(Linearization, Some(n), Some(i), vec![(k, 1.0), (bv, -1.0)], Le, 0.0);
                b.row(
                    Linearization,
                    Some(n),
                    Some(i),
                    vec![(k, 1.0), (y, -1.0), (bv, -1.0)],
                    Ge,
                    -1.0,
                );
                kappas.push(k);
            }
            let (l, r) = (2 * n, 2 * n + 1);
            let mut terms = vec![(layout.z(i, l), 1.0)];
            terms.extend(kappas.iter().map(|&k| (k, -1.0)));
            b.row(RouteLeft, Some(n), Some(i), terms, Le, 0.0);
            let mut terms = vec![(layout.z(i, r), 1.0)];
            terms.extend(kappas.iter().map(|&k| (k, 1.0)));
            b.row(RouteRight, Some(n), Some(i), terms, Le, 1.0);
            let mut terms = vec![(layout.z(i, r), 1.0)];
            terms.extend((0..templates.len()).map(|p| (layout.b(n, p), -1.0)));
            b.row(RouteRight, Some(n), Some(i), terms, Le, 0.0);
        }
    }

    let lambda = problem.lambda();
    let mut objective = Vec::new();
    if lambda < 1.0 {
        for i in 0..samples {
            for n in skeleton.nodes() {
                objective.push((layout.z_t(i, n), 1.0 - lambda));
            }
        }
    }
    if lambda > 0.0 {
        for n in skeleton.internal() {
            for p in 0..templates.len() {
                objective.push((layout.b(n, p), -lambda));
            }
        }
    }
    debug_assert!(variables.iter().all(|v| !v.name.is_empty()));
    let index = variables.iter().enumerate().map(|(k, v)| (v.name.clone(), k)).collect();
    Ok(MilpModel {
        variables,
        index,
        constraints: b.constraints,
        objective,
        big_m,
        lambda,
    })
}

impl MilpModel {
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Number of variables whose name starts with `prefix_`.
    pub fn count_block(&self, prefix: &str) -> usize {
        let p = format!("{prefix}_");
        self.variables.iter().filter(|v| v.name.starts_with(&p)).count()
    }

    fn dense(&self, assignment: &Assignment) -> Result<Vec<f64>> {
        self.variables
            .iter()
            .map(|v| {
                assignment
                    .get(&v.name)
                    .copied()
                    .ok_or_else(|| Error::MissingVariable(v.name.clone()))
            })
            .collect()
    }

    /// Objective of an assignment under this model's coefficients.
    pub fn evaluate(&self, assignment: &Assignment) -> Result<f64> {
        let x = self.dense(assignment)?;
        Ok(self.objective.iter().map(|&(k, c)| c * x[k]).sum())
    }
}

/// Every violated row, plus binaries that are not exactly 0 or 1 and
/// continuous variables outside their bounds. Empty iff feasible.
pub fn validate_solution(model: &MilpModel, assignment: &Assignment) -> Result<Vec<Violation>> {
    let x = model.dense(assignment)?;
    let mut out = Vec::new();
    for (k, v) in model.variables.iter().enumerate() {
        match v.kind {
            VarKind::Binary if x[k] != 0.0 && x[k] != 1.0 => out.push(Violation {
                tag: ConstraintTag::Integrality,
                node: None,
                sample: None,
                location: v.name.clone(),
                amount: x[k].min(1.0 - x[k]).abs(),
            }),
            VarKind::Continuous { lo, hi } if x[k] < lo - TOLERANCE || x[k] > hi + TOLERANCE => out.push(Violation {
                tag: ConstraintTag::Bounds,
                node: None,
                sample: None,
                location: v.name.clone(),
                amount: (lo - x[k]).max(x[k] - hi),
            }),
            _ => {}
        }
    }
    for (r, c) in model.constraints.iter().enumerate() {
        let lhs: f64 = c.terms.iter().map(|&(k, a)| a * x[k]).sum();
        let excess = match c.sense {
            Sense::Le => lhs - c.rhs,
            Sense::Ge => c.rhs - lhs,
            Sense::Eq => (lhs - c.rhs).abs(),
        };
        if excess > TOLERANCE {
            out.push(Violation {
                tag: c.tag,
                node: c.node,
                sample: c.sample,
                location: format!("row {r}"),
                amount: excess,
            });
        }
    }
    Ok(out)
}

/// `(1 - lambda) * sum z_t - lambda * sum b`, read from variable names.
pub fn objective_value(assignment: &Assignment, lambda: f64) -> f64 {
    let mut correct = 0.0;
    let mut decisions = 0.0;
    for (name, v) in assignment {
        if name.starts_with("zt_") {
            correct += v;
        } else if name.starts_with("b_") {
            decisions += v;
        }
    }
    (1.0 - lambda) * correct - lambda * decisions
}
