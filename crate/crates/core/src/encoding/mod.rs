//! Mixed-integer encoding of the tree-inference problem: model construction,
//! constraint replay, LP export and conversions between tree solutions and
//! variable assignments.

mod lp;
mod model;
mod problem;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{Decision, NodeRole, TreeSolution};

pub use lp::{export_lp, lp_string};
pub use model::{
    encode, names, objective_value, validate_solution, Assignment, Constraint, ConstraintTag, MilpModel, Sense,
    VarKind, Variable, Violation, EPSILON, TOLERANCE,
};
pub use problem::{ColumnSplits, GridSpec, InferenceProblem, ProblemConfig};

/// Reproducibility record written next to every export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemManifest {
    pub depth: usize,
    pub grid: GridSpec,
    pub grid_signature: String,
    pub lambda: f64,
    pub big_m: f64,
    pub dataset_hash: String,
    pub samples: usize,
    pub classes: usize,
    pub templates: usize,
    pub thetas: usize,
}

impl ProblemManifest {
    pub fn of(problem: &InferenceProblem) -> Self {
        ProblemManifest {
            depth: problem.depth(),
            grid: problem.grid(),
            grid_signature: problem.grid().to_string(),
            lambda: problem.lambda(),
            big_m: problem.big_m(),
            dataset_hash: problem.dataset_hash().to_string(),
            samples: problem.n_samples(),
            classes: problem.n_classes(),
            templates: problem.templates().len(),
            thetas: problem.thetas().len(),
        }
    }

    /// Errors when the problem differs from the one this manifest describes.
    pub fn check(&self, problem: &InferenceProblem) -> Result<()> {
        let other = ProblemManifest::of(problem);
        if self.dataset_hash != other.dataset_hash {
            return Err(Error::Manifest(format!(
                "dataset hash {} does not match {}",
                other.dataset_hash, self.dataset_hash
            )));
        }
        if *self != other {
            return Err(Error::Manifest(format!(
                "problem settings differ: expected {self:?}, found {other:?}"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Full variable assignment of a tree solution. Nodes outside the tree are
/// set to classify as class 1. Recorded flows are replayed as given, so a
/// corrupted solution shows up as violations; without them, correctly
/// classified samples flow to their sink and the others carry no flow.
pub fn expand_solution(problem: &InferenceProblem, solution: &TreeSolution) -> Result<Assignment> {
    solution.check()?;
    if solution.depth != problem.depth() {
        return Err(Error::InconsistentProblem(format!(
            "solution depth {} differs from problem depth {}",
            solution.depth,
            problem.depth()
        )));
    }
    let skeleton = problem.skeleton();
    let templates = problem.templates();
    let thetas = problem.thetas();
    let mut a = Assignment::new();
    let decision_at = |n: usize| match solution.role(n) {
        NodeRole::Decision(d) => Some(d),
        _ => None,
    };
    for n in skeleton.internal() {
        let d = decision_at(n);
        if let Some(d) = d {
            if d.template_id >= templates.len() || d.theta_id >= thetas.len() {
                return Err(Error::InconsistentProblem(format!("node {n} references unknown ids")));
            }
        }
        for p in 0..templates.len() {
            a.insert(names::b(n, p), f(d.is_some_and(|d| d.template_id == p)));
        }
        for th in 0..thetas.len() {
            a.insert(names::xi(n, th), f(d.is_some_and(|d| d.theta_id == th)));
        }
        a.insert(names::pi(n), d.map_or(0.0, |d| d.threshold));
    }
    for n in skeleton.nodes() {
        let class = match solution.role(n) {
            NodeRole::Classify { class } => Some(*class),
            NodeRole::Unused => Some(1),
            NodeRole::Decision(_) => None,
        };
        for c in 1..=problem.n_classes() {
            a.insert(names::w(n, c), f(class == Some(c)));
        }
    }
    if let Some(flows) = &solution.flows {
        if flows.len() != problem.n_samples() {
            return Err(Error::InconsistentProblem(format!(
                "solution records {} flows for {} samples",
                flows.len(),
                problem.n_samples()
            )));
        }
    }
    for (i, &label) in problem.labels().iter().enumerate() {
        let sink = match &solution.flows {
            Some(flows) => flows[i],
            None => {
                let sink = solution.route_with(|d| Ok(d.routes_left(tau_of(problem, d, i)?)))?;
                (solution.class_at(sink) == Some(label)).then_some(sink)
            }
        };
        let path = sink.map_or_else(Vec::new, |s| skeleton.path(s));
        a.insert(names::z_s(i), f(sink.is_some()));
        for n in skeleton.nodes() {
            a.insert(names::z(i, n), f(path.contains(&n)));
            a.insert(names::z_t(i, n), f(sink == Some(n)));
        }
        for n in skeleton.internal() {
            let d = decision_at(n);
            let pi = d.map_or(0.0, |d| d.threshold);
            for (p, template) in templates.iter().enumerate() {
                let tau = d
                    .filter(|d| thetas[d.theta_id].arity() == template.arity())
                    .and_then(|d| problem.table().get(i, p, d.theta_id))
                    .unwrap_or(0.0);
                let rho = template.shift(tau, pi);
                let y = rho >= 0.0;
                a.insert(names::rho(i, n, p), rho);
                a.insert(names::y(i, n, p), f(y));
                a.insert(names::kappa(i, n, p), f(y && d.is_some_and(|d| d.template_id == p)));
            }
        }
    }
    Ok(a)
}

fn f(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn tau_of(problem: &InferenceProblem, d: &Decision, sample: usize) -> Result<f64> {
    problem.table().get(sample, d.template_id, d.theta_id).ok_or_else(|| {
        Error::InconsistentProblem(format!(
            "no table column for template {} and time parameters {}",
            d.template_id, d.theta_id
        ))
    })
}

/// Reads node roles and flows back from an assignment, e.g. one produced by
/// an external solver for an exported model.
pub fn decode_assignment(problem: &InferenceProblem, assignment: &Assignment) -> Result<TreeSolution> {
    let get = |name: String| assignment.get(&name).copied().ok_or(Error::MissingVariable(name));
    let skeleton = problem.skeleton();
    let mut roles = vec![NodeRole::Unused; skeleton.node_count()];
    for n in skeleton.nodes() {
        let reachable = n == 1 || matches!(roles[n / 2 - 1], NodeRole::Decision(_));
        if !reachable {
            continue;
        }
        let mut chosen = None;
        if !skeleton.is_leaf(n) {
            for p in 0..problem.templates().len() {
                if get(names::b(n, p))? > 0.5 {
                    chosen = Some(p);
                }
            }
        }
        roles[n - 1] = match chosen {
            Some(p) => {
                let arity = problem.templates()[p].arity();
                let mut theta = None;
                for (th, t) in problem.thetas().iter().enumerate() {
                    if t.arity() == arity && get(names::xi(n, th))? > 0.5 {
                        theta = Some(th);
                    }
                }
                let theta = theta
                    .ok_or_else(|| Error::MalformedSolution(format!("node {n} decides without time parameters")))?;
                let column = problem
                    .column_index(p, theta)
                    .ok_or_else(|| Error::MalformedSolution(format!("node {n} uses an unknown column")))?;
                let routing = (0..problem.n_samples())
                    .map(|i| Ok(get(names::y(i, n, p))? > 0.5))
                    .collect::<Result<Vec<bool>>>()?;
                let pi = get(names::pi(n))?;
                NodeRole::Decision(decision_for_routing(problem, column, &routing, pi))
            }
            None => {
                let mut class = None;
                for c in 1..=problem.n_classes() {
                    if get(names::w(n, c))? > 0.5 {
                        class = Some(c);
                    }
                }
                NodeRole::Classify {
                    class: class.ok_or_else(|| Error::MalformedSolution(format!("node {n} has no role")))?,
                }
            }
        };
    }
    let mut solution = TreeSolution::new(problem.depth(), roles)?;
    let mut flows = Vec::with_capacity(problem.n_samples());
    for i in 0..problem.n_samples() {
        let mut sink = None;
        for n in skeleton.nodes() {
            if get(names::z_t(i, n))? > 0.5 {
                sink = Some(n);
            }
        }
        flows.push(sink);
    }
    solution.flows = Some(flows);
    Ok(solution)
}

/// The first candidate threshold whose split matches the assignment's sign
/// indicators. External solvers may leave `pi` within their tolerance of a
/// sample's value, where it would route that sample the other way; the
/// indicators carry the intended split. Falls back to the raw `pi` when no
/// candidate reproduces them.
fn decision_for_routing(problem: &InferenceProblem, column: usize, routing: &[bool], pi: f64) -> Decision {
    let n = problem.n_samples();
    let side = |t: f64| (0..n).map(|i| problem.goes_left(column, t, i)).collect::<Vec<_>>();
    let thresholds = &problem.splits(column).thresholds;
    if let Some(index) = thresholds.iter().position(|&t| side(t) == routing) {
        return problem.decision(column, index);
    }
    let target = side(pi);
    let index = thresholds.iter().position(|&t| side(t) == target).unwrap_or(0);
    Decision {
        threshold: pi,
        ..problem.decision(column, index)
    }
}
