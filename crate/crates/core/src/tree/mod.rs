//! Classification-tree skeletons, solved node assignments, the extracted
//! decision tree and per-class formula summaries.

mod json;
mod summary;

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::data::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::primitives::{PrimitiveTemplate, TimeParams};
use crate::stl::{self, Signal, StlFormula};

pub use summary::summarize_formulae;

pub const MAX_DEPTH: usize = 4;

/// Complete binary skeleton of depth `D`: internal nodes `1..2^D`, leaves
/// `2^D..2^(D+1)`, children `2n` (left) and `2n+1` (right). The source feeds
/// node 1 and every node has an edge to the sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassificationTree {
    depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    Source,
    Node(usize),
    Sink,
}

pub fn build_skeleton(depth: usize) -> Result<ClassificationTree> {
    if !(1..=MAX_DEPTH).contains(&depth) {
        return Err(Error::Depth(depth));
    }
    Ok(ClassificationTree { depth })
}

impl ClassificationTree {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn internal(&self) -> RangeInclusive<usize> {
        1..=(1 << self.depth) - 1
    }

    pub fn leaves(&self) -> RangeInclusive<usize> {
        1 << self.depth..=(1 << (self.depth + 1)) - 1
    }

    /// `|N| + |L|`.
    pub fn node_count(&self) -> usize {
        (1 << (self.depth + 1)) - 1
    }

    pub fn nodes(&self) -> RangeInclusive<usize> {
        1..=self.node_count()
    }

    pub fn is_leaf(&self, n: usize) -> bool {
        self.leaves().contains(&n)
    }

    pub fn left(&self, n: usize) -> Option<usize> {
        (!self.is_leaf(n)).then_some(2 * n)
    }

    pub fn right(&self, n: usize) -> Option<usize> {
        (!self.is_leaf(n)).then_some(2 * n + 1)
    }

    pub fn parent(&self, n: usize) -> Endpoint {
        if n == 1 {
            Endpoint::Source
        } else {
            Endpoint::Node(n / 2)
        }
    }

    /// Nodes from the root down to `n`, inclusive.
    pub fn path(&self, n: usize) -> Vec<usize> {
        let mut path: Vec<usize> = std::iter::successors(Some(n), |&m| (m > 1).then_some(m / 2)).collect();
        path.reverse();
        path
    }

    pub fn edges(&self) -> Vec<(Endpoint, Endpoint)> {
        let mut edges = vec![(Endpoint::Source, Endpoint::Node(1))];
        for n in self.nodes() {
            if let (Some(l), Some(r)) = (self.left(n), self.right(n)) {
                edges.push((Endpoint::Node(n), Endpoint::Node(l)));
                edges.push((Endpoint::Node(n), Endpoint::Node(r)));
            }
            edges.push((Endpoint::Node(n), Endpoint::Sink));
        }
        edges
    }
}

/// A decision node's primitive `psi(pi, theta)`, together with its indices in
/// the problem's template list, time grid and the column's threshold candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub template_id: usize,
    pub theta_id: usize,
    pub threshold_index: usize,
    pub template: PrimitiveTemplate,
    pub theta: TimeParams,
    pub threshold: f64,
}

impl Decision {
    pub fn formula(&self) -> StlFormula {
        self.template
            .instantiate(&self.theta, self.threshold)
            .expect("decision arity matches its template")
    }

    /// Samples with robustness `>= 0` go left, computed from the
    /// zero-threshold value.
    pub fn routes_left(&self, tau: f64) -> bool {
        self.template.shift(tau, self.threshold) >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum NodeRole {
    Unused,
    Classify { class: Label },
    Decision(Decision),
}

/// Roles of all skeleton nodes, `roles[n - 1]` for node `n`, plus the flow of
/// each training sample: the node whose sink edge it takes, or `None` when it
/// is misclassified and does not enter the tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSolution {
    pub depth: usize,
    pub roles: Vec<NodeRole>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flows: Option<Vec<Option<usize>>>,
}

impl TreeSolution {
    /// Validates the structure: one role per node, a used root, no decisions
    /// on leaves, used children below every decision and nothing else used.
    pub fn new(depth: usize, roles: Vec<NodeRole>) -> Result<Self> {
        let solution = TreeSolution {
            depth,
            roles,
            flows: None,
        };
        solution.check()?;
        Ok(solution)
    }

    pub fn skeleton(&self) -> Result<ClassificationTree> {
        build_skeleton(self.depth)
    }

    pub fn role(&self, n: usize) -> &NodeRole {
        &self.roles[n - 1]
    }

    pub fn check(&self) -> Result<()> {
        let skeleton = self.skeleton()?;
        if self.roles.len() != skeleton.node_count() {
            return Err(Error::MalformedSolution(format!(
                "{} roles for a depth-{} skeleton with {} nodes",
                self.roles.len(),
                self.depth,
                skeleton.node_count()
            )));
        }
        for n in skeleton.nodes() {
            let used_parent = match skeleton.parent(n) {
                Endpoint::Node(p) => matches!(self.role(p), NodeRole::Decision(_)),
                _ => true,
            };
            match (self.role(n), used_parent) {
                (NodeRole::Unused, true) => {
                    let what = if n == 1 { "root" } else { "child of a decision" };
                    return Err(Error::MalformedSolution(format!("node {n} is the {what} but unused")));
                }
                (NodeRole::Unused, false) => {}
                (_, false) => {
                    return Err(Error::MalformedSolution(format!(
                        "node {n} is used but its parent does not branch"
                    )))
                }
                (NodeRole::Decision(_), true) if skeleton.is_leaf(n) => {
                    return Err(Error::MalformedSolution(format!("leaf {n} carries a decision")))
                }
                (NodeRole::Classify { class: 0 }, true) => {
                    return Err(Error::MalformedSolution(format!("node {n} predicts class 0")))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn decision_count(&self) -> usize {
        self.roles.iter().filter(|r| matches!(r, NodeRole::Decision(_))).count()
    }

    /// Follows the tree from the root and returns the classifying node.
    pub fn route_with(&self, mut goes_left: impl FnMut(&Decision) -> Result<bool>) -> Result<usize> {
        let mut n = 1;
        loop {
            match self.roles.get(n - 1) {
                Some(NodeRole::Decision(d)) => n = if goes_left(d)? { 2 * n } else { 2 * n + 1 },
                Some(NodeRole::Classify { .. }) => return Ok(n),
                _ => return Err(Error::MalformedSolution(format!("routing reached unused node {n}"))),
            }
        }
    }

    pub fn route(&self, signal: &Signal) -> Result<usize> {
        self.route_with(|d| Ok(stl::robustness(signal, &d.formula(), 0)? >= 0.0))
    }

    pub fn class_at(&self, n: usize) -> Option<Label> {
        match self.role(n) {
            NodeRole::Classify { class } => Some(*class),
            _ => None,
        }
    }

    /// Per-sample sink node of the correctly classified samples.
    pub fn compute_flows(&self, dataset: &LabeledDataset) -> Result<Vec<Option<usize>>> {
        dataset
            .samples()
            .iter()
            .map(|s| {
                let n = self.route(&s.signal)?;
                Ok((self.class_at(n) == Some(s.label)).then_some(n))
            })
            .collect()
    }

    pub fn with_flows(mut self, dataset: &LabeledDataset) -> Result<Self> {
        self.flows = Some(self.compute_flows(dataset)?);
        Ok(self)
    }
}

/// Deployment-time binary decision tree; the left branch is taken when the
/// node formula holds.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionTree {
    Decision {
        formula: StlFormula,
        left: Box<DecisionTree>,
        right: Box<DecisionTree>,
    },
    Class(Label),
}

impl DecisionTree {
    pub fn decision_count(&self) -> usize {
        match self {
            DecisionTree::Class(_) => 0,
            DecisionTree::Decision { left, right, .. } => 1 + left.decision_count() + right.decision_count(),
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            DecisionTree::Class(_) => 0,
            DecisionTree::Decision { formula, left, right } => {
                formula.horizon().max(left.horizon()).max(right.horizon())
            }
        }
    }

    /// Distinct predicted classes in ascending order.
    pub fn classes(&self) -> Vec<Label> {
        let mut out = Vec::new();
        self.collect_classes(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_classes(&self, out: &mut Vec<Label>) {
        match self {
            DecisionTree::Class(c) => out.push(*c),
            DecisionTree::Decision { left, right, .. } => {
                left.collect_classes(out);
                right.collect_classes(out);
            }
        }
    }
}

pub fn extract_bdt(solution: &TreeSolution) -> Result<DecisionTree> {
    solution.check()?;
    fn build(solution: &TreeSolution, n: usize) -> DecisionTree {
        match solution.role(n) {
            NodeRole::Decision(d) => DecisionTree::Decision {
                formula: d.formula(),
                left: Box::new(build(solution, 2 * n)),
                right: Box::new(build(solution, 2 * n + 1)),
            },
            NodeRole::Classify { class } => DecisionTree::Class(*class),
            NodeRole::Unused => unreachable!("checked structure"),
        }
    }
    Ok(build(solution, 1))
}

/// Walks the tree; a decision with robustness exactly 0 routes left.
pub fn classify(dt: &DecisionTree, signal: &Signal) -> Result<Label> {
    let mut node = dt;
    loop {
        match node {
            DecisionTree::Class(c) => return Ok(*c),
            DecisionTree::Decision { formula, left, right } => {
                node = if stl::robustness(signal, formula, 0)? >= 0.0 {
                    left
                } else {
                    right
                };
            }
        }
    }
}

/// Fraction of samples whose predicted class equals the label.
pub fn ccr(dt: &DecisionTree, dataset: &LabeledDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut correct = 0usize;
    for s in dataset.samples() {
        if classify(dt, &s.signal)? == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}
