//! JSON document for decision trees: a flat node list in preorder, node 0 is
//! the root. Formula strings use the text grammar; decision nodes also carry
//! the exact threshold so that reloading is lossless.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DecisionTree;
use crate::data::Label;
use crate::error::{Error, Result};
use crate::stl::{parse_formula, StlFormula};

#[derive(Debug, Serialize, Deserialize)]
struct TreeDocument {
    nodes: Vec<NodeRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRecord {
    id: usize,
    kind: String,
    formula: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    class: Option<Label>,
    left: Option<usize>,
    right: Option<usize>,
}

fn single_threshold(f: &StlFormula) -> Option<f64> {
    fn walk(f: &StlFormula, out: &mut Vec<f64>) {
        match f {
            StlFormula::True => {}
            StlFormula::Predicate { threshold, .. } => out.push(*threshold),
            StlFormula::Not(g) | StlFormula::Eventually(_, g) | StlFormula::Always(_, g) => walk(g, out),
            StlFormula::And(a, b) | StlFormula::Or(a, b) => {
                walk(a, out);
                walk(b, out);
            }
        }
    }
    let mut all = Vec::new();
    walk(f, &mut all);
    (all.len() == 1).then(|| all[0])
}

fn set_threshold(f: &mut StlFormula, value: f64) {
    match f {
        StlFormula::True => {}
        StlFormula::Predicate { threshold, .. } => *threshold = value,
        StlFormula::Not(g) | StlFormula::Eventually(_, g) | StlFormula::Always(_, g) => set_threshold(g, value),
        StlFormula::And(a, b) | StlFormula::Or(a, b) => {
            set_threshold(a, value);
            set_threshold(b, value);
        }
    }
}

impl DecisionTree {
    fn records(&self, out: &mut Vec<NodeRecord>) -> usize {
        let id = out.len();
        match self {
            DecisionTree::Class(c) => out.push(NodeRecord {
                id,
                kind: "class".into(),
                formula: None,
                threshold: None,
                class: Some(*c),
                left: None,
                right: None,
            }),
            DecisionTree::Decision { formula, left, right } => {
                out.push(NodeRecord {
                    id,
                    kind: "decision".into(),
                    formula: Some(formula.to_string()),
                    threshold: single_threshold(formula),
                    class: None,
                    left: None,
                    right: None,
                });
                let l = left.records(out);
                let r = right.records(out);
                out[id].left = Some(l);
                out[id].right = Some(r);
            }
        }
        id
    }

    pub fn to_json(&self) -> String {
        let mut nodes = Vec::new();
        self.records(&mut nodes);
        serde_json::to_string_pretty(&TreeDocument { nodes }).expect("tree document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDocument = serde_json::from_str(text)?;
        if doc.nodes.is_empty() {
            return Err(Error::MalformedSolution("tree document has no nodes".into()));
        }
        if doc.nodes.iter().enumerate().any(|(i, n)| n.id != i) {
            return Err(Error::MalformedSolution(
                "node ids must be 0, 1, 2, ... in order".into(),
            ));
        }
        build(&doc.nodes, 0, 0)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DecisionTree::from_json(&text)
    }
}

fn build(nodes: &[NodeRecord], id: usize, depth: usize) -> Result<DecisionTree> {
    let malformed = |m: String| Error::MalformedSolution(m);
    if depth > nodes.len() {
        return Err(malformed("tree document contains a cycle".into()));
    }
    let node = nodes
        .get(id)
        .ok_or_else(|| malformed(format!("reference to missing node {id}")))?;
    match node.kind.as_str() {
        "class" => node
            .class
            .map(DecisionTree::Class)
            .ok_or_else(|| malformed(format!("class node {id} has no class"))),
        "decision" => {
            let text = node
                .formula
                .as_deref()
                .ok_or_else(|| malformed(format!("decision node {id} has no formula")))?;
            let mut formula = parse_formula(text)?;
            if let Some(t) = node.threshold {
                set_threshold(&mut formula, t);
            }
            let (Some(l), Some(r)) = (node.left, node.right) else {
                return Err(malformed(format!("decision node {id} lacks a child")));
            };
            Ok(DecisionTree::Decision {
                formula,
                left: Box::new(build(nodes, l, depth + 1)?),
                right: Box::new(build(nodes, r, depth + 1)?),
            })
        }
        other => Err(malformed(format!("node {id} has unknown kind {other:?}"))),
    }
}
