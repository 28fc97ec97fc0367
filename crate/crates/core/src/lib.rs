//! Learning signal temporal logic classifiers as optimal decision trees.
//!
//! Traces are labeled, every tree node is either a decision on a parametric
//! primitive formula or a class sink, and the tree maximizing
//! `(1 - lambda) * correct - lambda * decisions` is found exactly.

pub mod data;
pub mod encoding;
pub mod error;
pub mod primitives;
pub mod solver;
pub mod stl;
pub mod tree;

pub use data::{split, LabeledDataset, Sample};
pub use encoding::{encode, InferenceProblem, MilpModel, ProblemConfig};
pub use error::{Error, Result};
pub use primitives::{PrimitiveTemplate, RobustnessTable, TimeParams};
pub use solver::{solve_bruteforce, solve_exact, SolveBudget, SolveResult, SolveStatus};
pub use stl::{robustness, satisfies, Interval, Signal, StlFormula};
pub use tree::{ccr, classify, extract_bdt, summarize_formulae, DecisionTree, TreeSolution};
