//! Exhaustive enumeration of every tree over the candidate thresholds. Splits
//! are computed from the robustness of the instantiated formulas, not from
//! the table, and every class is tried at every classification node.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::time::Instant;

use super::search::{combine, compare, subtree_len, Role, Sub};
use super::{to_solution, SolveResult, SolveStatus};
use crate::data::LabeledDataset;
use crate::encoding::InferenceProblem;
use crate::error::{Error, Result};
use crate::stl;

/// Largest number of candidate trees the oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

struct Oracle<'p> {
    problem: &'p InferenceProblem,
    /// `left[column][threshold][sample]`
    left: Vec<Vec<Vec<bool>>>,
    labels: Vec<usize>,
    lambda: f64,
}

type Partition = (Role, Vec<usize>, Vec<usize>);

impl Oracle<'_> {
    /// Distinct splits of `set`, each with its smallest `(column, threshold)`.
    fn partitions(&self, set: &[usize]) -> Vec<Partition> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (c, per_threshold) in self.left.iter().enumerate() {
            for (t, mask) in per_threshold.iter().enumerate() {
                let (l, r): (Vec<usize>, Vec<usize>) = set.iter().partition(|&&i| mask[i]);
                if seen.insert(l.clone()) {
                    let role = Role::Decision {
                        column: c as u32,
                        threshold: t as u32,
                    };
                    out.push((role, l, r));
                }
            }
        }
        out
    }

    fn count(&self, set: &[usize], depth: usize) -> u128 {
        let classes = self.problem.n_classes() as u128;
        if depth == 0 {
            return classes;
        }
        self.partitions(set).iter().fold(classes, |acc, (_, l, r)| {
            let sub = self.count(l, depth - 1).saturating_mul(self.count(r, depth - 1));
            acc.saturating_add(sub)
        })
    }

    fn leaves(&self, set: &[usize], depth: usize) -> Vec<Sub> {
        (1..=self.problem.n_classes())
            .map(|c| {
                let mut roles = vec![Role::Unused; subtree_len(depth)];
                roles[0] = Role::Classify(c as u32);
                Sub {
                    correct: set.iter().filter(|&&i| self.labels[i] == c).count() as u32,
                    decisions: 0,
                    roles,
                }
            })
            .collect()
    }

    fn all(&self, set: &[usize], depth: usize) -> Vec<Sub> {
        let mut out = self.leaves(set, depth);
        if depth == 0 {
            return out;
        }
        for (root, l, r) in self.partitions(set) {
            let lefts = self.all(&l, depth - 1);
            let rights = self.all(&r, depth - 1);
            for a in &lefts {
                for b in &rights {
                    out.push(combine(root, a, b, depth));
                }
            }
        }
        out
    }

    fn best(&self, set: &[usize], depth: usize) -> Sub {
        let mut best: Option<Sub> = None;
        let mut offer = |s: Sub| {
            if best
                .as_ref()
                .is_none_or(|b| compare(self.lambda, &s, b) == Ordering::Less)
            {
                best = Some(s);
            }
        };
        for s in self.leaves(set, depth) {
            offer(s);
        }
        if depth > 0 {
            for (root, l, r) in self.partitions(set) {
                let lefts = self.all(&l, depth - 1);
                let rights = self.all(&r, depth - 1);
                for a in &lefts {
                    for b in &rights {
                        offer(combine(root, a, b, depth));
                    }
                }
            }
        }
        best.expect("at least one classification")
    }
}

/// Exhaustive optimum under the same objective and tie-break as
/// [`super::solve_exact`]. `dataset` must be the one the problem was built from.
pub fn solve_bruteforce(problem: &InferenceProblem, dataset: &LabeledDataset) -> Result<SolveResult> {
    if dataset.content_hash() != problem.dataset_hash() {
        return Err(Error::Manifest("dataset does not match the problem".into()));
    }
    let start = Instant::now();
    let mut left = Vec::with_capacity(problem.columns().len());
    for (c, col) in problem.columns().iter().enumerate() {
        let template = &problem.templates()[col.template];
        let theta = &problem.thetas()[col.theta];
        let mut per_threshold = Vec::new();
        for &pi in &problem.splits(c).thresholds {
            let formula = template.instantiate(theta, pi)?;
            let mask = dataset
                .signals()
                .map(|s| Ok(stl::robustness(s, &formula, 0)? >= 0.0))
                .collect::<Result<Vec<bool>>>()?;
            per_threshold.push(mask);
        }
        left.push(per_threshold);
    }
    let oracle = Oracle {
        problem,
        left,
        labels: dataset.labels(),
        lambda: problem.lambda(),
    };
    let all: Vec<usize> = (0..dataset.len()).collect();
    let size = oracle.count(&all, problem.depth());
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let best = oracle.best(&all, problem.depth());
    let solution = to_solution(problem, &best)?;
    Ok(SolveResult {
        objective: problem.objective(best.correct as usize, best.decisions as usize),
        correct: best.correct as usize,
        decisions: best.decisions as usize,
        solution,
        status: SolveStatus::Optimal,
        expansions: size as u64,
        elapsed: start.elapsed(),
        log: Vec::new(),
    })
}
