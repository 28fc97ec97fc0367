//! Exact search: `best(S, d)` is the better of classifying `S` and every
//! split of `S` followed by independent optimal subtrees of depth `d - 1`.
//! Results are memoized per `(S, d)`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rayon::prelude::*;

use super::set::SampleSet;
use super::{admissible_bound, PruneRecord, SearchNode, SCORE_TOLERANCE};
use crate::encoding::InferenceProblem;

/// Role of one node; the derived order is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Role {
    Unused,
    Classify(u32),
    Decision { column: u32, threshold: u32 },
}

/// Optimal subtree: node roles in breadth-first order.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Sub {
    pub correct: u32,
    pub decisions: u32,
    pub roles: Vec<Role>,
}

pub(crate) fn subtree_len(depth: usize) -> usize {
    (1 << (depth + 1)) - 1
}

/// Joins a root with two subtrees of depth `d - 1` into breadth-first order.
pub(crate) fn combine(root: Role, left: &Sub, right: &Sub, depth: usize) -> Sub {
    let mut roles = Vec::with_capacity(subtree_len(depth));
    roles.push(root);
    for level in 0..depth {
        let range = (1 << level) - 1..(1 << (level + 1)) - 1;
        roles.extend_from_slice(&left.roles[range.clone()]);
        roles.extend_from_slice(&right.roles[range]);
    }
    Sub {
        correct: left.correct + right.correct,
        decisions: left.decisions + right.decisions + 1,
        roles,
    }
}

pub(crate) fn leaf(class: usize, correct: u32, depth: usize) -> Sub {
    let mut roles = vec![Role::Unused; subtree_len(depth)];
    roles[0] = Role::Classify(class as u32);
    Sub {
        correct,
        decisions: 0,
        roles,
    }
}

/// Majority class, smallest label on ties; class 1 for an empty set.
pub(crate) fn majority(counts: &[u32]) -> (usize, u32) {
    let mut best = (1, counts.get(1).copied().unwrap_or(0));
    for (c, &n) in counts.iter().enumerate().skip(2) {
        if n > best.1 {
            best = (c, n);
        }
    }
    best
}

/// Total order on solutions: higher objective, then fewer decisions, then
/// the lexicographically smaller role vector. `Less` means `a` is better.
pub(crate) fn compare(lambda: f64, a: &Sub, b: &Sub) -> Ordering {
    let diff =
        (1.0 - lambda) * (a.correct as f64 - b.correct as f64) - lambda * (a.decisions as f64 - b.decisions as f64);
    if diff > SCORE_TOLERANCE {
        Ordering::Less
    } else if diff < -SCORE_TOLERANCE {
        Ordering::Greater
    } else {
        a.decisions.cmp(&b.decisions).then_with(|| a.roles.cmp(&b.roles))
    }
}

pub(crate) struct Limits {
    pub deadline: Option<Instant>,
    pub node_limit: Option<u64>,
    pub target: Option<f64>,
    pub record_log: bool,
}

const LOG_CAPACITY: usize = 1 << 20;

pub(crate) struct Search<'p> {
    problem: &'p InferenceProblem,
    lambda: f64,
    labels: Vec<usize>,
    n_classes: usize,
    memo: Mutex<HashMap<(SampleSet, usize), Arc<Sub>>>,
    limits: Limits,
    expansions: AtomicU64,
    interrupted: AtomicBool,
    stop: AtomicBool,
    log: Mutex<Vec<PruneRecord>>,
}

/// Incremental state of one side of a column sweep.
struct Side {
    set: SampleSet,
    counts: Vec<u32>,
    size: usize,
}

impl Side {
    fn take(&mut self, i: usize, label: usize) {
        self.set.insert(i);
        self.counts[label] += 1;
        self.size += 1;
    }

    fn drop(&mut self, i: usize, label: usize) {
        self.set.remove(i);
        self.counts[label] -= 1;
        self.size -= 1;
    }
}

impl<'p> Search<'p> {
    pub fn new(problem: &'p InferenceProblem, limits: Limits) -> Self {
        Search {
            problem,
            lambda: problem.lambda(),
            labels: problem.labels().to_vec(),
            n_classes: problem.n_classes(),
            memo: Mutex::new(HashMap::new()),
            limits,
            expansions: AtomicU64::new(0),
            interrupted: AtomicBool::new(false),
            stop: AtomicBool::new(false),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn expansions(&self) -> u64 {
        self.expansions.load(AtomicOrdering::Relaxed)
    }

    pub fn interrupted(&self) -> bool {
        self.interrupted.load(AtomicOrdering::Relaxed)
    }

    pub fn take_log(&self) -> Vec<PruneRecord> {
        std::mem::take(&mut self.log.lock().expect("log lock"))
    }

    fn score(&self, correct: u32, decisions: u32) -> f64 {
        (1.0 - self.lambda) * correct as f64 - self.lambda * decisions as f64
    }

    /// Smallest class whose leaf scores within tolerance of the majority.
    /// Differs from [`majority`] only when correct samples are worth
    /// (almost) nothing.
    fn leaf_class(&self, counts: &[u32]) -> (usize, u32) {
        let (_, top) = majority(counts);
        let best = self.score(top, 0);
        (1..counts.len().max(2))
            .map(|c| (c, counts.get(c).copied().unwrap_or(0)))
            .find(|&(_, n)| self.score(n, 0) >= best - SCORE_TOLERANCE)
            .unwrap_or((1, 0))
    }

    fn bound(&self, routable: usize) -> f64 {
        admissible_bound(
            &SearchNode {
                correct: 0,
                routable,
                decisions: 0,
            },
            self.lambda,
        )
    }

    /// Counts one expansion; false once a limit is hit.
    fn tick(&self) -> bool {
        if self.stop.load(AtomicOrdering::Relaxed) {
            self.interrupted.store(true, AtomicOrdering::Relaxed);
            return false;
        }
        let n = self.expansions.fetch_add(1, AtomicOrdering::Relaxed) + 1;
        let over_nodes = self.limits.node_limit.is_some_and(|limit| n > limit);
        let over_time = n.is_multiple_of(64) && self.limits.deadline.is_some_and(|d| Instant::now() >= d);
        if over_nodes || over_time {
            self.stop.store(true, AtomicOrdering::Relaxed);
            self.interrupted.store(true, AtomicOrdering::Relaxed);
            return false;
        }
        true
    }

    fn record(&self, bound: f64, incumbent: f64) {
        if self.limits.record_log {
            let mut log = self.log.lock().expect("log lock");
            if log.len() < LOG_CAPACITY {
                log.push(PruneRecord { bound, incumbent });
            }
        }
    }

    fn counts(&self, set: &SampleSet) -> Vec<u32> {
        let mut counts = vec![0u32; self.n_classes + 1];
        for i in set.iter() {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    /// Members of `set` in ascending order of the column statistic.
    fn members(&self, column: usize, set: &SampleSet, out: &mut Vec<u32>) {
        out.clear();
        out.extend(
            self.problem
                .splits(column)
                .order
                .iter()
                .copied()
                .filter(|&i| set.contains(i as usize)),
        );
    }

    /// Calls `visit(group, threshold)` for every group of equal statistic
    /// values in ascending order. The threshold index is that of the first
    /// candidate separating this group from the next one; `None` for the
    /// last group. For `>=` columns the groups seen so far are the right
    /// side, for `<` columns the left side.
    fn sweep(&self, column: usize, members: &[u32], mut visit: impl FnMut(&[u32], Option<usize>) -> bool) {
        let splits = self.problem.splits(column);
        let mut start = 0;
        while start < members.len() {
            let value = splits.stat[members[start] as usize];
            let mut end = start + 1;
            while end < members.len() && splits.stat[members[end] as usize] == value {
                end += 1;
            }
            let threshold = (end < members.len()).then(|| splits.thresholds.partition_point(|&t| t <= value));
            if !visit(&members[start..end], threshold) {
                return;
            }
            start = end;
        }
    }

    pub fn solve(&self, set: &SampleSet, depth: usize, parallel: bool) -> (Arc<Sub>, bool) {
        let counts = self.counts(set);
        let size = set.len();
        let (class, hits) = self.leaf_class(&counts);
        if depth == 0 || majority(&counts).1 as usize == size {
            return (Arc::new(leaf(class, hits, depth)), true);
        }
        let key = (set.clone(), depth);
        if let Some(hit) = self.memo.lock().expect("memo lock").get(&key) {
            return (hit.clone(), true);
        }
        if !self.tick() {
            return (Arc::new(leaf(class, hits, depth)), false);
        }
        let (sub, exact) = if depth == 1 {
            (Arc::new(self.solve_stump(set, &counts)), true)
        } else {
            self.solve_deep(set, depth, &counts, parallel)
        };
        if exact {
            self.memo.lock().expect("memo lock").insert(key, sub.clone());
        }
        (sub, exact)
    }

    /// Best single split of a column with majority leaves: `(correct,
    /// threshold index)`, the smallest index among equals.
    fn best_split(&self, column: usize, members: &[u32], counts: &[u32]) -> Option<(u32, usize, usize, usize)> {
        let ge = self.problem.is_ge(column);
        // `moved` holds the groups seen so far, `rest` the others.
        let mut moved = vec![0u32; counts.len()];
        let mut rest = counts.to_vec();
        let mut best: Option<(u32, usize, usize, usize)> = None;
        self.sweep(column, members, |group, threshold| {
            for &i in group {
                let l = self.labels[i as usize];
                moved[l] += 1;
                rest[l] -= 1;
            }
            if let Some(t) = threshold {
                let (cm, hm) = majority(&moved);
                let (cr, hr) = majority(&rest);
                let correct = hm + hr;
                if best.is_none_or(|b| correct > b.0) {
                    let (cl, cright) = if ge { (cr, cm) } else { (cm, cr) };
                    best = Some((correct, t, cl, cright));
                }
            }
            true
        });
        best
    }

    fn solve_stump(&self, set: &SampleSet, counts: &[u32]) -> Sub {
        let (class, hits) = self.leaf_class(counts);
        let mut incumbent = leaf(class, hits, 1);
        let mut members = Vec::new();
        let mut best: Option<(u32, usize, usize, usize, usize)> = None;
        for column in 0..self.problem.columns().len() {
            self.members(column, set, &mut members);
            if let Some((correct, t, cl, cr)) = self.best_split(column, &members, counts) {
                if best.is_none_or(|b| correct > b.0) {
                    best = Some((correct, column, t, cl, cr));
                }
            }
        }
        if let Some((correct, column, t, cl, cr)) = best {
            let candidate = Sub {
                correct,
                decisions: 1,
                roles: vec![
                    Role::Decision {
                        column: column as u32,
                        threshold: t as u32,
                    },
                    Role::Classify(cl as u32),
                    Role::Classify(cr as u32),
                ],
            };
            if compare(self.lambda, &candidate, &incumbent) == Ordering::Less {
                incumbent = candidate;
            }
        }
        incumbent
    }

    fn solve_deep(&self, set: &SampleSet, depth: usize, counts: &[u32], parallel: bool) -> (Arc<Sub>, bool) {
        let (class, hits) = self.leaf_class(counts);
        let incumbent = Mutex::new(Arc::new(leaf(class, hits, depth)));

        // Columns with the best single split first, to find strong
        // incumbents early. The order affects speed only.
        let mut members = Vec::new();
        let mut ranked: Vec<(u32, usize, usize)> = Vec::with_capacity(self.problem.columns().len());
        for column in 0..self.problem.columns().len() {
            self.members(column, set, &mut members);
            if let Some((correct, t, _, _)) = self.best_split(column, &members, counts) {
                ranked.push((correct, column, t));
            }
        }
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

        let mut exact = true;
        if let Some(&(_, column, t)) = ranked.first() {
            exact &= self.evaluate_split(set, depth, column, t, &incumbent);
        }
        let explore = |&(_, column, _): &(u32, usize, usize)| self.explore_column(set, depth, column, &incumbent);
        exact &= if parallel {
            ranked
                .par_iter()
                .map(explore)
                .collect::<Vec<bool>>()
                .into_iter()
                .all(|e| e)
        } else {
            let mut all = true;
            for r in &ranked {
                all &= explore(r);
                if self.stop.load(AtomicOrdering::Relaxed) {
                    all = false;
                    break;
                }
            }
            all
        };
        let best = incumbent.into_inner().expect("incumbent lock");
        (best, exact)
    }

    fn offer(&self, candidate: Sub, depth: usize, incumbent: &Mutex<Arc<Sub>>) {
        let mut inc = incumbent.lock().expect("incumbent lock");
        if compare(self.lambda, &candidate, &inc) == Ordering::Less {
            *inc = Arc::new(candidate);
            let reached = self
                .limits
                .target
                .is_some_and(|t| self.score(inc.correct, inc.decisions) >= t);
            if reached && depth == self.problem.depth() {
                self.stop.store(true, AtomicOrdering::Relaxed);
            }
        }
    }

    /// Solves one split outright; returns whether both children were exact.
    fn evaluate_split(
        &self,
        set: &SampleSet,
        depth: usize,
        column: usize,
        threshold: usize,
        incumbent: &Mutex<Arc<Sub>>,
    ) -> bool {
        let t = self.problem.splits(column).thresholds[threshold];
        let mut left = SampleSet::empty(self.labels.len());
        let mut right = SampleSet::empty(self.labels.len());
        for i in set.iter() {
            if self.problem.goes_left(column, t, i) {
                left.insert(i);
            } else {
                right.insert(i);
            }
        }
        if !self.tick() {
            return false;
        }
        let (l, el) = self.solve(&left, depth - 1, false);
        let (r, er) = self.solve(&right, depth - 1, false);
        let root = Role::Decision {
            column: column as u32,
            threshold: threshold as u32,
        };
        self.offer(combine(root, &l, &r, depth), depth, incumbent);
        el && er
    }

    /// Every distinct split of one column, in ascending threshold order.
    fn explore_column(&self, set: &SampleSet, depth: usize, column: usize, incumbent: &Mutex<Arc<Sub>>) -> bool {
        let n = self.labels.len();
        let ge = self.problem.is_ge(column);
        let mut members = Vec::new();
        self.members(column, set, &mut members);
        let full = Side {
            set: set.clone(),
            counts: self.counts(set),
            size: members.len(),
        };
        let empty = Side {
            set: SampleSet::empty(n),
            counts: vec![0; self.n_classes + 1],
            size: 0,
        };
        let (mut left, mut right) = if ge { (full, empty) } else { (empty, full) };
        // Last exactly solved children and their values, for the bound
        // best(S') <= best(S*) + (1 - lambda) |S' \ S*|.
        let mut last_left: Option<(SampleSet, f64)> = None;
        let mut last_right: Option<(SampleSet, f64)> = None;
        let mut exact = true;
        let one = 1.0 - self.lambda;

        self.sweep(column, &members, |group, threshold| {
            for &i in group {
                let (i, l) = (i as usize, self.labels[i as usize]);
                if ge {
                    left.drop(i, l);
                    right.take(i, l);
                } else {
                    right.drop(i, l);
                    left.take(i, l);
                }
            }
            let Some(threshold) = threshold else {
                return true;
            };
            let side_bound = |side: &Side, last: &Option<(SampleSet, f64)>| {
                let mut ub = self.bound(side.size);
                if let Some((prev, value)) = last {
                    ub = ub.min(value + one * side.set.difference_len(prev) as f64);
                }
                ub
            };
            let ub_left = side_bound(&left, &last_left);
            let ub_right = side_bound(&right, &last_right);
            let ub = ub_left + ub_right - self.lambda;
            let root = Role::Decision {
                column: column as u32,
                threshold: threshold as u32,
            };
            let (inc_score, inc_decisions, inc_root) = {
                let inc = incumbent.lock().expect("incumbent lock");
                (self.score(inc.correct, inc.decisions), inc.decisions, inc.roles[0])
            };
            if ub < inc_score - SCORE_TOLERANCE {
                self.record(ub, inc_score);
                return true;
            }
            if ub <= inc_score + SCORE_TOLERANCE {
                // Only a tie is possible: count the fewest decisions that
                // could reach the bound.
                let needs = |side: &Side, ub: f64| {
                    let (_, hits) = majority(&side.counts);
                    u32::from(self.score(hits, 0) < ub - SCORE_TOLERANCE)
                };
                let fewest = 1 + needs(&left, ub_left) + needs(&right, ub_right);
                if fewest > inc_decisions || (fewest == inc_decisions && root > inc_root) {
                    self.record(ub, inc_score);
                    return true;
                }
            }
            if !self.tick() {
                exact = false;
                return false;
            }
            let (l, el) = self.solve(&left.set, depth - 1, false);
            let (r, er) = self.solve(&right.set, depth - 1, false);
            if el {
                last_left = Some((left.set.clone(), self.score(l.correct, l.decisions)));
            }
            if er {
                last_right = Some((right.set.clone(), self.score(r.correct, r.decisions)));
            }
            exact &= el && er;
            self.offer(combine(root, &l, &r, depth), depth, incumbent);
            true
        });
        exact
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_interleaves_levels() {
        let a = |k: u32| Role::Classify(k);
        let left = Sub {
            correct: 1,
            decisions: 1,
            roles: vec![
                Role::Decision {
                    column: 0,
                    threshold: 0,
                },
                a(1),
                a(2),
            ],
        };
        let right = Sub {
            correct: 2,
            decisions: 0,
            roles: vec![a(3), Role::Unused, Role::Unused],
        };
        let joined = combine(
            Role::Decision {
                column: 1,
                threshold: 2,
            },
            &left,
            &right,
            2,
        );
        assert_eq!(
            joined.roles,
            vec![
                Role::Decision {
                    column: 1,
                    threshold: 2
                },
                Role::Decision {
                    column: 0,
                    threshold: 0
                },
                a(3),
                a(1),
                a(2),
                Role::Unused,
                Role::Unused
            ]
        );
        assert_eq!((joined.correct, joined.decisions), (3, 2));
    }

    #[test]
    fn role_order() {
        assert!(Role::Unused < Role::Classify(1));
        assert!(
            Role::Classify(9)
                < Role::Decision {
                    column: 0,
                    threshold: 0
                }
        );
        assert!(
            Role::Decision {
                column: 0,
                threshold: 5
            } < Role::Decision {
                column: 1,
                threshold: 0
            }
        );
    }

    #[test]
    fn majority_prefers_small_labels() {
        assert_eq!(majority(&[0, 2, 2]), (1, 2));
        assert_eq!(majority(&[0, 1, 3]), (2, 3));
        assert_eq!(majority(&[0, 0, 0]), (1, 0));
    }
}
