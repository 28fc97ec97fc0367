//! Exact maximization of `(1 - lambda) * correct - lambda * decisions` over
//! trees whose thresholds come from the candidate sets, and an exhaustive
//! oracle for small instances.

mod bruteforce;
mod search;
mod set;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::encoding::InferenceProblem;
use crate::error::{Error, Result};
use crate::tree::{NodeRole, TreeSolution};

pub use bruteforce::{solve_bruteforce, BRUTE_FORCE_LIMIT};
use search::{Limits, Role, Search, Sub};
use set::SampleSet;

/// Objective differences below this are ties.
pub const SCORE_TOLERANCE: f64 = 1e-9;

/// Partial tree: samples already classified correctly, samples that may
/// still be routed, decisions committed so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchNode {
    pub correct: usize,
    pub routable: usize,
    pub decisions: usize,
}

/// `(1 - lambda) * (correct + routable) - lambda * decisions`: every
/// routable sample adds at most `1 - lambda`, further decisions only cost.
pub fn admissible_bound(node: &SearchNode, lambda: f64) -> f64 {
    (1.0 - lambda) * (node.correct + node.routable) as f64 - lambda * node.decisions as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveBudget {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Stop as soon as the objective reaches this value.
    pub target: Option<f64>,
}

impl SolveBudget {
    pub fn unlimited() -> Self {
        SolveBudget::default()
    }

    pub fn seconds(secs: f64) -> Self {
        SolveBudget {
            time_limit: Some(Duration::from_secs_f64(secs)),
            ..Default::default()
        }
    }

    fn check(&self) -> Result<()> {
        let bad = self.time_limit.is_some_and(|t| t.is_zero()) || self.node_limit == Some(0);
        if bad {
            return Err(Error::InconsistentProblem("budget limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Worker threads for the root splits; 1 runs sequentially.
    pub threads: usize,
    /// Keep `(bound, incumbent)` for every pruned split.
    pub record_log: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            threads: 1,
            record_log: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    BudgetExhausted,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::BudgetExhausted => "budget-exhausted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneRecord {
    pub bound: f64,
    pub incumbent: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solution: TreeSolution,
    pub status: SolveStatus,
    pub objective: f64,
    pub correct: usize,
    pub decisions: usize,
    pub expansions: u64,
    pub elapsed: Duration,
    pub log: Vec<PruneRecord>,
}

pub fn solve_exact(problem: &InferenceProblem, budget: &SolveBudget) -> Result<SolveResult> {
    solve_exact_with(problem, budget, &SolveOptions::default())
}

pub fn solve_exact_with(
    problem: &InferenceProblem,
    budget: &SolveBudget,
    options: &SolveOptions,
) -> Result<SolveResult> {
    budget.check()?;
    if problem.n_samples() == 0 {
        return Err(Error::EmptyDataset);
    }
    let start = Instant::now();
    let search = Search::new(
        problem,
        Limits {
            deadline: budget.time_limit.map(|t| start + t),
            node_limit: budget.node_limit,
            target: budget.target,
            record_log: options.record_log,
        },
    );
    let all = SampleSet::full(problem.n_samples());
    let (best, exact) = if options.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.threads)
            .build()
            .map_err(|e| Error::InconsistentProblem(format!("thread pool: {e}")))?;
        pool.install(|| search.solve(&all, problem.depth(), true))
    } else {
        search.solve(&all, problem.depth(), false)
    };
    let status = if exact && !search.interrupted() {
        SolveStatus::Optimal
    } else {
        SolveStatus::BudgetExhausted
    };
    let solution = to_solution(problem, &best)?;
    log::debug!(
        "search finished: {} expansions, status {}",
        search.expansions(),
        status.as_str()
    );
    Ok(SolveResult {
        objective: problem.objective(best.correct as usize, best.decisions as usize),
        correct: best.correct as usize,
        decisions: best.decisions as usize,
        solution,
        status,
        expansions: search.expansions(),
        elapsed: start.elapsed(),
        log: search.take_log(),
    })
}

fn to_solution(problem: &InferenceProblem, sub: &Sub) -> Result<TreeSolution> {
    let roles = sub
        .roles
        .iter()
        .map(|r| match *r {
            Role::Unused => NodeRole::Unused,
            Role::Classify(c) => NodeRole::Classify { class: c as usize },
            Role::Decision { column, threshold } => {
                NodeRole::Decision(problem.decision(column as usize, threshold as usize))
            }
        })
        .collect();
    let mut solution = TreeSolution::new(problem.depth(), roles)?;
    solution.flows = Some(table_flows(problem, &solution)?);
    Ok(solution)
}

/// Sink node of every correctly classified sample, routed with the table.
pub fn table_flows(problem: &InferenceProblem, solution: &TreeSolution) -> Result<Vec<Option<usize>>> {
    (0..problem.n_samples())
        .map(|i| {
            let sink = solution.route_with(|d| {
                let tau = problem.table().get(i, d.template_id, d.theta_id).ok_or_else(|| {
                    Error::InconsistentProblem(format!("no column for decision at template {}", d.template_id))
                })?;
                Ok(d.routes_left(tau))
            })?;
            Ok((solution.class_at(sink) == Some(problem.labels()[i])).then_some(sink))
        })
        .collect()
}

/// Number of correctly classified samples and decisions of a solution.
pub fn evaluate_solution(problem: &InferenceProblem, solution: &TreeSolution) -> Result<(usize, usize)> {
    let correct = table_flows(problem, solution)?.iter().filter(|f| f.is_some()).count();
    Ok((correct, solution.decision_count()))
}

/// On-disk solution record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub status: SolveStatus,
    pub objective: f64,
    pub correct: usize,
    pub decisions: usize,
    pub solution: TreeSolution,
}

impl SolutionFile {
    pub fn from_result(result: &SolveResult) -> Self {
        SolutionFile {
            status: result.status,
            objective: result.objective,
            correct: result.correct,
            decisions: result.decisions,
            solution: result.solution.clone(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: SolutionFile = serde_json::from_str(&text)?;
        file.solution.check()?;
        Ok(file)
    }
}
