use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::primitives::{
    build_primitive_set, candidate_thresholds, default_stride, enumerate_time_params, precompute_table,
    reduce_by_symmetry, Column, PrimitiveTemplate, RobustnessTable, TimeParams,
};
use crate::tree::{build_skeleton, ClassificationTree, Decision};

/// Primitive level and time-grid settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub level: usize,
    pub stride: usize,
    pub max_width: Option<usize>,
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "level={};stride={}", self.level, self.stride)?;
        match self.max_width {
            Some(w) => write!(f, ";max_width={w}"),
            None => write!(f, ";max_width=none"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub depth: usize,
    pub level: usize,
    /// Grid spacing; [`default_stride`] when absent.
    pub stride: Option<usize>,
    pub max_width: Option<usize>,
    pub lambda: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            depth: 2,
            level: 1,
            stride: None,
            max_width: None,
            lambda: 0.0,
        }
    }
}

/// Per-column split data. `stat[i] = sign * tau[i]`, so a sample goes left
/// at threshold `pi` iff `stat >= pi` for `>=` templates and `stat <= pi` for
/// `<` templates.
#[derive(Debug, Clone)]
pub struct ColumnSplits {
    pub stat: Vec<f64>,
    /// Candidate thresholds, ascending.
    pub thresholds: Vec<f64>,
    /// Sample indices sorted by ascending `stat`, ties by index.
    pub order: Vec<u32>,
}

/// Everything the encoder and the solvers need: skeleton, reduced templates,
/// time grid, robustness table, labels, candidate thresholds and `lambda`.
#[derive(Debug, Clone)]
pub struct InferenceProblem {
    skeleton: ClassificationTree,
    table: RobustnessTable,
    splits: Vec<ColumnSplits>,
    labels: Vec<Label>,
    n_classes: usize,
    lambda: f64,
    dataset_hash: String,
    grid: GridSpec,
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::Lambda(lambda))
    }
}

impl InferenceProblem {
    /// Builds the reduced template set and time grid for `config.level`,
    /// precomputes the table and the threshold candidates.
    pub fn new(dataset: &LabeledDataset, config: &ProblemConfig) -> Result<Self> {
        check_lambda(config.lambda)?;
        if !(1..=2).contains(&config.level) {
            return Err(Error::InconsistentProblem(format!(
                "primitive level must be 1 or 2, got {}",
                config.level
            )));
        }
        let skeleton = build_skeleton(config.depth)?;
        let horizon = dataset.horizon();
        let stride = config.stride.unwrap_or_else(|| default_stride(horizon));
        if stride == 0 {
            return Err(Error::InconsistentProblem("stride must be positive".into()));
        }
        let templates = reduce_by_symmetry(&build_primitive_set(config.level, dataset.dims()))?;
        let mut thetas = enumerate_time_params(1, horizon, stride, config.max_width);
        if config.level >= 2 {
            thetas.extend(enumerate_time_params(2, horizon, stride, config.max_width));
        }
        let table = precompute_table(dataset, &templates, &thetas)?;
        let grid = GridSpec {
            level: config.level,
            stride,
            max_width: config.max_width,
        };
        InferenceProblem::from_table(dataset, skeleton, table, config.lambda, grid)
    }

    /// Uses a table computed elsewhere, e.g. loaded from a cache.
    pub fn from_table(
        dataset: &LabeledDataset,
        skeleton: ClassificationTree,
        table: RobustnessTable,
        lambda: f64,
        grid: GridSpec,
    ) -> Result<Self> {
        check_lambda(lambda)?;
        if table.n_samples() != dataset.len() {
            return Err(Error::InconsistentProblem(format!(
                "table has {} samples, dataset {}",
                table.n_samples(),
                dataset.len()
            )));
        }
        let splits = table
            .columns()
            .iter()
            .map(|col| {
                let sign = table.templates()[col.template].relation.sign();
                let stat: Vec<f64> = col.values.iter().map(|t| sign * t).collect();
                let mut order: Vec<u32> = (0..stat.len() as u32).collect();
                order.sort_by(|&a, &b| stat[a as usize].total_cmp(&stat[b as usize]).then(a.cmp(&b)));
                ColumnSplits {
                    thresholds: candidate_thresholds(&stat),
                    stat,
                    order,
                }
            })
            .collect();
        Ok(InferenceProblem {
            skeleton,
            table,
            splits,
            labels: dataset.labels(),
            n_classes: dataset.n_classes(),
            lambda,
            dataset_hash: dataset.content_hash(),
            grid,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(InferenceProblem { lambda, ..self.clone() })
    }

    pub fn skeleton(&self) -> &ClassificationTree {
        &self.skeleton
    }

    pub fn depth(&self) -> usize {
        self.skeleton.depth()
    }

    pub fn templates(&self) -> &[PrimitiveTemplate] {
        self.table.templates()
    }

    pub fn thetas(&self) -> &[TimeParams] {
        self.table.thetas()
    }

    pub fn table(&self) -> &RobustnessTable {
        &self.table
    }

    pub fn columns(&self) -> &[Column] {
        self.table.columns()
    }

    pub fn splits(&self, column: usize) -> &ColumnSplits {
        &self.splits[column]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dataset_hash(&self) -> &str {
        &self.dataset_hash
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Column index of a `(template, theta)` pair.
    pub fn column_index(&self, template: usize, theta: usize) -> Option<usize> {
        self.columns()
            .iter()
            .position(|c| c.template == template && c.theta == theta)
    }

    /// Whether the column is a `>=` template.
    pub fn is_ge(&self, column: usize) -> bool {
        self.templates()[self.columns()[column].template].relation.sign() > 0.0
    }

    pub fn goes_left(&self, column: usize, threshold: f64, sample: usize) -> bool {
        let s = self.splits[column].stat[sample];
        if self.is_ge(column) {
            s >= threshold
        } else {
            s <= threshold
        }
    }

    pub fn decision(&self, column: usize, threshold_index: usize) -> Decision {
        let col = &self.columns()[column];
        Decision {
            template_id: col.template,
            theta_id: col.theta,
            threshold_index,
            template: self.templates()[col.template].clone(),
            theta: self.thetas()[col.theta].clone(),
            threshold: self.splits[column].thresholds[threshold_index],
        }
    }

    /// Largest absolute candidate threshold over all columns.
    pub fn max_abs_threshold(&self) -> f64 {
        self.splits
            .iter()
            .flat_map(|s| s.thresholds.iter())
            .fold(0.0, |m, t| m.max(t.abs()))
    }

    /// Big-M constant: bounds `|rho|` for every sample, template, time
    /// parameter and admissible threshold.
    pub fn big_m(&self) -> f64 {
        self.table.max_abs() + self.max_abs_threshold() + 1.0
    }

    /// `(1 - lambda) * correct - lambda * decisions`.
    pub fn objective(&self, correct: usize, decisions: usize) -> f64 {
        (1.0 - self.lambda) * correct as f64 - self.lambda * decisions as f64
    }
}
