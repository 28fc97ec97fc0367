use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::{PrimitiveTemplate, TimeParams};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::stl;

/// Zero-threshold robustness of every sample for one `(template, theta)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub template: usize,
    pub theta: usize,
    pub values: Vec<f64>,
}

/// `tau[i, psi, theta] = rho(s_i, psi(0, theta), 0)` for every sample and every
/// arity-compatible `(psi, theta)` pair. Columns are ordered by template, then
/// by theta.
#[derive(Debug, Clone)]
pub struct RobustnessTable {
    templates: Vec<PrimitiveTemplate>,
    thetas: Vec<TimeParams>,
    columns: Vec<Column>,
    n_samples: usize,
    index: HashMap<(usize, usize), usize>,
}

impl RobustnessTable {
    fn from_columns(
        templates: Vec<PrimitiveTemplate>,
        thetas: Vec<TimeParams>,
        columns: Vec<Column>,
        n_samples: usize,
    ) -> Self {
        let index = columns
            .iter()
            .enumerate()
            .map(|(c, col)| ((col.template, col.theta), c))
            .collect();
        RobustnessTable {
            templates,
            thetas,
            columns,
            n_samples,
            index,
        }
    }

    pub fn templates(&self) -> &[PrimitiveTemplate] {
        &self.templates
    }

    pub fn thetas(&self) -> &[TimeParams] {
        &self.thetas
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn column(&self, template: usize, theta: usize) -> Option<&Column> {
        self.index.get(&(template, theta)).map(|&c| &self.columns[c])
    }

    pub fn get(&self, sample: usize, template: usize, theta: usize) -> Option<f64> {
        self.column(template, theta).map(|c| c.values[sample])
    }

    /// Largest `|tau|` over the table.
    pub fn max_abs(&self) -> f64 {
        self.columns
            .iter()
            .flat_map(|c| c.values.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes the table as CSV with a header identifying dataset and grid.
    pub fn write_csv(&self, path: impl AsRef<Path>, dataset_hash: &str, horizon: usize, grid: &str) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "# dataset_hash={dataset_hash}");
        let _ = writeln!(out, "# horizon={horizon}");
        let _ = writeln!(out, "# grid={grid}");
        out.push_str("i,psi,theta,tau\n");
        for col in &self.columns {
            for (i, v) in col.values.iter().enumerate() {
                let _ = writeln!(out, "{i},{},{},{v}", col.template, col.theta);
            }
        }
        let path = path.as_ref();
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads a table written by [`RobustnessTable::write_csv`], checking that
    /// it belongs to the same dataset and grid.
    pub fn read_csv(
        path: impl AsRef<Path>,
        dataset: &LabeledDataset,
        templates: &[PrimitiveTemplate],
        thetas: &[TimeParams],
        grid: &str,
    ) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut header = HashMap::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(meta) = line.strip_prefix("# ") {
                if let Some((k, v)) = meta.split_once('=') {
                    header.insert(k.to_string(), v.to_string());
                }
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let expect = |key: &str, value: String| -> Result<()> {
            match header.get(key) {
                Some(v) if *v == value => Ok(()),
                other => Err(Error::Manifest(format!(
                    "table cache {key} is {other:?}, expected {value:?}"
                ))),
            }
        };
        expect("dataset_hash", dataset.content_hash())?;
        expect("horizon", dataset.horizon().to_string())?;
        expect("grid", grid.to_string())?;

        let shape = column_shape(templates, thetas);
        let mut values: HashMap<(usize, usize), Vec<Option<f64>>> =
            shape.iter().map(|&k| (k, vec![None; dataset.len()])).collect();
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        for record in reader.records() {
            let record = record?;
            let parse = |j: usize| -> Result<f64> {
                record[j].parse::<f64>().map_err(|_| Error::NonNumeric {
                    row: 0,
                    cell: record[j].to_string(),
                })
            };
            let (i, psi, theta, tau) = (parse(0)? as usize, parse(1)? as usize, parse(2)? as usize, parse(3)?);
            let slot = values
                .get_mut(&(psi, theta))
                .and_then(|col| col.get_mut(i))
                .ok_or_else(|| Error::Manifest(format!("unexpected table cell ({i}, {psi}, {theta})")))?;
            *slot = Some(tau);
        }
        let mut columns = Vec::with_capacity(shape.len());
        for (template, theta) in shape {
            let vals = values
                .remove(&(template, theta))
                .expect("initialized above")
                .into_iter()
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::Manifest(format!("table cache misses cells of column ({template}, {theta})")))?;
            columns.push(Column {
                template,
                theta,
                values: vals,
            });
        }
        Ok(RobustnessTable::from_columns(
            templates.to_vec(),
            thetas.to_vec(),
            columns,
            dataset.len(),
        ))
    }
}

fn column_shape(templates: &[PrimitiveTemplate], thetas: &[TimeParams]) -> Vec<(usize, usize)> {
    templates
        .iter()
        .enumerate()
        .flat_map(|(p, t)| {
            thetas
                .iter()
                .enumerate()
                .filter(move |(_, th)| th.arity() == t.arity())
                .map(move |(q, _)| (p, q))
        })
        .collect()
}

/// Evaluates every sample against every arity-compatible `(template, theta)`
/// pair at zero threshold. Columns are computed in parallel; the result does
/// not depend on scheduling.
pub fn precompute_table(
    dataset: &LabeledDataset,
    templates: &[PrimitiveTemplate],
    thetas: &[TimeParams],
) -> Result<RobustnessTable> {
    let horizon = dataset.horizon();
    let offending: Vec<String> = thetas
        .iter()
        .filter(|th| templates.iter().any(|t| t.arity() == th.arity()))
        .filter(|th| th.joint_horizon() > horizon)
        .map(|th| th.to_string())
        .collect();
    if !offending.is_empty() {
        return Err(Error::GridHorizon {
            horizon,
            thetas: offending,
        });
    }
    if let Some(t) = templates.iter().find(|t| t.var >= dataset.dims()) {
        return Err(Error::InconsistentProblem(format!(
            "template {t} references a dimension the dataset does not have"
        )));
    }

    let columns = column_shape(templates, thetas)
        .into_par_iter()
        .map(|(p, q)| {
            let formula = templates[p]
                .instantiate(&thetas[q], 0.0)
                .expect("arity checked by column_shape");
            let values = dataset.signals().map(|s| stl::rho(s, &formula, 0)).collect();
            Column {
                template: p,
                theta: q,
                values,
            }
        })
        .collect();
    Ok(RobustnessTable::from_columns(
        templates.to_vec(),
        thetas.to_vec(),
        columns,
        dataset.len(),
    ))
}

/// Finite threshold set realizing every split of a column by the sign of
/// `value - pi`: midpoints of consecutive distinct values plus one sentinel
/// below and one above, offset by `max(1, max - min)`. Sorted ascending.
pub fn candidate_thresholds(column: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let (Some(&lo), Some(&hi)) = (sorted.first(), sorted.last()) else {
        return Vec::new();
    };
    let delta = (hi - lo).max(1.0);
    let mut out = Vec::with_capacity(sorted.len() + 1);
    out.push(lo - delta);
    out.extend(sorted.windows(2).map(|w| midpoint(w[0], w[1])));
    out.push(hi + delta);
    out
}

#[inline]
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    a + (b - a) / 2.0
}
