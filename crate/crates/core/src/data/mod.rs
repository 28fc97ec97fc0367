//! Labeled trace datasets: ingestion, export, stratified splitting and the
//! seeded synthetic generators.

mod generators;
mod io;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::stl::Signal;

pub use generators::{gen_naval, gen_plateau_waves, gen_plateau_waves_with_noise, naval, plateau, NavalFamily};
pub use io::{load_dataset, save_dataset, Schema};

/// One-based class identifier.
pub type Label = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub signal: Signal,
    pub label: Label,
}

/// Labeled traces sharing one horizon and dimension. Classes are `1..=n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<Sample>,
    n_classes: usize,
}

impl LabeledDataset {
    /// Validates the samples; the class count defaults to the largest label.
    pub fn new(samples: Vec<Sample>, n_classes: Option<usize>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let (horizon, dims) = (first.signal.horizon(), first.signal.dims());
        for (i, sample) in samples.iter().enumerate() {
            if sample.signal.horizon() != horizon {
                return Err(Error::RaggedTrace {
                    row: i,
                    expected: horizon + 1,
                    found: sample.signal.len(),
                });
            }
            if sample.signal.dims() != dims {
                return Err(Error::InvalidDataset(format!(
                    "sample {i} has {} dimensions, expected {dims}",
                    sample.signal.dims()
                )));
            }
        }
        let max_label = samples.iter().map(|s| s.label).max().unwrap_or(0);
        let n_classes = n_classes.unwrap_or(max_label);
        if let Some((i, s)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| s.label == 0 || s.label > n_classes)
        {
            return Err(Error::UnknownLabel {
                row: i,
                label: s.label.to_string(),
            });
        }
        let dataset = LabeledDataset { samples, n_classes };
        for (class, count) in dataset.class_counts() {
            if count == 0 {
                log::warn!("class {class} has no samples");
            }
        }
        Ok(dataset)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.samples[0].signal.horizon()
    }

    pub fn dims(&self) -> usize {
        self.samples[0].signal.dims()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn classes(&self) -> impl Iterator<Item = Label> {
        1..=self.n_classes
    }

    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn signals(&self) -> impl Iterator<Item = &Signal> {
        self.samples.iter().map(|s| &s.signal)
    }

    pub fn class_counts(&self) -> BTreeMap<Label, usize> {
        let mut counts: BTreeMap<Label, usize> = self.classes().map(|c| (c, 0)).collect();
        for s in &self.samples {
            *counts.entry(s.label).or_default() += 1;
        }
        counts
    }

    /// The samples at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let samples = indices.iter().map(|&i| self.samples[i].clone()).collect();
        LabeledDataset::new(samples, Some(self.n_classes))
    }

    /// Hex SHA-256 over labels and the exact bit patterns of all values.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!(
            "{}:{}:{}:{}\n",
            self.len(),
            self.horizon(),
            self.dims(),
            self.n_classes
        ));
        for s in &self.samples {
            hasher.update((s.label as u64).to_le_bytes());
            for v in s.signal.as_flat() {
                hasher.update(v.to_bits().to_le_bytes());
            }
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Stratified, seeded train/test split. Both parts keep the input order.
pub fn split(dataset: &LabeledDataset, train_fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::EmptySplit {
            fraction: train_fraction,
        });
    }
    let members: Vec<Vec<usize>> = dataset
        .classes()
        .map(|class| {
            (0..dataset.len())
                .filter(|&i| dataset.samples[i].label == class)
                .collect()
        })
        .collect();

    // Largest-remainder apportionment of the train quota over classes.
    let quotas: Vec<f64> = members.iter().map(|m| m.len() as f64 * train_fraction).collect();
    let mut n_train: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let target = (dataset.len() as f64 * train_fraction).round() as usize;
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut missing = target.saturating_sub(n_train.iter().sum());
    for &c in &order {
        if missing == 0 {
            break;
        }
        if n_train[c] < members[c].len() {
            n_train[c] += 1;
            missing -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (mut m, n) in members.into_iter().zip(n_train) {
        m.shuffle(&mut rng);
        train.extend_from_slice(&m[..n]);
        test.extend_from_slice(&m[n..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptySplit {
            fraction: train_fraction,
        });
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((dataset.subset(&train)?, dataset.subset(&test)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(labels: &[Label]) -> LabeledDataset {
        let samples = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| Sample {
                signal: Signal::scalar(vec![i as f64, 0.0]).unwrap(),
                label,
            })
            .collect();
        LabeledDataset::new(samples, None).unwrap()
    }

    #[test]
    fn rejects_mixed_horizons_and_bad_labels() {
        let a = Sample {
            signal: Signal::scalar(vec![0.0; 60]).unwrap(),
            label: 1,
        };
        let b = Sample {
            signal: Signal::scalar(vec![0.0; 61]).unwrap(),
            label: 1,
        };
        assert!(matches!(
            LabeledDataset::new(vec![a.clone(), b], None),
            Err(Error::RaggedTrace { .. })
        ));
        let zero = Sample { label: 0, ..a.clone() };
        assert!(matches!(
            LabeledDataset::new(vec![a.clone(), zero], None),
            Err(Error::UnknownLabel { .. })
        ));
        assert!(matches!(LabeledDataset::new(vec![], None), Err(Error::EmptyDataset)));
        assert!(matches!(
            LabeledDataset::new(vec![Sample { label: 3, ..a }], Some(2)),
            Err(Error::UnknownLabel { .. })
        ));
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let labels: Vec<Label> = (0..200).map(|i| i % 4 + 1).collect();
        let data = toy(&labels);
        let (train, test) = split(&data, 0.75, 3).unwrap();
        assert_eq!((train.len(), test.len()), (150, 50));
        for (class, count) in train.class_counts() {
            let expected = 0.75 * data.class_counts()[&class] as f64;
            assert!((count as f64 - expected).abs() <= 1.0);
        }
        let mut all: Vec<f64> = train.signals().chain(test.signals()).map(|s| s.value(0, 0)).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..200).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn split_two_samples() {
        let data = toy(&[1, 2]);
        let (train, test) = split(&data, 0.5, 0).unwrap();
        assert_eq!((train.len(), test.len()), (1, 1));
    }

    #[test]
    fn split_is_seeded() {
        let data = toy(&(0..40).map(|i| i % 2 + 1).collect::<Vec<_>>());
        assert_eq!(split(&data, 0.6, 9).unwrap(), split(&data, 0.6, 9).unwrap());
        assert_ne!(split(&data, 0.6, 9).unwrap().0, split(&data, 0.6, 10).unwrap().0);
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        let data = toy(&[1, 2]);
        assert!(split(&data, 0.1, 0).is_err());
        assert!(split(&data, 0.0, 0).is_err());
        assert!(split(&data, 1.0, 0).is_err());
    }

    #[test]
    fn hash_depends_on_values() {
        let a = toy(&[1, 2]);
        let mut b = a.clone();
        assert_eq!(a.content_hash(), b.content_hash());
        b.samples[0].label = 2;
        assert_ne!(a.content_hash(), b.content_hash());
    }
}
