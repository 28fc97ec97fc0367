use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use serde::{Deserialize, Serialize};
use stltree::data::{gen_naval, gen_plateau_waves, load_dataset, Schema};
use stltree::{split, LabeledDataset, ProblemConfig};

/// Settings shared by `train`, `export-lp` and `check-solution`. Every field
/// is optional so that a config file and command-line flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset file (CSV, wide JSON, or UCR-style .tsv/.txt).
    #[arg(long)]
    pub data: Option<PathBuf>,

    /// Synthetic dataset instead of a file: `naval`, `naval:<n per family>` or `plateau`.
    #[arg(long = "gen", conflicts_with = "data")]
    #[serde(rename = "gen")]
    pub generator: Option<String>,

    /// Tree depth, 1 to 4.
    #[arg(long)]
    pub depth: Option<usize>,

    /// Primitive level: 1 (single operator) or 2 (nested operators).
    #[arg(long)]
    pub level: Option<usize>,

    /// Weight of the decision-node penalty, in [0, 1].
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Spacing of the time-parameter grid.
    #[arg(long)]
    pub stride: Option<usize>,

    /// Widest interval allowed in a time parameter.
    #[arg(long)]
    pub max_width: Option<usize>,

    /// Seed for generators and the train/test split.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Wall-clock limit for the solver, in seconds.
    #[arg(long)]
    pub budget_secs: Option<f64>,

    /// Solver threads.
    #[arg(long)]
    pub threads: Option<usize>,

    /// Train fraction of a stratified split; train on everything when absent.
    #[arg(long)]
    pub split: Option<f64>,

    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set here win over `file`. A data source given here replaces
    /// the file's source as a whole.
    pub fn over(self, file: RunConfig) -> RunConfig {
        let (data, generator) = if self.data.is_some() || self.generator.is_some() {
            (self.data, self.generator)
        } else {
            (file.data, file.generator)
        };
        RunConfig {
            data,
            generator,
            depth: self.depth.or(file.depth),
            level: self.level.or(file.level),
            lambda: self.lambda.or(file.lambda),
            stride: self.stride.or(file.stride),
            max_width: self.max_width.or(file.max_width),
            seed: self.seed.or(file.seed),
            budget_secs: self.budget_secs.or(file.budget_secs),
            threads: self.threads.or(file.threads),
            split: self.split.or(file.split),
            out: self.out.or(file.out),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("stltree-out"))
    }

    pub fn problem(&self) -> ProblemConfig {
        let defaults = ProblemConfig::default();
        ProblemConfig {
            depth: self.depth.unwrap_or(defaults.depth),
            level: self.level.unwrap_or(defaults.level),
            stride: self.stride,
            max_width: self.max_width,
            lambda: self.lambda.unwrap_or(defaults.lambda),
        }
    }

    /// The whole dataset, from the file or the generator.
    pub fn dataset(&self) -> anyhow::Result<LabeledDataset> {
        match (&self.data, &self.generator) {
            (Some(path), None) => {
                load_dataset(path, Schema::from_path(path)).with_context(|| format!("loading {}", path.display()))
            }
            (None, Some(spec)) => generate(spec, self.seed()),
            (Some(_), Some(_)) => bail!("give either a dataset file or a generator, not both"),
            (None, None) => bail!("no dataset: pass --data <file> or --gen <spec>"),
        }
    }

    /// `(train, test)`; `test` is present only when a split is configured.
    pub fn datasets(&self) -> anyhow::Result<(LabeledDataset, Option<LabeledDataset>)> {
        let all = self.dataset()?;
        match self.split {
            Some(fraction) => {
                let (train, test) = split(&all, fraction, self.seed())?;
                Ok((train, Some(test)))
            }
            None => Ok((all, None)),
        }
    }
}

pub fn generate(spec: &str, seed: u64) -> anyhow::Result<LabeledDataset> {
    let (name, arg) = spec.split_once(':').map_or((spec, None), |(n, a)| (n, Some(a)));
    match (name, arg) {
        ("naval", None) => Ok(gen_naval(100, seed)),
        ("naval", Some(n)) => {
            let n: usize = n
                .parse()
                .with_context(|| format!("bad count in generator spec {spec:?}"))?;
            if n == 0 {
                bail!("naval generator needs at least one trajectory per family");
            }
            Ok(gen_naval(n, seed))
        }
        ("plateau", None) => Ok(gen_plateau_waves(seed)),
        _ => bail!("unknown generator {spec:?}; expected naval, naval:<n> or plateau"),
    }
}
