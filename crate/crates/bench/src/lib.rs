//! Fixtures shared by the benchmarks.

use stltree::data::{gen_naval, gen_plateau_waves};
use stltree::stl::parse_formula;
use stltree::{InferenceProblem, LabeledDataset, ProblemConfig, Signal, StlFormula};

/// A long two-dimensional trace with a slow oscillation on each channel.
pub fn long_signal(len: usize) -> Signal {
    let rows = (0..len)
        .map(|k| {
            let t = k as f64;
            vec![(t * 0.05).sin() * 10.0, (t * 0.013).cos() * 4.0 + 1.0]
        })
        .collect();
    Signal::new(rows).unwrap()
}

/// Nested formula touching both channels with wide windows.
pub fn nested_formula() -> StlFormula {
    parse_formula("G[0,200](F[0,50](x1 >= 5) | ((x2 < 0) & F[10,40]G[0,20](x1 < -3)))").unwrap()
}

pub fn naval(n_per_class: usize) -> LabeledDataset {
    gen_naval(n_per_class, 7)
}

pub fn plateau() -> LabeledDataset {
    gen_plateau_waves(7)
}

pub fn problem(dataset: &LabeledDataset, depth: usize, level: usize, stride: usize) -> InferenceProblem {
    let config = ProblemConfig {
        depth,
        level,
        stride: Some(stride),
        ..Default::default()
    };
    InferenceProblem::new(dataset, &config).unwrap()
}
