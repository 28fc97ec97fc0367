#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stltree::{Interval, LabeledDataset, Sample, Signal, StlFormula};

/// A small seeded classification instance.
pub struct Instance {
    pub dataset: LabeledDataset,
    pub depth: usize,
    pub lambda: f64,
}

/// 4 to 12 scalar traces with `H <= 6`, two or three classes, depth 1 or 2
/// and `lambda` in `{0, 0.3}`. Even seeds draw small integers, which makes
/// many columns tie; odd seeds draw values on a 0.01 grid.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=12);
    let horizon = rng.gen_range(1..=6);
    let classes = if rng.gen_bool(0.25) { 3 } else { 2 };
    let integral = seed.is_multiple_of(2);
    let samples = (0..n)
        .map(|i| {
            let values = (0..=horizon)
                .map(|_| {
                    if integral {
                        rng.gen_range(0..=4) as f64
                    } else {
                        (rng.gen_range(-200..=200) as f64) / 100.0
                    }
                })
                .collect();
            // The first samples cover every class.
            let label = if i < classes { i + 1 } else { rng.gen_range(1..=classes) };
            Sample {
                signal: Signal::scalar(values).unwrap(),
                label,
            }
        })
        .collect();
    Instance {
        dataset: LabeledDataset::new(samples, Some(classes)).unwrap(),
        depth: rng.gen_range(1..=2),
        lambda: if rng.gen_bool(0.5) { 0.0 } else { 0.3 },
    }
}

pub fn random_signal(rng: &mut impl Rng, horizon: usize, dims: usize, lo: f64, hi: f64) -> Signal {
    let rows = (0..=horizon)
        .map(|_| (0..dims).map(|_| rng.gen_range(lo..=hi)).collect())
        .collect();
    Signal::new(rows).unwrap()
}

pub fn random_interval(rng: &mut impl Rng, max_hi: usize) -> Interval {
    let a = rng.gen_range(0..=max_hi);
    let b = rng.gen_range(a..=max_hi);
    Interval::new(a, b).unwrap()
}

/// Random formula with at most `depth` nested connectives over `dims` variables.
pub fn random_formula(rng: &mut impl Rng, depth: usize, dims: usize) -> StlFormula {
    let var = rng.gen_range(0..dims);
    let pi = (rng.gen_range(-300..=300) as f64) / 100.0;
    if depth == 0 {
        return match rng.gen_range(0..3) {
            0 => StlFormula::ge(var, pi),
            1 => StlFormula::lt(var, pi),
            _ => StlFormula::True,
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..6) {
        0 => random_formula(rng, d, dims).negate(),
        1 => random_formula(rng, d, dims).and(random_formula(rng, d, dims)),
        2 => random_formula(rng, d, dims).or(random_formula(rng, d, dims)),
        3 => StlFormula::eventually(random_interval(rng, 4), random_formula(rng, d, dims)),
        4 => StlFormula::always(random_interval(rng, 4), random_formula(rng, d, dims)),
        _ => random_formula(rng, d, dims),
    }
}

/// Whether `f` is a single primitive with exactly `operators` nested temporal
/// operators over one (possibly negated) predicate.
pub fn is_primitive(f: &StlFormula, operators: usize) -> bool {
    match f {
        StlFormula::Eventually(_, body) | StlFormula::Always(_, body) if operators > 0 => {
            is_primitive(body, operators - 1)
        }
        StlFormula::Predicate { .. } => operators == 0,
        StlFormula::Not(inner) => operators == 0 && matches!(**inner, StlFormula::Predicate { .. }),
        _ => false,
    }
}
