//! Seeded synthetic datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{LabeledDataset, Sample};
use crate::stl::Signal;

/// Harbor-surveillance geometry. Positions are in arbitrary map units,
/// `x1` is the east coordinate and `x2` the north coordinate.
pub mod naval {
    /// Trajectories have 61 samples, `H = 60`.
    pub const STEPS: usize = 61;
    pub const NORMAL: usize = 1;
    pub const ABNORMAL: usize = 2;

    /// Open sea, east of the map, where every trajectory starts.
    pub const SEA_X: (f64, f64) = (78.0, 88.0);
    pub const SEA_Y: (f64, f64) = (30.0, 50.0);
    /// Harbor entrance on the west side.
    pub const HARBOR_X: (f64, f64) = (5.0, 15.0);
    pub const HARBOR_Y: (f64, f64) = (35.0, 45.0);
    /// The island lies south of the direct sea-harbor route.
    pub const ISLAND_X: (f64, f64) = (35.0, 45.0);
    pub const ISLAND_Y: (f64, f64) = (10.0, 18.0);
    /// Turning point of vessels that approach the island and head back out.
    pub const APPROACH_X: (f64, f64) = (42.0, 52.0);
    pub const APPROACH_Y: (f64, f64) = (29.0, 35.0);
    /// Vessels south of this line are at the island.
    pub const ISLAND_Y_EDGE: f64 = 24.0;
    /// Vessels west of this line are inside the harbor.
    pub const HARBOR_X_EDGE: f64 = 20.0;
    /// Standard deviation of the per-step position noise.
    pub const NOISE: f64 = 0.4;
}

/// Triangle and plateaued waves.
pub mod plateau {
    /// Traces have 15 samples, `H = 14`.
    pub const STEPS: usize = 15;
    pub const LOW: f64 = 0.0;
    pub const HIGH: f64 = 4.0;
    /// Period of the plain triangle wave (rise 4 steps, fall 4 steps).
    pub const PERIOD: usize = 8;
    /// Plateau durations (in time-steps) of the class-2 variants.
    pub const PLATEAUS: [usize; 2] = [2, 3];
    pub const NOISE: f64 = 0.01;
    pub const TRIANGLE: usize = 100;
    pub const PLATEAUED: [usize; 2] = [70, 70];
    pub const CONSTANT: usize = 30;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NavalFamily {
    /// Heads straight into the harbor.
    Normal,
    /// Approaches the island, then returns to the open sea.
    Return,
    /// Veers to the island, then heads into the harbor.
    Veer,
}

impl NavalFamily {
    pub fn label(self) -> usize {
        match self {
            NavalFamily::Normal => naval::NORMAL,
            NavalFamily::Return | NavalFamily::Veer => naval::ABNORMAL,
        }
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    rng.gen_range(lo..=hi)
}

/// Piecewise-linear path through `(time, x, y)` waypoints, held after the last one.
fn waypoint_path(waypoints: &[(usize, f64, f64)], steps: usize) -> Vec<(f64, f64)> {
    (0..steps)
        .map(|t| {
            let next = waypoints.iter().position(|w| w.0 >= t);
            match next {
                Some(0) => (waypoints[0].1, waypoints[0].2),
                Some(j) => {
                    let (t0, x0, y0) = waypoints[j - 1];
                    let (t1, x1, y1) = waypoints[j];
                    let a = (t - t0) as f64 / (t1 - t0) as f64;
                    (x0 + a * (x1 - x0), y0 + a * (y1 - y0))
                }
                None => {
                    let last = waypoints[waypoints.len() - 1];
                    (last.1, last.2)
                }
            }
        })
        .collect()
}

fn naval_trajectory(family: NavalFamily, rng: &mut ChaCha8Rng) -> Signal {
    use naval::*;
    let start = (0, uniform(rng, SEA_X), uniform(rng, SEA_Y));
    let harbor = |rng: &mut ChaCha8Rng, t: usize| (t, uniform(rng, HARBOR_X), uniform(rng, HARBOR_Y));
    let waypoints = match family {
        NavalFamily::Normal => {
            let arrival = rng.gen_range(48..=56);
            vec![start, harbor(rng, arrival)]
        }
        NavalFamily::Veer => {
            let at_island = rng.gen_range(24..=32);
            let island = (at_island, uniform(rng, ISLAND_X), uniform(rng, ISLAND_Y));
            let arrival = rng.gen_range(50..=58);
            vec![start, island, harbor(rng, arrival)]
        }
        NavalFamily::Return => {
            let turn = rng.gen_range(24..=32);
            let approach = (turn, uniform(rng, APPROACH_X), uniform(rng, APPROACH_Y));
            let out = (STEPS - 1, uniform(rng, (70.0, 85.0)), uniform(rng, SEA_Y));
            vec![start, approach, out]
        }
    };
    let noise = Normal::new(0.0, NOISE).expect("valid noise scale");
    let rows = waypoint_path(&waypoints, STEPS)
        .into_iter()
        .map(|(x, y)| vec![x + noise.sample(rng), y + noise.sample(rng)])
        .collect();
    Signal::new(rows).expect("generated trajectory is well-formed")
}

/// Two-dimensional vessel trajectories, `n_per_class` for each of the three
/// behavior families, in the order normal, return, veer. Normal vessels are
/// labeled [`naval::NORMAL`], both other families [`naval::ABNORMAL`].
pub fn gen_naval(n_per_class: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(3 * n_per_class);
    for family in [NavalFamily::Normal, NavalFamily::Return, NavalFamily::Veer] {
        for _ in 0..n_per_class {
            samples.push(Sample {
                signal: naval_trajectory(family, &mut rng),
                label: family.label(),
            });
        }
    }
    LabeledDataset::new(samples, Some(2)).expect("generated dataset is well-formed")
}

/// One period of a triangle wave whose peak is held for `plateau` extra steps.
fn wave_period(plateau: usize) -> Vec<f64> {
    let rise = (0..4).map(|v| v as f64);
    let top = std::iter::repeat_n(plateau::HIGH, plateau + 1);
    let fall = (1..4).rev().map(|v| v as f64);
    rise.chain(top).chain(fall).collect()
}

fn shifted_wave(plateau: usize, phase: usize) -> Vec<f64> {
    let period = wave_period(plateau);
    (0..plateau::STEPS)
        .map(|t| period[(t + phase) % period.len()])
        .collect()
}

/// Plateau-wave study with uniform noise in `[-0.01, 0.01]`.
pub fn gen_plateau_waves(seed: u64) -> LabeledDataset {
    gen_plateau_waves_with_noise(seed, plateau::NOISE)
}

/// 300 one-dimensional traces with `H = 14`: 100 class-1 triangle waves
/// (period 8, values 0..4) followed by 200 class-2 traces, namely 70 waves
/// whose peak lasts 2 extra steps, 70 lasting 3 extra steps, 30 constant at
/// the lower bound and 30 at the upper bound. Waves start at a random phase.
pub fn gen_plateau_waves_with_noise(seed: u64, noise: f64) -> LabeledDataset {
    use plateau::*;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut traces: Vec<(Vec<f64>, usize)> = Vec::with_capacity(300);
    for _ in 0..TRIANGLE {
        let phase = rng.gen_range(0..PERIOD);
        traces.push((shifted_wave(0, phase), 1));
    }
    for (p, count) in PLATEAUS.into_iter().zip(PLATEAUED) {
        for _ in 0..count {
            let phase = rng.gen_range(0..PERIOD + p);
            traces.push((shifted_wave(p, phase), 2));
        }
    }
    for level in [LOW, HIGH] {
        for _ in 0..CONSTANT {
            traces.push((vec![level; STEPS], 2));
        }
    }
    let samples = traces
        .into_iter()
        .map(|(values, label)| {
            let values = values
                .into_iter()
                .map(|v| {
                    if noise > 0.0 {
                        v + rng.gen_range(-noise..=noise)
                    } else {
                        v
                    }
                })
                .collect();
            Sample {
                signal: Signal::scalar(values).expect("generated wave is well-formed"),
                label,
            }
        })
        .collect();
    LabeledDataset::new(samples, Some(2)).expect("generated dataset is well-formed")
}
