//! Wall-time scaling of the state loop in `T` (observations) and `N`
//! (neurons), used to check the `O(alpha T N^2 + T N D)` cost.

use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{IrregularSeries, IstsDataset, Observation};
use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::model::TimeEncodingMode;
use crate::reservoir::{self, init_reservoir, ReservoirParams};
use crate::rng::SeedTree;
use crate::timecode::TimeEncoder;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingConfig {
    pub size: usize,
    pub steps: usize,
    pub series: usize,
    pub sparsity: f64,
    pub time_encoding: TimeEncodingMode,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            size: 200,
            steps: 4000,
            series: 2,
            sparsity: 0.1,
            time_encoding: TimeEncodingMode::default(),
            repeats: 3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub size: usize,
    pub steps: usize,
    /// Median wall time in seconds.
    pub median_secs: f64,
    pub runs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub base: Timing,
    pub double_steps: Timing,
    pub double_size: Timing,
    /// `double_steps / base`.
    pub steps_ratio: f64,
    /// `double_size / base`.
    pub size_ratio: f64,
}

/// Random irregular dataset with `series` series of `steps` observations each.
pub fn synthetic_dataset(series: usize, steps: usize, seed: u64) -> Result<IstsDataset> {
    let tree = SeedTree::new(seed);
    let list = (0..series)
        .map(|d| {
            let mut rng = tree.child(d as u64).rng();
            let mut t = 0.0;
            let obs = (0..steps)
                .map(|_| {
                    t += rng.random_range(1..=6) as f64;
                    Observation::new(t, rng.random_range(-1.0..1.0))
                })
                .collect();
            IrregularSeries::new(format!("s{d}"), obs)
        })
        .collect::<Result<Vec<_>>>()?;
    IstsDataset::new(list, None)
}

/// Median wall time of running the reservoirs over a synthetic dataset.
pub fn time_run(cfg: &ScalingConfig, size: usize, steps: usize, exec: Execution) -> Result<Timing> {
    if cfg.repeats == 0 {
        return Err(invalid("repeats must be >= 1"));
    }
    let data = synthetic_dataset(cfg.series, steps, cfg.seed)?;
    let te = cfg.time_encoding.resolve(data.max_time())?;
    let params = ReservoirParams { size, sparsity: cfg.sparsity, ..Default::default() };
    let reservoirs = (0..cfg.series)
        .map(|d| init_reservoir(&ReservoirParams { seed: cfg.seed + d as u64, ..params }, te.as_ref().map_or(0, |c| c.dim)))
        .collect::<Result<Vec<_>>>()?;
    let encoder = te.as_ref().map(|c| TimeEncoder::new(c, &data.rates())).transpose()?;
    let mut runs = Vec::with_capacity(cfg.repeats);
    for _ in 0..cfg.repeats {
        let start = Instant::now();
        let traj = reservoir::run(&reservoirs, &data, encoder.as_ref(), exec)?;
        std::hint::black_box(&traj);
        runs.push(start.elapsed().as_secs_f64());
    }
    let mut sorted = runs.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(Timing { size, steps, median_secs: sorted[sorted.len() / 2], runs })
}

/// Times the base setting, doubled `T`, and doubled `N`.
pub fn scaling(cfg: &ScalingConfig, exec: Execution) -> Result<ScalingReport> {
    let base = time_run(cfg, cfg.size, cfg.steps, exec)?;
    let double_steps = time_run(cfg, cfg.size, cfg.steps * 2, exec)?;
    let double_size = time_run(cfg, cfg.size * 2, cfg.steps, exec)?;
    Ok(ScalingReport {
        steps_ratio: double_steps.median_secs / base.median_secs,
        size_ratio: double_size.median_secs / base.median_secs,
        base,
        double_steps,
        double_size,
    })
}
