//! Run configuration: defaults, then `--config` TOML, then command-line flags.
//! The resolved value is written back as `config.toml` in the output directory.

use std::path::{Path, PathBuf};

use anyhow::Context as _;
use serde::{Deserialize, Serialize};

use teesn::bench::ScalingConfig;
use teesn::data::{CsvSchema, IntervalDist, MgParams};
use teesn::memory::McProtocol;
use teesn::model::{Ablation, ModelConfig, Task};
use teesn::search::{GaConfig, SearchSpace};

use crate::exit::Missing;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed; drawn and recorded when absent.
    pub seed: Option<u64>,
    pub data: DataConfig,
    pub split: SplitConfig,
    pub task: Task,
    pub model: ModelConfig,
    pub ablations: Vec<Ablation>,
    pub generate: GenerateConfig,
    pub mc: McConfig,
    pub search: SearchConfig,
    pub curve: CurveConfig,
    pub bench: ScalingConfig,
}

/// Dataset source. Without `path` the Mackey-Glass benchmark is generated
/// from `[generate]` and the global seed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    pub targets: Option<PathBuf>,
    pub schema: CsvSchema,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Fraction of the samples (in time order) used for training.
    pub train_fraction: f64,
    pub folds: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_fraction: 0.8, folds: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub mg: MgParams,
    pub observations: usize,
    pub gaps: IntervalDist,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self { mg: MgParams::default(), observations: 1000, gaps: IntervalDist::Uniform { low: 1, high: 6 } }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    /// Reservoir size; defaults to `model.reservoir.size`.
    pub size: Option<usize>,
    pub protocol: McProtocol,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub ga: GaConfig,
    pub space: SearchSpace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveConfig {
    pub dim: usize,
    pub max_time: f64,
    pub rate: f64,
    /// Number of frequency bases per curve.
    pub ks: Vec<usize>,
    pub max_distance: f64,
    pub step: f64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self { dim: 64, max_time: 1000.0, rate: 1.0, ks: vec![1, 4], max_distance: 1000.0, step: 1.0 }
    }
}

impl CurveConfig {
    /// `K = 1` gives `{MT}`; larger `K` gives `MT * 2^(i-1)` for `i < K`,
    /// so `K = 4` is the multi-frequency set `{MT/2, MT, 2MT, 4MT}`.
    pub fn bases(&self, k: usize) -> Vec<f64> {
        match k {
            1 => vec![self.max_time],
            _ => (0..k).map(|i| self.max_time * 2f64.powi(i as i32 - 1)).collect(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        if !path.exists() {
            return Err(Missing(path.to_path_buf()).into());
        }
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| crate::exit::usage(format!("config {}: {e}", path.display())))
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("seed resolved before use")
    }

    /// Draws a seed when none was given, so that it can be recorded.
    pub fn resolve_seed(&mut self) {
        if self.seed.is_none() {
            let s = u64::from(rand::random::<u32>());
            log::info!("no seed given, drew {s}");
            self.seed = Some(s);
        }
    }

    /// The model configuration with the configured ablations applied.
    pub fn effective_model(&self) -> ModelConfig {
        self.ablations.iter().fold(self.model.clone(), |m, &a| m.with_ablation(a))
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let text = toml::to_string_pretty(self).context("serialising config")?;
        let path = dir.join("config.toml");
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
