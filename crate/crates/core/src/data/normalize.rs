//! Per-series z-score normalisation fitted on a training range.

use serde::{Deserialize, Serialize};

use crate::data::IstsDataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub mean: f64,
    pub scale: f64,
    /// Set when the fitted variance was zero; `scale` is then 1.
    pub zero_variance: bool,
}

impl AffineParams {
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.scale
    }

    pub fn invert(&self, v: f64) -> f64 {
        v * self.scale + self.mean
    }
}

/// One affine map per series. Serialises to the JSON sidecar written next
/// to normalised datasets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub params: Vec<AffineParams>,
}

impl Normalizer {
    /// Fits on every observation.
    pub fn fit(dataset: &IstsDataset) -> Result<Self> {
        Self::fit_where(dataset, |_| true)
    }

    /// Fits on the observations whose timestamp satisfies `in_training`
    /// (population mean and standard deviation).
    pub fn fit_where(dataset: &IstsDataset, in_training: impl Fn(f64) -> bool) -> Result<Self> {
        let mut params = Vec::with_capacity(dataset.num_series());
        for s in dataset.series() {
            let vals: Vec<f64> = s
                .observations()
                .iter()
                .filter(|o| in_training(o.time))
                .map(|o| o.value)
                .collect();
            if vals.is_empty() {
                return Err(Error::EmptyDataset(format!(
                    "series '{}' has no observations in the training range",
                    s.label()
                )));
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            let zero_variance = !(std > f64::EPSILON * mean.abs().max(1.0));
            if zero_variance {
                log::warn!("series '{}' has zero variance; scale set to 1", s.label());
            }
            params.push(AffineParams { mean, scale: if zero_variance { 1.0 } else { std }, zero_variance });
        }
        Ok(Self { params })
    }

    pub fn apply(&self, dataset: &IstsDataset) -> Result<IstsDataset> {
        self.check(dataset)?;
        let series = dataset
            .series()
            .iter()
            .zip(&self.params)
            .map(|(s, p)| s.map_values(|v| p.apply(v)))
            .collect();
        Ok(dataset.with_series(series))
    }

    pub fn invert(&self, dataset: &IstsDataset) -> Result<IstsDataset> {
        self.check(dataset)?;
        let series = dataset
            .series()
            .iter()
            .zip(&self.params)
            .map(|(s, p)| s.map_values(|v| p.invert(v)))
            .collect();
        Ok(dataset.with_series(series))
    }

    /// Indices of the series flagged as zero-variance.
    pub fn zero_variance_series(&self) -> Vec<usize> {
        self.params.iter().enumerate().filter(|(_, p)| p.zero_variance).map(|(i, _)| i).collect()
    }

    fn check(&self, dataset: &IstsDataset) -> Result<()> {
        if dataset.num_series() != self.params.len() {
            return Err(Error::Dimension(format!(
                "normaliser has {} series, dataset has {}",
                self.params.len(),
                dataset.num_series()
            )));
        }
        Ok(())
    }
}
