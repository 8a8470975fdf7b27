use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::SeedTree;

/// One time-stamped measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub value: f64,
}

impl Observation {
    pub fn new(time: f64, value: f64) -> Self {
        Self { time, value }
    }
}

/// A time-sorted observation sequence with its sampling rate (observations
/// per unit time).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrregularSeries {
    label: String,
    observations: Vec<Observation>,
    sampling_rate: f64,
}

impl IrregularSeries {
    /// Builds a series and estimates its sampling rate from the timestamps.
    pub fn new(label: impl Into<String>, observations: Vec<Observation>) -> Result<Self> {
        let rate = estimate_rate(&observations)?;
        Self::with_rate(label, observations, rate)
    }

    /// Builds a series with a sampling rate known a priori.
    pub fn with_rate(
        label: impl Into<String>,
        observations: Vec<Observation>,
        sampling_rate: f64,
    ) -> Result<Self> {
        let label = label.into();
        if observations.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "series '{label}' needs at least 2 observations, got {}",
                observations.len()
            )));
        }
        for (i, o) in observations.iter().enumerate() {
            if !o.time.is_finite() || !o.value.is_finite() {
                return Err(Error::InvalidSeries(format!(
                    "series '{label}' observation {i} is not finite"
                )));
            }
        }
        if let Some(i) = observations.windows(2).position(|w| w[1].time <= w[0].time) {
            return Err(Error::InvalidSeries(format!(
                "series '{label}' times not strictly increasing at index {}",
                i + 1
            )));
        }
        if !(sampling_rate.is_finite() && sampling_rate > 0.0) {
            return Err(invalid(format!("sampling rate must be positive, got {sampling_rate}")));
        }
        Ok(Self { label, observations, sampling_rate })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.time)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.value)
    }

    pub fn first_time(&self) -> f64 {
        self.observations[0].time
    }

    pub fn last_time(&self) -> f64 {
        self.observations[self.observations.len() - 1].time
    }

    /// Same timestamps and rate, values replaced through `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> IrregularSeries {
        IrregularSeries {
            label: self.label.clone(),
            observations: self
                .observations
                .iter()
                .map(|o| Observation::new(o.time, f(o.value)))
                .collect(),
            sampling_rate: self.sampling_rate,
        }
    }
}

/// `(count - 1) / (t_last - t_first)`.
pub fn estimate_rate(observations: &[Observation]) -> Result<f64> {
    if observations.len() < 2 {
        return Err(Error::InvalidSeries(format!(
            "sampling rate needs at least 2 observations, got {}",
            observations.len()
        )));
    }
    let span = observations[observations.len() - 1].time - observations[0].time;
    if !(span > 0.0) {
        return Err(Error::InvalidSeries("zero time span".into()));
    }
    Ok((observations.len() - 1) as f64 / span)
}

/// A teacher signal sample (regression value or 0/1 label).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub time: f64,
    pub value: f64,
}

/// `D` irregular series plus an optional teacher signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IstsDataset {
    series: Vec<IrregularSeries>,
    max_time: f64,
    targets: Option<Vec<Target>>,
}

impl IstsDataset {
    pub fn new(series: Vec<IrregularSeries>, targets: Option<Vec<Target>>) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::EmptyDataset("dataset has no series".into()));
        }
        let mut max_time = series
            .iter()
            .map(IrregularSeries::last_time)
            .fold(f64::NEG_INFINITY, f64::max);
        if let Some(targets) = &targets {
            for (i, t) in targets.iter().enumerate() {
                if !t.time.is_finite() || !t.value.is_finite() || t.time < 0.0 {
                    return Err(Error::InvalidSeries(format!(
                        "target {i} must have a finite, non-negative time and finite value"
                    )));
                }
            }
            if targets.windows(2).any(|w| w[1].time < w[0].time) {
                return Err(Error::InvalidSeries("targets must be sorted by time".into()));
            }
            if let Some(last) = targets.last() {
                max_time = max_time.max(last.time);
            }
        }
        Ok(Self { series, max_time, targets })
    }

    pub fn single(series: IrregularSeries) -> Self {
        let max_time = series.last_time();
        Self { series: vec![series], max_time, targets: None }
    }

    pub fn series(&self) -> &[IrregularSeries] {
        &self.series
    }

    pub fn num_series(&self) -> usize {
        self.series.len()
    }

    /// MT: the largest timestamp in the dataset.
    pub fn max_time(&self) -> f64 {
        self.max_time
    }

    pub fn targets(&self) -> Option<&[Target]> {
        self.targets.as_deref()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.series.iter().map(IrregularSeries::sampling_rate).collect()
    }

    pub fn total_observations(&self) -> usize {
        self.series.iter().map(IrregularSeries::len).sum()
    }

    pub(crate) fn with_series(&self, series: Vec<IrregularSeries>) -> IstsDataset {
        IstsDataset { series, max_time: self.max_time, targets: self.targets.clone() }
    }
}

/// Gap distribution for [`irregular_subsample`], in observation steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntervalDist {
    Constant { gap: usize },
    /// Uniform over the integers `low..=high`.
    Uniform { low: usize, high: usize },
}

impl IntervalDist {
    fn validate(&self) -> Result<()> {
        match *self {
            IntervalDist::Constant { gap: 0 } => Err(invalid("gap must be >= 1")),
            IntervalDist::Uniform { low, high } if low == 0 || high < low => {
                Err(invalid(format!("uniform gap range {low}..={high} must satisfy 1 <= low <= high")))
            }
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut impl rand::Rng) -> usize {
        match *self {
            IntervalDist::Constant { gap } => gap,
            IntervalDist::Uniform { low, high } => rng.random_range(low..=high),
        }
    }
}

/// Keeps the first observation and then jumps ahead by random gaps; the
/// sampling rate of the result is re-estimated.
pub fn irregular_subsample(
    series: &IrregularSeries,
    dist: IntervalDist,
    seed: u64,
) -> Result<IrregularSeries> {
    dist.validate()?;
    let mut rng = SeedTree::new(seed).child(crate::rng::streams::SUBSAMPLE).rng();
    let obs = series.observations();
    let mut kept = Vec::new();
    let mut i = 0;
    while i < obs.len() {
        kept.push(obs[i]);
        i += dist.draw(&mut rng);
    }
    if kept.len() < 2 {
        return Err(Error::InvalidSeries(format!(
            "subsample kept {} observation(s); need at least 2",
            kept.len()
        )));
    }
    IrregularSeries::new(series.label(), kept)
}
