//! End-to-end TE-ESN pipeline: normalise, encode, run the reservoirs, fit the
//! readout, then forecast or early-predict by time decoding.

use serde::{Deserialize, Serialize};

use crate::data::{IstsDataset, Normalizer};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::metrics;
use crate::readout::{self, DesignMatrices, Readout};
use crate::reservoir::{self, init_reservoir, Reservoir, ReservoirParams, StateTrajectory};
use crate::rng::{streams, SeedTree};
use crate::timecode::{TimeEncoder, TimeEncodingConfig};

/// Upper bound on the washout, in samples.
pub const DEFAULT_WASHOUT: usize = 30;

/// How timestamps are encoded before injection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TimeEncodingMode {
    /// No time encoding (plain or leaky ESN behaviour).
    Off,
    /// Single frequency ladder `c_i = MT^(-2i/d)`, not scaled by the
    /// sampling rate.
    TimeVector { dim: usize },
    /// Bases `{MT/2, MT, 2MT, 4MT}`, scaled by each series' sampling rate.
    MultiFrequency { dim: usize },
    /// Explicit bases, scaled by each series' sampling rate.
    Custom { dim: usize, bases: Vec<f64> },
}

impl Default for TimeEncodingMode {
    fn default() -> Self {
        TimeEncodingMode::MultiFrequency { dim: 64 }
    }
}

impl TimeEncodingMode {
    pub fn dim(&self) -> usize {
        match self {
            TimeEncodingMode::Off => 0,
            TimeEncodingMode::TimeVector { dim }
            | TimeEncodingMode::MultiFrequency { dim }
            | TimeEncodingMode::Custom { dim, .. } => *dim,
        }
    }

    /// Resolved configuration for maximum time `max_time`.
    pub fn resolve(&self, max_time: f64) -> Result<Option<TimeEncodingConfig>> {
        Ok(match self {
            TimeEncodingMode::Off => None,
            TimeEncodingMode::TimeVector { dim } => Some(TimeEncodingConfig::single_frequency(*dim, max_time)?),
            TimeEncodingMode::MultiFrequency { dim } => Some(TimeEncodingConfig::multi_frequency(*dim, max_time)?),
            TimeEncodingMode::Custom { dim, bases } => Some(TimeEncodingConfig::new(*dim, bases.clone(), max_time)?),
        })
    }

    fn encoder(&self, cfg: &TimeEncodingConfig, rates: &[f64]) -> Result<TimeEncoder> {
        match self {
            TimeEncodingMode::TimeVector { .. } => TimeEncoder::new(cfg, &vec![1.0; rates.len()]),
            _ => TimeEncoder::new(cfg, rates),
        }
    }
}

/// Mechanism removals used in ablations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    /// Drop the time encoding term.
    NoTe,
    /// `gamma_l = 1`: no long-short memory.
    NoLs,
    /// `gamma_f = 1`: no series fusion.
    NoSf,
}

impl std::str::FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no-te" => Ok(Ablation::NoTe),
            "no-ls" => Ok(Ablation::NoLs),
            "no-sf" => Ok(Ablation::NoSf),
            other => Err(invalid(format!("unknown ablation '{other}' (expected no-te, no-ls, no-sf)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub reservoir: ReservoirParams,
    pub time_encoding: TimeEncodingMode,
    /// Ridge parameter `lambda`.
    pub ridge: f64,
    /// Samples discarded at the start; defaults to
    /// `min(30, 10% of the samples)`.
    #[serde(default)]
    pub washout: Option<usize>,
    /// Overrides the maximum time `MT` taken from the training data.
    #[serde(default)]
    pub max_time: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            reservoir: ReservoirParams::default(),
            time_encoding: TimeEncodingMode::default(),
            ridge: 1e-2,
            washout: None,
            max_time: None,
        }
    }
}

impl ModelConfig {
    pub fn with_ablation(mut self, ablation: Ablation) -> Self {
        match ablation {
            Ablation::NoTe => self.time_encoding = TimeEncodingMode::Off,
            Ablation::NoLs => self.reservoir.leaky_rate = 1.0,
            Ablation::NoSf => self.reservoir.fusion_rate = 1.0,
        }
        self
    }

    /// The vanilla ESN with the same reservoir: no time encoding,
    /// `gamma_l = gamma_f = 1`.
    pub fn plain_esn(&self) -> Self {
        self.clone()
            .with_ablation(Ablation::NoTe)
            .with_ablation(Ablation::NoLs)
            .with_ablation(Ablation::NoSf)
    }

    pub fn validate(&self) -> Result<()> {
        self.reservoir.validate()?;
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(invalid("ridge must be >= 0"));
        }
        if let Some(mt) = self.max_time {
            if !(mt > 0.0) {
                return Err(invalid("max_time must be positive"));
            }
        }
        Ok(())
    }
}

/// What the readout is trained to produce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    /// One-step-ahead forecasting of one series' next observation.
    Forecast { series: usize },
    /// Predict the dataset's teacher signal at each target time from
    /// observations at least `horizon` earlier (strictly earlier when
    /// `horizon` is 0). `binary` targets are scored by AUC-ROC.
    EarlyPredict { horizon: f64, binary: bool },
}

impl Default for Task {
    fn default() -> Self {
        Task::Forecast { series: 0 }
    }
}

impl Task {
    pub fn metric_name(&self) -> &'static str {
        match self {
            Task::EarlyPredict { binary: true, .. } => "auc_roc",
            _ => "mse",
        }
    }
}

/// One supervised sample: predict `value` at `time` from observations with
/// timestamps strictly before `bound`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub bound: f64,
    pub value: f64,
}

/// Samples for `task` on a (normalised) dataset, in time order.
pub fn samples(task: &Task, dataset: &IstsDataset) -> Result<Vec<Sample>> {
    match *task {
        Task::Forecast { series } => {
            let s = dataset
                .series()
                .get(series)
                .ok_or_else(|| invalid(format!("forecast series {series} out of range")))?;
            Ok(s.observations()
                .iter()
                .skip(1)
                .map(|o| Sample { time: o.time, bound: o.time, value: o.value })
                .collect())
        }
        Task::EarlyPredict { horizon, .. } => {
            if !(horizon >= 0.0) {
                return Err(invalid("horizon must be >= 0"));
            }
            let targets = dataset
                .targets()
                .ok_or_else(|| invalid("early prediction needs a teacher signal (targets)"))?;
            Ok(targets
                .iter()
                .map(|t| Sample { time: t.time, bound: t.time - horizon, value: t.value })
                .collect())
        }
    }
}

/// Built reservoirs plus the time encoder for one dataset schema.
#[derive(Clone, Debug)]
struct Machine {
    reservoirs: Vec<Reservoir>,
    encoder: Option<TimeEncoder>,
}

impl Machine {
    fn build(
        config: &ModelConfig,
        te_config: Option<&TimeEncodingConfig>,
        rates: &[f64],
        seed: u64,
    ) -> Result<Self> {
        let tree = SeedTree::new(seed).child(streams::RESERVOIR);
        let te_dim = te_config.map_or(0, |c| c.dim);
        let reservoirs = (0..rates.len())
            .map(|d| {
                let params = ReservoirParams { seed: tree.child(d as u64).seed(), ..config.reservoir };
                init_reservoir(&params, te_dim)
            })
            .collect::<Result<Vec<_>>>()?;
        let encoder = te_config.map(|c| config.time_encoding.encoder(c, rates)).transpose()?;
        Ok(Self { reservoirs, encoder })
    }

    fn from_parts(reservoirs: Vec<Reservoir>, config: &ModelConfig, te: Option<&TimeEncodingConfig>, rates: &[f64]) -> Result<Self> {
        let encoder = te.map(|c| config.time_encoding.encoder(c, rates)).transpose()?;
        Ok(Self { reservoirs, encoder })
    }

    fn run(&self, dataset: &IstsDataset, exec: Execution) -> Result<Vec<StateTrajectory>> {
        reservoir::run(&self.reservoirs, dataset, self.encoder.as_ref(), exec)
    }

    fn state_dim(&self) -> usize {
        self.reservoirs.iter().map(Reservoir::size).sum()
    }

    /// Concatenated latest fused states before `bound`.
    fn state_at(&self, traj: &[StateTrajectory], bound: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.state_dim());
        for (res, t) in self.reservoirs.iter().zip(traj) {
            match t.last_before(bound) {
                Some(i) => out.extend_from_slice(&t.states[i].fused),
                None => out.extend(std::iter::repeat_n(0.0, res.size())),
            }
        }
        out
    }

    /// Concatenated projected encodings of time `t`.
    fn te_at(&self, t: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.state_dim());
        for (d, res) in self.reservoirs.iter().enumerate() {
            match &self.encoder {
                Some(enc) => out.extend(res.project_te(&enc.encode(d, t))),
                None => out.extend(std::iter::repeat_n(0.0, res.size())),
            }
        }
        out
    }

    fn design(&self, traj: &[StateTrajectory], samples: &[Sample]) -> Result<DesignMatrices> {
        let states: Vec<Vec<f64>> = samples.iter().map(|s| self.state_at(traj, s.bound)).collect();
        let te: Vec<Vec<f64>> = samples.iter().map(|s| self.te_at(s.time)).collect();
        let targets: Vec<Vec<f64>> = samples.iter().map(|s| vec![s.value]).collect();
        DesignMatrices::from_samples(&states, &te, &targets)
    }

    fn predict(&self, readout: &Readout, traj: &[StateTrajectory], samples: &[Sample]) -> Result<Vec<f64>> {
        samples
            .iter()
            .map(|s| Ok(readout.decode(&self.state_at(traj, s.bound), &self.te_at(s.time))?[0]))
            .collect()
    }
}

fn default_washout(n_samples: usize) -> usize {
    DEFAULT_WASHOUT.min(n_samples / 10)
}

/// A trained model: frozen reservoirs, readout, normalisation and the
/// schema of the dataset it was trained on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeEsnModel {
    pub config: ModelConfig,
    pub task: Task,
    pub seed: u64,
    pub series_labels: Vec<String>,
    pub rates: Vec<f64>,
    pub time_encoding: Option<TimeEncodingConfig>,
    pub normalizer: Normalizer,
    pub reservoirs: Vec<Reservoir>,
    pub readout: Readout,
    /// Last target time used for training.
    pub train_end: f64,
    pub washout: usize,
}

/// A prediction with its actual value when known, in original units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub time: f64,
    pub predicted: f64,
    pub actual: Option<f64>,
}

/// Scores of predictions against actuals: MSE in normalised (z-score) units
/// and in original units, or AUC for binary tasks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    /// MSE in the original units of the target series (forecast only).
    pub raw_mse: Option<f64>,
}

/// Which samples a training run uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrainRange {
    /// Every sample after the washout.
    All,
    /// Samples with target time `<= end`.
    Until(f64),
    /// Samples whose target time lies outside `[start, end]`.
    Excluding(f64, f64),
}

impl TrainRange {
    fn contains(&self, t: f64) -> bool {
        match *self {
            TrainRange::All => true,
            TrainRange::Until(end) => t <= end,
            TrainRange::Excluding(a, b) => t < a || t > b,
        }
    }
}

/// Trains a model; returns it with the training score.
pub fn train(
    config: &ModelConfig,
    task: &Task,
    dataset: &IstsDataset,
    range: TrainRange,
    seed: u64,
    exec: Execution,
) -> Result<(TeEsnModel, Score)> {
    config.validate()?;
    let normalizer = Normalizer::fit_where(dataset, |t| range.contains(t))?;
    let norm = normalizer.apply(dataset)?;
    let rates = dataset.rates();
    let te = config.time_encoding.resolve(config.max_time.unwrap_or(dataset.max_time()))?;
    let machine = Machine::build(config, te.as_ref(), &rates, seed)?;
    let traj = machine.run(&norm, exec)?;

    let all = samples(task, &norm)?;
    let washout = config.washout.unwrap_or_else(|| default_washout(all.len()));
    let train: Vec<Sample> = all.iter().skip(washout).filter(|s| range.contains(s.time)).copied().collect();
    if train.is_empty() {
        return Err(Error::EmptyDataset("no training samples after washout".into()));
    }
    let readout = readout::fit(&machine.design(&traj, &train)?, config.ridge)?;
    let train_end = train.iter().map(|s| s.time).fold(f64::NEG_INFINITY, f64::max);

    let model = TeEsnModel {
        config: config.clone(),
        task: task.clone(),
        seed,
        series_labels: dataset.series().iter().map(|s| s.label().to_string()).collect(),
        rates,
        time_encoding: te,
        normalizer,
        reservoirs: machine.reservoirs,
        readout,
        train_end,
        washout,
    };
    let score = model.score_samples(&traj, &train)?;
    Ok((model, score))
}

impl TeEsnModel {
    fn machine(&self) -> Result<Machine> {
        Machine::from_parts(self.reservoirs.clone(), &self.config, self.time_encoding.as_ref(), &self.rates)
    }

    /// Rejects datasets whose series layout differs from training.
    pub fn check_schema(&self, dataset: &IstsDataset) -> Result<()> {
        let labels: Vec<&str> = dataset.series().iter().map(|s| s.label()).collect();
        if labels != self.series_labels.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::Dimension(format!(
                "dataset series {:?} do not match the model's {:?}",
                labels, self.series_labels
            )));
        }
        Ok(())
    }

    fn prepare(&self, dataset: &IstsDataset, exec: Execution) -> Result<(Machine, IstsDataset, Vec<StateTrajectory>)> {
        self.check_schema(dataset)?;
        let norm = self.normalizer.apply(dataset)?;
        let machine = self.machine()?;
        let traj = machine.run(&norm, exec)?;
        Ok((machine, norm, traj))
    }

    fn target_scale(&self) -> Option<crate::data::AffineParams> {
        match self.task {
            Task::Forecast { series } => self.normalizer.params.get(series).copied(),
            Task::EarlyPredict { .. } => None,
        }
    }

    fn score_samples(&self, traj: &[StateTrajectory], samples: &[Sample]) -> Result<Score> {
        let machine = self.machine()?;
        let pred = machine.predict(&self.readout, traj, samples)?;
        let actual: Vec<f64> = samples.iter().map(|s| s.value).collect();
        score(&self.task, self.target_scale(), &pred, &actual)
    }

    /// Predictions (original units) and score for every sample whose target
    /// time satisfies `select`; the washout is skipped.
    pub fn evaluate_where(
        &self,
        dataset: &IstsDataset,
        select: impl Fn(f64) -> bool,
        exec: Execution,
    ) -> Result<(Vec<Prediction>, Score)> {
        let (machine, norm, traj) = self.prepare(dataset, exec)?;
        let chosen: Vec<Sample> = samples(&self.task, &norm)?
            .into_iter()
            .skip(self.washout)
            .filter(|s| select(s.time))
            .collect();
        if chosen.is_empty() {
            return Err(Error::EmptyDataset("no samples in the evaluation range".into()));
        }
        let pred = machine.predict(&self.readout, &traj, &chosen)?;
        let actual: Vec<f64> = chosen.iter().map(|s| s.value).collect();
        let sc = score(&self.task, self.target_scale(), &pred, &actual)?;
        let scale = self.target_scale();
        let out = chosen
            .iter()
            .zip(&pred)
            .map(|(s, p)| Prediction {
                time: s.time,
                predicted: scale.map_or(*p, |a| a.invert(*p)),
                actual: Some(scale.map_or(s.value, |a| a.invert(s.value))),
            })
            .collect();
        Ok((out, sc))
    }

    /// One-step-ahead forecasts for the observations of the forecast series
    /// at or after `from`: each is decoded from the state at the previous
    /// observation with the prediction time set to its own timestamp. The
    /// first test observation has no in-range predecessor, so `n` test
    /// observations yield `n - 1` predictions.
    pub fn forecast_one_step(&self, dataset: &IstsDataset, from: f64, exec: Execution) -> Result<Vec<Prediction>> {
        let Task::Forecast { series } = self.task else {
            return Err(invalid("model was not trained for forecasting"));
        };
        if from < self.train_end {
            return Err(invalid(format!(
                "forecast horizon starts at {from}, before the end of the training range {}",
                self.train_end
            )));
        }
        let (machine, norm, traj) = self.prepare(dataset, exec)?;
        let obs = norm.series()[series].observations();
        let first = obs.partition_point(|o| o.time < from);
        let chosen: Vec<Sample> = obs[first..]
            .iter()
            .skip(1)
            .map(|o| Sample { time: o.time, bound: o.time, value: o.value })
            .collect();
        let pred = machine.predict(&self.readout, &traj, &chosen)?;
        let a = self.normalizer.params[series];
        Ok(chosen
            .iter()
            .zip(pred)
            .map(|(s, p)| Prediction { time: s.time, predicted: a.invert(p), actual: Some(a.invert(s.value)) })
            .collect())
    }

    /// Decodes the state after the last observation at prediction time
    /// `t_pre`. Scores of binary tasks are raw linear outputs.
    pub fn early_predict(&self, dataset: &IstsDataset, t_pre: f64, exec: Execution) -> Result<Vec<f64>> {
        let last = dataset.series().iter().map(|s| s.last_time()).fold(f64::NEG_INFINITY, f64::max);
        if !(t_pre > last) {
            return Err(invalid(format!("t_pre {t_pre} must be after the last observation {last}")));
        }
        let (machine, _, traj) = self.prepare(dataset, exec)?;
        let y = self.readout.decode(&machine.state_at(&traj, t_pre), &machine.te_at(t_pre))?;
        Ok(match self.target_scale() {
            Some(a) => y.into_iter().map(|v| a.invert(v)).collect(),
            None => y,
        })
    }

    /// Early-prediction scores for a batch of instances (e.g. one dataset
    /// per patient), each decoded at its own `t_pre`.
    pub fn early_predict_batch(&self, instances: &[(IstsDataset, f64)], exec: Execution) -> Result<Vec<f64>> {
        exec.map(instances, |(ds, t)| self.early_predict(ds, *t, Execution::Sequential).map(|v| v[0]))
            .into_iter()
            .collect()
    }
}

fn score(task: &Task, scale: Option<crate::data::AffineParams>, pred: &[f64], actual: &[f64]) -> Result<Score> {
    match task {
        Task::EarlyPredict { binary: true, .. } => Ok(Score { value: metrics::auc_roc(pred, actual)?, raw_mse: None }),
        _ => {
            let value = metrics::mse(pred, actual)?;
            let raw_mse = scale.map(|a| value * a.scale * a.scale);
            Ok(Score { value, raw_mse })
        }
    }
}

/// Per-fold results of a blocked cross-validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub metric: String,
    pub folds: Vec<f64>,
    pub raw_mse_folds: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// `folds`-fold cross-validation over contiguous time blocks of the
/// post-washout samples. Each fold refits normalisation and readout on the
/// other blocks; reservoir weights are shared across folds.
pub fn cross_validate(
    config: &ModelConfig,
    task: &Task,
    dataset: &IstsDataset,
    folds: usize,
    seed: u64,
    exec: Execution,
) -> Result<CvResult> {
    config.validate()?;
    if folds < 2 {
        return Err(invalid("cross-validation needs at least 2 folds"));
    }
    // block boundaries from the raw sample times (normalisation does not
    // move timestamps)
    let all = samples(task, dataset)?;
    let washout = config.washout.unwrap_or_else(|| default_washout(all.len()));
    let usable: Vec<f64> = all.iter().skip(washout).map(|s| s.time).collect();
    if usable.len() < folds * 2 {
        return Err(Error::EmptyDataset(format!("{} samples is too few for {folds} folds", usable.len())));
    }
    let blocks: Vec<(f64, f64)> = (0..folds)
        .map(|f| {
            let lo = f * usable.len() / folds;
            let hi = (f + 1) * usable.len() / folds - 1;
            (usable[lo], usable[hi])
        })
        .collect();
    let cfg = ModelConfig { washout: Some(washout), ..config.clone() };
    let results: Vec<Result<Score>> = exec.map(&blocks, |&(a, b)| {
        let (model, _) = train(&cfg, task, dataset, TrainRange::Excluding(a, b), seed, Execution::Sequential)?;
        let (_, s) = model.evaluate_where(dataset, |t| t >= a && t <= b, Execution::Sequential)?;
        Ok(s)
    });
    let scores = results.into_iter().collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = scores.iter().map(|s| s.value).collect();
    let (mean, std) = metrics::mean_std(&values);
    Ok(CvResult {
        metric: task.metric_name().into(),
        raw_mse_folds: scores.iter().filter_map(|s| s.raw_mse).collect(),
        folds: values,
        mean,
        std,
    })
}
