use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::Context as _;
use clap::ValueEnum as _;
use serde::Serialize;

use teesn::bench::{scaling, ScalingReport};
use teesn::data::{load_csv, load_targets, mg_irregular, write_csv, IstsDataset};
use teesn::memory::{memory_capacity, McResult};
use teesn::metrics::{write_summary_csv, EvalReport, RunMetadata};
use teesn::model::{self, cross_validate, CvResult, ModelConfig, Prediction, Task, TeEsnModel, TimeEncodingMode, TrainRange};
use teesn::search::{search, validation_fitness, SearchResult};
use teesn::timecode::{dot_product_curve, write_curve_csv, TimeEncodingConfig};
use teesn::Execution;

use crate::config::RunConfig;
use crate::exit::{require, usage};
use crate::{Cli, Command, DataArgs, Generate, ModelArgs, Range, TaskArg, TeMode, Variant};

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    cfg.resolve_seed();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let out = cli.out.as_path();

    match cli.command {
        Command::Generate { what: Generate::Mg { length } } => {
            if let Some(n) = length {
                cfg.generate.observations = n;
                cfg.generate.mg.length = n;
            }
            start(&cfg, out)?;
            generate_mg(&cfg, out)
        }
        Command::Train { data, model } => {
            apply_data(&mut cfg, &data);
            apply_model(&mut cfg, &model);
            start(&cfg, out)?;
            train(&cfg, out, exec)
        }
        Command::Predict { model, data, from } => {
            apply_data(&mut cfg, &data);
            start(&cfg, out)?;
            predict(&cfg, &model, from, out, exec)
        }
        Command::Evaluate { model, range, variants, repeats, data, model_args } => {
            apply_data(&mut cfg, &data);
            apply_model(&mut cfg, &model_args);
            start(&cfg, out)?;
            match model {
                Some(path) => evaluate_model(&cfg, &path, range, out, exec),
                None => evaluate_variants(&cfg, &variants, repeats, out, exec),
            }
        }
        Command::Mc { variants, k_max, model } => {
            apply_model(&mut cfg, &model);
            if model.size.is_some() {
                cfg.mc.size = model.size;
            }
            if let Some(k) = k_max {
                cfg.mc.protocol.k_max = k;
            }
            start(&cfg, out)?;
            mc(&cfg, &variants, out, exec)
        }
        Command::Search { population, generations, data, model } => {
            apply_data(&mut cfg, &data);
            apply_model(&mut cfg, &model);
            if let Some(p) = population {
                cfg.search.ga.population = p;
            }
            if let Some(g) = generations {
                cfg.search.ga.generations = g;
            }
            cfg.search.ga.seed = cfg.seed();
            start(&cfg, out)?;
            run_search(&cfg, out, exec)
        }
        Command::Curve { ks, dim, max_time, rate } => {
            if !ks.is_empty() {
                cfg.curve.ks = ks;
            }
            set(&mut cfg.curve.dim, dim);
            set(&mut cfg.curve.max_time, max_time);
            set(&mut cfg.curve.rate, rate);
            start(&cfg, out)?;
            curve(&cfg, out)
        }
        Command::Bench { size, steps, repeats } => {
            set(&mut cfg.bench.size, size);
            set(&mut cfg.bench.steps, steps);
            set(&mut cfg.bench.repeats, repeats);
            cfg.bench.seed = cfg.seed();
            start(&cfg, out)?;
            bench(&cfg, out, exec)
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_data(cfg: &mut RunConfig, a: &DataArgs) {
    if a.data.is_some() {
        cfg.data.path = a.data.clone();
    }
    if a.targets.is_some() {
        cfg.data.targets = a.targets.clone();
    }
    match a.task {
        Some(TaskArg::Mg) => {
            cfg.data.path = None;
            cfg.task = Task::Forecast { series: 0 };
        }
        Some(TaskArg::Forecast) if !matches!(cfg.task, Task::Forecast { .. }) => {
            cfg.task = Task::Forecast { series: 0 };
        }
        Some(TaskArg::EarlyPredict) if !matches!(cfg.task, Task::EarlyPredict { .. }) => {
            cfg.task = Task::EarlyPredict { horizon: 0.0, binary: true };
        }
        _ => {}
    }
    match &mut cfg.task {
        Task::Forecast { series } => set(series, a.series),
        Task::EarlyPredict { horizon, .. } => set(horizon, a.horizon),
    }
    set(&mut cfg.split.train_fraction, a.train_fraction);
    set(&mut cfg.split.folds, a.folds);
}

fn apply_model(cfg: &mut RunConfig, a: &ModelArgs) {
    let r = &mut cfg.model.reservoir;
    set(&mut r.size, a.size);
    set(&mut r.input_scale, a.input_scale);
    set(&mut r.sparsity, a.sparsity);
    set(&mut r.spectral_radius, a.spectral_radius);
    set(&mut r.leaky_rate, a.leaky_rate);
    set(&mut r.fusion_rate, a.fusion_rate);
    set(&mut r.long_skip, a.long_skip);
    set(&mut cfg.model.ridge, a.ridge);
    let dim = a.te_dim.unwrap_or_else(|| match cfg.model.time_encoding.dim() {
        0 => 64,
        d => d,
    });
    let mode = match a.te_mode {
        Some(TeMode::Off) => Some(TimeEncodingMode::Off),
        Some(TeMode::TimeVector) => Some(TimeEncodingMode::TimeVector { dim }),
        Some(TeMode::MultiFrequency) => Some(TimeEncodingMode::MultiFrequency { dim }),
        None => None,
    };
    match (mode, &mut cfg.model.time_encoding) {
        (Some(m), te) => *te = m,
        (None, TimeEncodingMode::Off) => {}
        (
            None,
            TimeEncodingMode::TimeVector { dim: d }
            | TimeEncodingMode::MultiFrequency { dim: d }
            | TimeEncodingMode::Custom { dim: d, .. },
        ) => *d = dim,
    }
    for ab in &a.ablate {
        if !cfg.ablations.contains(ab) {
            cfg.ablations.push(*ab);
        }
    }
}

/// Creates the output directory and records the resolved configuration.
fn start(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    cfg.write(out)
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> anyhow::Result<()> {
    let path = out.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn create(out: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    let path = out.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("writing {}", path.display()))?))
}

fn metadata(cfg: &RunConfig, seeds: Vec<u64>) -> anyhow::Result<RunMetadata> {
    Ok(RunMetadata::new(seeds, cfg)?)
}

fn finite(what: &str, v: f64) -> anyhow::Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(teesn::Error::NonFinite(what.into()).into())
    }
}

fn dataset(cfg: &RunConfig) -> anyhow::Result<IstsDataset> {
    let Some(path) = &cfg.data.path else {
        let g = &cfg.generate;
        return Ok(IstsDataset::single(mg_irregular(&g.mg, g.gaps, g.observations, cfg.seed())?));
    };
    require(path)?;
    let ds = load_csv(path, &cfg.data.schema).with_context(|| format!("loading {}", path.display()))?;
    match &cfg.data.targets {
        Some(t) => {
            require(t)?;
            let targets = load_targets(t).with_context(|| format!("loading {}", t.display()))?;
            Ok(IstsDataset::new(ds.series().to_vec(), Some(targets))?)
        }
        None => Ok(ds),
    }
}

/// The first `train_fraction` of the task's samples, by target time.
fn train_range(cfg: &RunConfig, ds: &IstsDataset) -> anyhow::Result<TrainRange> {
    let f = cfg.split.train_fraction;
    if !(f > 0.0 && f <= 1.0) {
        return Err(usage(format!("train_fraction must lie in (0, 1], got {f}")));
    }
    if f == 1.0 {
        return Ok(TrainRange::All);
    }
    let times: Vec<f64> = model::samples(&cfg.task, ds)?.iter().map(|s| s.time).collect();
    let n = ((f * times.len() as f64).floor() as usize).max(1);
    let cut = times.get(n - 1).ok_or_else(|| usage("dataset has no samples for the task"))?;
    Ok(TrainRange::Until(*cut))
}

fn load_model(path: &Path) -> anyhow::Result<TeEsnModel> {
    require(path)?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("model {}: {e}", path.display())))
}

fn variant_name(v: Variant) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn variant_config(base: &ModelConfig, v: Variant) -> ModelConfig {
    use teesn::model::Ablation;
    match v {
        Variant::TeEsn => base.clone(),
        Variant::Esn => base.plain_esn(),
        Variant::NoTe => base.clone().with_ablation(Ablation::NoTe),
        Variant::NoLs => base.clone().with_ablation(Ablation::NoLs),
        Variant::NoSf => base.clone().with_ablation(Ablation::NoSf),
    }
}

#[derive(Serialize)]
struct GenerateMeta {
    seed: u64,
    observations: usize,
    sampling_rate: f64,
    max_time: f64,
    generator: crate::config::GenerateConfig,
}

fn generate_mg(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let g = &cfg.generate;
    let series = mg_irregular(&g.mg, g.gaps, g.observations, cfg.seed())?;
    let meta = GenerateMeta {
        seed: cfg.seed(),
        observations: series.len(),
        sampling_rate: series.sampling_rate(),
        max_time: series.last_time(),
        generator: g.clone(),
    };
    write_csv(&IstsDataset::single(series), create(out, "mg.csv")?)?;
    write_json(out, "mg.meta.json", &meta)?;
    println!("wrote {} observations to {}", meta.observations, out.join("mg.csv").display());
    Ok(())
}

#[derive(Serialize)]
struct TrainReport {
    report: EvalReport,
    raw_mse: Option<f64>,
    train_end: f64,
    washout: usize,
}

fn train(cfg: &RunConfig, out: &Path, exec: Execution) -> anyhow::Result<()> {
    let ds = dataset(cfg)?;
    let range = train_range(cfg, &ds)?;
    let (model, score) = model::train(&cfg.effective_model(), &cfg.task, &ds, range, cfg.seed(), exec)?;
    let value = finite("training score", score.value)?;
    let report = TrainReport {
        report: EvalReport::single(cfg.task.metric_name(), value, metadata(cfg, vec![cfg.seed()])?),
        raw_mse: score.raw_mse,
        train_end: model.train_end,
        washout: model.washout,
    };
    write_json(out, "model.json", &model)?;
    write_json(out, "train_report.json", &report)?;
    println!("train {} = {value}", cfg.task.metric_name());
    Ok(())
}

fn write_predictions(out: &Path, preds: &[Prediction]) -> anyhow::Result<()> {
    use std::io::Write as _;
    let mut w = create(out, "predictions.csv")?;
    writeln!(w, "time,predicted,actual")?;
    for p in preds {
        match p.actual {
            Some(a) => writeln!(w, "{},{},{}", p.time, p.predicted, a)?,
            None => writeln!(w, "{},{},", p.time, p.predicted)?,
        }
    }
    w.flush()?;
    Ok(())
}

fn predict(cfg: &RunConfig, model_path: &Path, from: Option<f64>, out: &Path, exec: Execution) -> anyhow::Result<()> {
    let model = load_model(model_path)?;
    let ds = dataset(cfg)?;
    let from = from.unwrap_or(model.train_end);
    let preds = match model.task {
        Task::Forecast { .. } => model.forecast_one_step(&ds, from, exec)?,
        Task::EarlyPredict { .. } => model.evaluate_where(&ds, |t| t > from, exec)?.0,
    };
    if preds.is_empty() {
        return Err(usage(format!("nothing to predict after time {from}")));
    }
    write_predictions(out, &preds)?;
    println!("wrote {} predictions to {}", preds.len(), out.join("predictions.csv").display());
    Ok(())
}

#[derive(Serialize)]
struct ModelEvalReport {
    range: String,
    report: EvalReport,
    raw_mse: Option<f64>,
}

fn evaluate_model(cfg: &RunConfig, path: &Path, range: Range, out: &Path, exec: Execution) -> anyhow::Result<()> {
    let model = load_model(path)?;
    let ds = dataset(cfg)?;
    let end = model.train_end;
    let (preds, score) = match range {
        Range::Train => model.evaluate_where(&ds, |t| t <= end, exec)?,
        Range::Test => model.evaluate_where(&ds, |t| t > end, exec)?,
        Range::All => model.evaluate_where(&ds, |_| true, exec)?,
    };
    let metric = model.task.metric_name();
    let value = finite("evaluation score", score.value)?;
    let report = ModelEvalReport {
        range: format!("{range:?}").to_lowercase(),
        report: EvalReport::single(metric, value, metadata(cfg, vec![model.seed])?),
        raw_mse: score.raw_mse,
    };
    write_predictions(out, &preds)?;
    write_json(out, "evaluate_report.json", &report)?;
    println!("{} {metric} = {value}", report.range);
    Ok(())
}

#[derive(Serialize)]
struct VariantReport {
    report: EvalReport,
    runs: Vec<CvResult>,
}

fn evaluate_variants(cfg: &RunConfig, variants: &[Variant], repeats: u64, out: &Path, exec: Execution) -> anyhow::Result<()> {
    if repeats == 0 {
        return Err(usage("--repeats must be >= 1"));
    }
    let variants = if variants.is_empty() { vec![Variant::TeEsn] } else { variants.to_vec() };
    let ds = dataset(cfg)?;
    let base = cfg.effective_model();
    let seeds: Vec<u64> = (0..repeats).map(|i| cfg.seed() + i).collect();
    let metric = cfg.task.metric_name();
    let mut rows = Vec::new();
    let mut reports = BTreeMap::new();
    for v in variants {
        let mc = variant_config(&base, v);
        let runs = seeds
            .iter()
            .map(|&s| cross_validate(&mc, &cfg.task, &ds, cfg.split.folds, s, exec))
            .collect::<teesn::Result<Vec<_>>>()?;
        let samples = if runs.len() == 1 { runs[0].folds.clone() } else { runs.iter().map(|r| r.mean).collect() };
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(teesn::Error::NonFinite(format!("{} cross-validation score {bad}", variant_name(v))).into());
        }
        let report = EvalReport::from_samples(metric, samples, metadata(cfg, seeds.clone())?)?;
        println!("{}: {metric} = {} +- {}", variant_name(v), report.value, report.dispersion);
        rows.push((variant_name(v), report.clone()));
        reports.insert(variant_name(v), VariantReport { report, runs });
    }
    write_summary_csv(&rows, create(out, "summary.csv")?)?;
    write_json(out, "evaluate_report.json", &reports)?;
    Ok(())
}

#[derive(Serialize)]
struct McReport {
    size: usize,
    seed: u64,
    variants: BTreeMap<String, McResult>,
}

fn mc(cfg: &RunConfig, variants: &[Variant], out: &Path, exec: Execution) -> anyhow::Result<()> {
    use std::io::Write as _;
    let variants = if variants.is_empty() { vec![Variant::TeEsn, Variant::Esn] } else { variants.to_vec() };
    let base = cfg.effective_model();
    let size = cfg.mc.size.unwrap_or(base.reservoir.size);
    let mut report = McReport { size, seed: cfg.seed(), variants: BTreeMap::new() };
    let mut w = create(out, "mc.csv")?;
    writeln!(w, "variant,mc")?;
    for v in variants {
        let m = variant_config(&base, v);
        let params = teesn::reservoir::ReservoirParams { size, ..m.reservoir };
        let r = memory_capacity(&params, &m.time_encoding, &cfg.mc.protocol, cfg.seed(), exec)?;
        finite("memory capacity", r.total)?;
        println!("{}: mc = {}", variant_name(v), r.total);
        writeln!(w, "{},{}", variant_name(v), r.total)?;
        report.variants.insert(variant_name(v), r);
    }
    w.flush()?;
    write_json(out, "mc_report.json", &report)
}

fn run_search(cfg: &RunConfig, out: &Path, exec: Execution) -> anyhow::Result<()> {
    let ds = dataset(cfg)?;
    let train_end = match train_range(cfg, &ds)? {
        TrainRange::Until(t) => t,
        _ => ds.max_time(),
    };
    let base = cfg.effective_model();
    let seed = cfg.seed();
    let result: SearchResult = search(
        &cfg.search.space,
        &cfg.search.ga,
        |c| validation_fitness(&base, c, &cfg.task, &ds, train_end, seed),
        exec,
    )?;
    if !result.best_fitness.is_finite() {
        return Err(teesn::Error::NonFinite("every search candidate failed".into()).into());
    }
    result.write_trace_csv(create(out, "search_trace.csv")?)?;
    write_json(out, "search_report.json", &result)?;
    let mut best = cfg.clone();
    best.model = result.best.apply(&cfg.model);
    std::fs::write(out.join("best_config.toml"), toml::to_string_pretty(&best)?)?;
    println!("best fitness {} with {:?}", result.best_fitness, result.best);
    Ok(())
}

fn curve(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    let c = &cfg.curve;
    if !(c.step > 0.0 && c.max_distance >= 0.0) {
        return Err(usage("curve step must be > 0 and max_distance >= 0"));
    }
    if c.ks.is_empty() {
        return Err(usage("curve needs at least one --k"));
    }
    let n = (c.max_distance / c.step).floor() as usize;
    let distances: Vec<f64> = (0..=n).map(|i| i as f64 * c.step).collect();
    for &k in &c.ks {
        if k == 0 {
            return Err(usage("--k must be >= 1"));
        }
        let te = TimeEncodingConfig::new(c.dim, c.bases(k), c.max_time)?;
        let name = format!("curve_k{k}.csv");
        write_curve_csv(&dot_product_curve(&te, c.rate, &distances), create(out, &name)?)?;
        println!("wrote {}", out.join(name).display());
    }
    Ok(())
}

fn bench(cfg: &RunConfig, out: &Path, exec: Execution) -> anyhow::Result<()> {
    let r: ScalingReport = scaling(&cfg.bench, exec)?;
    println!(
        "base {:.4}s, 2T {:.4}s (x{:.2}), 2N {:.4}s (x{:.2})",
        r.base.median_secs, r.double_steps.median_secs, r.steps_ratio, r.double_size.median_secs, r.size_ratio
    );
    write_json(out, "bench.json", &r)
}
