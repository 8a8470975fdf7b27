use teesn::data::{load_csv, write_csv, CsvSchema, IrregularSeries, IstsDataset, Observation, Target};
use teesn::model::{train, Ablation, ModelConfig, Task, TeEsnModel, TimeEncodingMode, TrainRange};
use teesn::reservoir::ReservoirParams;
use teesn::Execution;

fn two_rate_dataset() -> IstsDataset {
    // series a every 2 time units, series b every 3, coupled through a phase
    let a = (0..150).map(|i| {
        let t = 2.0 * i as f64;
        Observation::new(t, (0.07 * t).sin())
    });
    let b = (0..100).map(|i| {
        let t = 3.0 * i as f64 + 0.5;
        Observation::new(t, (0.07 * t - 0.4).sin() * 2.0 + 1.0)
    });
    IstsDataset::new(
        vec![IrregularSeries::new("a", a.collect()).unwrap(), IrregularSeries::new("b", b.collect()).unwrap()],
        None,
    )
    .unwrap()
}

fn config() -> ModelConfig {
    ModelConfig {
        reservoir: ReservoirParams { size: 40, sparsity: 0.2, fusion_rate: 0.7, ..Default::default() },
        time_encoding: TimeEncodingMode::MultiFrequency { dim: 16 },
        ridge: 1e-3,
        ..Default::default()
    }
}

#[test]
fn csv_round_trip_preserves_dataset() {
    let ds = two_rate_dataset();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    write_csv(&ds, std::fs::File::create(&path).unwrap()).unwrap();
    let back = load_csv(&path, &CsvSchema::default()).unwrap();
    assert_eq!(back.num_series(), 2);
    for (x, y) in ds.series().iter().zip(back.series()) {
        assert_eq!(x.label(), y.label());
        assert_eq!(x.observations(), y.observations());
    }
}

#[test]
fn multi_series_forecast_is_strategy_independent() {
    let ds = two_rate_dataset();
    let task = Task::Forecast { series: 1 };
    let (m1, s1) = train(&config(), &task, &ds, TrainRange::Until(200.0), 3, Execution::Parallel).unwrap();
    let (m2, s2) = train(&config(), &task, &ds, TrainRange::Until(200.0), 3, Execution::Sequential).unwrap();
    assert_eq!(s1, s2);
    let p1 = m1.forecast_one_step(&ds, 200.0, Execution::Parallel).unwrap();
    let p2 = m2.forecast_one_step(&ds, 200.0, Execution::Sequential).unwrap();
    assert_eq!(p1, p2);
    assert!(!p1.is_empty());
    assert!(p1.iter().all(|p| p.predicted.is_finite()));
    // actuals come back in the series' own units
    assert!(p1.iter().any(|p| p.actual.unwrap() > 2.0));
}

#[test]
fn saved_model_reproduces_predictions() {
    let ds = two_rate_dataset();
    let (model, _) = train(&config(), &Task::default(), &ds, TrainRange::Until(150.0), 9, Execution::Sequential).unwrap();
    let json = serde_json::to_string(&model).unwrap();
    let back: TeEsnModel = serde_json::from_str(&json).unwrap();
    assert_eq!(
        model.forecast_one_step(&ds, 150.0, Execution::Sequential).unwrap(),
        back.forecast_one_step(&ds, 150.0, Execution::Sequential).unwrap()
    );
}

#[test]
fn early_prediction_scores_by_auc() {
    // label: does series a rise over the next 10 time units
    let ds = two_rate_dataset();
    let targets: Vec<Target> = (10..140)
        .map(|i| {
            let t = 2.0 * i as f64 + 1.0;
            Target { time: t, value: if (0.07 * (t + 10.0)).sin() > (0.07 * t).sin() { 1.0 } else { 0.0 } }
        })
        .collect();
    let ds = IstsDataset::new(ds.series().to_vec(), Some(targets)).unwrap();
    let task = Task::EarlyPredict { horizon: 0.0, binary: true };
    let (model, score) = train(&config(), &task, &ds, TrainRange::Until(200.0), 1, Execution::Sequential).unwrap();
    assert!(score.value > 0.9, "train AUC {}", score.value);
    let (_, test) = model.evaluate_where(&ds, |t| t > 200.0, Execution::Sequential).unwrap();
    assert!(test.value > 0.8, "test AUC {}", test.value);
}

#[test]
fn ablations_change_the_model() {
    let ds = two_rate_dataset();
    let full = train(&config(), &Task::default(), &ds, TrainRange::All, 2, Execution::Sequential).unwrap().0;
    for ab in [Ablation::NoTe, Ablation::NoLs, Ablation::NoSf] {
        let m = train(&config().with_ablation(ab), &Task::default(), &ds, TrainRange::All, 2, Execution::Sequential).unwrap().0;
        assert_ne!(m.readout, full.readout, "{ab:?}");
    }
}
