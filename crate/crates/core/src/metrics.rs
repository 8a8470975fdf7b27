//! Scoring: MSE, AUC-ROC, squared correlation, and run reports.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn mse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(Error::Metric(format!("length mismatch: {} predictions, {} actuals", pred.len(), actual.len())));
    }
    if pred.is_empty() {
        return Err(Error::Metric("mse of empty vectors".into()));
    }
    Ok(pred.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum::<f64>() / pred.len() as f64)
}

/// Area under the ROC curve as the Mann-Whitney statistic (ties count 1/2).
/// Labels are positive when `> 0.5`.
pub fn auc_roc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Metric("scores and labels differ in length".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("NaN score".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average ranks over tie blocks, 1-based
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        rank_sum_pos += idx[i..j].iter().filter(|&&k| labels[k] > 0.5).count() as f64 * avg;
        i = j;
    }
    let n_pos = labels.iter().filter(|&&l| l > 0.5).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(Error::Metric("AUC needs both classes".into()));
    }
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquaredCorrelation {
    pub value: f64,
    /// Set when either input had zero variance; `value` is then 0.
    pub zero_variance: bool,
}

/// Squared Pearson correlation.
pub fn squared_correlation(a: &[f64], b: &[f64]) -> Result<SquaredCorrelation> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Metric("squared correlation needs equal, non-empty inputs".into()));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Ok(SquaredCorrelation { value: 0.0, zero_variance: true });
    }
    let r2 = (sab * sab / (saa * sbb)).min(1.0);
    Ok(SquaredCorrelation { value: r2, zero_variance: false })
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seeds: Vec<u64>,
    /// SHA-256 of the canonical JSON of the resolved configuration.
    pub params_hash: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunMetadata {
    pub fn new<T: Serialize>(seeds: Vec<u64>, config: &T) -> Result<Self> {
        Ok(Self { seeds, params_hash: params_hash(config)?, notes: Vec::new() })
    }
}

pub fn params_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_vec(config)?;
    Ok(Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect())
}

/// One metric with its dispersion over folds or seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub value: f64,
    pub dispersion: f64,
    /// Per-fold (or per-seed) values behind `value` and `dispersion`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<f64>,
    pub metadata: RunMetadata,
}

impl EvalReport {
    pub fn single(metric: impl Into<String>, value: f64, metadata: RunMetadata) -> Self {
        Self { metric: metric.into(), value, dispersion: 0.0, samples: vec![value], metadata }
    }

    pub fn from_samples(metric: impl Into<String>, samples: Vec<f64>, metadata: RunMetadata) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Metric("report needs finite samples".into()));
        }
        let (value, dispersion) = mean_std(&samples);
        Ok(Self { metric: metric.into(), value, dispersion, samples, metadata })
    }
}

/// Writes a `method,metric,mean,std` summary table.
pub fn write_summary_csv(rows: &[(String, EvalReport)], mut w: impl std::io::Write) -> std::io::Result<()> {
    writeln!(w, "method,metric,mean,std")?;
    for (name, r) in rows {
        writeln!(w, "{name},{},{},{}", r.metric, r.value, r.dispersion)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn brute_auc(scores: &[f64], labels: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if labels[i] > 0.5 && labels[j] <= 0.5 {
                    den += 1.0;
                    num += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
                }
            }
        }
        num / den
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 5.0);
        assert_eq!(mse(&[3.0, 0.0], &[0.0, 1.0]).unwrap(), mse(&[0.0, 3.0], &[1.0, 0.0]).unwrap());
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc_roc(&[0.1, 0.2, 0.8, 0.9], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(auc_roc(&[0.5; 6], &[0.0, 1.0, 0.0, 1.0, 1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(auc_roc(&[0.1, 0.4, 0.35, 0.8], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 0.75);
        assert!(auc_roc(&[0.1, 0.2], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn auc_matches_brute_force_exactly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in [2usize, 3, 10, 57, 200] {
            for _ in 0..20 {
                let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0..20) as f64) / 4.0).collect();
                let mut labels: Vec<f64> = (0..n).map(|_| rng.random_range(0..2) as f64).collect();
                labels[0] = 0.0;
                labels[n - 1] = 1.0;
                assert_eq!(auc_roc(&scores, &labels).unwrap(), brute_auc(&scores, &labels));
            }
        }
    }

    #[test]
    fn r2_examples() {
        let a: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((squared_correlation(&a, &b).unwrap().value - 1.0).abs() < 1e-12);
        let flat = vec![3.0; 50];
        let r = squared_correlation(&a, &flat).unwrap();
        assert!(r.zero_variance && r.value == 0.0);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        assert!(squared_correlation(&x, &y).unwrap().value < 0.01);
    }

    #[test]
    fn report_stats_and_hash() {
        let r = EvalReport::from_samples("mse", vec![1.0, 3.0], RunMetadata::default()).unwrap();
        assert_eq!((r.value, r.dispersion), (2.0, 1.0));
        assert!(EvalReport::from_samples("mse", vec![f64::NAN], RunMetadata::default()).is_err());
        let h1 = params_hash(&("a", 1)).unwrap();
        assert_eq!(h1.len(), 64);
        assert_eq!(h1, params_hash(&("a", 1)).unwrap());
        assert_ne!(h1, params_hash(&("a", 2)).unwrap());
    }

    proptest! {
        #[test]
        fn mse_translation_invariant(v in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..40), c in -1e3f64..1e3) {
            let (p, a): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let ps: Vec<f64> = p.iter().map(|x| x + c).collect();
            let as_: Vec<f64> = a.iter().map(|x| x + c).collect();
            let base = mse(&p, &a).unwrap();
            prop_assert!((mse(&ps, &as_).unwrap() - base).abs() <= 1e-9 * base.max(1.0));
        }

        #[test]
        fn r2_symmetric(v in proptest::collection::vec((-10f64..10.0, -10f64..10.0), 3..40)) {
            let (a, b): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let x = squared_correlation(&a, &b).unwrap().value;
            let y = squared_correlation(&b, &a).unwrap().value;
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&x));
        }

        #[test]
        fn auc_invariant_under_positive_scaling(v in proptest::collection::vec((-5f64..5.0, 0u8..2), 4..60), s in 0.01f64..100.0) {
            let (scores, labels): (Vec<f64>, Vec<f64>) = v.into_iter().map(|(x, l)| (x, l as f64)).unzip();
            prop_assume!(labels.iter().any(|&l| l > 0.5) && labels.iter().any(|&l| l < 0.5));
            let scaled: Vec<f64> = scores.iter().map(|x| x * s).collect();
            prop_assert_eq!(auc_roc(&scores, &labels).unwrap(), auc_roc(&scaled, &labels).unwrap());
        }
    }
}
