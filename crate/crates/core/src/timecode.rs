//! Time vectors and time encodings.
//!
//! A time vector is the real sinusoidal embedding
//! `[sin(c_0 t), cos(c_0 t), sin(c_1 t), ...]` with `c_i = MT^(-2i/d)`.
//!
//! A time encoding is the complex embedding `e^{i w_j t}` with per-component
//! frequency `w_j = M_{j mod K}^(-2j/d) / r_s`, where `r_s` is the sampling
//! rate of the series and `M_0..M_{K-1}` are magnitude bases. Complex
//! components are materialised as interleaved real pairs `[cos, sin]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeVectorConfig {
    pub dim: usize,
    pub max_time: f64,
}

impl TimeVectorConfig {
    pub fn new(dim: usize, max_time: f64) -> Result<Self> {
        let cfg = Self { dim, max_time };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 || !self.dim.is_multiple_of(2) {
            return Err(invalid(format!("time vector dim must be even and >= 2, got {}", self.dim)));
        }
        if !(self.max_time > 0.0 && self.max_time.is_finite()) {
            return Err(invalid("max_time must be positive"));
        }
        Ok(())
    }

    /// `c_i = MT^(-2i/d)` for `i < d/2`.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.dim / 2)
            .map(|i| self.max_time.powf(-2.0 * i as f64 / self.dim as f64))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeEncodingConfig {
    /// Total real dimensions (`dim / 2` complex components).
    pub dim: usize,
    /// Magnitude bases `M_0..M_{K-1}`.
    pub bases: Vec<f64>,
    pub max_time: f64,
}

impl TimeEncodingConfig {
    pub fn new(dim: usize, bases: Vec<f64>, max_time: f64) -> Result<Self> {
        let cfg = Self { dim, bases, max_time };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Four bases `{MT/2, MT, 2MT, 4MT}`.
    pub fn multi_frequency(dim: usize, max_time: f64) -> Result<Self> {
        Self::new(dim, vec![max_time / 2.0, max_time, 2.0 * max_time, 4.0 * max_time], max_time)
    }

    /// One base `{MT}`; with rate 1 this is the time vector ladder `c_i`.
    pub fn single_frequency(dim: usize, max_time: f64) -> Result<Self> {
        Self::new(dim, vec![max_time], max_time)
    }

    pub fn num_freqs(&self) -> usize {
        self.bases.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 || !self.dim.is_multiple_of(2) {
            return Err(invalid(format!("time encoding dim must be even and >= 2, got {}", self.dim)));
        }
        if self.bases.is_empty() {
            return Err(invalid("time encoding needs at least one frequency base"));
        }
        if let Some(b) = self.bases.iter().find(|&&b| !(b > 1.0 && b.is_finite())) {
            return Err(invalid(format!("frequency bases must be > 1, got {b}")));
        }
        if !(self.max_time > 0.0 && self.max_time.is_finite()) {
            return Err(invalid("max_time must be positive"));
        }
        Ok(())
    }

    /// Per-component angular frequencies for a series with sampling rate `rate`.
    pub fn frequencies(&self, rate: f64) -> Vec<f64> {
        let k = self.bases.len();
        let d = self.dim as f64;
        (0..self.dim / 2)
            .map(|j| self.bases[j % k].powf(-2.0 * j as f64 / d) / rate)
            .collect()
    }
}

/// Per-series frequency tables for encoding many timestamps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeEncoder {
    dim: usize,
    freqs: Vec<Vec<f64>>,
}

impl TimeEncoder {
    /// One table per sampling rate in `rates`.
    pub fn new(cfg: &TimeEncodingConfig, rates: &[f64]) -> Result<Self> {
        cfg.validate()?;
        if let Some(r) = rates.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
            return Err(invalid(format!("sampling rate must be positive, got {r}")));
        }
        Ok(Self { dim: cfg.dim, freqs: rates.iter().map(|&r| cfg.frequencies(r)).collect() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_series(&self) -> usize {
        self.freqs.len()
    }

    pub fn encode(&self, series: usize, t: f64) -> Vec<f64> {
        encode_with(t, &self.freqs[series])
    }
}

/// `[sin(c_0 t), cos(c_0 t), ...]`.
pub fn time_vector(t: f64, cfg: &TimeVectorConfig) -> Vec<f64> {
    let mut out = Vec::with_capacity(cfg.dim);
    for c in cfg.frequencies() {
        let (s, co) = (c * t).sin_cos();
        out.push(s);
        out.push(co);
    }
    out
}

/// Interleaved `[cos(w_j t), sin(w_j t)]` for a series sampled at `rate`.
pub fn time_encoding(t: f64, rate: f64, cfg: &TimeEncodingConfig) -> Vec<f64> {
    encode_with(t, &cfg.frequencies(rate))
}

/// Time encoding with precomputed frequencies.
pub fn encode_with(t: f64, freqs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * freqs.len());
    encode_into(t, freqs, &mut out);
    out
}

pub(crate) fn encode_into(t: f64, freqs: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for w in freqs {
        let (s, c) = (w * t).sin_cos();
        out.push(c);
        out.push(s);
    }
}

/// Views interleaved pairs as complex numbers.
pub fn as_complex(encoding: &[f64]) -> Vec<Complex64> {
    encoding.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

/// Component-wise non-conjugated product `a_j * b_j`.
pub fn complex_product(a: &[f64], b: &[f64]) -> Vec<Complex64> {
    as_complex(a).into_iter().zip(as_complex(b)).map(|(x, y)| x * y).collect()
}

/// Real part of the Hermitian inner product `sum_j a_j * conj(b_j)`, which
/// for interleaved pairs is the plain real dot product.
pub fn hermitian_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `sum_j cos(w_j p)` for each distance `p`.
pub fn dot_product_curve(cfg: &TimeEncodingConfig, rate: f64, distances: &[f64]) -> Vec<(f64, f64)> {
    let freqs = cfg.frequencies(rate);
    distances
        .iter()
        .map(|&p| (p, freqs.iter().map(|w| (w * p).cos()).sum()))
        .collect()
}

/// Writes `p,dot` rows.
pub fn write_curve_csv(curve: &[(f64, f64)], mut w: impl std::io::Write) -> std::io::Result<()> {
    writeln!(w, "p,dot")?;
    for (p, d) in curve {
        writeln!(w, "{p},{d}")?;
    }
    Ok(())
}

/// Reconstructs `TV(t+p)` from `TV(t)` by rotating each `(sin, cos)` pair
/// by `c_i p`; returns the largest absolute deviation from the direct
/// evaluation.
pub fn check_absolute_distance(t: f64, p: f64, cfg: &TimeVectorConfig) -> f64 {
    let base = time_vector(t, cfg);
    let direct = time_vector(t + p, cfg);
    let mut worst = 0.0f64;
    for (i, c) in cfg.frequencies().into_iter().enumerate() {
        let (sp, cp) = (c * p).sin_cos();
        let (s, co) = (base[2 * i], base[2 * i + 1]);
        let rs = s * cp + co * sp;
        let rc = co * cp - s * sp;
        worst = worst.max((rs - direct[2 * i]).abs()).max((rc - direct[2 * i + 1]).abs());
    }
    worst
}

/// Same rotation check on the `(cos, sin)` pairs of a time encoding.
pub fn check_absolute_distance_te(t: f64, p: f64, rate: f64, cfg: &TimeEncodingConfig) -> f64 {
    let base = time_encoding(t, rate, cfg);
    let direct = time_encoding(t + p, rate, cfg);
    let mut worst = 0.0f64;
    for (j, w) in cfg.frequencies(rate).into_iter().enumerate() {
        let (sp, cp) = (w * p).sin_cos();
        let (c, s) = (base[2 * j], base[2 * j + 1]);
        let rc = c * cp - s * sp;
        let rs = s * cp + c * sp;
        worst = worst.max((rc - direct[2 * j]).abs()).max((rs - direct[2 * j + 1]).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn te64(mt: f64) -> TimeEncodingConfig {
        TimeEncodingConfig::multi_frequency(64, mt).unwrap()
    }

    #[test]
    fn tv_at_zero() {
        let v = time_vector(0.0, &TimeVectorConfig::new(8, 50.0).unwrap());
        assert_eq!(v, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn tv_small_example() {
        let v = time_vector(1.0, &TimeVectorConfig::new(4, 100.0).unwrap());
        let expect = [1f64.sin(), 1f64.cos(), 0.1f64.sin(), 0.1f64.cos()];
        for (a, b) in v.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn te_at_zero_is_ones() {
        let v = time_encoding(0.0, 0.3, &te64(1000.0));
        assert_eq!(v.len(), 64);
        for p in v.chunks(2) {
            assert_eq!(p, [1.0, 0.0]);
        }
    }

    #[test]
    fn single_base_te_is_swapped_tv() {
        let tv = TimeVectorConfig::new(32, 700.0).unwrap();
        let te = TimeEncodingConfig::single_frequency(32, 700.0).unwrap();
        for t in [0.0, 1.5, 37.0, 699.0] {
            let a = time_vector(t, &tv);
            let b = time_encoding(t, 1.0, &te);
            for i in 0..16 {
                assert!((b[2 * i] - a[2 * i + 1]).abs() < 1e-12);
                assert!((b[2 * i + 1] - a[2 * i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn default_bases_and_cycling() {
        let cfg = te64(100.0);
        assert_eq!(cfg.bases, vec![50.0, 100.0, 200.0, 400.0]);
        let f = cfg.frequencies(1.0);
        assert_eq!(f.len(), 32);
        assert_eq!(f[0], 1.0);
        assert!((f[5] - 100f64.powf(-10.0 / 64.0)).abs() < 1e-15);
        assert!((f[6] - 200f64.powf(-12.0 / 64.0)).abs() < 1e-15);
        assert!(TimeEncodingConfig::new(63, vec![10.0], 10.0).is_err());
        assert!(TimeEncodingConfig::new(64, vec![1.0], 10.0).is_err());
        assert!(TimeEncodingConfig::new(64, vec![], 10.0).is_err());
    }

    #[test]
    fn curve_at_zero_and_rate_stretch() {
        let cfg = te64(400.0);
        let ps: Vec<f64> = (0..50).map(|i| i as f64 * 3.0).collect();
        let c1 = dot_product_curve(&cfg, 1.0, &ps);
        assert_eq!(c1[0].1, 32.0);
        let half: Vec<f64> = ps.iter().map(|p| p / 2.0).collect();
        let c2 = dot_product_curve(&cfg, 2.0, &ps);
        let c1h = dot_product_curve(&cfg, 1.0, &half);
        for (a, b) in c2.iter().zip(&c1h) {
            assert!((a.1 - b.1).abs() < 1e-12);
        }
    }

    fn sign_changes(curve: &[(f64, f64)]) -> usize {
        let signs: Vec<f64> = curve
            .windows(2)
            .map(|w| (w[1].1 - w[0].1).signum())
            .filter(|s| *s != 0.0)
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    #[test]
    fn multi_frequency_curve_is_more_monotone() {
        // frozen from an independent numpy sweep: K=4 vs K=1 sign changes
        // (2 vs 6 at MT=100; 51 vs 65 at MT=1000)
        for (mt, k4, k1) in [(100.0, 2, 6), (1000.0, 51, 65)] {
            let ps: Vec<f64> = (0..=(mt as usize / 4)).map(|p| p as f64).collect();
            let multi = dot_product_curve(&te64(mt), 1.0, &ps);
            let single = dot_product_curve(&TimeEncodingConfig::single_frequency(64, mt).unwrap(), 1.0, &ps);
            assert_eq!(sign_changes(&multi), k4);
            assert_eq!(sign_changes(&single), k1);
        }
    }

    #[test]
    fn curve_csv_header() {
        let mut buf = Vec::new();
        write_curve_csv(&[(0.0, 32.0), (1.0, 20.5)], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "p,dot\n0,32\n1,20.5\n");
    }

    #[test]
    fn rotation_identity_at_zero() {
        let cfg = TimeVectorConfig::new(64, 1000.0).unwrap();
        assert_eq!(check_absolute_distance(12.5, 0.0, &cfg), 0.0);
    }

    proptest! {
        #[test]
        fn te_components_have_unit_modulus(t in -1e4f64..1e4, rate in 0.01f64..10.0) {
            for z in as_complex(&time_encoding(t, rate, &te64(1000.0))) {
                prop_assert!((z.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn rate_equivariance(t in 0f64..5e3, rate in 0.05f64..5.0, c in 0.1f64..10.0) {
            let cfg = te64(1000.0);
            let a = time_encoding(t, rate, &cfg);
            let b = time_encoding(t / c, rate / c, &cfg);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-8);
            }
        }

        #[test]
        fn te_rotation(t in 0f64..1e3, p in -100f64..100.0, rate in 0.1f64..3.0) {
            prop_assert!(check_absolute_distance_te(t, p, rate, &te64(1000.0)) <= 1e-9);
        }

        #[test]
        fn tv_components_bounded(t in -1e5f64..1e5) {
            let v = time_vector(t, &TimeVectorConfig::new(16, 100.0).unwrap());
            prop_assert!(v.iter().all(|x| (-1.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn encodings_are_deterministic() {
        let cfg = te64(321.0);
        assert_eq!(time_encoding(17.25, 0.4, &cfg), time_encoding(17.25, 0.4, &cfg));
    }
}
