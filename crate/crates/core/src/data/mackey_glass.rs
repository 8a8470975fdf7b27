//! Euler-discretised Mackey-Glass delay system.

use serde::{Deserialize, Serialize};

use crate::data::{irregular_subsample, IntervalDist, IrregularSeries, Observation};
use crate::error::{invalid, Error, Result};

/// Divergence guard; the chaotic attractor stays well inside (0, 2).
const DIVERGENCE_BOUND: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MgParams {
    /// Euler step.
    pub delta: f64,
    /// Feedback coefficient.
    pub a: f64,
    /// Decay coefficient as quoted (commonly written -0.1). Only its
    /// magnitude enters the recurrence; see [`MgParams::decay`].
    pub b: f64,
    /// Nonlinearity exponent.
    pub n: f64,
    /// Delay, in time units (`tau / delta` Euler steps).
    pub tau: f64,
    /// Constant history value for `s <= 0`.
    pub y0: f64,
    /// Number of generated points.
    pub length: usize,
}

impl Default for MgParams {
    fn default() -> Self {
        Self { delta: 0.1, a: 0.2, b: -0.1, n: 10.0, tau: 17.0, y0: 1.2, length: 1000 }
    }
}

impl MgParams {
    /// The decay rate applied as `-decay * y(t)`.
    pub fn decay(&self) -> f64 {
        self.b.abs()
    }

    /// Delay in Euler steps.
    pub fn lag_steps(&self) -> usize {
        (self.tau / self.delta).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(invalid("delta must be > 0"));
        }
        if !(self.tau > 0.0) {
            return Err(invalid("tau must be > 0"));
        }
        if !(self.n >= 1.0) {
            return Err(invalid("n must be >= 1"));
        }
        if ![self.a, self.b, self.y0].iter().all(|v| v.is_finite()) {
            return Err(invalid("a, b, y0 must be finite"));
        }
        if (self.length as f64) < self.tau / self.delta {
            return Err(invalid(format!(
                "length {} is shorter than tau/delta = {}",
                self.length,
                self.tau / self.delta
            )));
        }
        Ok(())
    }
}

/// Integrates `y(t+1) = y(t) + delta * (a*y(t-L)/(1+y(t-L)^n) - decay*y(t))`
/// with `L = tau/delta` and constant history `y0`, returning the points at
/// integer steps `t = 0..length` (timestamp = step index, rate 1).
pub fn generate_mg(params: &MgParams) -> Result<IrregularSeries> {
    params.validate()?;
    let lag = params.lag_steps();
    let decay = params.decay();
    let mut y = Vec::with_capacity(params.length);
    y.push(params.y0);
    for t in 0..params.length.saturating_sub(1) {
        let cur = y[t];
        let delayed = if t >= lag { y[t - lag] } else { params.y0 };
        let next = cur
            + params.delta * (params.a * delayed / (1.0 + delayed.powf(params.n)) - decay * cur);
        if !next.is_finite() || next.abs() > DIVERGENCE_BOUND {
            return Err(Error::Diverged { step: t + 1, value: next });
        }
        y.push(next);
    }
    let observations = y
        .into_iter()
        .enumerate()
        .map(|(i, v)| Observation::new(i as f64, v))
        .collect();
    IrregularSeries::with_rate("mg", observations, 1.0)
}

/// The irregular benchmark series: integrate long enough, subsample with
/// `dist`, keep the first `observations` points.
pub fn mg_irregular(params: &MgParams, dist: IntervalDist, observations: usize, seed: u64) -> Result<IrregularSeries> {
    params.validate()?;
    if observations < 2 {
        return Err(invalid("need at least 2 observations"));
    }
    let max_gap = match dist {
        IntervalDist::Constant { gap } => gap,
        IntervalDist::Uniform { high, .. } => high,
    };
    let length = params.length.max(observations * max_gap.max(1) + 1);
    let full = generate_mg(&MgParams { length, ..*params })?;
    let sub = irregular_subsample(&full, dist, seed)?;
    let obs = sub.observations()[..observations.min(sub.len())].to_vec();
    IrregularSeries::new("mg", obs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn irregular_benchmark_has_requested_length() {
        let dist = IntervalDist::Uniform { low: 1, high: 6 };
        let s = mg_irregular(&MgParams::default(), dist, 1000, 3).unwrap();
        assert_eq!(s.len(), 1000);
        let gaps: Vec<f64> = s.times().collect::<Vec<_>>().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.iter().all(|g| (1.0..=6.0).contains(g)));
        assert_eq!(s, mg_irregular(&MgParams::default(), dist, 1000, 3).unwrap());
    }

    #[test]
    fn first_step_matches_hand_integration() {
        let s = generate_mg(&MgParams { length: 200, ..Default::default() }).unwrap();
        let v: Vec<f64> = s.values().collect();
        assert_eq!(v[0], 1.2);
        assert!((v[1] - 1.191_337_163_459_612_8).abs() < 1e-12, "{}", v[1]);
    }

    #[test]
    fn chaotic_regime_stays_bounded_and_aperiodic() {
        let s = generate_mg(&MgParams { length: 10_000, ..Default::default() }).unwrap();
        let v: Vec<f64> = s.values().collect();
        assert!(v.iter().all(|&y| y > 0.0 && y < 2.0));
        // aperiodic: local maxima heights keep changing
        let peaks: Vec<f64> = v
            .windows(3)
            .skip(2000)
            .filter(|w| w[1] > w[0] && w[1] >= w[2])
            .map(|w| w[1])
            .collect();
        assert!(peaks.len() > 10);
        let spread = peaks.iter().cloned().fold(f64::MIN, f64::max)
            - peaks.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 0.05, "peak spread {spread}");
    }

    #[test]
    fn no_feedback_decays_geometrically() {
        let p = MgParams { a: 0.0, length: 300, ..Default::default() };
        let v: Vec<f64> = generate_mg(&p).unwrap().values().collect();
        for w in v.windows(2) {
            assert!(w[1] < w[0]);
            assert!((w[1] / w[0] - 0.99).abs() < 1e-12);
        }
    }

    #[test]
    fn antidamping_reading_is_caught() {
        // strong feedback with no decay grows without bound
        let p = MgParams { a: 5.0, n: 1.0, b: 0.0, length: 5000, ..Default::default() };
        assert!(matches!(generate_mg(&p), Err(Error::Diverged { .. })));
    }

    #[test]
    fn rejects_short_length() {
        let p = MgParams { length: 100, ..Default::default() };
        assert!(generate_mg(&p).is_err());
    }
}
