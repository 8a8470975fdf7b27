//! Short-term memory capacity: how many past inputs a linear readout can
//! reconstruct from the current reservoir state.

use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{IrregularSeries, IstsDataset, Observation};
use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::metrics::squared_correlation;
use crate::readout::{self, DesignMatrices};
use crate::reservoir::{self, init_reservoir, ReservoirParams};
use crate::rng::{streams, SeedTree};
use crate::model::TimeEncodingMode;
use crate::timecode::TimeEncoder;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McProtocol {
    /// Input is i.i.d. uniform in `[-amplitude, amplitude]`.
    pub amplitude: f64,
    pub train_steps: usize,
    pub test_steps: usize,
    pub washout: usize,
    pub ridge: f64,
    /// Largest delay `k` in the (truncated) sum.
    pub k_max: usize,
}

impl Default for McProtocol {
    fn default() -> Self {
        Self { amplitude: 0.8, train_steps: 2000, test_steps: 1000, washout: 100, ridge: 1e-6, k_max: 100 }
    }
}

impl McProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(invalid("k_max must be >= 1"));
        }
        if !(self.amplitude > 0.0) {
            return Err(invalid("input amplitude must be positive"));
        }
        if self.test_steps < 2 || self.train_steps <= self.washout.max(self.k_max) {
            return Err(invalid("training steps must exceed max(washout, k_max), and test steps must be >= 2"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub total: f64,
    /// `r^2` for delays `0..=k_max`.
    pub per_delay: Vec<f64>,
}

/// Memory capacity `sum_k r^2(u(t-k), y_k(t))` for one reservoir driven on a
/// unit-rate timeline (`t = 0, 1, 2, ...`). With `time_encoding` enabled the
/// encodings of `t` are injected and subtracted again at decoding, exactly
/// as in forecasting.
pub fn memory_capacity(
    params: &ReservoirParams,
    time_encoding: &TimeEncodingMode,
    protocol: &McProtocol,
    seed: u64,
    exec: Execution,
) -> Result<McResult> {
    protocol.validate()?;
    let total = protocol.train_steps + protocol.test_steps;
    let tree = SeedTree::new(seed);
    let mut rng = tree.child(streams::MEMORY_INPUT).rng();
    let u: Vec<f64> = (0..total).map(|_| rng.random_range(-protocol.amplitude..=protocol.amplitude)).collect();

    let obs = u.iter().enumerate().map(|(i, &v)| Observation::new(i as f64, v)).collect();
    let dataset = IstsDataset::single(IrregularSeries::with_rate("u", obs, 1.0)?);
    let te_cfg = time_encoding.resolve(dataset.max_time())?;
    let rparams = ReservoirParams { seed: tree.child(streams::RESERVOIR).seed(), ..*params };
    let res = init_reservoir(&rparams, te_cfg.as_ref().map_or(0, |c| c.dim))?;
    let encoder = te_cfg.as_ref().map(|c| TimeEncoder::new(c, &[1.0])).transpose()?;
    let traj = reservoir::run(std::slice::from_ref(&res), &dataset, encoder.as_ref(), exec)?;
    let states = &traj[0].states;
    let n = res.size();
    let te_at = |t: usize| match &encoder {
        Some(enc) => res.project_te(&enc.encode(0, t as f64)),
        None => vec![0.0; n],
    };

    let k_max = protocol.k_max;
    let start = protocol.washout.max(k_max);
    let design_for = |range: std::ops::Range<usize>| -> Result<DesignMatrices> {
        let cols = range.len();
        let x = DMatrix::from_fn(n, cols, |r, c| states[range.start + c].fused[r]);
        let mut te = DMatrix::zeros(n, cols);
        for (c, t) in range.clone().enumerate() {
            te.set_column(c, &nalgebra::DVector::from_vec(te_at(t)));
        }
        let y = DMatrix::from_fn(k_max + 1, cols, |k, c| u[range.start + c - k]);
        DesignMatrices::new(x, te, y)
    };
    let train = design_for(start..protocol.train_steps)?;
    let test = design_for(protocol.train_steps..total)?;
    let fitted = readout::fit(&train, protocol.ridge)?;
    let pred = &fitted.w_out * test.decoded();

    let per_delay: Vec<f64> = exec
        .map_range(k_max + 1, |k| {
            let p: Vec<f64> = pred.row(k).iter().copied().collect();
            let a: Vec<f64> = test.targets().row(k).iter().copied().collect();
            squared_correlation(&p, &a).map(|r| r.value)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(McResult { total: per_delay.iter().sum(), per_delay })
}
