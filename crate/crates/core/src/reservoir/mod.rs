//! Frozen random reservoirs and the time-encoding state recursion.
//!
//! Each series `d` owns a reservoir. At an observation `(t, u)` of series
//! `d` the update is
//!
//! ```text
//! x_t   = tanh(W_te TE(d,t) + W_in u + W_res x~_{t-1})       time encoding state
//! x'_t  = g_l x_t + (1 - g_l) (x_{t-1} + x_{t-k})            long-short state
//! x^D\d = mean of the latest x' of the other reservoirs       neighbour state
//! x~_t  = g_f x'_t + (1 - g_f) x^D\d                          fused state
//! ```
//!
//! `t-1` and `t-k` count observations of the same series.

mod run;
mod sparse;
mod spectral;

use std::collections::VecDeque;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{streams, SeedTree};

pub use run::{run, run_with_initial, StateRecord, StateTrajectory};
pub use sparse::CsrMatrix;
pub use spectral::{spectral_radius, spectral_radius_with, PowerIterationOptions};

const MAX_REDRAWS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReservoirParams {
    /// Number of neurons `N`.
    pub size: usize,
    /// `w_in`: input (and time-encoding projection) weights are uniform in
    /// `[-w_in, w_in]`.
    pub input_scale: f64,
    /// `alpha`: probability that a recurrent weight is nonzero.
    pub sparsity: f64,
    /// Target spectral radius of `W_res`.
    pub spectral_radius: f64,
    /// `gamma_l`.
    pub leaky_rate: f64,
    /// `gamma_f`.
    pub fusion_rate: f64,
    /// `k`, in observation steps.
    pub long_skip: usize,
    pub seed: u64,
}

impl Default for ReservoirParams {
    /// The Mackey-Glass setting: `w_in=1, alpha=0.1, rho=0.7, gamma_l=0.8,
    /// k=6, gamma_f=1`.
    fn default() -> Self {
        Self {
            size: 100,
            input_scale: 1.0,
            sparsity: 0.1,
            spectral_radius: 0.7,
            leaky_rate: 0.8,
            fusion_rate: 1.0,
            long_skip: 6,
            seed: 0,
        }
    }
}

impl ReservoirParams {
    pub fn validate(&self) -> Result<()> {
        let unit_open = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be in (0, 1], got {v}")))
            }
        };
        let unit_closed = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be in [0, 1], got {v}")))
            }
        };
        if self.size == 0 {
            return Err(invalid("reservoir size must be >= 1"));
        }
        unit_open("input_scale", self.input_scale)?;
        unit_open("sparsity", self.sparsity)?;
        unit_open("spectral_radius", self.spectral_radius)?;
        unit_closed("leaky_rate", self.leaky_rate)?;
        unit_closed("fusion_rate", self.fusion_rate)?;
        if self.long_skip == 0 {
            return Err(invalid("long_skip must be >= 1"));
        }
        Ok(())
    }
}

/// Frozen weights of one reservoir.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reservoir {
    pub params: ReservoirParams,
    /// Seed that produced the weights (differs from `params.seed` only after
    /// a degenerate draw was rejected).
    pub effective_seed: u64,
    pub te_dim: usize,
    /// `N x 1`.
    pub w_in: Vec<f64>,
    pub w_res: CsrMatrix,
    /// `N x te_dim`, row-major.
    pub w_te: Vec<f64>,
}

/// Draws a reservoir. `te_dim = 0` gives a reservoir without a time-encoding
/// projection.
pub fn init_reservoir(params: &ReservoirParams, te_dim: usize) -> Result<Reservoir> {
    params.validate()?;
    let n = params.size;
    for attempt in 0..MAX_REDRAWS {
        let seed = params.seed.wrapping_add(attempt as u64);
        let mut rng = SeedTree::new(seed).child(streams::RESERVOIR).rng();
        let w = params.input_scale;
        let w_in: Vec<f64> = (0..n).map(|_| rng.random_range(-w..=w)).collect();
        let mut trip = Vec::with_capacity((params.sparsity * (n * n) as f64) as usize + n);
        for r in 0..n {
            for c in 0..n {
                if rng.random::<f64>() < params.sparsity {
                    let v = rng.random_range(-1.0..=1.0);
                    if v != 0.0 {
                        trip.push((r, c, v));
                    }
                }
            }
        }
        let mut w_res = CsrMatrix::from_sorted_triplets(n, &trip)?;
        let radius = spectral_radius(&w_res)?;
        if !(radius > 1e-12) {
            log::warn!("reservoir draw with seed {seed} has zero spectral radius; redrawing");
            continue;
        }
        w_res.scale(params.spectral_radius / radius);
        let w_te: Vec<f64> = (0..n * te_dim).map(|_| rng.random_range(-w..=w)).collect();
        return Ok(Reservoir { params: *params, effective_seed: seed, te_dim, w_in, w_res, w_te });
    }
    Err(Error::DegenerateReservoir { attempts: MAX_REDRAWS })
}

impl Reservoir {
    pub fn size(&self) -> usize {
        self.params.size
    }

    /// `W_te * te`. Empty input (time encoding disabled) projects to zeros.
    pub fn project_te(&self, te: &[f64]) -> Vec<f64> {
        let n = self.size();
        if te.is_empty() || self.te_dim == 0 {
            return vec![0.0; n];
        }
        debug_assert_eq!(te.len(), self.te_dim);
        self.w_te
            .chunks_exact(self.te_dim)
            .map(|row| row.iter().zip(te).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Time encoding state and long-short state for one observation.
    ///
    /// `te_proj` is the already projected encoding (`W_te TE`), `prev_raw`
    /// and `skip_raw` the raw states `x_{t-1}` and `x_{t-k}` (zeros when the
    /// history is shorter).
    pub fn excite(
        &self,
        u: f64,
        te_proj: &[f64],
        prev_fused: &[f64],
        prev_raw: &[f64],
        skip_raw: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let mut raw = self.w_res.mul_vec(prev_fused);
        for (i, r) in raw.iter_mut().enumerate() {
            *r = (*r + self.w_in[i] * u + te_proj[i]).tanh();
        }
        let gl = self.params.leaky_rate;
        let long_short = raw
            .iter()
            .zip(prev_raw.iter().zip(skip_raw))
            .map(|(x, (p, s))| gl * x + (1.0 - gl) * (p + s))
            .collect();
        (raw, long_short)
    }

    /// Full single-series step including fusion with the neighbours'
    /// latest long-short states.
    pub fn step(&self, u: f64, te: &[f64], history: &StateHistory, neighbors: &[&[f64]]) -> Vec<f64> {
        let n = self.size();
        let zeros = vec![0.0; n];
        let prev_raw = history.raw_back(1).unwrap_or(&zeros);
        let skip_raw = history.raw_back(self.params.long_skip).unwrap_or(&zeros);
        let prev_fused = history.fused().unwrap_or(&zeros);
        let (_, ls) = self.excite(u, &self.project_te(te), prev_fused, prev_raw, skip_raw);
        fuse(&ls, neighbors, self.params.fusion_rate)
    }
}

/// `g_f * own + (1 - g_f) * mean(neighbors)`; identity when there are no
/// neighbours.
pub fn fuse(own: &[f64], neighbors: &[&[f64]], fusion_rate: f64) -> Vec<f64> {
    if neighbors.is_empty() {
        return own.to_vec();
    }
    let inv = 1.0 / neighbors.len() as f64;
    own.iter()
        .enumerate()
        .map(|(i, x)| {
            let mean = neighbors.iter().map(|nb| nb[i]).sum::<f64>() * inv;
            fusion_rate * x + (1.0 - fusion_rate) * mean
        })
        .collect()
}

/// Per-series memory: the last `k` raw states and the last fused state.
#[derive(Clone, Debug, Default)]
pub struct StateHistory {
    raw: VecDeque<Vec<f64>>,
    fused: Option<Vec<f64>>,
    capacity: usize,
}

impl StateHistory {
    pub fn new(long_skip: usize) -> Self {
        Self { raw: VecDeque::with_capacity(long_skip.max(1)), fused: None, capacity: long_skip.max(1) }
    }

    /// History whose previous raw and fused states are both `state`.
    pub fn seeded(long_skip: usize, state: Vec<f64>) -> Self {
        let mut h = Self::new(long_skip);
        h.push(state.clone(), state);
        h
    }

    /// Raw state `lag` observations back (1 = previous).
    pub fn raw_back(&self, lag: usize) -> Option<&[f64]> {
        if lag == 0 || lag > self.raw.len() {
            None
        } else {
            Some(&self.raw[self.raw.len() - lag])
        }
    }

    pub fn fused(&self) -> Option<&[f64]> {
        self.fused.as_deref()
    }

    pub fn push(&mut self, raw: Vec<f64>, fused: Vec<f64>) {
        if self.raw.len() == self.capacity {
            self.raw.pop_front();
        }
        self.raw.push_back(raw);
        self.fused = Some(fused);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dense_radius(m: &CsrMatrix) -> f64 {
        let n = m.dim();
        let d = m.to_dense();
        DMatrix::from_fn(n, n, |r, c| d[r][c])
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn dense_two_by_two_hits_target_radius() {
        let p = ReservoirParams { size: 2, sparsity: 1.0, spectral_radius: 0.7, seed: 3, ..Default::default() };
        let r = init_reservoir(&p, 0).unwrap();
        assert_eq!(r.w_res.nnz(), 4);
        assert!((dense_radius(&r.w_res) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn sparsity_and_input_ranges() {
        let p = ReservoirParams { size: 100, sparsity: 0.1, input_scale: 0.4, seed: 17, ..Default::default() };
        let r = init_reservoir(&p, 8).unwrap();
        let frac = r.w_res.density();
        assert!((0.08..=0.12).contains(&frac), "density {frac}");
        assert!(r.w_in.iter().all(|w| w.abs() <= 0.4));
        assert!(r.w_te.iter().all(|w| w.abs() <= 0.4));
        assert_eq!(r.w_te.len(), 800);
        assert!((dense_radius(&r.w_res) - 0.7).abs() < 1e-6);
    }

    #[test]
    fn same_seed_same_weights() {
        let p = ReservoirParams { size: 30, seed: 99, ..Default::default() };
        assert_eq!(init_reservoir(&p, 4).unwrap(), init_reservoir(&p, 4).unwrap());
        let q = ReservoirParams { seed: 100, ..p };
        assert_ne!(init_reservoir(&p, 4).unwrap().w_in, init_reservoir(&q, 4).unwrap().w_in);
    }

    #[test]
    fn tiny_sparse_reservoir_redraws() {
        // N=1 at alpha=0.1 is empty most of the time; redraws must find a
        // nonzero self-loop or report degeneracy
        let p = ReservoirParams { size: 1, sparsity: 0.1, seed: 0, ..Default::default() };
        match init_reservoir(&p, 0) {
            Ok(r) => {
                assert_eq!(r.w_res.nnz(), 1);
                assert!((r.w_res.values()[0].abs() - 0.7).abs() < 1e-12);
            }
            Err(Error::DegenerateReservoir { attempts }) => assert_eq!(attempts, MAX_REDRAWS),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn invalid_params_rejected() {
        for p in [
            ReservoirParams { size: 0, ..Default::default() },
            ReservoirParams { input_scale: 0.0, ..Default::default() },
            ReservoirParams { sparsity: 1.5, ..Default::default() },
            ReservoirParams { spectral_radius: 0.0, ..Default::default() },
            ReservoirParams { leaky_rate: -0.1, ..Default::default() },
            ReservoirParams { fusion_rate: 1.1, ..Default::default() },
            ReservoirParams { long_skip: 0, ..Default::default() },
        ] {
            assert!(init_reservoir(&p, 0).is_err(), "{p:?}");
        }
    }

    #[test]
    fn history_lags() {
        let mut h = StateHistory::new(3);
        for i in 0..5 {
            h.push(vec![i as f64], vec![-(i as f64)]);
        }
        assert_eq!(h.raw_back(1), Some(&[4.0][..]));
        assert_eq!(h.raw_back(3), Some(&[2.0][..]));
        assert_eq!(h.raw_back(4), None);
        assert_eq!(h.fused(), Some(&[-4.0][..]));
    }

    #[test]
    fn fusion_extremes() {
        let own = [1.0, 2.0];
        let a = [3.0, 5.0];
        let b = [5.0, 7.0];
        assert_eq!(fuse(&own, &[&a, &b], 0.0), vec![4.0, 6.0]);
        assert_eq!(fuse(&own, &[&a, &b], 1.0), vec![1.0, 2.0]);
        assert_eq!(fuse(&own, &[], 0.0), vec![1.0, 2.0]);
    }
}
