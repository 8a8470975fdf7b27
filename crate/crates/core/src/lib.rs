//! Time-encoding echo state networks (TE-ESN) for irregularly sampled time
//! series.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`]: observations, irregular series, CSV ingestion, the Mackey-Glass
//!   generator, irregular subsampling and z-score normalisation.
//! * [`timecode`]: real time vectors and complex, sampling-rate-aware time
//!   encodings together with their distance diagnostics.
//! * [`reservoir`]: frozen random reservoirs, spectral radius estimation and
//!   the multi-reservoir state recursion over a merged event timeline.
//! * [`readout`]: ridge-regularised least squares readout and time decoding.
//! * [`model`]: the end-to-end training / forecasting / cross-validation
//!   pipeline.
//! * [`metrics`], [`memory`]: MSE, AUC-ROC, squared correlation and reservoir
//!   memory capacity.
//! * [`search`]: genetic-algorithm hyperparameter search.
//! * [`bench`]: wall-time scaling of the state loop.
//!
//! Data-parallel loops (per-reservoir updates, folds, seeds, GA candidates,
//! memory-capacity delays) run on rayon when the `parallel` feature is
//! enabled and fall back to plain iterators otherwise. See [`exec`].

// `!(x > 0.0)` style checks deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod data;
pub mod error;
pub mod exec;
pub mod memory;
pub mod metrics;
pub mod model;
pub mod readout;
pub mod reservoir;
pub mod rng;
pub mod search;
pub mod timecode;

pub use error::{Error, Result};
pub use exec::Execution;
