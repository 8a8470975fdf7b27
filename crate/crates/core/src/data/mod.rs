//! Irregularly sampled time series: data model, ingestion and preprocessing.

mod csv;
mod mackey_glass;
mod normalize;
mod series;

pub use self::csv::{load_csv, load_targets, write_csv, write_targets, CsvSchema};
pub use mackey_glass::{generate_mg, mg_irregular, MgParams};
pub use normalize::{AffineParams, Normalizer};
pub use series::{
    estimate_rate, irregular_subsample, IntervalDist, IrregularSeries, IstsDataset, Observation,
    Target,
};
