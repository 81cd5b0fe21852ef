//! Tensor time series: the container type, the synthetic generator, file
//! formats and train/test splitting.

mod io;
mod series;
mod syn;
mod truth;

pub use io::{
    atomic_write, load_series, load_series_csv, read_series, save_series, save_series_csv,
    write_series, TSR3_MAGIC, TSR3_VERSION,
};
pub use series::{split, Split, TensorSeries};
pub use syn::{generate_syn, SynConfig, SynGroundTruth};
pub use truth::{load_ground_truth, save_ground_truth, write_ground_truth, TRUTH_MAGIC, TRUTH_VERSION};
