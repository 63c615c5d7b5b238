//! Simulated worker–server channel and experiment execution.
//!
//! [`run_config`] dispatches a parsed [`ExperimentConfig`] to its driver and
//! returns the CSV text. Identical configs produce identical CSVs, except
//! for the seconds columns of the wall-clock experiment.

pub mod channel;
pub mod config;
pub mod datasets;
pub mod experiments;

pub use channel::{BitChannel, LedgerEntry};
pub use config::{Experiment, ExperimentConfig};
pub use datasets::{
    format_vector, load_dataset, parse_csv_dataset, parse_idx, parse_vector, DatasetSource, LabeledData,
};
pub use experiments::{
    run_compression_map, run_rate_vs_r, run_sparsified_gd, run_svm, run_wallclock, to_csv, CompressionRow, RateRow,
    TraceRow, WallclockRow,
};

use crate::error::Result;

/// Run the experiment described by `cfg` and render its rows as CSV.
pub fn run_config(cfg: &ExperimentConfig) -> Result<String> {
    cfg.validate()?;
    let seed = cfg.seed;
    match &cfg.experiment {
        Experiment::CompressionMap(c) => to_csv(&run_compression_map(c, seed)?),
        Experiment::RateVsR(c) => to_csv(&run_rate_vs_r(c, seed)?),
        Experiment::Wallclock(c) => to_csv(&run_wallclock(c, seed)?),
        Experiment::SparsifiedGd(c) => to_csv(&run_sparsified_gd(c, seed)?),
        Experiment::Svm(c) => to_csv(&run_svm(c, seed)?),
    }
}
