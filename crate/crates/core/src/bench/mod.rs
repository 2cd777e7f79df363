//! Metrics, experiment drivers and the command-line front end.

mod any;
pub mod cli;
mod experiments;
mod metrics;
mod report;

pub use any::{AnyCodec, AnyQuery, AnyState, CodecId};
pub use experiments::{
    run_bitsplit_sweep, run_needle, run_rounding_ablation, run_table1, trial_seeds, NeedleConfig, SweepConfig,
    SyntheticProbeConfig,
};
pub use metrics::{cosine, metric_suite, nearest_rank, MetricRow, SeedMetrics};
pub use report::{format_sig6, write_csv, write_json, CSV_COLUMNS};
