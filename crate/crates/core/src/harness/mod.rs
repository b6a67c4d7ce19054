//! Experiment orchestration: run configuration, the online training loop,
//! scripted stitching datasets, ablation sweeps and metrics summaries.

mod checks;
mod config;
mod metrics;
mod scripted;
mod sweep;
mod train;

pub use crate::analysis::DatasetManifest;
pub use checks::{
    gradient_check, oracle_check, ordering_check, relabel_check, CheckOutcome, GRADIENT_TOL, ORACLE_TOL,
    RELABEL_TARGET, RELABEL_TOL,
};
pub use config::{parse_seed_list, RunConfig};
pub use metrics::{
    mean_and_std, render_summary, report, summarize, to_csv, write_csv, MetricsRecord, SummaryRow, SweepRecord,
};
pub use scripted::{
    fill_buffer_scripted, oracle_report, train_offline_seed, train_offline_stitch, write_stitch_csv, StitchConfig,
    StitchRow, WaypointPolicy,
};
pub use sweep::{sweep, SweepConfig, SweepKind, SweepOutput};
pub use train::{collect_episode, metrics_file_name, replay_config, train, train_seed, SeedRun, TrainOutput};
