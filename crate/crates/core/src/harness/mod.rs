//! Experiment plumbing: datasets, splits, configuration, the two-phase
//! runner and report files.

mod config;
mod dataset_io;
mod experiment;
mod report;
mod split;
mod synthetic;

use std::path::Path;

pub use crate::agent::{EpisodeRecord, MetricsLog, StepRecord};
pub use config::{desk_dataset, DatasetSource, ExperimentConfig, Preset};
pub use dataset_io::{load_csv, read_csv, to_csv_bytes, write_csv};
pub use experiment::{load_dataset, prepare_data, run_experiment, run_seed, schedule, ExperimentRun, SeedRun};
pub use report::{
    comparison_csv, curve_csv, emit_reports, heatmap_csv, metrics_csv, parse_curve_csv, reaggregate, run_info,
    summarize, write_comparison, Aggregate, RunInfo, SeedInfo, SeedSummary, Stat, Summary,
};
pub use split::{split, SplitConfig, Splits, MIN_DATASET, MIN_PER_CLASS};
pub use synthetic::{generate_synthetic, SyntheticSpec};

use crate::baselines::TeacherKind;
use crate::error::Result;

/// Runs `config` once per teacher kind, writing each run into
/// `out/<kind>/` and a side-by-side table into `out/<stem>.csv|json`.
pub fn run_comparison(
    config: &ExperimentConfig,
    teachers: &[TeacherKind],
    out: &Path,
    stem: &str,
) -> Result<Vec<Summary>> {
    let mut summaries = Vec::new();
    for &kind in teachers {
        let cfg = ExperimentConfig {
            teacher: kind,
            ..config.clone()
        };
        let run = run_experiment(&cfg)?;
        summaries.push(emit_reports(&run, &out.join(kind.as_str()))?);
    }
    write_comparison(&summaries, out, stem)?;
    Ok(summaries)
}
