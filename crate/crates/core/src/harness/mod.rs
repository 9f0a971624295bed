//! Experiment orchestration: TOML configs, training and evaluation runs,
//! parameter sweeps, channel traces and result export.

pub mod config;
pub mod export;
pub mod run;
pub mod sweep;
pub mod trace;

pub use config::{load_config, save_config, ExperimentConfig, ExperimentSection, PolicyKind};
pub use export::{export_results, read_records, write_records, OutputFormat};
pub use run::{
    build_environment, build_policy, eval_seed, evaluate_baseline, evaluate_genome, overhead_records, run_evaluation,
    run_experiment, run_seed, EvalStats, HistoryRecord, MetricRecord, RunOutput, TimingRecord,
};
pub use sweep::{parse_values, plot_data, sweep, with_param, PARAM_ALIASES};
pub use trace::{check_trace, load_trace, read_trace, sample_trace, save_trace, write_trace, TraceDims};
