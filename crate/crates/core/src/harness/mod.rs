//! Experiment orchestration: JSON configuration, training, the myopic
//! baseline, evaluation, and CSV output.

pub mod config;
pub mod metrics;
pub mod runner;

pub use config::{BaselineConfig, EvalConfig, ExperimentConfig};
pub use metrics::{
    mean_std, moving_average, sla_violations, write_compare, write_episodes, write_slots, write_windows, CompareRow, EpisodeRecord,
    RunMetrics, WindowRecord,
};
pub use runner::{
    baseline_plan, evaluate, rollout_baseline, rollout_policy, run_baseline, run_training, run_training_with, simulate,
    train_episode, Checkpoint, Evaluation, Training, BASELINE, TAWS,
};
