//! Experiment orchestration: agent training, evaluation protocols, metrics
//! and CSV export.

mod config;
mod eval;
mod export;
mod metrics;

use std::path::Path;

use thiserror::Error;

pub use config::{
    EmbeddingsConfig, EnvConfig, EvalConfig, EvalMode, ExperimentConfig, PretrainConfig, UnseenClassEntry,
    UnseenClassSpec,
};
pub use eval::{
    evaluate, pretrain_agent_init, run_generalization_suite, run_pipeline, run_unseen_class_suite, train_agents,
    training_bundle, Agent, EvalRecord, GeneralizationReport, PolicyKind,
};
pub use export::{
    class_plot_rows, curve_plot_rows, emit_plot_data, export_results, read_records_csv, write_curve_csv,
    write_metrics_csv, write_records_csv, PlotRow,
};
pub use metrics::{aggregate_metrics, metrics_for, GroupBy, MetricsRow};

use crate::embeddings::EmbeddingError;
use crate::envgen::EnvError;
use crate::policynet::PolicyError;
use crate::training::TrainError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        HarnessError::Csv {
            path: path.display().to_string(),
            source,
        }
    }

    /// Configuration problems map to exit code 1, everything else to 2.
    pub fn is_config_error(&self) -> bool {
        matches!(self, HarnessError::Config(_) | HarnessError::Train(TrainError::Config(_)))
    }
}
