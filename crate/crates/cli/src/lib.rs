//! Experiment pipeline behind the `porder` binary.
//!
//! Every command is a pure function of the config, its input files and the
//! seeds it names. Artifacts land in `<out>/<name>/`.

mod commands;
mod config;

use std::io;
use std::path::{Path, PathBuf};

use porder::baselines::BaselineError;
use porder::estimation::EstimationError;
use porder::executor::ExecutorError;
use porder::order::OrderError;
use porder::sampler::SamplerError;
use porder::trace::TraceError;

pub use commands::{
    align, baseline, estimate, evaluate, execute, infer, load_traces, pipeline, simulate,
    alpha_label, BaselineMethod, CoverageReport, EstimateSummary,
};
pub use config::{
    BaselineConfig, EstimatorConfig, ExecuteConfig, ExperimentConfig, SynthesisConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible request: {0}")]
    Infeasible(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for config or schema problems, 3 for infeasible requests, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io { .. } | CliError::Failed(_) => 1,
        }
    }
}

impl From<OrderError> for CliError {
    fn from(e: OrderError) -> Self {
        match e {
            OrderError::TooLarge { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::TargetUnreachable { .. } => CliError::Infeasible(e.to_string()),
            TraceError::Order(e) => e.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::Order(e) => e.into(),
            SamplerError::Io(e) => CliError::Failed(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        match e {
            BaselineError::Sampler(e) => e.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::EmptyChain => CliError::Failed(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ExecutorError> for CliError {
    fn from(e: ExecutorError) -> Self {
        CliError::Config(e.to_string())
    }
}
