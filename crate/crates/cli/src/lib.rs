//! Library behind the `chorusnet` binary: study configs, the run / analyze /
//! report pipeline and topology generation.

pub mod analyze;
pub mod config;
mod hash;
pub mod report;
pub mod study;
mod svg;
pub mod topology;

use std::path::Path;

pub use analyze::{analyze, AnalysisOutput, AnalyzeOptions};
pub use config::StudyConfig;
pub use report::{render_report, report, ReportOptions};
pub use study::{run_study, write_study, Manifest, StudyOutput};

/// Failure of a command, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or an invalid config; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// Anything that went wrong while doing the work; exit status 1.
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<chorusnet::Error> for CliError {
    fn from(e: chorusnet::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Run, analyze and report a study into `out_dir`, using the usual
/// subdirectories `analysis/` and `report/`.
pub fn run_pipeline(config: &StudyConfig, out_dir: &Path) -> CliResult<()> {
    write_study(config, out_dir)?;
    let analysis_dir = out_dir.join("analysis");
    let opts = AnalyzeOptions {
        scorer: config.agent.scorer.clone(),
        ..AnalyzeOptions::default()
    };
    analyze(&[out_dir.join("logs")], &analysis_dir, &opts)?;
    report(
        &analysis_dir.join("metrics.csv"),
        &out_dir.join("report"),
        &ReportOptions::default(),
    )?;
    Ok(())
}
