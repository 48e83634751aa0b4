use std::path::{Path, PathBuf};

use sumcard::estimator::EstimateError;
use sumcard::oracle::OracleError;
use sumcard::rdf::{RdfError, SyntaxError};
use sumcard::summarizer::SummarizerError;
use sumcard::summary::SummaryError;

/// Process exit status. The numbering is stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Io = 1,
    Usage = 2,
    Parse = 3,
    Inconsistent = 4,
    OutsideDomain = 5,
    Cap = 6,
    BoundInapplicable = 7,
    ValidationFailed = 8,
    Internal = 9,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Summarizer(#[from] SummarizerError),
    #[error("bound violated: {0}")]
    ValidationFailed(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Io { .. } => ExitCode::Io,
            CliError::Usage(_) => ExitCode::Usage,
            CliError::Parse { .. } => ExitCode::Parse,
            CliError::Estimate(e) => estimate_code(e),
            CliError::Oracle(OracleError::CapExceeded { .. }) => ExitCode::Cap,
            CliError::Oracle(OracleError::Inconsistent) => ExitCode::Inconsistent,
            CliError::Summarizer(SummarizerError::Io(_)) => ExitCode::Io,
            CliError::Summarizer(SummarizerError::PartitionFile { .. }) => ExitCode::Parse,
            CliError::Summarizer(SummarizerError::InvalidParameter(_)) => ExitCode::Usage,
            CliError::Summarizer(_) => ExitCode::Internal,
            CliError::ValidationFailed(_) => ExitCode::ValidationFailed,
            CliError::Internal(_) => ExitCode::Internal,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn syntax(path: &Path, e: SyntaxError) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn rdf(path: &Path, e: RdfError) -> Self {
        match e {
            RdfError::Io(source) => Self::io(path, source),
            RdfError::Syntax(e) => Self::syntax(path, e),
        }
    }

    pub fn summary(path: &Path, e: SummaryError) -> Self {
        match e {
            SummaryError::Io(source) => Self::io(path, source),
            other => CliError::Parse {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        }
    }
}

fn estimate_code(e: &EstimateError) -> ExitCode {
    match e {
        EstimateError::Inconsistent => ExitCode::Inconsistent,
        EstimateError::OutsideDomain(_) => ExitCode::OutsideDomain,
        EstimateError::AtomCap { .. }
        | EstimateError::PartitionCap { .. }
        | EstimateError::AnswerCap { .. }
        | EstimateError::VarianceIntractable(_) => ExitCode::Cap,
        EstimateError::BoundInapplicable(_) => ExitCode::BoundInapplicable,
        EstimateError::InvalidEpsilon(_) => ExitCode::Usage,
        EstimateError::NotUnificationFree
        | EstimateError::NotRefinement
        | EstimateError::Summary(_)
        | EstimateError::NegativeVariance(_) => ExitCode::Internal,
    }
}
