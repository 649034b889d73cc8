use std::path::PathBuf;

use thiserror::Error;

/// Failure of a stage, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input, bad configuration or unusable data.
    #[error("input error: {0}")]
    Input(String),
    /// A required input or upstream artifact does not exist.
    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),
    /// A numerical routine failed to produce a result.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::MissingArtifact(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn input(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{context}: {err}"))
    }
}

impl From<newsflow::ideology::IdeologyError> for CliError {
    fn from(e: newsflow::ideology::IdeologyError) -> Self {
        use newsflow::ideology::IdeologyError as E;
        match e {
            E::NotConverged { .. } | E::ZeroResidual | E::Stats(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(format!("ideology: {e}")),
        }
    }
}

impl From<newsflow::stats::StatsError> for CliError {
    fn from(e: newsflow::stats::StatsError) -> Self {
        use newsflow::stats::StatsError as E;
        match e {
            E::TooFewObservations { .. } | E::NonFinite => CliError::Input(format!("stats: {e}")),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<newsflow::similarity::SimilarityError> for CliError {
    fn from(e: newsflow::similarity::SimilarityError) -> Self {
        CliError::Input(format!("similarity: {e}"))
    }
}

impl From<newsflow::influence::InfluenceError> for CliError {
    fn from(e: newsflow::influence::InfluenceError) -> Self {
        use newsflow::influence::InfluenceError as E;
        match e {
            E::NotConverged { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(format!("influence: {e}")),
        }
    }
}
