use std::path::PathBuf;

use manifest_ig::cache::CacheError;
use manifest_ig::{FeatureError, IgError, ReportError, SamplingError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Ig(#[from] IgError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Sampling(_) | CliError::Feature(_) | CliError::Ig(_) => 2,
            CliError::Report(ReportError::Io { .. }) => 3,
            CliError::Report(_) => 2,
            CliError::Cache(CacheError::Io { .. }) => 3,
            CliError::Cache(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Sampling(SamplingError::PoolTooSmall { .. }) => Some(
                "lower --n-per-class, pass --n-per-class all, or add samples to the smaller pool",
            ),
            CliError::Ig(IgError::EmptyVocabulary) => {
                Some("no sampled app declares a usable feature; check --category and --min-support")
            }
            CliError::Feature(FeatureError::NameCollisionAcrossCategories { .. }) => {
                Some("pass --namespace-categories to keep both as separate features")
            }
            CliError::Feature(FeatureError::DuplicateSample { .. }) => {
                Some("the same file is present under both corpus directories")
            }
            CliError::Feature(FeatureError::EmptyInput) => {
                Some("no successfully parsed samples were found")
            }
            _ => None,
        }
    }
}
