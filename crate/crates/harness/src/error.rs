use std::path::PathBuf;

use opinion_core::dynamics::DynamicsError;
use opinion_core::eigen::EigenError;
use opinion_core::graph::GraphError;
use opinion_core::spectral::SpectralError;
use opinion_core::switching::SwitchingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verdict mismatch: {0}")]
    Verdict(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } => 2,
            Self::Numerical(_) => 3,
            Self::Verdict(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<GraphError> for HarnessError {
    fn from(e: GraphError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<EigenError> for HarnessError {
    fn from(e: EigenError) -> Self {
        Self::Numerical(e.to_string())
    }
}

impl From<SpectralError> for HarnessError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::InvalidParams(_) | SpectralError::NotStronglyConnected => Self::Config(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<DynamicsError> for HarnessError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::DimensionMismatch { .. }
            | DynamicsError::InvalidParams(_)
            | DynamicsError::InvalidSaturation(_)
            | DynamicsError::HeterogeneousU
            | DynamicsError::PreconditionViolated(_)
            | DynamicsError::Event(_) => Self::Config(e.to_string()),
            DynamicsError::Spectral(s) => s.into(),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<SwitchingError> for HarnessError {
    fn from(e: SwitchingError) -> Self {
        match e {
            SwitchingError::Graph(g) => g.into(),
            SwitchingError::Spectral(s) => s.into(),
            SwitchingError::Dynamics(d) => d.into(),
            SwitchingError::BisectionFailed | SwitchingError::AssumptionViolated { .. } => {
                Self::Numerical(e.to_string())
            }
            _ => Self::Config(e.to_string()),
        }
    }
}
