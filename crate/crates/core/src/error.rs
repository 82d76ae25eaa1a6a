use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("capability exceeded: {0}")]
    Capability(String),
    #[error("singular jet: {0}")]
    SingularJet(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("non-degeneracy violated: {0}")]
    NonDegeneracy(String),
    #[error("metric signature: {0}")]
    MetricSignature(String),
    #[error("graph solve failed at x = {x:?}: {message}")]
    GraphSolve { x: Vec<f64>, message: String },
    #[error("not a divergence: {0}")]
    NotADivergence(String),
    #[error("tail bound exceeded: {0}")]
    TailBoundExceeded(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse { offset, message: message.into() }
    }

    /// True for the numeric failures the CLI maps to exit code 3.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonDegeneracy(_)
                | Error::MetricSignature(_)
                | Error::GraphSolve { .. }
                | Error::SingularJet(_)
                | Error::Domain(_)
                | Error::NotADivergence(_)
                | Error::TailBoundExceeded(_)
                | Error::Fit(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
