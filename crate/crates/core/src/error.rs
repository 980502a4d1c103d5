use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Shapes do not conform. `block` names the offending block when known.
    #[error("structure error{}: {msg}", fmt_block(.block))]
    Structure { block: Option<usize>, msg: String },
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative numerical routine did not converge.
    #[error("numerical error: {msg} (last estimate {estimate})")]
    NoConvergence { msg: String, estimate: f64 },
    /// The problem/solver combination cannot be run.
    #[error("configuration error: {0}")]
    Config(String),
    /// The adaptive tuner hit its adjustment cap.
    #[error("tuner exhausted: {adjustments} adjustments used, contraction test failed again at iteration {iteration}")]
    TunerExhausted { iteration: usize, adjustments: usize },
    /// Not enough samples for a statistical check.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

fn fmt_block(block: &Option<usize>) -> String {
    match block {
        Some(i) => alloc::format!(" at block {i}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn structure(block: usize, msg: impl Into<String>) -> Self {
        Error::Structure {
            block: Some(block),
            msg: msg.into(),
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Structure {
            block: None,
            msg: msg.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
