use alloc::string::String;

/// Errors shared by every kernel in the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A robot or run configuration failed validation. `field` names the
    /// offending entry (e.g. `joints[13].lower`).
    #[error("validation failed for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    /// Gait or trajectory analysis could not be carried out on the input.
    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("simulation diverged at t = {time:.6} s")]
    SimulationDiverged { time: f64 },

    #[error("training diverged at iteration {iteration}: {diagnostics}")]
    TrainingDiverged {
        iteration: usize,
        diagnostics: String,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn analysis(msg: impl Into<String>) -> Self {
        Error::Analysis(msg.into())
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Returned by the integrators when the state stops being finite. Carries the
/// last state that was still finite so callers can log or replay it.
#[derive(Debug, Clone, PartialEq)]
pub struct Diverged<S> {
    pub time: f64,
    pub last_valid: S,
}

impl<S> From<Diverged<S>> for Error {
    fn from(d: Diverged<S>) -> Self {
        Error::SimulationDiverged { time: d.time }
    }
}
