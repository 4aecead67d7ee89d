use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter or input violated a precondition. `param` names the offender.
    InvalidArgument { param: &'static str, reason: String },
    /// A series is too short for the requested configuration.
    SeriesTooShort {
        param: &'static str,
        needed: usize,
        got: usize,
    },
}

impl Error {
    pub(crate) fn invalid(param: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            param,
            reason: reason.into(),
        }
    }

    /// Name of the parameter that caused the error.
    pub fn param(&self) -> &'static str {
        match self {
            Error::InvalidArgument { param, .. } | Error::SeriesTooShort { param, .. } => param,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument { param, reason } => {
                write!(f, "invalid argument `{param}`: {reason}")
            }
            Error::SeriesTooShort { param, needed, got } => write!(
                f,
                "series too short for `{param}`: need at least {needed} samples, got {got}"
            ),
        }
    }
}

impl core::error::Error for Error {}
