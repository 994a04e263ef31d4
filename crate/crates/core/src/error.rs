use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A precondition on shapes, lengths or values was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An iterative routine did not reach its tolerance.
    #[error("did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Returns early with [`Error::InvalidInput`] built from a format string.
macro_rules! invalid {
    ($($arg:tt)*) => {
        return Err($crate::error::Error::InvalidInput(alloc::format!($($arg)*)))
    };
}
pub(crate) use invalid;

/// `invalid!` unless the condition holds.
macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            $crate::error::invalid!($($arg)*);
        }
    };
}
pub(crate) use ensure;
