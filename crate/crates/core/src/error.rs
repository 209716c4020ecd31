use alloc::string::String;

/// Errors reported by the solver library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value is out of range or has the wrong shape.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A factorization or iteration lost definiteness or hit a singular pivot.
    #[error("numeric breakdown: {0}")]
    NumericBreakdown(String),
    /// The operation needs data the object does not carry.
    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid_arg {
    ($($arg:tt)*) => {
        $crate::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}

macro_rules! breakdown {
    ($($arg:tt)*) => {
        $crate::Error::NumericBreakdown(alloc::format!($($arg)*))
    };
}

pub(crate) use breakdown;
pub(crate) use invalid_arg;

pub(crate) fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(invalid_arg!("{what}: length {got}, expected {want}"))
    }
}
