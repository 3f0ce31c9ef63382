use alloc::string::String;

/// Errors raised by the numerical models.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or incomplete model configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// An iterative evaluation ran out of budget before reaching its
    /// tolerance. `partial` is the best estimate available at that point.
    #[error("no convergence after {evaluations} evaluations: partial result {partial:e} (est. rel. error {est_rel_error:e})")]
    Convergence {
        partial: f64,
        est_rel_error: f64,
        evaluations: usize,
    },

    /// The data cannot determine all fit parameters.
    #[error("identifiability error: {0}")]
    Identifiability(String),

    /// A least-squares fit failed; `trace` holds the cost per iteration.
    #[error("fit did not converge: {reason}")]
    Fit {
        reason: String,
        trace: alloc::vec::Vec<f64>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::Error::Domain(alloc::format!($($arg)*)) };
}
macro_rules! config {
    ($($arg:tt)*) => { $crate::Error::Config(alloc::format!($($arg)*)) };
}
macro_rules! invalid {
    ($($arg:tt)*) => { $crate::Error::Validation(alloc::format!($($arg)*)) };
}
pub(crate) use {config, domain, invalid};
