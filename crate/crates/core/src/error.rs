use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("overflow evaluating {0}")]
    Overflow(&'static str),

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    /// `m^2 / c >= 1`: the Lambert W argument leaves `[-1/e, 0)`.
    #[error("closed form undefined: m^2/c = {ratio:.6e} >= 1, use the numeric optimiser")]
    ClosedFormDomain { ratio: f64 },

    #[error("no bracket: {0}")]
    Bracket(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("only {survivors} conditioned trials survived (need at least {required})")]
    DegenerateConditioning { survivors: u64, required: u64 },
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
