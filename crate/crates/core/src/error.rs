use thiserror::Error;

/// Errors raised by the bound evaluators, kernels and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative computation did not converge within its budget.
    #[error("computation error: {message} (last value {partial:e})")]
    Computation { message: String, partial: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

/// Fails with a domain error unless `0 < p < 1`.
pub(crate) fn check_open_unit(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        domain(format!("{name} must lie in (0,1), got {p}"))
    }
}
