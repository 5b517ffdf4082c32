use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A family or ensemble parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// An argument lies outside the support of the object being evaluated.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical routine could not certify the requested accuracy.
    #[error("accuracy error: {0}")]
    Accuracy(String),
    /// An iterative method exceeded its iteration cap.
    #[error("convergence error: {0}")]
    Convergence(String),
    /// A kernel handed to the sampler is not a valid correlation kernel.
    #[error("kernel validity error: {0}")]
    KernelValidity(String),
    /// A simulated particle came too close to the edge of its lattice window.
    #[error("window overflow: {0}")]
    WindowOverflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
