use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("usage error: {0}")]
    Usage(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("integrand not finite at x = {at}")]
    Integration { at: f64 },
    #[error("no sign change found in [{lo}, {hi}] after bracket expansion")]
    NoRoot { lo: f64, hi: f64 },
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("monte carlo aborted: {bad} of {n} samples were not finite")]
    NonFinite { bad: u64, n: u64 },
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmiError {
    #[error("numerical consistency: {0}")]
    Consistency(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("search did not converge: {0}")]
    NoConvergence(String),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

impl From<SpecError> for GmiError {
    fn from(e: SpecError) -> Self {
        GmiError::Num(NumError::Spec(e))
    }
}

impl From<SpecError> for ChannelError {
    fn from(e: SpecError) -> Self {
        ChannelError::Num(NumError::Spec(e))
    }
}
