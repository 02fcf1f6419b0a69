use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural parameter combination is invalid (lattice sizes, chain settings, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative solve or estimate failed to produce a finite answer.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("lattice mismatch: model has L = {model}, configuration has L = {config}")]
    LatticeMismatch { model: usize, config: usize },

    #[error("lattice too large for exact enumeration: {plaquettes} plaquettes (limit {limit})")]
    TooLarge { plaquettes: usize, limit: usize },

    /// Anyon numbers on a torus must be even.
    #[error("parity error: {0}")]
    Parity(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
