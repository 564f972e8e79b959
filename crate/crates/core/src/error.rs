use thiserror::Error;

use crate::transport::Trajectory;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("beta must be nonzero")]
    ZeroBeta,

    #[error("beta must be finite, got {0}")]
    NonFiniteBeta(f64),

    #[error("fold symmetry m must be at least 1")]
    InvalidFold,

    #[error("theta = {theta} lies on the kernel singularity (a multiple of 2pi/m); use the boundary data instead")]
    OnSingularity { theta: f64 },

    #[error("asymptotic kernel expansions are only available for m = 1 (got m = {0})")]
    AsymptoticFold(u32),

    #[error("grid size {0} must be a power of two and at least 16")]
    GridSize(usize),

    #[error("field contains a non-finite value at index {0}")]
    NonFinite(usize),

    #[error("spectral data is inconsistent: {0}")]
    Spectral(String),

    #[error("time step {dt} violates the CFL condition; admissible dt <= {max_dt}")]
    Cfl { dt: f64, max_dt: f64 },

    #[error("atoms {0} and {1} coincide")]
    CoincidentAtoms(usize, usize),

    #[error("atom index {index} out of range ({len} atoms)")]
    AtomIndex { index: usize, len: usize },

    #[error("t = {t} is at or past the blow-up time {pole}")]
    PastPole { t: f64, pole: f64 },

    #[error("mollifier supports of atoms {0} and {1} overlap")]
    OverlappingSupports(usize, usize),

    #[error(
        "grid too coarse for the mollifier: n = {n} but the resolution guard requires n >= 64/epsilon = {required}"
    )]
    Resolution { n: usize, required: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("transport run aborted: non-finite state at t = {}", .0.times.last().copied().unwrap_or(0.0))]
    Aborted(Box<Trajectory>),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
