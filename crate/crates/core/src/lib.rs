//! Logarithmic-spiral vortex sheets in the plane.
//!
//! Vorticity of the form `ω = h(t, θ − β ln r)` reduces the 2D Euler
//! equations to a transport equation for the angular profile `h` on the
//! circle. This crate provides the Green function of the reduced elliptic
//! operator, a spectral solver and time integrators for `h`, the ODE for
//! sheets made of finitely many spirals, self-similar sheet solutions,
//! mollified approximations of sheets and reconstruction of the planar flow.
//!
//! The guide in `book/` walks through each module with runnable examples.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dirac;
pub mod error;
pub mod field;
pub mod kernel;
pub mod ode;
pub mod quadrature;
pub mod reconstruct;
pub mod selfsimilar;
pub mod sheet_limit;
pub mod transport;

pub use error::{Error, Result};

/// Version of this crate, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kernel.md")]
    mod kernel {}
    #[doc = include_str!("../../../book/src/field.md")]
    mod field {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/dirac.md")]
    mod dirac {}
    #[doc = include_str!("../../../book/src/selfsimilar.md")]
    mod selfsimilar {}
    #[doc = include_str!("../../../book/src/sheet_limit.md")]
    mod sheet_limit {}
    #[doc = include_str!("../../../book/src/reconstruct.md")]
    mod reconstruct {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
