//! Mapped tent pitching for hyperbolic conservation laws.
//!
//! Spacetime is filled slab by slab with tents ([`tents`]). Each tent is
//! mapped to a cylinder ([`mapping`]) and solved there, either with an
//! implicit mixed method for the wave equation ([`mixedfem`] and
//! [`stepping`]) or with explicit DG and entropy viscosity ([`dg`]).
//! [`driver`] runs whole simulations; [`io`] and [`config`] handle files.
//!
//! The guide in `book/` walks through the library with runnable examples.

pub mod basis;
pub mod config;
pub mod dg;
pub mod driver;
pub mod error;
pub mod io;
pub mod laws;
pub mod mapping;
pub mod mesh;
pub mod mixedfem;
pub mod poly;
pub mod quadrature;
pub mod stepping;
pub mod tents;

pub use error::{Error, Result, SolveError};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tents.md")]
    mod tents {}
    #[doc = include_str!("../../../book/src/mapping.md")]
    mod mapping {}
    #[doc = include_str!("../../../book/src/explicit.md")]
    mod explicit {}
    #[doc = include_str!("../../../book/src/wave.md")]
    mod wave {}
    #[doc = include_str!("../../../book/src/windtunnel.md")]
    mod windtunnel {}
    #[doc = include_str!("../../../book/src/output.md")]
    mod output {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
