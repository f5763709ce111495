//! Single-frame fringe demodulation without a spatial carrier.
//!
//! A fringe pattern `I = I0 (1 + V cos φ)` is turned into an estimate of the
//! continuous phase `φ` in four steps:
//!
//! 1. [`quadrature`] synthesizes the π/2-shifted pattern with a
//!    sign-corrected Hilbert transform;
//! 2. [`wavelet`] transforms both patterns line by line with a complex
//!    Morlet wavelet;
//! 3. [`demod`] combines the two transforms and reads the phase at the
//!    ridge of each column;
//! 4. [`unwrap`] removes the 2π ambiguity.
//!
//! [`synth`] builds the paraboloid benchmark and [`cli`] wires everything
//! into the `fringephase` command.

pub mod cli;
pub mod demod;
pub mod error;
pub mod fields;
pub mod quadrature;
pub mod synth;
pub mod unwrap;
pub mod wavelet;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/conventions.md")]
    mod conventions {}
    #[doc = include_str!("../../../book/src/wavelet.md")]
    mod wavelet {}
    #[doc = include_str!("../../../book/src/quadrature.md")]
    mod quadrature {}
    #[doc = include_str!("../../../book/src/demodulation.md")]
    mod demodulation {}
    #[doc = include_str!("../../../book/src/unwrapping.md")]
    mod unwrapping {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
