//! Exactly solvable decoherence model: a heavy body (no kinetic term of its
//! own) coupled to a one-dimensional environment of `n` particles whose
//! kinetic energy is *linear* in momentum, `H_env = α Σ p̂ᵢ + V`.
//!
//! Because the commutator of `H_env` with the linear couplings is central,
//! the body's reduced density matrix has a closed form: every off-diagonal
//! element factorizes into the initial body amplitudes, a deterministic
//! phase, and the characteristic function `f(z)` of the environment
//! centre-of-mass density. Two independent engines compute the elements:
//!
//! * [`rdm`] — the closed forms, built on [`comdist`];
//! * [`oracle`] — split-step spectral propagation of the full conditioned
//!   environment state on a grid, with explicit overlaps.
//!
//! The crate is `no_std` + `alloc`; all I/O lives in the companion CLI
//! crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod comdist;
mod error;
pub mod fft;
pub mod model;
pub mod oracle;
pub mod rdm;
pub mod rng;

pub use error::{Error, Result};
pub use num_complex::Complex64;

#[cfg(test)]
pub(crate) mod testkit;
