//! Numerics for preparing NOON states of a Tonks-Girardeau gas on a ring.
//!
//! The crate is `no_std` with `alloc`. It covers the single-particle layer
//! (grids, potentials, split-step propagation, momentum-basis spectra), the
//! many-body layer obtained through the Bose-Fermi mapping, CRAB optimal
//! control with a Nelder-Mead search, and invariant-based shortcuts to
//! adiabaticity for squeezing and transporting a trapped gas around the ring.
//!
//! Units are natural throughout: hbar = m = L = 1, positions live on
//! `[-1/2, 1/2)`.
#![no_std]

extern crate alloc;

pub mod crab;
mod error;
pub mod fft;
pub mod propagator;
pub mod ring;
pub mod rng;
pub mod spectra;
pub mod sta;
pub mod tg;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use ring::{wrap_displacement, Potential, RingGrid, Wavefunction};
