//! Quantum dynamics of a cold atom orbiting an optical nanofiber.
//!
//! The crate is `no_std` (with `alloc`) and covers the numerical chain end
//! to end: guided-mode fields of the nanofiber, the effective radial
//! potential for each azimuthal quantum number, the ground vibrational
//! state and its energy, the dispersion relation `E_m`, the exact evolution
//! of a Gaussian superposition of orbital states, and the scattering rate
//! seen by a quasi-linearly polarized probe mode.
//!
//! IO, configuration and the command line live in the `nanorbit` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod consts;
pub mod dispersion;
mod error;
pub mod fibermode;
pub mod materials;
pub mod potentials;
pub mod probe;
pub mod quad;
pub mod radial;
pub mod specfun;
pub mod tridiag;
pub mod wavepacket;

pub use error::{Error, Result};
