//! Simulation and verification of quantum Arthur-Merlin games at desk scale.
//!
//! The crate covers one-message (QMA), two-message (QAM) and three-message
//! (QMAM) games over circuits built from Toffoli, Hadamard and i-shift gates.

pub mod amplification;
pub mod circuit;
pub mod error;
pub mod exact;
pub mod harness;
pub mod linalg;
pub mod qam;
pub mod qmam;
pub mod rng;
pub mod spectra;

pub use error::{Error, Result};
