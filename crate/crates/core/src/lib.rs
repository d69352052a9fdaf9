//! Entropic uncertainty in the presence of a quantum memory.
//!
//! The crate builds two-qubit states, evaluates the Robertson,
//! Maassen–Uffink and memory-assisted (conditional-entropy) uncertainty
//! relations, estimates the left-hand side three ways (conditional
//! tomography, measuring the memory, and the Fano bound), reconstructs
//! states by iterative maximum likelihood, and simulates the two-party
//! uncertainty game with finite counting statistics.
//!
//! All entropies are in bits.

pub mod entropy;
pub mod error;
pub mod gamesim;
pub mod optimize;
pub mod qmath;
pub mod random;
pub mod states;
pub mod tomography;
pub mod uncertainty;

mod format;

pub use format::fixed9;

pub use error::{Error, Result};
