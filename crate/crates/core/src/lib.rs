//! Finite-dimensional quantum instruments and the error bounds they obey.
//!
//! The crate is organised bottom-up:
//!
//! * [`operator`]: dense complex matrices with Hermitian / density-operator
//!   contracts, tensor products, partial traces and spectral measures.
//! * [`instruments`]: POVMs, Kraus-form instruments, indirect measurement
//!   models and their dilations.
//! * [`metrics`]: root-mean-square noise and disturbance.
//! * [`relations`]: noise-disturbance uncertainty chains with per-link slack.
//! * [`way`]: conservation-law audits and the quantitative
//!   Wigner-Araki-Yanase bound.
//! * [`gate`]: Hadamard implementations under angular-momentum conservation:
//!   fidelities, error floors and a constrained optimizer.
//!
//! Units are ħ = 1 throughout; spin-½ operators are `σ/2`.

pub mod codec;
pub mod config;
pub mod error;
pub mod gate;
pub mod instruments;
pub mod metrics;
pub mod operator;
pub mod random;
pub mod relations;
pub mod spin;
pub mod sweeps;
pub mod way;

pub use config::NumericConfig;
pub use error::{Error, Result};
pub use operator::{ComplexMatrix, DensityOperator, Observable, SpectralDecomposition, StateVector};
