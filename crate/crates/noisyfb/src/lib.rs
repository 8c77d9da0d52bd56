//! Simulator and analysis toolkit for interactive coding over an AWGN
//! channel with a noisy AWGN feedback channel.
//!
//! The crate has two halves that check each other:
//!
//! * **Closed-form analysis** ([`analysis`], [`exponents`]): capacity-gap
//!   bounds for the modulo-based interactive scheme, the penalty ledger
//!   (noise insertion / power loss), rate↔SNR searches behind the gap
//!   sweeps, Gallager/Poltyrev error exponents and the feedback exponent
//!   optimization.
//! * **Sample-by-sample simulation** ([`schemes`], [`montecarlo`]): the
//!   noiseless-feedback Schalkwijk–Kailath baseline, the noisy-feedback
//!   modulo scheme, its modulo-free coupled twin sharing the same noise
//!   sample paths, and a deterministic parallel trial harness with
//!   Clopper–Pearson confidence intervals.
//!
//! Supporting modules: [`numerics`] (Q-function, decibels, capacity),
//! [`modulation`] (PAM with Gray labeling), [`lattice`] (scalar and cubic
//! modulo arithmetic, dithered JSCC with side information).

pub mod analysis;
pub mod exponents;
pub mod lattice;
pub mod modulation;
pub mod montecarlo;
pub mod numerics;
pub mod schemes;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Parameters violate a feasibility constraint of the scheme
    /// (e.g. looseness not below the feedback SNR).
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    /// Invalid run/experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Vector argument does not match the expected dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
