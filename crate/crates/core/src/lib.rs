//! Quantum-noise simulation of the Kramers-Kronig (KK) intensity receiver.
//!
//! The crate synthesizes minimum-phase single-sideband symbol frames, draws
//! shot-noise-limited photocurrents, reconstructs the field with a discrete
//! principal-value Hilbert sum, and compares the resulting constellation
//! statistics against closed-form predictions and the balanced-heterodyne
//! baseline.
//!
//! Module map:
//!
//! * [`signal_model`]: symbol mapping and envelope synthesis.
//! * [`quantum_noise`]: expected photocurrent and the variance-to-mean noise law.
//! * [`kk_receiver`]: phase retrieval, field retrieval, per-symbol pipeline.
//! * [`heterodyne`]: analytic balanced heterodyne baseline.
//! * [`analysis`]: cluster statistics, PCA ellipses, analytic predictions.
//! * [`experiment`]: declarative experiment configs, runners and file outputs.

// `!(x > 0.0)` is used on purpose so NaN is rejected with the negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod heterodyne;
pub mod kk_receiver;
pub mod quantum_noise;
pub mod signal_model;

pub use error::{KkError, Result};
pub use num_complex::Complex64;
