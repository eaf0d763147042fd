//! Desk-scale simulation library for adaptive chromatic-dispersion
//! equalization in coherent optical links.
//!
//! The library covers the full baseband chain of a dual-polarization QPSK
//! system: PRBS payload generation and QPSK mapping ([`siggen`]), a
//! dispersive all-pass fiber channel with OSNR-calibrated noise loading
//! ([`channel`]), LMS and variable-step-size LMS adaptive equalizers plus a
//! static frequency-domain reference equalizer ([`equalize`]), and
//! BER/EVM/convergence measurement ([`metrics`]). Experiment orchestration
//! (single runs, OSNR/step-size/tap-count sweeps, CSV output) lives in
//! [`experiment`] with configuration in [`config`].
//!
//! All operations are deterministic under fixed seeds; independent runs can
//! execute concurrently.

pub mod channel;
pub mod config;
pub mod equalize;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod siggen;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
