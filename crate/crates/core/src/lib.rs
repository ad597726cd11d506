//! Simulation models for a 2D MIMO FMCW radar array operating in the D-band.
//!
//! The crate is organised by subsystem:
//!
//! - [`waveform`]: chirp synthesis, echo model, dechirping and range estimation.
//! - [`array`]: virtual-array geometry, steering vectors, array factor, MIMO gain.
//! - [`doa`]: snapshot synthesis, sample covariance, MUSIC/MVDR spectra, peak search.
//! - [`linkbudget`]: radar-equation SNR, distance scaling and required TX power.
//! - [`power`]: LO distribution network and DC power decomposition.
//! - [`eval`]: Monte Carlo RMSE evaluation and parameter sweeps.
//!
//! Angles are degrees at every public interface. Powers are watts unless a
//! name says otherwise (`_db`, `_dbm`).

pub mod array;
pub mod doa;
mod error;
pub mod eval;
pub mod linkbudget;
pub mod power;
pub mod units;
pub mod waveform;

pub use error::{Error, Result};
pub use num_complex::Complex64;
