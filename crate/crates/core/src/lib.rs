//! Supraventricular tachycardia detection and triage from single-lead ECG.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! 1. [`signal_io`]: read WFDB-style records (format 212 / 16) or CSV.
//! 2. [`preprocess`]: median-filter baseline removal, then a zero-phase
//!    Butterworth bandpass.
//! 3. [`fiducial`]: R peaks by windowed argmax, Q/S by half-interval minima,
//!    P by a pre-Q prominence test.
//! 4. [`features`]: RR, IBI, heart rate, QRS width, PR, RMSSD, SDSD.
//! 5. [`classify`]: rule-table triage and four trainable classifiers.
//! 6. [`eval`]: confusion matrices, metrics, k-fold and synthetic data.
//!
//! [`cli`] wires the stages into the `svtscope` command.

pub mod classify;
pub mod cli;
pub mod error;
pub mod eval;
pub mod features;
pub mod fiducial;
pub mod preprocess;
pub mod signal_io;

pub use error::{Error, Result};
