//! Secret-key-rate analysis of BB84 (XY and XZ bases), six-state and
//! reference-frame-independent QKD when Bob's polarization frame is rotated
//! by θ and fluctuates by ±δ around it.
//!
//! - [`polarization`]: 2×2 states, Pauli observables and waveplate Jones matrices.
//! - [`channel`]: depolarizing noise and frame rotation, averaged or sampled.
//! - [`rates`]: closed-form QBERs, `C`, Eve's information, key rates and thresholds.
//! - [`sim`]: pulse-level Monte Carlo sessions, tallies and estimators.
//! - [`sweep`]: config-driven parameter sweeps and CSV/JSON output.

pub mod channel;
pub mod error;
pub mod par;
pub mod polarization;
pub mod rates;
pub mod sim;
pub mod sweep;

pub use error::{Error, Result};
