//! Detection-error analysis for large multi-user MIMO uplinks.
//!
//! The crate simulates `r = Hx + v` with i.i.d. `CN(0,1)` channel entries,
//! runs maximum-likelihood and zero-forcing detectors against it, and
//! evaluates the closed-form antenna-efficiency formulas and error-probability
//! bounds that predict how fast the vector error probability (VEP) decays as
//! receive antennas are added.
//!
//! Antenna efficiency `f` is the exponential decay rate of the VEP per extra
//! receive antenna, `P(x̂ ≠ x) ≈ exp(-f·m)`, at a fixed users-to-antennas ratio.
//! It is the large-system analogue of the diversity order (the high-SNR decay
//! exponent), which this crate does not evaluate.

pub mod channel;
pub mod config;
pub mod constellation;
pub mod detect;
mod error;
pub mod montecarlo;
pub mod report;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix (column-major).
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
