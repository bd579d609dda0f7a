//! UWB impulse-radio ranging and positioning toolkit.
//!
//! The crate follows the classic two-step positioning pipeline:
//!
//! 1. [`signal`] synthesizes Gaussian-derivative pulses and coded ranging
//!    signals and measures their spectral properties (−10 dB band, effective
//!    bandwidth, FCC mask compliance).
//! 2. [`channel`] propagates a waveform through a statistical channel:
//!    log-distance path loss with log-normal shadowing, an exponentially
//!    decaying tapped-delay-line multipath profile, optional NLOS excess
//!    delay, and additive white Gaussian noise.
//! 3. [`ranging`] estimates position-related parameters from received
//!    waveforms: TOA (correlation peak, threshold first-path, two-step
//!    coarse/fine), TDOA (differencing and cross-correlation), AOA from
//!    uniform-linear-array delays, and time-averaged RSS.
//! 4. [`positioning`] fuses parameter estimates into a position fix:
//!    geometric solvers, weighted nonlinear least squares, grid-based
//!    MAP/MMSE, and k-nearest-neighbor fingerprinting.
//! 5. [`bounds`] provides the matching Cramér–Rao lower bounds and the
//!    capacity/signal-budget arithmetic used as reference lines.
//! 6. [`harness`] runs seeded, reproducible Monte-Carlo experiments over a
//!    scenario description and reports RMSE, error CDFs, and bound ratios.
//!
//! Estimation and bound math is generic over the floating-point scalar via
//! [`scalar::Real`]; the sampled-waveform pipeline is `f64`. Concrete `f64`
//! aliases are exported at the crate root for the common case.

pub mod bounds;
pub mod channel;
pub mod harness;
pub mod positioning;
pub mod ranging;
pub mod scalar;
pub mod signal;

/// Speed of light in vacuum, m/s. Single source for every time↔distance conversion.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub use scalar::Real;

/// 2-D position with `f64` coordinates.
pub type Point = positioning::Point<f64>;
/// Anchor with `f64` coordinates.
pub type Anchor = positioning::Anchor<f64>;
/// Position-related measurement with `f64` value and variance.
pub type Measurement = positioning::Measurement<f64>;
/// Position fix with `f64` state.
pub type PositionEstimate = positioning::PositionEstimate<f64>;
/// Fingerprint database with `f64` measurement vectors.
pub type TrainingSet = positioning::TrainingSet<f64>;
