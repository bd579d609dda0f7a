//! UWB pulse and ranging-signal synthesis plus spectral measurements.

mod fcc;
mod pulse;
mod spectrum;
mod waveform;

pub use fcc::{check_fcc_mask, ComplianceReport, FccBand, FccMask};
pub use pulse::{
    build_ranging_signal, build_ranging_signal_with_ratio, gaussian_pulse,
    gaussian_pulse_with_ratio, PulseShape, RangingSignalSpec, DEFAULT_WIDTH_SIGMA_RATIO,
};
pub use spectrum::{classify_uwb, spectral_metrics, SpectralMetrics, UwbClass};
pub use waveform::Waveform;

use thiserror::Error;

/// Errors from waveform construction and signal analysis.
#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("sample rate must be positive, got {0} Hz")]
    NonPositiveSampleRate(f64),
    #[error("waveform must contain at least one sample")]
    Empty,
    #[error("waveform has zero energy")]
    ZeroEnergy,
    #[error("pulse width must be positive, got {0} s")]
    NonPositiveWidth(f64),
    #[error("unsupported Gaussian-derivative order {0} (supported: 0, 1, 2, 5)")]
    UnsupportedOrder(u32),
    #[error("undersampled: sample rate {rate} Hz below {min} Hz (20 samples per pulse width)")]
    Undersampled { rate: f64, min: f64 },
    #[error("frame interval {frame} s does not exceed pulse width {width} s")]
    FrameTooShort { frame: f64, width: f64 },
    #[error("code length {code_len} does not match frame count {num_frames}")]
    CodeLengthMismatch { code_len: usize, num_frames: usize },
    #[error("code entries must be in {{-1, 0, +1}}, got {0}")]
    InvalidCodeEntry(i8),
    #[error("frame count must be at least 1")]
    NoFrames,
    #[error("average power budget must be positive, got {0} W")]
    NonPositivePower(f64),
    #[error("mask bands must be non-overlapping and ordered by frequency")]
    InvalidMask,
    #[error("mask does not cover the occupied band [{f_lo} Hz, {f_hi} Hz]")]
    MaskCoverage { f_lo: f64, f_hi: f64 },
}
