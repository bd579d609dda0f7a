//! First-step parameter estimation from received waveforms: TOA, TDOA, AOA,
//! and RSS.
//!
//! All TOA estimators correlate the received record against a clean template
//! and operate on the correlation magnitude, so they are insensitive to
//! channel polarity inversions (multipath taps carry random signs).

mod aoa;
mod correlation;
mod rss;
mod tdoa;
mod toa;

pub use aoa::{aoa_ula, ula_delays, AoaEstimate, UlaConfig};
pub use rss::{measured_rss, RssMeasurement};
pub use tdoa::{tdoa_cross_correlate, tdoa_from_toas};
pub use toa::{toa_first_path, toa_peak, toa_two_step, TwoStepEstimate};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default threshold as a fraction of the global correlation maximum.
pub const DEFAULT_FRACTION_OF_MAX: f64 = 0.4;
/// Default threshold as a multiple of the estimated noise floor.
pub const DEFAULT_NOISE_FLOOR_MULTIPLE: f64 = 6.0;

#[derive(Debug, Error, PartialEq)]
pub enum RangingError {
    #[error("record and template sample rates differ: {record} vs {template} Hz")]
    SampleRateMismatch { record: f64, template: f64 },
    #[error("template ({template} samples) longer than record ({record} samples)")]
    TemplateTooLong { record: usize, template: usize },
    #[error("template has zero energy")]
    ZeroEnergyTemplate,
    #[error("input waveform has zero energy")]
    ZeroEnergyInput,
    #[error("no correlation sample exceeded the threshold {threshold:.3e} (max statistic {max_statistic:.3e})")]
    NoDetection { threshold: f64, max_statistic: f64 },
    #[error("invalid threshold policy: {0}")]
    InvalidPolicy(&'static str),
    #[error("invalid search window: {0}")]
    InvalidWindow(&'static str),
    #[error("integration window {t} s exceeds the record duration {duration} s")]
    IntegrationWindow { t: f64, duration: f64 },
    #[error("expected {expected} element delays, got {got}")]
    ElementCountMismatch { expected: usize, got: usize },
    #[error("delays imply |sin α| = {sin_alpha:.4} > 1: inconsistent array geometry")]
    InconsistentGeometry { sin_alpha: f64 },
    #[error("invalid ULA configuration: {0}")]
    InvalidUla(&'static str),
}

/// How the first-path detector turns a correlation trace into a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Threshold = value × global maximum of |correlation| in the window.
    FractionOfMax,
    /// Threshold = value × robust noise-floor estimate (median absolute
    /// deviation over the leading 10% of the window, scaled to Gaussian σ).
    NoiseFloorMultiple,
}

/// First-crossing detection threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub mode: ThresholdMode,
    pub value: f64,
}

impl ThresholdPolicy {
    pub fn fraction_of_max(value: f64) -> Self {
        Self { mode: ThresholdMode::FractionOfMax, value }
    }

    pub fn noise_floor_multiple(value: f64) -> Self {
        Self { mode: ThresholdMode::NoiseFloorMultiple, value }
    }

    pub fn validate(&self) -> Result<(), RangingError> {
        if !(self.value > 0.0) {
            return Err(RangingError::InvalidPolicy("threshold value must be positive"));
        }
        if self.mode == ThresholdMode::FractionOfMax && self.value > 1.0 {
            return Err(RangingError::InvalidPolicy("fraction_of_max value must be at most 1"));
        }
        Ok(())
    }
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self::fraction_of_max(DEFAULT_FRACTION_OF_MAX)
    }
}

/// Which TOA estimator produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToaMethod {
    Peak,
    FirstPath,
    TwoStep,
}

/// A time-of-arrival estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToaEstimate {
    /// Estimated arrival time, seconds (sub-sample refined).
    pub toa: f64,
    /// Correlation magnitude at the selected discrete peak.
    pub peak_statistic: f64,
    pub method: ToaMethod,
    /// Delay range that was searched, seconds.
    pub search_window: (f64, f64),
    /// Number of correlation lags evaluated to produce this estimate.
    pub correlation_evals: usize,
}
