//! Closed-form accuracy limits and capacity: CRLBs for RSS, AOA, and TOA
//! ranging, Shannon capacity, and the ranging-signal SNR budget.
//!
//! Angles are radians and SNRs are linear throughout this module; interfaces
//! that speak dB or degrees convert at the boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{real, Real};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("{name} must be positive")]
    NonPositive { name: &'static str },
    #[error("{name} must be non-negative")]
    Negative { name: &'static str },
    #[error("array needs at least 2 elements, got {0}")]
    TooFewElements(usize),
    #[error("endfire geometry (cos α = 0): the AOA bound is unbounded")]
    Endfire,
}

fn require_positive<F: Real>(value: F, name: &'static str) -> Result<(), BoundsError> {
    if value > F::zero() {
        Ok(())
    } else {
        Err(BoundsError::NonPositive { name })
    }
}

/// Lower bound on the standard deviation of an unbiased RSS range estimate:
/// (ln 10 · σ_sh · d) / (10 · n), in meters.
///
/// `n` is the path-loss exponent, `sigma_sh` the shadowing deviation in dB,
/// `d` the true distance in meters.
pub fn crlb_rss<F: Real>(n: F, sigma_sh: F, d: F) -> Result<F, BoundsError> {
    require_positive(n, "path-loss exponent")?;
    require_positive(d, "distance")?;
    if sigma_sh < F::zero() {
        return Err(BoundsError::Negative { name: "shadowing deviation" });
    }
    Ok(real::<F>(10.0).ln() * sigma_sh * d / (real::<F>(10.0) * n))
}

/// Lower bound on the standard deviation of an unbiased AOA estimate for a
/// uniform linear array, in radians:
/// √3·c / (√2·π·√SNR·β·√(N_a(N_a²−1))·l·cos α).
///
/// `snr` is the linear per-element SNR, `beta` the effective bandwidth in Hz,
/// `num_elements` the array size, `spacing` the inter-element distance in
/// meters, and `alpha` the arrival angle in radians.
pub fn crlb_aoa<F: Real>(
    snr: F,
    beta: F,
    num_elements: usize,
    spacing: F,
    alpha: F,
) -> Result<F, BoundsError> {
    require_positive(snr, "SNR")?;
    require_positive(beta, "effective bandwidth")?;
    require_positive(spacing, "element spacing")?;
    if num_elements < 2 {
        return Err(BoundsError::TooFewElements(num_elements));
    }
    let cos_alpha = alpha.cos();
    if cos_alpha.abs() < real::<F>(1e-12) {
        return Err(BoundsError::Endfire);
    }
    let na = real::<F>(num_elements as f64);
    let array_gain = (na * (na * na - F::one())).sqrt();
    let numerator = real::<F>(3.0).sqrt() * real::<F>(SPEED_OF_LIGHT);
    let denominator =
        real::<F>(2.0).sqrt() * F::PI() * snr.sqrt() * beta * array_gain * spacing * cos_alpha;
    Ok(numerator / denominator)
}

/// Lower bound on the standard deviation of an unbiased TOA estimate,
/// in seconds: 1 / (2√2·π·√SNR·β).
pub fn crlb_toa<F: Real>(snr: F, beta: F) -> Result<F, BoundsError> {
    require_positive(snr, "SNR")?;
    require_positive(beta, "effective bandwidth")?;
    Ok(F::one() / (real::<F>(2.0) * real::<F>(2.0).sqrt() * F::PI() * snr.sqrt() * beta))
}

/// TOA bound expressed as a range, meters: c·crlb_toa.
pub fn crlb_range<F: Real>(snr: F, beta: F) -> Result<F, BoundsError> {
    Ok(real::<F>(SPEED_OF_LIGHT) * crlb_toa(snr, beta)?)
}

/// Shannon capacity of an AWGN channel, bits/second: B·log₂(1+SNR).
pub fn shannon_capacity<F: Real>(bandwidth: F, snr: F) -> Result<F, BoundsError> {
    require_positive(bandwidth, "bandwidth")?;
    if snr < F::zero() {
        return Err(BoundsError::Negative { name: "SNR" });
    }
    Ok(bandwidth * (F::one() + snr).log2())
}

/// Mask-limited signal budget of a ranging signal: N_f frames of interval T_f
/// at average power P_max over noise level N₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalBudget<F> {
    pub num_frames: usize,
    /// Frame interval T_f, seconds.
    pub frame_interval: F,
    /// Mask-limited average transmit power P_max, watts.
    pub max_average_power: F,
    /// Noise spectral level N₀ the SNR is referenced to, W/Hz.
    pub noise_psd: F,
}

impl<F: Real> SignalBudget<F> {
    /// Ranging signal duration T = N_f·T_f, seconds.
    pub fn duration(&self) -> F {
        real::<F>(self.num_frames as f64) * self.frame_interval
    }
}

/// Linear SNR available to a ranging signal under its power budget:
/// T·P_max/N₀. Doubling the frame count (or the frame interval, or the
/// power) doubles the result.
pub fn ranging_snr<F: Real>(budget: &SignalBudget<F>) -> Result<F, BoundsError> {
    if budget.num_frames == 0 {
        return Err(BoundsError::NonPositive { name: "frame count" });
    }
    require_positive(budget.frame_interval, "frame interval")?;
    require_positive(budget.max_average_power, "max average power")?;
    require_positive(budget.noise_psd, "noise level")?;
    Ok(budget.duration() * budget.max_average_power / budget.noise_psd)
}
