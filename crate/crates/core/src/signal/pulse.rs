use serde::{Deserialize, Serialize};

use super::{SignalError, Waveform};

/// Pulse width is mapped to the Gaussian scale as σ = width / 7: the envelope
/// is below 0.3% of its peak outside ±3.5σ, so "width" captures essentially
/// the whole pulse. Overridable via [`gaussian_pulse_with_ratio`].
pub const DEFAULT_WIDTH_SIGMA_RATIO: f64 = 7.0;

/// Gaussian-derivative pulse description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    /// Derivative order of the underlying Gaussian: 0, 1, 2, or 5.
    pub order: u32,
    /// Nominal pulse width in seconds.
    pub width: f64,
}

/// Coded impulse-radio ranging signal: `s(t) = Σ_j a_j ω(t − j·T_f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangingSignalSpec {
    pub pulse: PulseShape,
    /// Frame (pulse repetition) interval T_f, seconds.
    pub frame_interval: f64,
    /// Number of frames N_f.
    pub num_frames: usize,
    /// Ternary code a_j over {-1, 0, +1}, one entry per frame.
    pub code: Vec<i8>,
}

impl RangingSignalSpec {
    pub fn validate(&self) -> Result<(), SignalError> {
        if self.num_frames < 1 {
            return Err(SignalError::NoFrames);
        }
        if self.frame_interval <= self.pulse.width {
            return Err(SignalError::FrameTooShort {
                frame: self.frame_interval,
                width: self.pulse.width,
            });
        }
        if self.code.len() != self.num_frames {
            return Err(SignalError::CodeLengthMismatch {
                code_len: self.code.len(),
                num_frames: self.num_frames,
            });
        }
        if let Some(&bad) = self.code.iter().find(|a| !matches!(a, -1 | 0 | 1)) {
            return Err(SignalError::InvalidCodeEntry(bad));
        }
        Ok(())
    }

    /// Total signal duration T = N_f·T_f, seconds.
    pub fn duration(&self) -> f64 {
        self.num_frames as f64 * self.frame_interval
    }

    /// Number of frames that actually carry a pulse.
    pub fn code_weight(&self) -> usize {
        self.code.iter().filter(|a| **a != 0).count()
    }
}

/// Physicists' Hermite polynomial for the supported derivative orders.
fn hermite(order: u32, x: f64) -> f64 {
    match order {
        0 => 1.0,
        1 => 2.0 * x,
        2 => 4.0 * x * x - 2.0,
        5 => ((32.0 * x * x - 160.0) * x * x + 120.0) * x,
        _ => unreachable!("order checked by caller"),
    }
}

/// Generate the `order`-th derivative of a Gaussian `exp(−t²/(2σ²))`, with
/// σ = width / [`DEFAULT_WIDTH_SIGMA_RATIO`].
///
/// The pulse is supported on ±0.75·width (padded to zero beyond that) and
/// amplitude-normalized so the largest-magnitude sample is ±1, preserving the
/// derivative's sign. Requires at least 20 samples per pulse width.
pub fn gaussian_pulse(order: u32, width: f64, sample_rate: f64) -> Result<Waveform, SignalError> {
    gaussian_pulse_with_ratio(order, width, DEFAULT_WIDTH_SIGMA_RATIO, sample_rate)
}

/// [`gaussian_pulse`] with an explicit width→σ ratio (σ = width / ratio).
pub fn gaussian_pulse_with_ratio(
    order: u32,
    width: f64,
    width_sigma_ratio: f64,
    sample_rate: f64,
) -> Result<Waveform, SignalError> {
    if !matches!(order, 0 | 1 | 2 | 5) {
        return Err(SignalError::UnsupportedOrder(order));
    }
    if !(width > 0.0) || !(width_sigma_ratio > 0.0) {
        return Err(SignalError::NonPositiveWidth(width));
    }
    if !(sample_rate > 0.0) {
        return Err(SignalError::NonPositiveSampleRate(sample_rate));
    }
    let min_rate = 20.0 / width;
    if sample_rate < min_rate {
        return Err(SignalError::Undersampled { rate: sample_rate, min: min_rate });
    }

    let sigma = width / width_sigma_ratio;
    let half_span = 0.75 * width;
    let n_half = (half_span * sample_rate).round() as usize;
    let dt = 1.0 / sample_rate;
    let root2_sigma = sigma * std::f64::consts::SQRT_2;

    let mut samples = Vec::with_capacity(2 * n_half + 1);
    for i in 0..=2 * n_half {
        let t = (i as f64 - n_half as f64) * dt;
        let x = t / root2_sigma;
        let scale = (-1.0 / root2_sigma).powi(order as i32);
        samples.push(scale * hermite(order, x) * (-t * t / (2.0 * sigma * sigma)).exp());
    }

    let peak = samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
    for s in &mut samples {
        *s /= peak;
    }

    Waveform::new(sample_rate, -(n_half as f64) * dt, samples)
}

/// Build the coded ranging signal `s(t) = Σ_j a_j ω(t − j·T_f)` for
/// `j = 0..N_f−1`, where ω is the spec's Gaussian-derivative pulse.
///
/// Frame offsets are rounded to the nearest sample. With non-overlapping
/// frames the total energy equals (number of nonzero code entries) × (pulse
/// energy).
pub fn build_ranging_signal(
    spec: &RangingSignalSpec,
    sample_rate: f64,
) -> Result<Waveform, SignalError> {
    build_ranging_signal_with_ratio(spec, DEFAULT_WIDTH_SIGMA_RATIO, sample_rate)
}

/// [`build_ranging_signal`] with an explicit width→σ ratio for the pulse.
pub fn build_ranging_signal_with_ratio(
    spec: &RangingSignalSpec,
    width_sigma_ratio: f64,
    sample_rate: f64,
) -> Result<Waveform, SignalError> {
    spec.validate()?;
    let pulse = gaussian_pulse_with_ratio(spec.pulse.order, spec.pulse.width, width_sigma_ratio, sample_rate)?;
    let pulse_len = pulse.len();
    let last_offset = ((spec.num_frames - 1) as f64 * spec.frame_interval * sample_rate).round() as usize;

    let mut samples = vec![0.0; last_offset + pulse_len];
    for (j, &a) in spec.code.iter().enumerate() {
        if a == 0 {
            continue;
        }
        let offset = (j as f64 * spec.frame_interval * sample_rate).round() as usize;
        let amp = f64::from(a);
        for (i, p) in pulse.samples().iter().enumerate() {
            samples[offset + i] += amp * p;
        }
    }

    Waveform::new(sample_rate, pulse.t0(), samples)
}
