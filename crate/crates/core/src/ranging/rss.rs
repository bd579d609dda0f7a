use crate::signal::Waveform;

use super::RangingError;

/// Time-averaged received power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RssMeasurement {
    /// (1/T)∫₀ᵀ|r|²dt, linear power.
    pub linear: f64,
    /// Same in dB; −∞ for a silent record.
    pub db: f64,
}

/// Average power of the leading `t` seconds of a record, by the rectangle
/// rule on the waveform's own sample grid (`t` is rounded to whole samples).
pub fn measured_rss(r: &Waveform, t: f64) -> Result<RssMeasurement, RangingError> {
    if !(t > 0.0) || t > r.duration() + 0.5 * r.dt() {
        return Err(RangingError::IntegrationWindow { t, duration: r.duration() });
    }
    let n = ((t * r.sample_rate()).round() as usize).clamp(1, r.len());
    let linear = r.samples()[..n].iter().map(|v| v * v).sum::<f64>() / n as f64;
    Ok(RssMeasurement { linear, db: 10.0 * linear.log10() })
}
