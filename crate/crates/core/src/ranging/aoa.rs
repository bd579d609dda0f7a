use serde::{Deserialize, Serialize};

use crate::SPEED_OF_LIGHT;

use super::RangingError;

/// Slack on |sin α| before per-element delays are declared geometrically
/// inconsistent.
const SIN_TOL: f64 = 1e-6;

/// Uniform linear array geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UlaConfig {
    pub num_elements: usize,
    /// Inter-element spacing, meters.
    pub spacing: f64,
}

impl UlaConfig {
    pub fn validate(&self) -> Result<(), RangingError> {
        if self.num_elements < 2 {
            return Err(RangingError::InvalidUla("array needs at least 2 elements"));
        }
        if !(self.spacing > 0.0) {
            return Err(RangingError::InvalidUla("element spacing must be positive"));
        }
        Ok(())
    }
}

/// Angle-of-arrival estimate with its least-squares fit residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoaEstimate {
    /// Arrival angle, radians, in [−π/2, π/2].
    pub angle: f64,
    /// RMS residual of the linear delay fit, seconds.
    pub residual: f64,
}

/// Estimate the arrival angle from per-element delays of a ULA.
///
/// A planar wavefront reaches consecutive elements with `l·sin α / c` extra
/// delay, so the delays are fitted to the line `d_k = d₀ + k·slope` and
/// α = asin(c·slope / l). Delays implying |sin α| > 1 beyond a small
/// tolerance are rejected as inconsistent geometry.
pub fn aoa_ula(element_delays: &[f64], cfg: &UlaConfig) -> Result<AoaEstimate, RangingError> {
    cfg.validate()?;
    if element_delays.len() != cfg.num_elements {
        return Err(RangingError::ElementCountMismatch {
            expected: cfg.num_elements,
            got: element_delays.len(),
        });
    }

    let n = element_delays.len() as f64;
    let k_mean = (n - 1.0) / 2.0;
    let d_mean = element_delays.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (k, d) in element_delays.iter().enumerate() {
        let dk = k as f64 - k_mean;
        cov += dk * (d - d_mean);
        var += dk * dk;
    }
    let slope = cov / var;

    let sin_alpha = SPEED_OF_LIGHT * slope / cfg.spacing;
    if sin_alpha.abs() > 1.0 + SIN_TOL {
        return Err(RangingError::InconsistentGeometry { sin_alpha });
    }
    let angle = sin_alpha.clamp(-1.0, 1.0).asin();

    let residual_sq: f64 = element_delays
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let fit = d_mean + slope * (k as f64 - k_mean);
            (d - fit) * (d - fit)
        })
        .sum();
    Ok(AoaEstimate { angle, residual: (residual_sq / n).sqrt() })
}

/// Per-element arrival delays for a wavefront hitting a ULA at angle `alpha`:
/// `d_k = base_delay + k·l·sin α / c`. Synthesis counterpart of [`aoa_ula`].
pub fn ula_delays(alpha: f64, cfg: &UlaConfig, base_delay: f64) -> Vec<f64> {
    (0..cfg.num_elements)
        .map(|k| base_delay + k as f64 * cfg.spacing * alpha.sin() / SPEED_OF_LIGHT)
        .collect()
}
