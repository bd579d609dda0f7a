use crate::signal::Waveform;

use super::correlation::{
    argmax_abs, check_compatible, correlate, mad_sigma, refine_peak, refinement_span,
    Correlation,
};
use super::{RangingError, ThresholdMode, ThresholdPolicy, ToaEstimate, ToaMethod};

/// TOA from the global correlation peak: the delay maximizing |∫r·s(t−τ)dt|,
/// refined by a 3-point parabolic fit, ties broken toward the earliest delay.
pub fn toa_peak(r: &Waveform, template: &Waveform) -> Result<ToaEstimate, RangingError> {
    let corr = correlate(r, template)?;
    let hi = corr.len() - 1;
    let k = argmax_abs(&corr.values, 0, hi);
    let refined = refine_peak(&corr.values, k, 0, hi);
    Ok(ToaEstimate {
        toa: corr.delay_at(refined),
        peak_statistic: corr.values[k].abs(),
        method: ToaMethod::Peak,
        search_window: (corr.delay_at(0.0), corr.delay_at(hi as f64)),
        correlation_evals: corr.len(),
    })
}

/// TOA from the earliest threshold crossing of the correlation magnitude,
/// refined to the local peak within the pulse lobe.
///
/// Designed for multipath channels where the first path is not the
/// strongest: the serial scan stops at the first crossing instead of the
/// global maximum. Returns [`RangingError::NoDetection`] when nothing
/// crosses the threshold.
pub fn toa_first_path(
    r: &Waveform,
    template: &Waveform,
    policy: &ThresholdPolicy,
) -> Result<ToaEstimate, RangingError> {
    let corr = correlate(r, template)?;
    let span = refinement_span(template);
    let (refined, stat) = detect_first_path(&corr.values, policy, span)?;
    let hi = corr.len() - 1;
    Ok(ToaEstimate {
        toa: corr.delay_at(refined),
        peak_statistic: stat,
        method: ToaMethod::FirstPath,
        search_window: (corr.delay_at(0.0), corr.delay_at(hi as f64)),
        correlation_evals: corr.len(),
    })
}

/// Two-step TOA estimate: coarse block index from the energy detector plus
/// the fine first-path estimate inside the extended block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStepEstimate {
    pub estimate: ToaEstimate,
    /// Index of the energy block selected by the coarse stage.
    pub coarse_block: usize,
}

/// Two-step TOA estimation: a block-energy detector narrows the search, then
/// the first-path correlator runs only inside the selected block extended by
/// one block on each side.
///
/// Correlation lags are evaluated only inside the fine window, so the
/// evaluation count is roughly three blocks' worth instead of the full
/// record.
pub fn toa_two_step(
    r: &Waveform,
    template: &Waveform,
    block: f64,
    policy: &ThresholdPolicy,
) -> Result<TwoStepEstimate, RangingError> {
    check_compatible(r, template)?;
    policy.validate()?;
    let fs = r.sample_rate();
    let span = refinement_span(template);
    let block_samples = (block * fs).round() as usize;
    if block_samples < span {
        return Err(RangingError::InvalidWindow(
            "block must cover at least the pulse correlation cluster",
        ));
    }
    let remainder = r.len() % block_samples;
    if !(remainder <= 1 || block_samples - remainder <= 1) {
        return Err(RangingError::InvalidWindow(
            "block must divide the record within one sample",
        ));
    }

    // Stage 1: earliest block whose energy, in excess of the median noise
    // pedestal, crosses the policy threshold.
    let dt = r.dt();
    let energies: Vec<f64> = r
        .samples()
        .chunks(block_samples)
        .map(|chunk| chunk.iter().map(|v| v * v).sum::<f64>() * dt)
        .collect();
    let mut sorted = energies.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite energies"));
    let pedestal = sorted[sorted.len() / 2];
    let excess: Vec<f64> = energies.iter().map(|e| e - pedestal).collect();
    let max_excess = excess.iter().cloned().fold(0.0_f64, f64::max);
    let threshold = match policy.mode {
        ThresholdMode::FractionOfMax => policy.value * max_excess,
        ThresholdMode::NoiseFloorMultiple => {
            policy.value * mad_sigma(&energies)
        }
    };
    let coarse_block = excess
        .iter()
        .position(|&e| e >= threshold && e > 0.0)
        .ok_or(RangingError::NoDetection { threshold, max_statistic: max_excess })?;

    // Stage 2: first-path search restricted to the block ± one block.
    let n_lags = r.len() - template.len() + 1;
    let lag_lo = (coarse_block * block_samples).saturating_sub(block_samples).min(n_lags - 1);
    let lag_hi = (((coarse_block + 2) * block_samples).min(r.len()) - 1).min(n_lags - 1);

    let rs = r.samples();
    let ts = template.samples();
    let mut values = Vec::with_capacity(lag_hi - lag_lo + 1);
    for k in lag_lo..=lag_hi {
        let window = &rs[k..k + ts.len()];
        values.push(window.iter().zip(ts).map(|(a, b)| a * b).sum());
    }

    let (refined_local, stat) = detect_first_path(&values, policy, span)?;
    let corr = Correlation { values, lag_offset: r.t0() - template.t0(), dt };
    let estimate = ToaEstimate {
        toa: corr.delay_at(lag_lo as f64 + refined_local),
        peak_statistic: stat,
        method: ToaMethod::TwoStep,
        search_window: (corr.delay_at(lag_lo as f64), corr.delay_at(lag_hi as f64)),
        correlation_evals: corr.len(),
    };
    Ok(TwoStepEstimate { estimate, coarse_block })
}

/// Serial first-crossing scan over a correlation window, returning the
/// refined local lag (relative to the window start) and the peak statistic.
fn detect_first_path(
    values: &[f64],
    policy: &ThresholdPolicy,
    span: usize,
) -> Result<(f64, f64), RangingError> {
    policy.validate()?;
    let hi = values.len() - 1;
    let max_mag = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max_mag <= 0.0 {
        return Err(RangingError::NoDetection { threshold: 0.0, max_statistic: 0.0 });
    }
    let threshold = match policy.mode {
        ThresholdMode::FractionOfMax => policy.value * max_mag,
        ThresholdMode::NoiseFloorMultiple => {
            let lead = values.len().div_ceil(10);
            let sigma = mad_sigma(&values[..lead]);
            // Keep the threshold meaningful on noiseless inputs.
            (policy.value * sigma).max(1e-12 * max_mag)
        }
    };

    let crossing = values
        .iter()
        .position(|v| v.abs() >= threshold)
        .ok_or(RangingError::NoDetection { threshold, max_statistic: max_mag })?;

    // The crossing may sit on a sidelobe; take the strongest correlation
    // within the pulse's cluster span and refine it.
    let local_hi = (crossing + span).min(hi);
    let k_peak = argmax_abs(values, crossing, local_hi);
    let refined = refine_peak(values, k_peak, 0, hi);
    Ok((refined, values[k_peak].abs()))
}
