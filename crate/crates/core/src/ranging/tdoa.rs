use crate::signal::Waveform;

use super::correlation::{argmax_abs, refine_peak};
use super::{RangingError, ToaEstimate};

/// TDOA of two synchronized-receiver records via cross-correlation:
/// the lag maximizing |∫r₁(t)·r₂(t+τ)dt|, parabolic-refined.
///
/// Sign convention: the result is the arrival time at node 1 minus the
/// arrival time at node 2, matching [`tdoa_from_toas`]. A record `r2` that is
/// a copy of `r1` delayed by Δ therefore yields −Δ. The magnitude peak makes
/// the result insensitive to polarity inversion of either record.
pub fn tdoa_cross_correlate(r1: &Waveform, r2: &Waveform) -> Result<f64, RangingError> {
    let fr1 = r1.sample_rate();
    let fr2 = r2.sample_rate();
    if (fr1 - fr2).abs() > 1e-9 * fr1.max(fr2) {
        return Err(RangingError::SampleRateMismatch { record: fr1, template: fr2 });
    }
    if r1.energy() <= 0.0 || r2.energy() <= 0.0 {
        return Err(RangingError::ZeroEnergyInput);
    }

    let a = r1.samples();
    let b = r2.samples();
    let n1 = a.len() as i64;
    let n2 = b.len() as i64;

    // c(k) = Σ_i r1[i]·r2[i+k] over the overlapping range, k ∈ [−(n1−1), n2−1].
    let k_min = -(n1 - 1);
    let k_max = n2 - 1;
    let mut values = Vec::with_capacity((k_max - k_min + 1) as usize);
    for k in k_min..=k_max {
        let i_lo = 0.max(-k) as usize;
        let i_hi = n1.min(n2 - k) as usize;
        let mut acc = 0.0;
        for i in i_lo..i_hi {
            acc += a[i] * b[(i as i64 + k) as usize];
        }
        values.push(acc);
    }

    let hi = values.len() - 1;
    let peak = argmax_abs(&values, 0, hi);
    let refined = refine_peak(&values, peak, 0, hi);
    let lag = k_min as f64 + refined;

    // r2 advanced by τ aligns when τ = (t0₂ − t0₁) + k·dt; the TDOA estimate
    // (arrival 1 minus arrival 2) is its negation.
    let raw = (r2.t0() - r1.t0()) + lag * r1.dt();
    Ok(-raw)
}

/// TDOA as the difference of two TOA estimates. Any receiver clock offset
/// common to both estimates cancels.
pub fn tdoa_from_toas(t1: &ToaEstimate, t2: &ToaEstimate) -> f64 {
    t1.toa - t2.toa
}
