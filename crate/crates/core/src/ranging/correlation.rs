use crate::signal::Waveform;

use super::RangingError;

/// Relative tolerance for treating two sample rates as equal.
const RATE_TOL: f64 = 1e-9;

/// Sliding correlation of a record against a template on the sample grid.
///
/// `values[k] = Σ_i r[k+i]·template[i]`, so lag `k` hypothesizes that the
/// template starts at record sample `k`; the corresponding delay is
/// `lag_offset + k·dt` with `lag_offset = r.t0 − template.t0`.
pub(crate) struct Correlation {
    pub values: Vec<f64>,
    pub lag_offset: f64,
    pub dt: f64,
}

impl Correlation {
    pub fn delay_at(&self, lag: f64) -> f64 {
        self.lag_offset + lag * self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }
}

pub(crate) fn check_compatible(r: &Waveform, template: &Waveform) -> Result<(), RangingError> {
    let fr = r.sample_rate();
    let ft = template.sample_rate();
    if (fr - ft).abs() > RATE_TOL * fr.max(ft) {
        return Err(RangingError::SampleRateMismatch { record: fr, template: ft });
    }
    if template.len() > r.len() {
        return Err(RangingError::TemplateTooLong { record: r.len(), template: template.len() });
    }
    if template.energy() <= 0.0 {
        return Err(RangingError::ZeroEnergyTemplate);
    }
    Ok(())
}

pub(crate) fn correlate(r: &Waveform, template: &Waveform) -> Result<Correlation, RangingError> {
    check_compatible(r, template)?;
    let rs = r.samples();
    let ts = template.samples();
    let n_lags = rs.len() - ts.len() + 1;
    let mut values = Vec::with_capacity(n_lags);
    for k in 0..n_lags {
        let window = &rs[k..k + ts.len()];
        values.push(window.iter().zip(ts).map(|(a, b)| a * b).sum());
    }
    Ok(Correlation { values, lag_offset: r.t0() - template.t0(), dt: r.dt() })
}

/// Sub-sample offset of a parabola fitted through three equispaced points
/// around a peak, clamped to ±0.5 samples.
pub(crate) fn parabolic_offset(before: f64, peak: f64, after: f64) -> f64 {
    let denom = before - 2.0 * peak + after;
    if denom == 0.0 {
        return 0.0;
    }
    (0.5 * (before - after) / denom).clamp(-0.5, 0.5)
}

/// Index of the largest magnitude in `values[lo..=hi]`, earliest on ties.
pub(crate) fn argmax_abs(values: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    let mut best_val = values[lo].abs();
    for (k, v) in values.iter().enumerate().take(hi + 1).skip(lo + 1) {
        let mag = v.abs();
        if mag > best_val {
            best = k;
            best_val = mag;
        }
    }
    best
}

/// Refine a discrete peak of |values| with a 3-point parabolic fit, staying
/// inside `[lo, hi]`.
pub(crate) fn refine_peak(values: &[f64], k: usize, lo: usize, hi: usize) -> f64 {
    if k > lo && k < hi {
        let offset =
            parabolic_offset(values[k - 1].abs(), values[k].abs(), values[k + 1].abs());
        k as f64 + offset
    } else {
        k as f64
    }
}

/// Extent of the template's central autocorrelation cluster, in samples.
///
/// A threshold crossing can land on a correlation sidelobe up to this many
/// lags before the local peak, so the first-path refinement scans this far
/// past the crossing. The walk tracks the last lag whose autocorrelation
/// magnitude is at least 0.15 of the zero-lag value and stops once the
/// magnitude has stayed below that for several main-lobe widths, which keeps
/// code-repetition sidelobes (one frame interval away) out of the span.
pub(crate) fn refinement_span(template: &Waveform) -> usize {
    let ts = template.samples();
    let zero_lag: f64 = ts.iter().map(|v| v * v).sum();
    let autocorr_at = |lag: usize| -> f64 {
        ts[lag..].iter().zip(&ts[..ts.len() - lag]).map(|(a, b)| a * b).sum()
    };

    let mut halfwidth = 0;
    let mut last_above = 0;
    let mut below_run = 0;
    for lag in 1..ts.len() {
        let mag = autocorr_at(lag).abs();
        if halfwidth == 0 && mag < 0.5 * zero_lag {
            halfwidth = lag;
        }
        if mag >= 0.15 * zero_lag {
            last_above = lag;
            below_run = 0;
        } else {
            below_run += 1;
            if halfwidth > 0 && below_run > (3 * halfwidth).max(8) {
                break;
            }
        }
    }
    if halfwidth == 0 {
        halfwidth = ts.len() / 2;
    }
    (last_above + halfwidth).max(2)
}

/// Robust noise σ estimate: scaled median absolute deviation.
pub(crate) fn mad_sigma(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let median = median_of(values.to_vec());
    let deviations: Vec<f64> = values.iter().map(|v| (v - median).abs()).collect();
    1.4826 * median_of(deviations)
}

fn median_of(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabolic_vertex_of_exact_parabola() {
        // y = −(x − 0.3)² sampled at −1, 0, 1.
        let f = |x: f64| -(x - 0.3) * (x - 0.3);
        let offset = parabolic_offset(f(-1.0), f(0.0), f(1.0));
        assert!((offset - 0.3).abs() < 1e-12);
    }

    #[test]
    fn argmax_breaks_ties_at_the_earliest_index() {
        let values = vec![0.1, -0.9, 0.4, 0.9, 0.2];
        assert_eq!(argmax_abs(&values, 0, 4), 1);
    }

    #[test]
    fn mad_ignores_outliers() {
        let mut values = vec![0.0; 99];
        for (i, v) in values.iter_mut().enumerate() {
            *v = ((i as f64) * 0.7).sin();
        }
        let base = mad_sigma(&values);
        values[50] = 1e6;
        let spiked = mad_sigma(&values);
        assert!((spiked - base).abs() < 0.1 * base.max(1e-12));
    }
}
