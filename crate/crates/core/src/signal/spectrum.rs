use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{SignalError, Waveform};

/// Spectral summary of a waveform.
///
/// `f_lo`/`f_hi` are the −10 dB emission points of the energy spectral
/// density; `bandwidth` is the −10 dB (absolute) bandwidth, `fractional_bandwidth`
/// is 2(f_hi−f_lo)/(f_hi+f_lo), and `effective_bandwidth` is the
/// second-moment bandwidth β with β² = ∫f²|S(f)|²df / ∫|S(f)|²df.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMetrics {
    pub f_lo: f64,
    pub f_hi: f64,
    pub bandwidth: f64,
    pub center_frequency: f64,
    pub fractional_bandwidth: f64,
    pub effective_bandwidth: f64,
}

impl SpectralMetrics {
    /// Derive the bandwidth quantities from known −10 dB band edges.
    pub fn from_band_edges(f_lo: f64, f_hi: f64, effective_bandwidth: f64) -> Self {
        let bandwidth = f_hi - f_lo;
        let center_frequency = 0.5 * (f_hi + f_lo);
        Self {
            f_lo,
            f_hi,
            bandwidth,
            center_frequency,
            fractional_bandwidth: bandwidth / center_frequency,
            effective_bandwidth,
        }
    }
}

/// Regulatory classification of a signal's bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UwbClass {
    Uwb,
    NotUwb,
}

/// A signal is UWB if its absolute bandwidth is at least 500 MHz or its
/// fractional bandwidth exceeds 20%.
pub fn classify_uwb(m: &SpectralMetrics) -> UwbClass {
    if m.bandwidth >= 500e6 || m.fractional_bandwidth > 0.2 {
        UwbClass::Uwb
    } else {
        UwbClass::NotUwb
    }
}

/// Two-sided energy spectral density |S(f)|² sampled on the non-negative
/// frequency bins, with S(f) approximated by DFT·dt.
pub(super) struct EnergySpectrum {
    pub df: f64,
    pub esd: Vec<f64>,
}

impl EnergySpectrum {
    /// Compute the ESD with the record zero-padded to at least `min_len`
    /// samples (rounded up to a power of two).
    pub fn compute(w: &Waveform, min_len: usize) -> Self {
        let n = min_len.max(w.len()).next_power_of_two();
        let mut buf: Vec<Complex<f64>> =
            w.samples().iter().map(|&s| Complex::new(s, 0.0)).collect();
        buf.resize(n, Complex::new(0.0, 0.0));
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);

        let dt = w.dt();
        let esd = buf[..n / 2 + 1].iter().map(|c| c.norm_sqr() * dt * dt).collect();
        Self { df: w.sample_rate() / n as f64, esd }
    }
}

/// Measure −10 dB band edges and effective bandwidth of a waveform.
///
/// Band edges come from a DFT zero-padded to ≥8× the record length, with
/// linear interpolation of the crossing on the log-magnitude spectrum. The
/// effective bandwidth is computed in the time domain through the derivative
/// identity β² = ∫|s′|²dt / (4π²∫|s|²dt), using a fourth-order central
/// difference with the edge samples dropped (a second-order stencil is too
/// biased near the 20-samples-per-width floor).
pub fn spectral_metrics(w: &Waveform) -> Result<SpectralMetrics, SignalError> {
    let energy = w.energy();
    if energy <= 0.0 {
        return Err(SignalError::ZeroEnergy);
    }

    let spectrum = EnergySpectrum::compute(w, 8 * w.len());
    let esd = &spectrum.esd;
    let df = spectrum.df;
    let peak = esd.iter().cloned().fold(0.0_f64, f64::max);
    let threshold = 0.1 * peak; // −10 dB

    let first = esd.iter().position(|&e| e >= threshold).expect("peak bin exists");
    let last = esd.iter().rposition(|&e| e >= threshold).expect("peak bin exists");

    let f_lo = if first == 0 { 0.0 } else { interpolate_crossing(esd, threshold, df, first - 1, first) };
    let f_hi = if last == esd.len() - 1 {
        last as f64 * df
    } else {
        interpolate_crossing(esd, threshold, df, last + 1, last)
    };

    let beta = effective_bandwidth_time_domain(w);

    Ok(SpectralMetrics::from_band_edges(f_lo, f_hi, beta))
}

/// Interpolate the −10 dB crossing between a bin below threshold (`lo`) and a
/// bin at/above it (`hi`), linearly in log magnitude.
fn interpolate_crossing(esd: &[f64], threshold: f64, df: f64, lo: usize, hi: usize) -> f64 {
    let e_lo = esd[lo];
    let e_hi = esd[hi];
    if e_lo <= 0.0 {
        return hi as f64 * df;
    }
    let frac = (threshold.ln() - e_lo.ln()) / (e_hi.ln() - e_lo.ln());
    (lo as f64 + frac * (hi as f64 - lo as f64)) * df
}

fn effective_bandwidth_time_domain(w: &Waveform) -> f64 {
    let s = w.samples();
    let n = s.len();
    let dt = w.dt();
    let energy = w.energy();

    let deriv_energy: f64 = if n >= 5 {
        (2..n - 2)
            .map(|i| {
                let d = (-s[i + 2] + 8.0 * s[i + 1] - 8.0 * s[i - 1] + s[i - 2]) / (12.0 * dt);
                d * d * dt
            })
            .sum()
    } else if n >= 3 {
        (1..n - 1)
            .map(|i| {
                let d = (s[i + 1] - s[i - 1]) / (2.0 * dt);
                d * d * dt
            })
            .sum()
    } else {
        0.0
    };

    (deriv_energy / (4.0 * std::f64::consts::PI.powi(2) * energy)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::gaussian_pulse;

    /// Closed-form second-moment bandwidth of an order-n Gaussian-derivative
    /// pulse: β² = (2n+1)/(8π²σ²). Independent oracle for the time-domain path.
    fn gaussian_beta_oracle(order: u32, sigma: f64) -> f64 {
        ((2.0 * order as f64 + 1.0) / (8.0 * std::f64::consts::PI.powi(2) * sigma * sigma)).sqrt()
    }

    #[test]
    fn band_edge_arithmetic_matches_fcc_band() {
        // 3.1–10.6 GHz band edges.
        let m = SpectralMetrics::from_band_edges(3.1e9, 10.6e9, 0.0);
        assert!((m.bandwidth - 7.5e9).abs() < 1.0);
        assert!((m.center_frequency - 6.85e9).abs() < 1.0);
        assert!((m.fractional_bandwidth - 7.5 / 6.85).abs() < 1e-12);
        assert!((m.fractional_bandwidth - 1.095).abs() < 1e-3);
    }

    #[test]
    fn beta_matches_gaussian_moment_oracle() {
        // σ = 1 ns order-0 pulse (width 7 ns): β = 1/(2√2·π·σ) ≈ 112.5 MHz.
        let w = gaussian_pulse(0, 7e-9, 20e9).unwrap();
        let m = spectral_metrics(&w).unwrap();
        let oracle = gaussian_beta_oracle(0, 1e-9);
        assert!((oracle - 112.54e6).abs() / oracle < 1e-3);
        assert!((m.effective_bandwidth - oracle).abs() / oracle < 0.01);
    }

    #[test]
    fn beta_within_one_percent_at_minimum_sample_rate() {
        for order in [0u32, 1, 2] {
            let width = 1e-9;
            let w = gaussian_pulse(order, width, 20.0 / width).unwrap();
            let m = spectral_metrics(&w).unwrap();
            let oracle = gaussian_beta_oracle(order, width / 7.0);
            let rel = (m.effective_bandwidth - oracle).abs() / oracle;
            assert!(rel < 0.01, "order {order}: relative β error {rel}");
        }
    }

    #[test]
    fn order2_band_edges_match_analytic_spectrum() {
        // |S(f)|² ∝ f⁴e^{−4π²σ²f²} crosses −10 dB at 0.5743 and 2.8900 GHz
        // for σ = 1/7 ns (roots of 4·ln(f/f*) = a(f²−f*²) − ln 10).
        let w = gaussian_pulse(2, 1e-9, 50e9).unwrap();
        let m = spectral_metrics(&w).unwrap();
        assert!((m.f_lo - 0.5743e9).abs() < 0.01e9, "f_lo = {}", m.f_lo);
        assert!((m.f_hi - 2.8900e9).abs() < 0.01e9, "f_hi = {}", m.f_hi);
        assert_eq!(classify_uwb(&m), UwbClass::Uwb);
    }

    #[test]
    fn metrics_invariant_to_scaling_and_time_shift() {
        let w = gaussian_pulse(2, 1e-9, 50e9).unwrap();
        let m = spectral_metrics(&w).unwrap();
        let m_scaled = spectral_metrics(&w.scaled(2.0)).unwrap();
        let m_shifted = spectral_metrics(&w.time_shifted(3.7e-9)).unwrap();
        assert!((m.f_lo - m_scaled.f_lo).abs() < 1.0);
        assert!((m.f_hi - m_scaled.f_hi).abs() < 1.0);
        assert!((m.effective_bandwidth - m_scaled.effective_bandwidth).abs() < 1e-3);
        assert_eq!(m, m_shifted);
    }

    #[test]
    fn zero_energy_rejected() {
        let w = Waveform::new(1e9, 0.0, vec![0.0; 64]).unwrap();
        assert_eq!(spectral_metrics(&w).unwrap_err(), SignalError::ZeroEnergy);
    }

    #[test]
    fn classification_branches() {
        // Absolute branch: exactly 500 MHz qualifies even at tiny fractional bandwidth.
        let wide = SpectralMetrics::from_band_edges(9.75e9, 10.25e9, 0.0);
        assert!(wide.fractional_bandwidth < 0.2);
        assert_eq!(classify_uwb(&wide), UwbClass::Uwb);

        // Fractional branch: 400 MHz at 1 GHz center.
        let frac = SpectralMetrics::from_band_edges(0.8e9, 1.2e9, 0.0);
        assert!(frac.bandwidth < 500e6);
        assert_eq!(classify_uwb(&frac), UwbClass::Uwb);

        // Neither: 300 MHz at 6 GHz center.
        let narrow = SpectralMetrics::from_band_edges(5.85e9, 6.15e9, 0.0);
        assert_eq!(classify_uwb(&narrow), UwbClass::NotUwb);
    }
}
