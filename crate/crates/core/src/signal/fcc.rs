use serde::{Deserialize, Serialize};

use super::spectrum::EnergySpectrum;
use super::{spectral_metrics, SignalError, Waveform};

/// One piecewise-constant segment of an emission mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FccBand {
    pub f_lo: f64,
    pub f_hi: f64,
    pub limit_dbm_per_mhz: f64,
}

/// Piecewise-constant average-PSD emission mask in dBm/MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FccMask {
    bands: Vec<FccBand>,
}

impl FccMask {
    /// Build a mask from bands; they must be ordered and non-overlapping.
    pub fn new(bands: Vec<FccBand>) -> Result<Self, SignalError> {
        if bands.is_empty() {
            return Err(SignalError::InvalidMask);
        }
        for (i, b) in bands.iter().enumerate() {
            if !(b.f_lo >= 0.0 && b.f_hi > b.f_lo) {
                return Err(SignalError::InvalidMask);
            }
            if i > 0 && b.f_lo < bands[i - 1].f_hi {
                return Err(SignalError::InvalidMask);
            }
        }
        Ok(Self { bands })
    }

    /// FCC average-PSD limits for indoor UWB systems. The 3.1–10.6 GHz band
    /// sits at −41.3 dBm/MHz; the flanking bands are stricter.
    pub fn fcc_indoor() -> Self {
        Self {
            bands: vec![
                FccBand { f_lo: 0.0, f_hi: 0.96e9, limit_dbm_per_mhz: -41.3 },
                FccBand { f_lo: 0.96e9, f_hi: 1.61e9, limit_dbm_per_mhz: -75.3 },
                FccBand { f_lo: 1.61e9, f_hi: 1.99e9, limit_dbm_per_mhz: -53.3 },
                FccBand { f_lo: 1.99e9, f_hi: 3.1e9, limit_dbm_per_mhz: -51.3 },
                FccBand { f_lo: 3.1e9, f_hi: 10.6e9, limit_dbm_per_mhz: -41.3 },
                FccBand { f_lo: 10.6e9, f_hi: f64::INFINITY, limit_dbm_per_mhz: -51.3 },
            ],
        }
    }

    pub fn bands(&self) -> &[FccBand] {
        &self.bands
    }

    /// Limit applying at frequency `f`, if the mask covers it.
    pub fn limit_at(&self, f: f64) -> Option<f64> {
        self.bands
            .iter()
            .find(|b| f >= b.f_lo && f < b.f_hi)
            .map(|b| b.limit_dbm_per_mhz)
    }

    /// True when the union of bands covers `[f_lo, f_hi]` without gaps.
    fn covers(&self, f_lo: f64, f_hi: f64) -> bool {
        let mut cursor = f_lo;
        for b in &self.bands {
            if b.f_lo > cursor {
                break;
            }
            if b.f_hi > cursor {
                cursor = b.f_hi;
            }
            if cursor >= f_hi {
                return true;
            }
        }
        cursor >= f_hi
    }
}

/// Margin of one mask band against the scaled signal PSD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandMargin {
    pub band: FccBand,
    /// Limit minus worst 1 MHz bin in the band, dB. Positive is compliant;
    /// infinite when the band carries no signal energy.
    pub margin_db: f64,
}

/// Result of checking a waveform's average PSD against an emission mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub pass: bool,
    /// Worst-case margin over all bands, dB.
    pub margin_db: f64,
    pub band_margins: Vec<BandMargin>,
    /// Average transmit power at which the mask is exactly met, watts.
    pub max_average_power: f64,
    /// −10 dB occupied band of the signal, Hz.
    pub occupied_band: (f64, f64),
}

impl ComplianceReport {
    /// Per-frame pulse energy bound T_f·P_max, joules.
    pub fn frame_energy_bound(&self, frame_interval: f64) -> f64 {
        frame_interval * self.max_average_power
    }
}

const MHZ: f64 = 1e6;
/// Numerical slack on the pass/fail boundary so "exactly at the limit" passes.
const MARGIN_EPS_DB: f64 = 1e-9;

/// Check a waveform against an average-PSD mask at a given transmit power.
///
/// The waveform's one-sided PSD (energy spectral density over signal
/// duration, integrated in 1 MHz resolution bins) is scaled so the total
/// average power equals `avg_power_budget`, then each bin is compared against
/// the mask. The mask must cover the signal's −10 dB occupied band.
pub fn check_fcc_mask(
    w: &Waveform,
    avg_power_budget: f64,
    mask: &FccMask,
) -> Result<ComplianceReport, SignalError> {
    if !(avg_power_budget > 0.0) {
        return Err(SignalError::NonPositivePower(avg_power_budget));
    }
    let metrics = spectral_metrics(w)?; // rejects zero-energy input
    if !mask.covers(metrics.f_lo, metrics.f_hi) {
        return Err(SignalError::MaskCoverage { f_lo: metrics.f_lo, f_hi: metrics.f_hi });
    }

    // Resolve the spectrum finely enough that every 1 MHz bin holds DFT bins.
    let min_len = (8 * w.len()).max((w.sample_rate() / MHZ).ceil() as usize);
    let spectrum = EnergySpectrum::compute(w, min_len);
    let duration = w.duration();
    let scale = avg_power_budget / (w.energy() / duration);

    // One-sided power per 1 MHz bin, watts.
    let nyquist = w.sample_rate() / 2.0;
    let n_bins = (nyquist / MHZ).ceil() as usize;
    let mut bin_power = vec![0.0_f64; n_bins];
    let last = spectrum.esd.len() - 1;
    for (i, &esd) in spectrum.esd.iter().enumerate() {
        let f = i as f64 * spectrum.df;
        let fold = if i == 0 || i == last { 1.0 } else { 2.0 };
        let bin = ((f / MHZ) as usize).min(n_bins - 1);
        bin_power[bin] += fold * esd * spectrum.df / duration * scale;
    }

    let mut band_margins = Vec::with_capacity(mask.bands().len());
    let mut worst = f64::INFINITY;
    for band in mask.bands() {
        let mut margin = f64::INFINITY;
        for (m, &p) in bin_power.iter().enumerate() {
            let center = (m as f64 + 0.5) * MHZ;
            if center < band.f_lo || center >= band.f_hi || p <= 0.0 {
                continue;
            }
            let dbm = 10.0 * (p * 1e3).log10();
            margin = margin.min(band.limit_dbm_per_mhz - dbm);
        }
        band_margins.push(BandMargin { band: *band, margin_db: margin });
        worst = worst.min(margin);
    }

    Ok(ComplianceReport {
        pass: worst >= -MARGIN_EPS_DB,
        margin_db: worst,
        band_margins,
        max_average_power: avg_power_budget * 10f64.powf(worst / 10.0),
        occupied_band: (metrics.f_lo, metrics.f_hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{build_ranging_signal, PulseShape, RangingSignalSpec};

    fn test_signal() -> Waveform {
        // Short pulse centered near 6.3 GHz so the occupied band sits inside
        // the 3.1–10.6 GHz segment.
        let spec = RangingSignalSpec {
            pulse: PulseShape { order: 2, width: 0.25e-9 },
            frame_interval: 50e-9,
            num_frames: 4,
            code: vec![1, -1, 1, 1],
        };
        build_ranging_signal(&spec, 80e9).unwrap()
    }

    #[test]
    fn indoor_mask_lookup() {
        let mask = FccMask::fcc_indoor();
        assert_eq!(mask.limit_at(6.85e9), Some(-41.3));
        assert_eq!(mask.limit_at(1.2e9), Some(-75.3));
        assert_eq!(mask.limit_at(2.5e9), Some(-51.3));
        assert_eq!(mask.limit_at(20e9), Some(-51.3));
    }

    #[test]
    fn mask_validation() {
        assert!(FccMask::new(vec![]).is_err());
        let overlapping = vec![
            FccBand { f_lo: 0.0, f_hi: 2e9, limit_dbm_per_mhz: -41.3 },
            FccBand { f_lo: 1e9, f_hi: 3e9, limit_dbm_per_mhz: -51.3 },
        ];
        assert_eq!(FccMask::new(overlapping).unwrap_err(), SignalError::InvalidMask);
    }

    #[test]
    fn max_power_sits_exactly_on_the_limit() {
        let w = test_signal();
        let mask = FccMask::fcc_indoor();
        let report = check_fcc_mask(&w, 1e-3, &mask).unwrap();

        // Re-check at the reported maximum power: the worst bin touches the
        // limit, the boundary is inclusive.
        let at_limit = check_fcc_mask(&w, report.max_average_power, &mask).unwrap();
        assert!(at_limit.pass, "margin at P_max is {}", at_limit.margin_db);
        assert!(at_limit.margin_db.abs() < 1e-6);

        // One dB above the maximum power fails with a −1 dB margin.
        let over = check_fcc_mask(&w, report.max_average_power * 10f64.powf(0.1), &mask).unwrap();
        assert!(!over.pass);
        assert!((over.margin_db + 1.0).abs() < 1e-6);
    }

    #[test]
    fn frame_energy_bound_is_linear_in_frame_interval() {
        let w = test_signal();
        let report = check_fcc_mask(&w, 1e-3, &FccMask::fcc_indoor()).unwrap();
        let full = report.frame_energy_bound(50e-9);
        let half = report.frame_energy_bound(25e-9);
        assert!((half - 0.5 * full).abs() < 1e-18);
    }

    #[test]
    fn uncovered_occupied_band_is_an_error() {
        let w = test_signal();
        let narrow = FccMask::new(vec![FccBand {
            f_lo: 0.0,
            f_hi: 4e9,
            limit_dbm_per_mhz: -41.3,
        }])
        .unwrap();
        assert!(matches!(
            check_fcc_mask(&w, 1e-3, &narrow).unwrap_err(),
            SignalError::MaskCoverage { .. }
        ));
    }

    #[test]
    fn rejects_non_positive_budget() {
        let w = test_signal();
        assert!(matches!(
            check_fcc_mask(&w, 0.0, &FccMask::fcc_indoor()).unwrap_err(),
            SignalError::NonPositivePower(_)
        ));
    }
}
