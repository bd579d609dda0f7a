//! Statistical propagation: log-distance path loss with log-normal shadowing,
//! a tapped-delay-line multipath model, optional NLOS excess delay, and
//! additive white Gaussian noise.
//!
//! SNR convention used throughout the crate: SNR = E_r / N₀, where E_r is the
//! received ranging-signal energy and N₀ = 2σ²/f_s relates the per-sample
//! noise variance σ² to the noise spectral level. Bounds and estimators both
//! reference this convention, so simulated RMSE and CRLB curves are directly
//! comparable.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Weibull};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::Waveform;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("invalid channel parameter: {0}")]
    InvalidConfig(&'static str),
    #[error("multipath profile has no taps")]
    EmptyProfile,
    #[error("tap delay {0} s not representable in the waveform's sample grid")]
    UnrepresentableDelay(f64),
}

/// Log-distance path-loss and shadowing model parameters, plus the multipath
/// and NLOS configuration for waveform-level simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Path-loss exponent n.
    pub path_loss_exponent: f64,
    /// Received power at the reference distance, dB.
    pub ref_power_db: f64,
    /// Reference distance d₀, meters.
    pub ref_distance: f64,
    /// Log-normal shadowing standard deviation σ_sh, dB.
    pub shadowing_db: f64,
    #[serde(default)]
    pub multipath: MultipathConfig,
    #[serde(default)]
    pub nlos: NlosConfig,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.path_loss_exponent > 0.0) {
            return Err(ChannelError::InvalidConfig("path_loss_exponent must be positive"));
        }
        if !(self.ref_distance > 0.0) {
            return Err(ChannelError::InvalidConfig("ref_distance must be positive"));
        }
        if !(self.shadowing_db >= 0.0) {
            return Err(ChannelError::InvalidConfig("shadowing_db must be non-negative"));
        }
        self.multipath.validate()?;
        self.nlos.validate()
    }
}

/// Tapped-delay-line multipath statistics: `num_taps` taps spaced
/// `tap_spacing` apart with exponentially decaying mean gain (time constant
/// `decay_time`) and Rayleigh magnitude fading. With probability
/// `p_weak_first` the first tap is attenuated by `weak_first_factor`,
/// reproducing channels where the first path is not the strongest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultipathConfig {
    pub num_taps: usize,
    /// Tap spacing Δ, seconds.
    pub tap_spacing: f64,
    /// Gain decay time constant γ, seconds.
    pub decay_time: f64,
    /// Probability that the first path is attenuated.
    pub p_weak_first: f64,
    /// Attenuation applied to the first tap in the weak-first case, in (0, 1].
    pub weak_first_factor: f64,
    /// Upper bound of the uniform delay jitter added to taps after the first,
    /// seconds. Must stay below `tap_spacing` so delays remain increasing.
    pub delay_jitter: f64,
}

impl Default for MultipathConfig {
    fn default() -> Self {
        Self {
            num_taps: 1,
            tap_spacing: 5e-9,
            decay_time: 20e-9,
            p_weak_first: 0.0,
            weak_first_factor: 0.3,
            delay_jitter: 0.0,
        }
    }
}

impl MultipathConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.num_taps < 1 {
            return Err(ChannelError::InvalidConfig("num_taps must be at least 1"));
        }
        if self.num_taps > 1 && !(self.tap_spacing > 0.0) {
            return Err(ChannelError::InvalidConfig("tap_spacing must be positive"));
        }
        if !(self.decay_time > 0.0) {
            return Err(ChannelError::InvalidConfig("decay_time must be positive"));
        }
        if !(0.0..=1.0).contains(&self.p_weak_first) {
            return Err(ChannelError::InvalidConfig("p_weak_first must be in [0, 1]"));
        }
        if !(self.weak_first_factor > 0.0 && self.weak_first_factor <= 1.0) {
            return Err(ChannelError::InvalidConfig("weak_first_factor must be in (0, 1]"));
        }
        if self.delay_jitter < 0.0 || (self.num_taps > 1 && self.delay_jitter >= self.tap_spacing)
        {
            return Err(ChannelError::InvalidConfig("delay_jitter must be in [0, tap_spacing)"));
        }
        Ok(())
    }
}

/// NLOS excess-delay model: a positive bias drawn from an exponential law is
/// added to every tap, and the first path is attenuated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NlosConfig {
    pub enabled: bool,
    /// Mean of the exponential excess delay μ_b, seconds.
    pub mean_excess_delay: f64,
    /// Multiplier applied to the first tap gain, in [0, 1].
    pub first_path_attenuation: f64,
}

impl Default for NlosConfig {
    fn default() -> Self {
        Self { enabled: false, mean_excess_delay: 10e-9, first_path_attenuation: 1.0 }
    }
}

impl NlosConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.mean_excess_delay >= 0.0) {
            return Err(ChannelError::InvalidConfig("mean_excess_delay must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.first_path_attenuation) {
            return Err(ChannelError::InvalidConfig("first_path_attenuation must be in [0, 1]"));
        }
        Ok(())
    }
}

/// One resolved propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay: f64,
    pub gain: f64,
}

/// A realized multipath channel: taps with strictly increasing delays, the
/// first at the true propagation delay (plus any recorded NLOS bias).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipathProfile {
    pub taps: Vec<Tap>,
    /// NLOS excess delay baked into the tap delays, seconds (0 for LOS).
    pub nlos_bias: f64,
}

impl MultipathProfile {
    /// Single deterministic path, handy for tests and noiseless pipelines.
    pub fn single_path(delay: f64, gain: f64) -> Self {
        Self { taps: vec![Tap { delay, gain }], nlos_bias: 0.0 }
    }

    pub fn first_path_delay(&self) -> f64 {
        self.taps[0].delay
    }

    /// Total tap energy Σg².
    pub fn energy_gain(&self) -> f64 {
        self.taps.iter().map(|t| t.gain * t.gain).sum()
    }

    /// Write the profile as two-column CSV: `delay_s,gain`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "delay_s,gain")?;
        for t in &self.taps {
            writeln!(out, "{},{}", t.delay, t.gain)?;
        }
        Ok(())
    }
}

/// Mean received power at distance `d`: P₀ − 10·n·log₁₀(d/d₀), dB.
pub fn mean_rss(p: &ChannelParams, d: f64) -> Result<f64, ChannelError> {
    if !(d > 0.0) {
        return Err(ChannelError::NonPositiveDistance(d));
    }
    Ok(p.ref_power_db - 10.0 * p.path_loss_exponent * (d / p.ref_distance).log10())
}

/// Draw a received power sample: Normal(mean_rss, σ_sh²) in dB.
pub fn sample_rss<R: Rng + ?Sized>(
    p: &ChannelParams,
    d: f64,
    rng: &mut R,
) -> Result<f64, ChannelError> {
    let mean = mean_rss(p, d)?;
    if p.shadowing_db == 0.0 {
        return Ok(mean);
    }
    let normal = Normal::new(mean, p.shadowing_db)
        .map_err(|_| ChannelError::InvalidConfig("shadowing_db must be non-negative"))?;
    Ok(normal.sample(rng))
}

/// Invert the path-loss law: the distance whose mean power equals `rss_db`.
pub fn rss_to_range(p: &ChannelParams, rss_db: f64) -> f64 {
    p.ref_distance * 10f64.powf((p.ref_power_db - rss_db) / (10.0 * p.path_loss_exponent))
}

/// Draw a multipath profile with the first tap at `true_delay`.
///
/// Tap k sits at `true_delay + k·Δ + jitter` with gain
/// ±e^(−kΔ/γ) · Rayleigh(1/√2); gains are normalized to unit total energy
/// after the optional weak-first attenuation, so Σg² = 1 on every draw.
pub fn draw_multipath_profile<R: Rng + ?Sized>(
    cfg: &MultipathConfig,
    true_delay: f64,
    rng: &mut R,
) -> Result<MultipathProfile, ChannelError> {
    cfg.validate()?;
    // Rayleigh magnitude with unit mean square (Weibull with shape 2).
    let rayleigh = Weibull::new(1.0, 2.0).expect("valid Weibull parameters");

    let mut taps = Vec::with_capacity(cfg.num_taps);
    for k in 0..cfg.num_taps {
        let jitter = if k > 0 && cfg.delay_jitter > 0.0 {
            rng.random_range(0.0..cfg.delay_jitter)
        } else {
            0.0
        };
        let delay = true_delay + k as f64 * cfg.tap_spacing + jitter;
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let magnitude = (-(k as f64) * cfg.tap_spacing / cfg.decay_time).exp()
            * rayleigh.sample(rng);
        taps.push(Tap { delay, gain: sign * magnitude });
    }

    if cfg.p_weak_first > 0.0 && rng.random_bool(cfg.p_weak_first) {
        taps[0].gain *= cfg.weak_first_factor;
    }

    let total: f64 = taps.iter().map(|t| t.gain * t.gain).sum();
    if total > 0.0 {
        let norm = total.sqrt();
        for t in &mut taps {
            t.gain /= norm;
        }
    } else {
        taps[0].gain = 1.0;
    }

    Ok(MultipathProfile { taps, nlos_bias: 0.0 })
}

/// Shift the profile by an exponential excess delay and attenuate the first
/// path. Identity when disabled; the drawn bias is recorded on the profile.
pub fn apply_nlos<R: Rng + ?Sized>(
    profile: &MultipathProfile,
    cfg: &NlosConfig,
    rng: &mut R,
) -> Result<MultipathProfile, ChannelError> {
    cfg.validate()?;
    if !cfg.enabled {
        return Ok(profile.clone());
    }
    let bias = if cfg.mean_excess_delay == 0.0 {
        0.0
    } else {
        Exp::new(1.0 / cfg.mean_excess_delay)
            .expect("positive rate")
            .sample(rng)
    };
    let mut out = profile.clone();
    for t in &mut out.taps {
        t.delay += bias;
    }
    out.taps[0].gain *= cfg.first_path_attenuation;
    out.nlos_bias += bias;
    Ok(out)
}

/// Round a delay to the waveform sample grid. Returns the shift in samples
/// and the fractional remainder (seconds) lost to quantization, so oracles
/// know the ground truth actually applied.
pub fn quantize_delay(delay: f64, sample_rate: f64) -> (i64, f64) {
    let shift = (delay * sample_rate).round() as i64;
    (shift, delay - shift as f64 / sample_rate)
}

/// Per-sample noise standard deviation that realizes `snr_db` = E/N₀ for a
/// received signal of energy `signal_energy`: σ = √(E·f_s / (2·SNR)).
pub fn noise_sigma_for_snr(signal_energy: f64, snr_db: f64, sample_rate: f64) -> f64 {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return 0.0;
    }
    let snr = 10f64.powf(snr_db / 10.0);
    (signal_energy * sample_rate / (2.0 * snr)).sqrt()
}

/// Propagate a waveform through a multipath profile at a given SNR:
/// r(t) = Σ_k g_k·s(t−τ_k) + n(t).
///
/// Tap delays are rounded to the nearest sample ([`quantize_delay`]); the
/// noise variance follows the module's SNR convention with
/// E_r = Σg²·(signal energy). `snr_db = +∞` disables the noise.
pub fn propagate<R: Rng + ?Sized>(
    s: &Waveform,
    profile: &MultipathProfile,
    snr_db: f64,
    rng: &mut R,
) -> Result<Waveform, ChannelError> {
    let sigma = noise_sigma_for_snr(profile.energy_gain() * s.energy(), snr_db, s.sample_rate());
    propagate_with_noise_sigma(s, profile, sigma, rng)
}

/// [`propagate`] with the per-sample noise deviation given directly.
pub fn propagate_with_noise_sigma<R: Rng + ?Sized>(
    s: &Waveform,
    profile: &MultipathProfile,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<Waveform, ChannelError> {
    if profile.taps.is_empty() {
        return Err(ChannelError::EmptyProfile);
    }
    let fs = s.sample_rate();
    let mut shifts = Vec::with_capacity(profile.taps.len());
    for t in &profile.taps {
        let (shift, _) = quantize_delay(t.delay, fs);
        if shift < 0 {
            return Err(ChannelError::UnrepresentableDelay(t.delay));
        }
        shifts.push(shift as usize);
    }

    let max_shift = *shifts.iter().max().expect("non-empty");
    let mut samples = vec![0.0; s.len() + max_shift];
    for (tap, &shift) in profile.taps.iter().zip(&shifts) {
        for (i, v) in s.samples().iter().enumerate() {
            samples[shift + i] += tap.gain * v;
        }
    }

    if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma).expect("positive sigma");
        for v in &mut samples {
            *v += normal.sample(rng);
        }
    }

    Ok(Waveform::new(fs, s.t0(), samples).expect("non-empty output"))
}
