use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, MultipathConfig, NlosConfig};
use crate::positioning::{Anchor, AnchorIndex, MeasurementKind, Point};
use crate::ranging::{ThresholdPolicy, UlaConfig};
use crate::signal::{PulseShape, RangingSignalSpec, DEFAULT_WIDTH_SIGMA_RATIO};

use super::HarnessError;

/// A complete experiment description: who is where, what is transmitted,
/// how the channel behaves, which parameters are estimated, and how the
/// position is solved. All units are SI (seconds, meters, Hz; dB where
/// stated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub anchors: Vec<AnchorConfig>,
    pub targets: Vec<TargetConfig>,
    #[serde(default)]
    pub signal: SignalConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    /// Measurement kinds fed to the position estimator.
    #[serde(default = "default_measurements")]
    pub measurements: Vec<MeasurementKind>,
    #[serde(default)]
    pub ranging: RangingConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub failure_policy: FailurePolicy,
    /// With `count_as_failure`, a failed-trial fraction above this bound
    /// makes the run itself fail.
    #[serde(default = "default_max_failure_rate")]
    pub max_failure_rate: f64,
}

fn default_trials() -> usize {
    100
}

fn default_measurements() -> Vec<MeasurementKind> {
    vec![MeasurementKind::ToaRange]
}

fn default_max_failure_rate() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorConfig {
    pub id: String,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub tdoa_reference: bool,
}

impl AnchorConfig {
    pub fn to_anchor(&self) -> Anchor<f64> {
        Anchor {
            id: self.id.clone(),
            position: Point::new(self.x, self.y),
            is_tdoa_reference: self.tdoa_reference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalConfig {
    /// Gaussian-derivative order of the pulse: 0, 1, 2, or 5.
    pub pulse_order: u32,
    /// Pulse width, seconds.
    pub pulse_width: f64,
    /// Width→σ mapping for the Gaussian pulse.
    pub width_sigma_ratio: f64,
    /// Frame interval T_f, seconds.
    pub frame_interval: f64,
    /// Number of frames N_f.
    pub num_frames: usize,
    /// Ternary code; defaults to all-ones of length `num_frames`.
    pub code: Option<Vec<i8>>,
    /// Simulation sample rate, Hz.
    pub sample_rate: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            pulse_order: 2,
            pulse_width: 1e-9,
            width_sigma_ratio: DEFAULT_WIDTH_SIGMA_RATIO,
            frame_interval: 100e-9,
            num_frames: 1,
            code: None,
            sample_rate: 50e9,
        }
    }
}

impl SignalConfig {
    pub fn to_spec(&self) -> RangingSignalSpec {
        RangingSignalSpec {
            pulse: PulseShape { order: self.pulse_order, width: self.pulse_width },
            frame_interval: self.frame_interval,
            num_frames: self.num_frames,
            code: self
                .code
                .clone()
                .unwrap_or_else(|| vec![1; self.num_frames]),
        }
    }
}

/// Noise model for the waveform pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    /// No additive noise.
    #[default]
    Noiseless,
    /// Fixed per-link SNR = E_r/N₀ in dB, identical at every anchor.
    Snr { snr_db: f64 },
    /// Mask-limited power budget: the signal is scaled so each pulse carries
    /// T_f·P_max of energy and the noise level is N₀, so the link SNR grows
    /// with the number of frames.
    PowerBudget {
        /// P_max, watts.
        max_average_power: f64,
        /// N₀, W/Hz.
        noise_psd: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub path_loss_exponent: f64,
    pub ref_power_db: f64,
    pub ref_distance: f64,
    pub shadowing_db: f64,
    pub noise: NoiseConfig,
    pub multipath: MultipathConfig,
    pub nlos: NlosConfig,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            path_loss_exponent: 2.0,
            ref_power_db: -40.0,
            ref_distance: 1.0,
            shadowing_db: 3.51,
            noise: NoiseConfig::default(),
            multipath: MultipathConfig::default(),
            nlos: NlosConfig::default(),
        }
    }
}

impl ChannelConfig {
    pub fn to_params(&self) -> ChannelParams {
        ChannelParams {
            path_loss_exponent: self.path_loss_exponent,
            ref_power_db: self.ref_power_db,
            ref_distance: self.ref_distance,
            shadowing_db: self.shadowing_db,
            multipath: self.multipath.clone(),
            nlos: self.nlos.clone(),
        }
    }
}

/// Which TOA estimator the ranging stage runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RangingMethod {
    #[default]
    Peak,
    First,
    TwoStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RangingConfig {
    pub method: RangingMethod,
    pub threshold: ThresholdPolicy,
    /// Coarse energy-block length for the two-step estimator, seconds.
    pub two_step_block: f64,
    pub aoa: AoaConfig,
}

impl Default for RangingConfig {
    fn default() -> Self {
        Self {
            method: RangingMethod::Peak,
            threshold: ThresholdPolicy::default(),
            two_step_block: 50e-9,
            aoa: AoaConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AoaConfig {
    pub num_elements: usize,
    /// Inter-element spacing, meters.
    pub spacing: f64,
    /// Per-element Gaussian delay noise fed into the ULA fit, seconds.
    pub delay_noise: f64,
}

impl Default for AoaConfig {
    fn default() -> Self {
        Self { num_elements: 4, spacing: 0.05, delay_noise: 0.0 }
    }
}

impl AoaConfig {
    pub fn to_ula(&self) -> UlaConfig {
        UlaConfig { num_elements: self.num_elements, spacing: self.spacing }
    }
}

/// Position estimator selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorConfig {
    /// Weighted nonlinear least squares (works with any measurement mix).
    #[default]
    Nls,
    /// Linearized least squares over range circles.
    Trilaterate,
    /// Least-squares intersection of bearing lines.
    Triangulate,
    /// Multi-start NLS over TDOA hyperbolas.
    Hyperbolic,
    /// Grid posterior with a uniform prior; the MAP cell is the fix.
    GridBayes { origin_x: f64, origin_y: f64, width: f64, height: f64, resolution: f64 },
}

/// What to do with trials whose ranging or positioning stage fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// Failed trials are dropped from the aggregates and reported as a count.
    #[default]
    DropTrial,
    /// Same aggregates, but the run fails when the failure fraction exceeds
    /// `max_failure_rate`.
    CountAsFailure,
}

impl Scenario {
    /// Check every invariant, naming the offending field.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.anchors.is_empty() {
            return Err(HarnessError::invalid("anchors", "at least one anchor is required"));
        }
        if self.targets.is_empty() {
            return Err(HarnessError::invalid("targets", "at least one target is required"));
        }
        if self.trials < 1 {
            return Err(HarnessError::invalid("trials", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.max_failure_rate) {
            return Err(HarnessError::invalid("max_failure_rate", "must be in [0, 1]"));
        }

        let anchors: Vec<Anchor<f64>> = self.anchors.iter().map(|a| a.to_anchor()).collect();
        AnchorIndex::build(&anchors)
            .map_err(|e| HarnessError::invalid("anchors", e.to_string()))?;

        self.signal
            .to_spec()
            .validate()
            .map_err(|e| HarnessError::invalid("signal", e.to_string()))?;
        if self.signal.sample_rate < 20.0 / self.signal.pulse_width {
            return Err(HarnessError::invalid(
                "signal.sample_rate",
                "must give at least 20 samples per pulse width",
            ));
        }
        if !(self.signal.width_sigma_ratio > 0.0) {
            return Err(HarnessError::invalid("signal.width_sigma_ratio", "must be positive"));
        }

        self.channel
            .to_params()
            .validate()
            .map_err(|e| HarnessError::invalid("channel", e.to_string()))?;
        match self.channel.noise {
            NoiseConfig::Snr { snr_db } => {
                if snr_db.is_nan() {
                    return Err(HarnessError::invalid("channel.noise.snr_db", "must be a number"));
                }
            }
            NoiseConfig::PowerBudget { max_average_power, noise_psd } => {
                if !(max_average_power > 0.0) {
                    return Err(HarnessError::invalid(
                        "channel.noise.max_average_power",
                        "must be positive",
                    ));
                }
                if !(noise_psd > 0.0) {
                    return Err(HarnessError::invalid("channel.noise.noise_psd", "must be positive"));
                }
            }
            NoiseConfig::Noiseless => {}
        }

        if self.measurements.is_empty() {
            return Err(HarnessError::invalid(
                "measurements",
                "at least one measurement kind is required",
            ));
        }
        if self.measurements.contains(&MeasurementKind::TdoaRange) {
            let refs = self.anchors.iter().filter(|a| a.tdoa_reference).count();
            if refs != 1 {
                return Err(HarnessError::invalid(
                    "anchors",
                    format!("TDOA needs exactly one reference anchor, found {refs}"),
                ));
            }
        }

        self.ranging
            .threshold
            .validate()
            .map_err(|e| HarnessError::invalid("ranging.threshold", e.to_string()))?;
        self.ranging
            .aoa
            .to_ula()
            .validate()
            .map_err(|e| HarnessError::invalid("ranging.aoa", e.to_string()))?;
        if !(self.ranging.two_step_block > 0.0) {
            return Err(HarnessError::invalid("ranging.two_step_block", "must be positive"));
        }

        let ranges_only = self
            .measurements
            .iter()
            .all(|k| matches!(k, MeasurementKind::ToaRange | MeasurementKind::RssRange));
        match self.estimator {
            EstimatorConfig::Trilaterate => {
                if !ranges_only {
                    return Err(HarnessError::invalid(
                        "estimator",
                        "trilaterate needs range measurements only (toa_range/rss_range)",
                    ));
                }
                if self.anchors.len() < 3 {
                    return Err(HarnessError::invalid("anchors", "trilaterate needs at least 3"));
                }
            }
            EstimatorConfig::Triangulate => {
                if self.measurements != vec![MeasurementKind::Aoa] {
                    return Err(HarnessError::invalid(
                        "estimator",
                        "triangulate needs measurements = [\"aoa\"]",
                    ));
                }
                if self.anchors.len() < 2 {
                    return Err(HarnessError::invalid("anchors", "triangulate needs at least 2"));
                }
            }
            EstimatorConfig::Hyperbolic => {
                if self.measurements != vec![MeasurementKind::TdoaRange] {
                    return Err(HarnessError::invalid(
                        "estimator",
                        "hyperbolic needs measurements = [\"tdoa_range\"]",
                    ));
                }
                if self.anchors.len() < 3 {
                    return Err(HarnessError::invalid("anchors", "hyperbolic needs at least 3"));
                }
            }
            EstimatorConfig::GridBayes { width, height, resolution, .. } => {
                if !(resolution > 0.0 && width > 0.0 && height > 0.0) {
                    return Err(HarnessError::invalid(
                        "estimator",
                        "grid_bayes domain and resolution must be positive",
                    ));
                }
            }
            EstimatorConfig::Nls => {
                let per_trial = self.anchors.len() * self.measurements.len();
                if per_trial < 2 {
                    return Err(HarnessError::invalid(
                        "estimator",
                        "nls needs at least 2 measurements per trial",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn anchors(&self) -> Vec<Anchor<f64>> {
        self.anchors.iter().map(|a| a.to_anchor()).collect()
    }
}

/// Load and validate a scenario from a JSON file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let scenario: Scenario =
        serde_json::from_str(&text).map_err(|e| HarnessError::Parse(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}
