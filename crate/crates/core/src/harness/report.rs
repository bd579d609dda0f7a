use serde::{Deserialize, Serialize};

use crate::positioning::MeasurementKind;

use super::scenario::FailurePolicy;

/// One ranging measurement: ground truth vs estimate.
///
/// `true_value` is the geometric line-of-sight value; time-based estimates
/// have the simulator's sample-grid quantization remainder folded back, so
/// `error` reflects estimator noise plus any NLOS bias, not grid
/// granularity. Values are meters for ranges and TDOAs, radians for AOA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub anchor_id: String,
    pub kind: MeasurementKind,
    pub true_value: f64,
    pub estimated: f64,
    pub error: f64,
    pub nlos: bool,
}

/// One trial's position fix vs the true target position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionRecord {
    pub trial: usize,
    pub true_x: f64,
    pub true_y: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub error: f64,
}

/// RMSE of one measurement kind over one propagation condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangingStats {
    pub kind: MeasurementKind,
    pub nlos: bool,
    pub count: usize,
    pub rmse: f64,
    pub mean_error: f64,
}

/// One point of the empirical error CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub threshold_m: f64,
    pub fraction: f64,
}

/// Closed-form bound attached to the report for comparison. Always the
/// single-path AWGN bound, even when the scenario enables multipath or NLOS;
/// the label says so.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrlbReference {
    pub label: String,
    pub snr_db: Option<f64>,
    pub effective_bandwidth_hz: f64,
    /// c·crlb_toa, meters, when the SNR is defined.
    pub toa_range_m: Option<f64>,
    /// RSS range bound at the mean anchor-target distance, meters.
    pub rss_range_m: Option<f64>,
    /// Broadside AOA bound, radians, when the SNR is defined.
    pub aoa_rad: Option<f64>,
}

/// Monte-Carlo summary: per-stage RMSE, error CDF, bound reference, and
/// bookkeeping for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub version: String,
    pub seed: u64,
    pub trials: usize,
    pub completed_trials: usize,
    pub failed_trials: usize,
    pub failure_policy: FailurePolicy,
    /// Successful ranging measurements over attempted ones.
    pub detection_rate: f64,
    pub ranging: Vec<RangingStats>,
    pub positioning_rmse_m: Option<f64>,
    pub position_error_cdf: Vec<CdfPoint>,
    pub crlb: CrlbReference,
}

impl RmseReport {
    /// Canonical JSON bytes; identical runs serialize identically.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Everything a Monte-Carlo run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOutput {
    pub report: RmseReport,
    pub ranging_records: Vec<TrialRecord>,
    pub position_records: Vec<PositionRecord>,
}

impl MonteCarloOutput {
    /// Per-measurement CSV: `trial,anchor_id,kind,true_val,est_val,error,nlos`.
    pub fn ranging_csv(&self) -> String {
        let mut out = String::from("trial,anchor_id,kind,true_val,est_val,error,nlos\n");
        for r in &self.ranging_records {
            let kind = match r.kind {
                MeasurementKind::ToaRange => "toa_range",
                MeasurementKind::RssRange => "rss_range",
                MeasurementKind::Aoa => "aoa",
                MeasurementKind::TdoaRange => "tdoa_range",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.trial, r.anchor_id, kind, r.true_value, r.estimated, r.error, r.nlos
            ));
        }
        out
    }

    /// Per-trial position CSV: `trial,true_x,true_y,est_x,est_y,error_m`.
    pub fn positions_csv(&self) -> String {
        let mut out = String::from("trial,true_x,true_y,est_x,est_y,error_m\n");
        for r in &self.position_records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.trial, r.true_x, r.true_y, r.est_x, r.est_y, r.error
            ));
        }
        out
    }
}
