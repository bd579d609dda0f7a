//! Scenario configuration, the end-to-end Monte-Carlo runner, accuracy
//! metrics, and report assembly.

mod metrics;
mod report;
mod runner;
mod scenario;
mod seed;

pub use metrics::{error_cdf, rmse};
pub use report::{CdfPoint, CrlbReference, MonteCarloOutput, PositionRecord, RangingStats, RmseReport, TrialRecord};
pub use runner::{build_rss_fingerprints, query_fingerprints, run_monte_carlo, RunOptions};
pub use scenario::{
    load_scenario, AnchorConfig, AoaConfig, ChannelConfig, EstimatorConfig, FailurePolicy,
    NoiseConfig, RangingConfig, RangingMethod, Scenario, SignalConfig, TargetConfig,
};
pub use seed::{child_seed, trial_rng};

use thiserror::Error;

use crate::bounds::BoundsError;
use crate::channel::ChannelError;
use crate::positioning::PositioningError;
use crate::ranging::RangingError;
use crate::signal::SignalError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {field}: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Ranging(#[from] RangingError),
    #[error(transparent)]
    Positioning(#[from] PositioningError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("error list is empty")]
    EmptyErrors,
    #[error("thresholds must be sorted ascending")]
    UnsortedThresholds,
}

impl HarnessError {
    pub(crate) fn invalid(field: &str, message: impl Into<String>) -> Self {
        Self::Invalid { field: field.to_string(), message: message.into() }
    }
}
