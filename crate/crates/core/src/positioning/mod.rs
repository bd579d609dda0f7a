//! Second-step position estimation: geometric fixes, weighted nonlinear
//! least squares, grid-based Bayesian estimation, and fingerprinting.
//!
//! Everything here is generic over the floating-point scalar ([`Real`]);
//! the crate root exports `f64` aliases for the common case.

mod bayes;
mod fingerprint;
mod geometry;
mod nls;

pub use bayes::{grid_bayes, GridBayesResult, PriorGrid};
pub use fingerprint::{knn_estimate, TrainingSet, Weighting};
pub use geometry::{triangulate, trilaterate};
pub use nls::{hyperbolic_fix, nls_solve, HyperbolicFix};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{real, Real};

#[derive(Debug, Error, PartialEq)]
pub enum PositioningError {
    #[error("anchor id `{0}` not found")]
    UnknownAnchor(String),
    #[error("duplicate anchor id `{0}`")]
    DuplicateAnchorId(String),
    #[error("TDOA measurements need exactly one reference anchor, found {0}")]
    TdoaReferenceCount(usize),
    #[error("AOA is undefined: target coincides with anchor `{0}`")]
    TargetAtAnchor(String),
    #[error("underdetermined problem: needed {needed} measurements, got {got}")]
    Underdetermined { needed: usize, got: usize },
    #[error("expected {expected} values, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("measurement variance must be positive")]
    InvalidVariance,
    #[error("TDOA measurement is missing a reference anchor")]
    MissingReference,
    #[error("invalid prior grid: {0}")]
    InvalidPrior(&'static str),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("measurement vector dimension {got} does not match the training set's {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("k must be between 1 and the training-set size {len}, got {k}")]
    InvalidK { k: usize, len: usize },
}

/// 2-D position, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point<F> {
    pub x: F,
    pub y: F,
}

impl<F: Real> Point<F> {
    pub fn new(x: F, y: F) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: Point<F>) -> F {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// A reference node at a known position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor<F> {
    pub id: String,
    pub position: Point<F>,
    /// Marks the node TDOA measurements are differenced against.
    #[serde(default)]
    pub is_tdoa_reference: bool,
}

impl<F: Real> Anchor<F> {
    pub fn new(id: impl Into<String>, x: F, y: F) -> Self {
        Self { id: id.into(), position: Point::new(x, y), is_tdoa_reference: false }
    }

    pub fn tdoa_reference(id: impl Into<String>, x: F, y: F) -> Self {
        Self { id: id.into(), position: Point::new(x, y), is_tdoa_reference: true }
    }
}

/// What a measurement value means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    /// Range from a TOA estimate, meters.
    ToaRange,
    /// Range from an RSS estimate, meters.
    RssRange,
    /// Bearing from the anchor to the target, radians in (−π, π].
    Aoa,
    /// Range difference to the reference anchor, meters.
    TdoaRange,
}

/// One position-related parameter estimate `z_i` with its noise variance.
///
/// Time parameters are converted to distances by the speed of light before
/// they become measurements, so ranges and TDOAs are in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement<F> {
    pub kind: MeasurementKind,
    pub anchor_id: String,
    /// Reference anchor for TDOA; falls back to the anchor set's flagged
    /// reference when absent.
    #[serde(default)]
    pub ref_anchor_id: Option<String>,
    pub value: F,
    pub variance: F,
}

impl<F: Real> Measurement<F> {
    pub fn new(kind: MeasurementKind, anchor_id: impl Into<String>, value: F, variance: F) -> Self {
        Self { kind, anchor_id: anchor_id.into(), ref_anchor_id: None, value, variance }
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Degenerate,
    Diverged,
}

/// A position fix with solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionEstimate<F> {
    pub position: Point<F>,
    pub iterations: usize,
    /// Final weighted squared residual Σ(z−f)²/σ².
    pub residual: F,
    /// Inverse of the Gauss-Newton normal matrix at the solution.
    pub covariance: Option<[[F; 2]; 2]>,
    pub status: SolveStatus,
    /// Condition number of the linear system, when one was formed.
    pub condition_number: Option<F>,
    /// True when two or more TDOA measurements share a reference anchor:
    /// their noises are correlated but the solver weights them as if
    /// independent (diagonal weighting).
    pub correlated_noise_approximation: bool,
}

/// Wrap an angle to (−π, π].
pub fn wrap_angle<F: Real>(a: F) -> F {
    let pi = F::PI();
    let two_pi = pi + pi;
    let mut x = a % two_pi;
    if x > pi {
        x -= two_pi;
    } else if x <= -pi {
        x += two_pi;
    }
    x
}

/// The measurement model f(target): what a noiseless measurement of this
/// kind would read for a target at `target`.
pub fn model_value<F: Real>(
    kind: MeasurementKind,
    target: Point<F>,
    anchor: &Anchor<F>,
    reference: Option<&Anchor<F>>,
) -> Result<F, PositioningError> {
    match kind {
        MeasurementKind::ToaRange | MeasurementKind::RssRange => {
            Ok(target.distance_to(anchor.position))
        }
        MeasurementKind::Aoa => {
            let dx = target.x - anchor.position.x;
            let dy = target.y - anchor.position.y;
            if dx == F::zero() && dy == F::zero() {
                return Err(PositioningError::TargetAtAnchor(anchor.id.clone()));
            }
            Ok(dy.atan2(dx))
        }
        MeasurementKind::TdoaRange => {
            let reference = reference.ok_or(PositioningError::MissingReference)?;
            Ok(target.distance_to(anchor.position) - target.distance_to(reference.position))
        }
    }
}

/// Evaluate the measurement model for `m` with anchors resolved by id.
pub fn model_f<F: Real>(
    m: &Measurement<F>,
    target: Point<F>,
    anchors: &[Anchor<F>],
) -> Result<F, PositioningError> {
    let index = AnchorIndex::build(anchors)?;
    let anchor = index.get(&m.anchor_id)?;
    let reference = index.reference_for(m)?;
    model_value(m.kind, target, anchor, reference)
}

/// Anchor lookup with id uniqueness and TDOA-reference resolution.
pub(crate) struct AnchorIndex<'a, F> {
    anchors: &'a [Anchor<F>],
    by_id: HashMap<&'a str, usize>,
}

impl<'a, F: Real> AnchorIndex<'a, F> {
    pub fn build(anchors: &'a [Anchor<F>]) -> Result<Self, PositioningError> {
        let mut by_id = HashMap::with_capacity(anchors.len());
        for (i, a) in anchors.iter().enumerate() {
            if by_id.insert(a.id.as_str(), i).is_some() {
                return Err(PositioningError::DuplicateAnchorId(a.id.clone()));
            }
        }
        Ok(Self { anchors, by_id })
    }

    pub fn get(&self, id: &str) -> Result<&'a Anchor<F>, PositioningError> {
        self.by_id
            .get(id)
            .map(|&i| &self.anchors[i])
            .ok_or_else(|| PositioningError::UnknownAnchor(id.to_string()))
    }

    /// The anchor set's unique TDOA reference.
    pub fn tdoa_reference(&self) -> Result<&'a Anchor<F>, PositioningError> {
        let mut found = None;
        let mut count = 0;
        for a in self.anchors {
            if a.is_tdoa_reference {
                count += 1;
                found = Some(a);
            }
        }
        match (found, count) {
            (Some(a), 1) => Ok(a),
            (_, n) => Err(PositioningError::TdoaReferenceCount(n)),
        }
    }

    /// Reference anchor for a measurement: the explicit one when named,
    /// otherwise the flagged reference for TDOA, otherwise none.
    pub fn reference_for(
        &self,
        m: &Measurement<F>,
    ) -> Result<Option<&'a Anchor<F>>, PositioningError> {
        match (&m.ref_anchor_id, m.kind) {
            (Some(id), _) => Ok(Some(self.get(id)?)),
            (None, MeasurementKind::TdoaRange) => Ok(Some(self.tdoa_reference()?)),
            (None, _) => Ok(None),
        }
    }
}

/// Centroid of a set of anchors, the solvers' default initialization.
pub(crate) fn anchor_centroid<F: Real>(anchors: &[Anchor<F>]) -> Point<F> {
    let n = real::<F>(anchors.len() as f64);
    let mut x = F::zero();
    let mut y = F::zero();
    for a in anchors {
        x += a.position.x;
        y += a.position.y;
    }
    Point::new(x / n, y / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchors() -> Vec<Anchor<f64>> {
        vec![
            Anchor::new("a", 0.0, 0.0),
            Anchor::new("b", 10.0, 0.0),
            Anchor::tdoa_reference("r", 0.0, 10.0),
        ]
    }

    #[test]
    fn range_model_is_euclidean_distance() {
        let m = Measurement::new(MeasurementKind::ToaRange, "a", 0.0, 1.0);
        let f = model_f(&m, Point::new(3.0, 4.0), &anchors()).unwrap();
        assert_eq!(f, 5.0);
    }

    #[test]
    fn aoa_model_is_bearing() {
        let m = Measurement::new(MeasurementKind::Aoa, "a", 0.0, 1.0);
        let f = model_f(&m, Point::new(1.0, 1.0), &anchors()).unwrap();
        assert!((f - std::f64::consts::FRAC_PI_4).abs() < 1e-15);

        let at_anchor = model_f(&m, Point::new(0.0, 0.0), &anchors());
        assert_eq!(at_anchor.unwrap_err(), PositioningError::TargetAtAnchor("a".into()));
    }

    #[test]
    fn tdoa_model_vanishes_on_the_bisector() {
        // Target equidistant from anchor "b" and the reference "r".
        let m = Measurement::new(MeasurementKind::TdoaRange, "b", 0.0, 1.0);
        let target = Point::new(5.0, 5.0);
        let f = model_f(&m, target, &anchors()).unwrap();
        assert!(f.abs() < 1e-12);
    }

    #[test]
    fn tdoa_needs_a_reference() {
        let plain = vec![Anchor::<f64>::new("a", 0.0, 0.0), Anchor::new("b", 1.0, 0.0)];
        let m = Measurement::new(MeasurementKind::TdoaRange, "a", 0.0, 1.0);
        assert_eq!(
            model_f(&m, Point::new(2.0, 2.0), &plain).unwrap_err(),
            PositioningError::TdoaReferenceCount(0)
        );
    }

    #[test]
    fn duplicate_and_unknown_anchor_ids() {
        let dup = vec![Anchor::<f64>::new("a", 0.0, 0.0), Anchor::new("a", 1.0, 0.0)];
        assert!(matches!(
            AnchorIndex::build(&dup),
            Err(PositioningError::DuplicateAnchorId(id)) if id == "a"
        ));
        let m = Measurement::new(MeasurementKind::ToaRange, "zz", 0.0, 1.0);
        assert_eq!(
            model_f(&m, Point::new(0.0, 0.0), &anchors()).unwrap_err(),
            PositioningError::UnknownAnchor("zz".into())
        );
    }

    #[test]
    fn angle_wrapping() {
        use std::f64::consts::PI;
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(-3.0 * PI / 2.0) - PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(0.25), 0.25);
        // π maps to itself, −π to π.
        assert!((wrap_angle(PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
    }
}
