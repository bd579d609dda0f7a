use serde::{Deserialize, Serialize};

use crate::scalar::{real, Real};

use super::{Point, PositioningError};

/// Offset keeping inverse-distance weights finite on exact matches,
/// in measurement units.
const INVERSE_DISTANCE_EPS: f64 = 1e-9;

/// Fingerprint database: measurement vectors paired with the locations they
/// were collected at. All vectors share one dimensionality and kind-order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet<F> {
    entries: Vec<(Vec<F>, Point<F>)>,
}

impl<F: Real> TrainingSet<F> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn push(&mut self, vector: Vec<F>, location: Point<F>) -> Result<(), PositioningError> {
        if let Some((first, _)) = self.entries.first() {
            if first.len() != vector.len() {
                return Err(PositioningError::DimensionMismatch {
                    expected: first.len(),
                    got: vector.len(),
                });
            }
        }
        self.entries.push((vector, location));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dimensionality of the measurement vectors.
    pub fn dim(&self) -> usize {
        self.entries.first().map_or(0, |(v, _)| v.len())
    }

    pub fn entries(&self) -> &[(Vec<F>, Point<F>)] {
        &self.entries
    }
}

impl<F: Real> Default for TrainingSet<F> {
    fn default() -> Self {
        Self::new()
    }
}

/// How the k selected neighbors are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Every neighbor weighs 1/k.
    Uniform,
    /// Weights proportional to 1/(ε + distance), normalized to sum to 1.
    InverseDistance,
}

/// k-nearest-neighbor position estimate: the weighted sum of the locations
/// of the k training vectors closest (Euclidean) to the query vector.
///
/// Distance ties are broken by training index, so estimates are
/// reproducible. Weights are non-negative and sum to 1, which keeps the
/// estimate inside the convex hull of the selected locations.
pub fn knn_estimate<F: Real>(
    ts: &TrainingSet<F>,
    query: &[F],
    k: usize,
    weighting: Weighting,
) -> Result<Point<F>, PositioningError> {
    if ts.is_empty() {
        return Err(PositioningError::EmptyTrainingSet);
    }
    if query.len() != ts.dim() {
        return Err(PositioningError::DimensionMismatch { expected: ts.dim(), got: query.len() });
    }
    if k == 0 || k > ts.len() {
        return Err(PositioningError::InvalidK { k, len: ts.len() });
    }

    let mut by_distance: Vec<(F, usize)> = ts
        .entries
        .iter()
        .enumerate()
        .map(|(i, (v, _))| {
            let d_sq = v
                .iter()
                .zip(query)
                .map(|(a, b)| (*a - *b) * (*a - *b))
                .fold(F::zero(), |acc, d| acc + d);
            (d_sq.sqrt(), i)
        })
        .collect();
    by_distance.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let nearest = &by_distance[..k];

    let weights: Vec<F> = match weighting {
        Weighting::Uniform => {
            let w = F::one() / real::<F>(k as f64);
            vec![w; k]
        }
        Weighting::InverseDistance => {
            let eps = real::<F>(INVERSE_DISTANCE_EPS);
            let raw: Vec<F> = nearest.iter().map(|(d, _)| F::one() / (eps + *d)).collect();
            let total = raw.iter().fold(F::zero(), |acc, &w| acc + w);
            raw.into_iter().map(|w| w / total).collect()
        }
    };

    let mut estimate = Point::new(F::zero(), F::zero());
    for ((_, idx), w) in nearest.iter().zip(&weights) {
        let l = ts.entries[*idx].1;
        estimate.x += *w * l.x;
        estimate.y += *w * l.y;
    }
    Ok(estimate)
}
