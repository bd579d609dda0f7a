use crate::scalar::{real, Real};

use super::HarnessError;

/// Root-mean-square error: √(Σe²/N).
pub fn rmse<F: Real>(errors: &[F]) -> Result<F, HarnessError> {
    if errors.is_empty() {
        return Err(HarnessError::EmptyErrors);
    }
    let sum_sq = errors.iter().fold(F::zero(), |acc, &e| acc + e * e);
    Ok((sum_sq / real::<F>(errors.len() as f64)).sqrt())
}

/// Empirical CDF of |error| at each threshold: the fraction of errors whose
/// magnitude is at most the threshold. Thresholds must be sorted ascending.
pub fn error_cdf<F: Real>(errors: &[F], thresholds: &[F]) -> Result<Vec<F>, HarnessError> {
    if errors.is_empty() || thresholds.is_empty() {
        return Err(HarnessError::EmptyErrors);
    }
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(HarnessError::UnsortedThresholds);
    }
    let n = real::<F>(errors.len() as f64);
    Ok(thresholds
        .iter()
        .map(|&t| {
            let count = errors.iter().filter(|e| e.abs() <= t).count();
            real::<F>(count as f64) / n
        })
        .collect())
}
