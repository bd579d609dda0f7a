use crate::scalar::{real, Real};

use super::nls::Problem;
use super::{
    Anchor, Measurement, Point, PositionEstimate, PositioningError, SolveStatus,
};

/// Rectangular prior over position: per-cell probability masses on a uniform
/// grid, stored row-major (y-major, x-minor).
#[derive(Debug, Clone, PartialEq)]
pub struct PriorGrid<F> {
    origin: Point<F>,
    resolution: F,
    nx: usize,
    ny: usize,
    masses: Vec<F>,
}

impl<F: Real> PriorGrid<F> {
    /// Uniform prior over a `width` × `height` rectangle anchored at
    /// `origin` (lower-left corner).
    pub fn uniform(
        origin: Point<F>,
        width: F,
        height: F,
        resolution: F,
    ) -> Result<Self, PositioningError> {
        if !(resolution > F::zero()) {
            return Err(PositioningError::InvalidPrior("resolution must be positive"));
        }
        if !(width > F::zero() && height > F::zero()) {
            return Err(PositioningError::InvalidPrior("domain must have positive extent"));
        }
        let nx = (width / resolution).round().to_usize().unwrap_or(0);
        let ny = (height / resolution).round().to_usize().unwrap_or(0);
        if nx == 0 || ny == 0 {
            return Err(PositioningError::InvalidPrior("domain smaller than one cell"));
        }
        let mass = F::one() / real::<F>((nx * ny) as f64);
        Ok(Self { origin, resolution, nx, ny, masses: vec![mass; nx * ny] })
    }

    /// Prior from explicit per-cell masses (row-major, y-major). Masses must
    /// be non-negative and sum to 1 within 1e-6; they are renormalized to
    /// sum to exactly 1.
    pub fn from_masses(
        origin: Point<F>,
        resolution: F,
        nx: usize,
        ny: usize,
        masses: Vec<F>,
    ) -> Result<Self, PositioningError> {
        if !(resolution > F::zero()) {
            return Err(PositioningError::InvalidPrior("resolution must be positive"));
        }
        if masses.len() != nx * ny || masses.is_empty() {
            return Err(PositioningError::InvalidPrior("mass vector does not match grid size"));
        }
        if masses.iter().any(|m| *m < F::zero() || !m.is_finite()) {
            return Err(PositioningError::InvalidPrior("masses must be non-negative"));
        }
        let total = masses.iter().fold(F::zero(), |acc, &m| acc + m);
        if (total - F::one()).abs() > real::<F>(1e-6) {
            return Err(PositioningError::InvalidPrior("masses must sum to 1"));
        }
        let masses = masses.into_iter().map(|m| m / total).collect();
        Ok(Self { origin, resolution, nx, ny, masses })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn resolution(&self) -> F {
        self.resolution
    }

    pub fn masses(&self) -> &[F] {
        &self.masses
    }

    /// Center of cell (ix, iy).
    pub fn cell_center(&self, ix: usize, iy: usize) -> Point<F> {
        let half = real::<F>(0.5);
        Point::new(
            self.origin.x + (real::<F>(ix as f64) + half) * self.resolution,
            self.origin.y + (real::<F>(iy as f64) + half) * self.resolution,
        )
    }

    fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }
}

/// Grid-based Bayesian fix: posterior, MAP, and MMSE estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBayesResult<F> {
    /// MAP cell center (earliest row-major cell on ties).
    pub map: PositionEstimate<F>,
    /// Posterior mean.
    pub mmse: Point<F>,
    /// Normalized posterior masses on the prior's grid.
    pub posterior: PriorGrid<F>,
    /// True when a second local posterior peak carries at least 10% of the
    /// MAP cell's mass; the MMSE point may then lie between modes.
    pub multimodal: bool,
}

/// Evaluate the Gaussian-likelihood posterior over a prior grid.
///
/// Per cell: posterior ∝ exp(−Σ(z−f)²/2σ²)·π(cell). Everything runs in the
/// log domain with a log-sum-exp normalization, so extreme residuals cannot
/// underflow the whole posterior to zero.
pub fn grid_bayes<F: Real>(
    measurements: &[Measurement<F>],
    anchors: &[Anchor<F>],
    prior: &PriorGrid<F>,
) -> Result<GridBayesResult<F>, PositioningError> {
    let problem = Problem::resolve(measurements, anchors)?;
    let half = real::<F>(0.5);

    // Log-posterior per cell; cells with zero prior stay at −∞.
    let mut log_post = vec![F::neg_infinity(); prior.masses.len()];
    let mut max_log = F::neg_infinity();
    for iy in 0..prior.ny {
        for ix in 0..prior.nx {
            let idx = prior.index(ix, iy);
            let mass = prior.masses[idx];
            if mass <= F::zero() {
                continue;
            }
            let lp = mass.ln() - half * problem.objective(prior.cell_center(ix, iy));
            log_post[idx] = lp;
            if lp > max_log {
                max_log = lp;
            }
        }
    }

    // Normalize via log-sum-exp.
    let mut sum = F::zero();
    for lp in &log_post {
        if lp.is_finite() {
            sum += (*lp - max_log).exp();
        }
    }
    let log_norm = max_log + sum.ln();

    let mut posterior = prior.clone();
    let mut map_idx = 0;
    let mut map_mass = F::neg_infinity();
    let mut mmse = Point::new(F::zero(), F::zero());
    for iy in 0..prior.ny {
        for ix in 0..prior.nx {
            let idx = prior.index(ix, iy);
            let mass = if log_post[idx].is_finite() {
                (log_post[idx] - log_norm).exp()
            } else {
                F::zero()
            };
            posterior.masses[idx] = mass;
            if mass > map_mass {
                map_mass = mass;
                map_idx = idx;
            }
            let center = prior.cell_center(ix, iy);
            mmse.x += mass * center.x;
            mmse.y += mass * center.y;
        }
    }

    let map_center = prior.cell_center(map_idx % prior.nx, map_idx / prior.nx);

    // Posterior second moment around the mean as a covariance proxy.
    let mut cov = [[F::zero(); 2]; 2];
    for iy in 0..prior.ny {
        for ix in 0..prior.nx {
            let mass = posterior.masses[prior.index(ix, iy)];
            if mass <= F::zero() {
                continue;
            }
            let c = prior.cell_center(ix, iy);
            let dx = c.x - mmse.x;
            let dy = c.y - mmse.y;
            cov[0][0] += mass * dx * dx;
            cov[0][1] += mass * dx * dy;
            cov[1][1] += mass * dy * dy;
        }
    }
    cov[1][0] = cov[0][1];

    let multimodal = has_second_mode(&posterior, map_idx, map_mass);

    let map = PositionEstimate {
        position: map_center,
        iterations: 0,
        residual: problem.objective(map_center),
        covariance: Some(cov),
        status: SolveStatus::Converged,
        condition_number: None,
        correlated_noise_approximation: problem.correlated_noise_approximation,
    };
    Ok(GridBayesResult { map, mmse, posterior, multimodal })
}

/// Look for a second posterior mode: a 4-neighborhood local maximum carrying
/// at least 10% of the MAP mass and separated from the MAP cell by a valley
/// (the posterior dips below half the candidate's mass somewhere on the
/// straight path between them). The valley requirement keeps plateau cells
/// around a single peak, and flat posteriors, from counting as modes.
fn has_second_mode<F: Real>(posterior: &PriorGrid<F>, map_idx: usize, map_mass: F) -> bool {
    let significant = map_mass * real::<F>(0.1);
    let tie_tol = F::one() - real::<F>(1e-12);
    let (map_ix, map_iy) = (map_idx % posterior.nx, map_idx / posterior.nx);

    for iy in 0..posterior.ny {
        for ix in 0..posterior.nx {
            let idx = posterior.index(ix, iy);
            if idx == map_idx {
                continue;
            }
            let m = posterior.masses[idx];
            if m < significant {
                continue;
            }
            let neighbors = [
                (ix.wrapping_sub(1), iy),
                (ix + 1, iy),
                (ix, iy.wrapping_sub(1)),
                (ix, iy + 1),
            ];
            let is_peak = neighbors.iter().all(|&(jx, jy)| {
                jx >= posterior.nx
                    || jy >= posterior.ny
                    || posterior.masses[posterior.index(jx, jy)] <= m / tie_tol
            });
            if is_peak && valley_between(posterior, (map_ix, map_iy), (ix, iy), m) {
                return true;
            }
        }
    }
    false
}

/// True when the posterior dips below half of `mode_mass` somewhere strictly
/// between the two cells.
fn valley_between<F: Real>(
    posterior: &PriorGrid<F>,
    from: (usize, usize),
    to: (usize, usize),
    mode_mass: F,
) -> bool {
    let steps = (from.0.abs_diff(to.0)).max(from.1.abs_diff(to.1));
    if steps < 2 {
        return false;
    }
    let floor = mode_mass * real::<F>(0.5);
    for s in 1..steps {
        let t = s as f64 / steps as f64;
        let ix = (from.0 as f64 + t * (to.0 as f64 - from.0 as f64)).round() as usize;
        let iy = (from.1 as f64 + t * (to.1 as f64 - from.1 as f64)).round() as usize;
        if (ix, iy) != from && (ix, iy) != to && posterior.masses[posterior.index(ix, iy)] < floor
        {
            return true;
        }
    }
    false
}
