use crate::scalar::{real, Real};

use super::{
    anchor_centroid, wrap_angle, Anchor, AnchorIndex, Measurement, MeasurementKind, Point,
    PositionEstimate, PositioningError, SolveStatus,
};

/// Convergence tolerance on the Gauss-Newton step, meters.
const STEP_TOL: f64 = 1e-9;
/// Relative objective-decrease floor: when both the actual and the predicted
/// reduction fall below this fraction of the objective, the iterate sits at
/// the numerical minimum.
const FTOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 100;
/// Relative determinant floor below which the 2×2 normal matrix counts as
/// singular.
const SINGULAR_TOL: f64 = 1e-14;

/// A measurement with anchors resolved to positions and the weight ready.
pub(crate) struct Resolved<F> {
    kind: MeasurementKind,
    anchor: Point<F>,
    reference: Option<Point<F>>,
    value: F,
    inv_sigma_sq: F,
}

pub(crate) struct Problem<F> {
    measurements: Vec<Resolved<F>>,
    /// Two or more TDOA terms share a reference, so diagonal weights only
    /// approximate their correlated noise.
    pub correlated_noise_approximation: bool,
}

impl<F: Real> Problem<F> {
    pub fn resolve(
        measurements: &[Measurement<F>],
        anchors: &[Anchor<F>],
    ) -> Result<Self, PositioningError> {
        if measurements.len() < 2 {
            return Err(PositioningError::Underdetermined {
                needed: 2,
                got: measurements.len(),
            });
        }
        let index = AnchorIndex::build(anchors)?;
        let mut resolved = Vec::with_capacity(measurements.len());
        let mut tdoa_count = 0;
        for m in measurements {
            if !(m.variance > F::zero()) {
                return Err(PositioningError::InvalidVariance);
            }
            if m.kind == MeasurementKind::TdoaRange {
                tdoa_count += 1;
            }
            let anchor = index.get(&m.anchor_id)?;
            let reference = index.reference_for(m)?;
            if m.kind == MeasurementKind::TdoaRange && reference.is_none() {
                return Err(PositioningError::MissingReference);
            }
            resolved.push(Resolved {
                kind: m.kind,
                anchor: anchor.position,
                reference: reference.map(|a| a.position),
                value: m.value,
                inv_sigma_sq: F::one() / m.variance,
            });
        }
        Ok(Self { measurements: resolved, correlated_noise_approximation: tdoa_count >= 2 })
    }

    /// Weighted squared residual Σ(z−f)²/σ² at `p`.
    pub fn objective(&self, p: Point<F>) -> F {
        let mut total = F::zero();
        for m in &self.measurements {
            let r = self.residual(m, p);
            total += r * r * m.inv_sigma_sq;
        }
        total
    }

    fn residual(&self, m: &Resolved<F>, p: Point<F>) -> F {
        let f = match m.kind {
            MeasurementKind::ToaRange | MeasurementKind::RssRange => p.distance_to(m.anchor),
            MeasurementKind::Aoa => (p.y - m.anchor.y).atan2(p.x - m.anchor.x),
            MeasurementKind::TdoaRange => {
                p.distance_to(m.anchor) - p.distance_to(m.reference.expect("checked"))
            }
        };
        let raw = m.value - f;
        if m.kind == MeasurementKind::Aoa {
            wrap_angle(raw)
        } else {
            raw
        }
    }

    /// Gauss-Newton normal matrix A = Σ∇f∇fᵀ/σ² and gradient-side vector
    /// b = Σ∇f·(z−f)/σ² at `p`.
    fn normal_system(&self, p: Point<F>) -> ([[F; 2]; 2], [F; 2]) {
        let mut a = [[F::zero(); 2]; 2];
        let mut b = [F::zero(); 2];
        for m in &self.measurements {
            let g = self.model_gradient(m, p);
            let r = self.residual(m, p);
            let w = m.inv_sigma_sq;
            a[0][0] += g[0] * g[0] * w;
            a[0][1] += g[0] * g[1] * w;
            a[1][1] += g[1] * g[1] * w;
            b[0] += g[0] * r * w;
            b[1] += g[1] * r * w;
        }
        a[1][0] = a[0][1];
        (a, b)
    }

    fn model_gradient(&self, m: &Resolved<F>, p: Point<F>) -> [F; 2] {
        let tiny = real::<F>(1e-12);
        match m.kind {
            MeasurementKind::ToaRange | MeasurementKind::RssRange => {
                let d = p.distance_to(m.anchor).max(tiny);
                [(p.x - m.anchor.x) / d, (p.y - m.anchor.y) / d]
            }
            MeasurementKind::Aoa => {
                let dx = p.x - m.anchor.x;
                let dy = p.y - m.anchor.y;
                let d_sq = (dx * dx + dy * dy).max(tiny);
                [-dy / d_sq, dx / d_sq]
            }
            MeasurementKind::TdoaRange => {
                let reference = m.reference.expect("checked");
                let d_a = p.distance_to(m.anchor).max(tiny);
                let d_r = p.distance_to(reference).max(tiny);
                [
                    (p.x - m.anchor.x) / d_a - (p.x - reference.x) / d_r,
                    (p.y - m.anchor.y) / d_a - (p.y - reference.y) / d_r,
                ]
            }
        }
    }
}

/// Solve a symmetric 2×2 system; `None` when singular relative to its scale.
pub(crate) fn solve_2x2<F: Real>(a: &[[F; 2]; 2], b: &[F; 2]) -> Option<(F, F)> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a[0][0].abs().max(a[1][1].abs()).max(a[0][1].abs());
    if det.abs() <= real::<F>(SINGULAR_TOL) * scale * scale {
        return None;
    }
    Some((
        (b[0] * a[1][1] - b[1] * a[0][1]) / det,
        (b[1] * a[0][0] - b[0] * a[1][0]) / det,
    ))
}

/// Inverse of a symmetric positive 2×2 matrix.
pub(crate) fn invert_2x2<F: Real>(a: &[[F; 2]; 2]) -> Option<[[F; 2]; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a[0][0].abs().max(a[1][1].abs()).max(a[0][1].abs());
    if det.abs() <= real::<F>(SINGULAR_TOL) * scale * scale {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

/// Condition number of a symmetric 2×2 matrix (ratio of eigenvalues).
pub(crate) fn condition_2x2<F: Real>(a: &[[F; 2]; 2]) -> F {
    let two = real::<F>(2.0);
    let tr = a[0][0] + a[1][1];
    let diff = a[0][0] - a[1][1];
    let disc = (diff * diff + real::<F>(4.0) * a[0][1] * a[0][1]).sqrt();
    let hi = (tr + disc) / two;
    let lo = (tr - disc) / two;
    if lo <= F::zero() {
        F::infinity()
    } else {
        hi / lo
    }
}

/// Weighted nonlinear least-squares position fix: minimizes Σ(z−f(x,y))²/σ²
/// by Gauss-Newton with Levenberg damping.
///
/// Damping engages only when a plain Gauss-Newton step would increase the
/// objective, so the objective is non-increasing across accepted iterations.
/// The damping term scales with the normal matrix diagonal, which keeps the
/// iterate path invariant under a common rescaling of all variances.
/// Initialization defaults to the anchor centroid.
pub fn nls_solve<F: Real>(
    measurements: &[Measurement<F>],
    anchors: &[Anchor<F>],
    init: Option<Point<F>>,
) -> Result<PositionEstimate<F>, PositioningError> {
    let problem = Problem::resolve(measurements, anchors)?;
    Ok(solve_resolved(&problem, init.unwrap_or_else(|| anchor_centroid(anchors))))
}

pub(crate) fn solve_resolved<F: Real>(problem: &Problem<F>, init: Point<F>) -> PositionEstimate<F> {
    let step_tol = real::<F>(STEP_TOL);
    let mut p = init;
    let mut objective = problem.objective(p);
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIter;
    let mut condition = None;

    if !objective.is_finite() {
        status = SolveStatus::Diverged;
    } else {
        // Levenberg damping with a Marquardt gain-ratio schedule. Steps that
        // increase the objective are rejected outright, so accepted
        // iterations are monotone; damping also rises when the actual
        // decrease falls far short of the quadratic model's prediction,
        // which breaks the slow cross-valley zigzag of plain Gauss-Newton
        // on large-residual problems.
        let mut lambda = F::zero();
        while iterations < MAX_ITERATIONS {
            let (a, b) = problem.normal_system(p);
            condition = Some(condition_2x2(&a));

            let accepted = loop {
                let damped = damp(&a, lambda);
                let Some((dx, dy)) = solve_2x2(&damped, &b) else {
                    break None;
                };
                let candidate = Point::new(p.x + dx, p.y + dy);
                let cand_obj = problem.objective(candidate);
                if cand_obj.is_finite() && cand_obj <= objective {
                    // Gain ratio: actual decrease over the model's
                    // prediction bᵀδ + λδᵀDδ.
                    let d_diag = damp_diagonal(&a);
                    let predicted = b[0] * dx
                        + b[1] * dy
                        + lambda * (d_diag[0] * dx * dx + d_diag[1] * dy * dy);
                    let gain = if predicted > F::zero() {
                        (objective - cand_obj) / predicted
                    } else {
                        F::one()
                    };
                    if gain > real::<F>(0.75) {
                        lambda = lambda / real::<F>(3.0);
                        if lambda < real::<F>(1e-10) {
                            lambda = F::zero();
                        }
                    } else if gain < real::<F>(0.25) {
                        lambda = (lambda * real::<F>(2.0)).max(real::<F>(1e-4));
                    }
                    let at_floor = predicted <= real::<F>(FTOL) * objective
                        && (objective - cand_obj) <= real::<F>(FTOL) * objective;
                    break Some((candidate, cand_obj, (dx * dx + dy * dy).sqrt(), at_floor));
                }
                lambda = (lambda * real::<F>(4.0)).max(real::<F>(1e-4));
                if lambda > real::<F>(1e12) {
                    break None;
                }
            };

            let Some((next, next_obj, step, at_floor)) = accepted else {
                // No decreasing step exists: either the normal matrix is
                // singular (degenerate geometry) or we are at a minimum.
                let (a_now, b_now) = problem.normal_system(p);
                let grad_norm = (b_now[0] * b_now[0] + b_now[1] * b_now[1]).sqrt();
                status = if solve_2x2(&a_now, &b_now).is_none() {
                    SolveStatus::Degenerate
                } else if grad_norm.is_finite() {
                    SolveStatus::Converged
                } else {
                    SolveStatus::Diverged
                };
                break;
            };

            debug_assert!(next_obj <= objective);
            p = next;
            objective = next_obj;
            iterations += 1;
            if step < step_tol || at_floor {
                status = SolveStatus::Converged;
                break;
            }
        }
    }

    let (a_final, _) = problem.normal_system(p);
    PositionEstimate {
        position: p,
        iterations,
        residual: objective,
        covariance: invert_2x2(&a_final),
        status,
        condition_number: condition,
        correlated_noise_approximation: problem.correlated_noise_approximation,
    }
}

/// Scale-invariant damping diagonal: the normal-matrix diagonal, with the
/// half-trace standing in for zero entries.
fn damp_diagonal<F: Real>(a: &[[F; 2]; 2]) -> [F; 2] {
    let floor = (a[0][0] + a[1][1]) * real::<F>(0.5);
    [
        if a[0][0] > F::zero() { a[0][0] } else { floor },
        if a[1][1] > F::zero() { a[1][1] } else { floor },
    ]
}

fn damp<F: Real>(a: &[[F; 2]; 2], lambda: F) -> [[F; 2]; 2] {
    if lambda == F::zero() {
        return *a;
    }
    let d = damp_diagonal(a);
    [[a[0][0] + lambda * d[0], a[0][1]], [a[1][0], a[1][1] + lambda * d[1]]]
}

/// One best-effort fix from a TDOA-only problem.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicFix<F> {
    /// Lowest-residual fix across all starts.
    pub best: PositionEstimate<F>,
    /// Other distinct local minima that were found.
    pub alternates: Vec<PositionEstimate<F>>,
    /// True when an alternate's residual is comparable to the best one, so
    /// the fix is not unique (hyperbola branches can intersect twice).
    pub ambiguous: bool,
}

/// Position from TDOA range differences via multi-start nonlinear least
/// squares.
///
/// `tdoa_ranges[i]` is the range difference (meters) between the i-th
/// non-reference anchor and the anchor set's flagged TDOA reference. Four
/// quadrant-offset restarts around the centroid catch the second hyperbola
/// intersection when one exists; distinct minima with comparable residuals
/// set the `ambiguous` flag.
pub fn hyperbolic_fix<F: Real>(
    anchors: &[Anchor<F>],
    tdoa_ranges: &[F],
) -> Result<HyperbolicFix<F>, PositioningError> {
    let index = AnchorIndex::build(anchors)?;
    let reference = index.tdoa_reference()?;
    let others: Vec<&Anchor<F>> = anchors.iter().filter(|a| !a.is_tdoa_reference).collect();
    if tdoa_ranges.len() != others.len() {
        return Err(PositioningError::CountMismatch {
            expected: others.len(),
            got: tdoa_ranges.len(),
        });
    }
    if others.len() < 2 {
        return Err(PositioningError::Underdetermined { needed: 2, got: others.len() });
    }

    let measurements: Vec<Measurement<F>> = others
        .iter()
        .zip(tdoa_ranges)
        .map(|(a, &z)| Measurement {
            kind: MeasurementKind::TdoaRange,
            anchor_id: a.id.clone(),
            ref_anchor_id: Some(reference.id.clone()),
            value: z,
            variance: F::one(),
        })
        .collect();
    let problem = Problem::resolve(&measurements, anchors)?;

    let centroid = anchor_centroid(anchors);
    let spread = anchors
        .iter()
        .map(|a| a.position.distance_to(centroid))
        .fold(F::zero(), F::max)
        .max(F::one());
    let seeds = [
        centroid,
        Point::new(centroid.x + spread, centroid.y + spread),
        Point::new(centroid.x - spread, centroid.y + spread),
        Point::new(centroid.x + spread, centroid.y - spread),
        Point::new(centroid.x - spread, centroid.y - spread),
    ];

    let mut candidates: Vec<PositionEstimate<F>> =
        seeds.iter().map(|&s| solve_resolved(&problem, s)).collect();
    // Lowest residual first, ties broken by position for determinism.
    candidates.sort_by(|a, b| {
        (a.residual, a.position.x, a.position.y)
            .partial_cmp(&(b.residual, b.position.x, b.position.y))
            .expect("finite solver outputs")
    });

    let cluster_tol = real::<F>(1e-6) * spread;
    let mut distinct: Vec<PositionEstimate<F>> = Vec::new();
    for c in candidates {
        if !distinct.iter().any(|d| d.position.distance_to(c.position) < cluster_tol) {
            distinct.push(c);
        }
    }

    let best = distinct.remove(0);
    let comparable = real::<F>(10.0) * best.residual + real::<F>(1e-9);
    let ambiguous = distinct
        .iter()
        .any(|d| d.status == SolveStatus::Converged && d.residual <= comparable);
    Ok(HyperbolicFix { best, alternates: distinct, ambiguous })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn range_measurements(
        anchors: &[Anchor<f64>],
        target: Point<f64>,
        sigma: f64,
        noise: &[f64],
    ) -> Vec<Measurement<f64>> {
        anchors
            .iter()
            .zip(noise)
            .map(|(a, n)| {
                Measurement::new(
                    MeasurementKind::ToaRange,
                    a.id.clone(),
                    a.position.distance_to(target) + n,
                    sigma * sigma,
                )
            })
            .collect()
    }

    fn triangle() -> Vec<Anchor<f64>> {
        vec![
            Anchor::new("a", 0.0, 0.0),
            Anchor::new("b", 10.0, 0.0),
            Anchor::new("c", 0.0, 10.0),
        ]
    }

    #[test]
    fn noiseless_ranges_recover_the_target() {
        let target = Point::new(3.0, 4.0);
        let m = range_measurements(&triangle(), target, 1.0, &[0.0; 3]);
        let est = nls_solve(&m, &triangle(), None).unwrap();
        assert_eq!(est.status, SolveStatus::Converged);
        assert!(est.position.distance_to(target) < 1e-6, "position {:?}", est.position);
        assert!(est.residual < 1e-12);
        assert!(est.covariance.is_some());
        assert!(!est.correlated_noise_approximation);
    }

    #[test]
    fn noisy_solution_matches_a_grid_search_oracle() {
        let anchors = triangle();
        let target = Point::new(4.2, 3.1);
        // Fixed noise draw, σ = 0.5 m.
        let m = range_measurements(&anchors, target, 0.5, &[0.31, -0.42, 0.18]);
        let est = nls_solve(&m, &anchors, None).unwrap();

        // Exhaustive 1 cm grid over the anchor box, refined from a 5 cm pass.
        let problem = Problem::resolve(&m, &anchors).unwrap();
        let mut best = (Point::new(0.0, 0.0), f64::INFINITY);
        let coarse = 0.05;
        let mut gy = 0.0;
        while gy <= 10.0 {
            let mut gx = 0.0;
            while gx <= 10.0 {
                let p = Point::new(gx, gy);
                let obj = problem.objective(p);
                if obj < best.1 {
                    best = (p, obj);
                }
                gx += coarse;
            }
            gy += coarse;
        }
        let mut fine_best = best;
        let mut gy = best.0.y - 0.1;
        while gy <= best.0.y + 0.1 {
            let mut gx = best.0.x - 0.1;
            while gx <= best.0.x + 0.1 {
                let p = Point::new(gx, gy);
                let obj = problem.objective(p);
                if obj < fine_best.1 {
                    fine_best = (p, obj);
                }
                gx += 0.01;
            }
            gy += 0.01;
        }

        assert!(
            est.position.distance_to(fine_best.0) <= 0.015,
            "solver {:?} vs grid {:?}",
            est.position,
            fine_best.0
        );
    }

    #[test]
    fn hybrid_range_and_bearing_fix() {
        // A range circle and a bearing line crossing transversally at (3, 4).
        let anchors = vec![Anchor::new("a", 0.0, 0.0), Anchor::new("b", 8.0, 6.0)];
        let target = Point::new(3.0, 4.0);
        let m = vec![
            Measurement::new(MeasurementKind::ToaRange, "a", 5.0, 1.0),
            Measurement::new(
                MeasurementKind::Aoa,
                "b",
                (target.y - 6.0_f64).atan2(target.x - 8.0),
                0.01,
            ),
        ];
        let est = nls_solve(&m, &anchors, None).unwrap();
        assert_eq!(est.status, SolveStatus::Converged);
        assert!(est.position.distance_to(target) < 1e-6, "position {:?}", est.position);
    }

    #[test]
    fn sigma_rescaling_leaves_the_argmin_unchanged() {
        let anchors = triangle();
        let m = range_measurements(&anchors, Point::new(6.0, 2.5), 0.5, &[0.2, -0.1, 0.4]);
        let scaled: Vec<Measurement<f64>> =
            m.iter().cloned().map(|mut mm| {
                mm.variance *= 37.0;
                mm
            }).collect();
        let a = nls_solve(&m, &anchors, None).unwrap();
        let b = nls_solve(&scaled, &anchors, None).unwrap();
        assert!(a.position.distance_to(b.position) < 1e-9);
        // The objective scales by the common factor.
        assert!((a.residual / b.residual - 37.0).abs() < 1e-6);
    }

    #[test]
    fn underdetermined_and_bad_variance_are_rejected() {
        let anchors = triangle();
        let one = vec![Measurement::new(MeasurementKind::ToaRange, "a", 5.0, 1.0)];
        assert!(matches!(
            nls_solve(&one, &anchors, None).unwrap_err(),
            PositioningError::Underdetermined { .. }
        ));

        let bad = vec![
            Measurement::new(MeasurementKind::ToaRange, "a", 5.0, 0.0),
            Measurement::new(MeasurementKind::ToaRange, "b", 5.0, 1.0),
        ];
        assert_eq!(
            nls_solve(&bad, &anchors, None).unwrap_err(),
            PositioningError::InvalidVariance
        );
    }

    #[test]
    fn collinear_range_geometry_reports_degenerate() {
        // Anchors on a line and a target on the same line: the normal matrix
        // loses rank along the perpendicular.
        let anchors = vec![
            Anchor::new("a", 0.0, 0.0),
            Anchor::new("b", 5.0, 0.0),
            Anchor::new("c", 10.0, 0.0),
        ];
        let target = Point::new(3.0, 0.0);
        let m = range_measurements(&anchors, target, 1.0, &[0.0; 3]);
        let est = nls_solve(&m, &anchors, None).unwrap();
        // The centroid start lies on the anchor line, so every gradient is
        // axial and the system is singular.
        assert_eq!(est.status, SolveStatus::Degenerate);
    }

    #[test]
    fn hyperbolic_fix_recovers_the_reference_example() {
        let anchors = vec![
            Anchor::new("a1", -5.0, 0.0),
            Anchor::new("a2", 5.0, 0.0),
            Anchor::tdoa_reference("ref", 0.0, 5.0),
        ];
        let target = Point::new(1.0, 2.0);
        let d_ref = target.distance_to(Point::new(0.0, 5.0));
        let tdoas = vec![
            target.distance_to(Point::new(-5.0, 0.0)) - d_ref,
            target.distance_to(Point::new(5.0, 0.0)) - d_ref,
        ];
        let fix = hyperbolic_fix(&anchors, &tdoas).unwrap();
        assert!(
            fix.best.position.distance_to(target) < 1e-6,
            "best {:?}, ambiguous {}",
            fix.best.position,
            fix.ambiguous
        );
        assert!(fix.best.correlated_noise_approximation);
    }

    #[test]
    fn hyperbolic_fix_needs_three_anchors() {
        let anchors =
            vec![Anchor::<f64>::new("a", -5.0, 0.0), Anchor::tdoa_reference("r", 5.0, 0.0)];
        assert!(matches!(
            hyperbolic_fix(&anchors, &[0.4]).unwrap_err(),
            PositioningError::Underdetermined { .. }
        ));
    }
}
