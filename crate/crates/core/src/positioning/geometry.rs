use crate::scalar::{real, Real};

use super::nls::{condition_2x2, invert_2x2, solve_2x2};
use super::{anchor_centroid, Anchor, Point, PositionEstimate, PositioningError, SolveStatus};

/// Condition number above which the linearized system counts as degenerate.
const CONDITION_LIMIT: f64 = 1e12;

/// Position from three or more range circles.
///
/// Subtracting the first circle equation from the rest linearizes the
/// problem; the least-squares solution is then polished with one
/// Gauss-Newton step on the true range residuals. Consistent ranges are
/// recovered exactly. Collinear anchors produce a `Degenerate` status with
/// the condition number attached.
pub fn trilaterate<F: Real>(
    anchors: &[Anchor<F>],
    ranges: &[F],
) -> Result<PositionEstimate<F>, PositioningError> {
    if anchors.len() < 3 {
        return Err(PositioningError::Underdetermined { needed: 3, got: anchors.len() });
    }
    if ranges.len() != anchors.len() {
        return Err(PositioningError::CountMismatch {
            expected: anchors.len(),
            got: ranges.len(),
        });
    }

    let two = real::<F>(2.0);
    let p0 = anchors[0].position;
    let sq = |p: Point<F>| p.x * p.x + p.y * p.y;

    let mut a = [[F::zero(); 2]; 2];
    let mut b = [F::zero(); 2];
    for (anchor, &r) in anchors.iter().zip(ranges).skip(1) {
        let pi = anchor.position;
        let row = [two * (pi.x - p0.x), two * (pi.y - p0.y)];
        let rhs = ranges[0] * ranges[0] - r * r + sq(pi) - sq(p0);
        a[0][0] += row[0] * row[0];
        a[0][1] += row[0] * row[1];
        a[1][1] += row[1] * row[1];
        b[0] += row[0] * rhs;
        b[1] += row[1] * rhs;
    }
    a[1][0] = a[0][1];

    let condition = condition_2x2(&a);
    let Some((x, y)) = solve_2x2(&a, &b) else {
        return Ok(degenerate(anchors, condition));
    };
    if condition > real::<F>(CONDITION_LIMIT) {
        return Ok(degenerate(anchors, condition));
    }
    let linear = Point::new(x, y);

    // One Gauss-Newton polish step on the range residuals.
    let tiny = real::<F>(1e-12);
    let mut gn = [[F::zero(); 2]; 2];
    let mut rhs = [F::zero(); 2];
    for (anchor, &r) in anchors.iter().zip(ranges) {
        let d = linear.distance_to(anchor.position).max(tiny);
        let g = [(linear.x - anchor.position.x) / d, (linear.y - anchor.position.y) / d];
        let e = r - d;
        gn[0][0] += g[0] * g[0];
        gn[0][1] += g[0] * g[1];
        gn[1][1] += g[1] * g[1];
        rhs[0] += g[0] * e;
        rhs[1] += g[1] * e;
    }
    gn[1][0] = gn[0][1];
    let position = match solve_2x2(&gn, &rhs) {
        Some((dx, dy)) => Point::new(linear.x + dx, linear.y + dy),
        None => linear,
    };

    let residual = anchors
        .iter()
        .zip(ranges)
        .map(|(anchor, &r)| {
            let e = r - position.distance_to(anchor.position);
            e * e
        })
        .fold(F::zero(), |acc, e| acc + e);

    Ok(PositionEstimate {
        position,
        iterations: 1,
        residual,
        covariance: invert_2x2(&gn),
        status: SolveStatus::Converged,
        condition_number: Some(condition),
        correlated_noise_approximation: false,
    })
}

/// Position from two or more bearing lines.
///
/// Each anchor plus its AOA defines the line through the anchor with
/// direction (cos α, sin α); the fix is the least-squares intersection.
/// Parallel bearings are degenerate.
pub fn triangulate<F: Real>(
    anchors: &[Anchor<F>],
    angles: &[F],
) -> Result<PositionEstimate<F>, PositioningError> {
    if anchors.len() < 2 {
        return Err(PositioningError::Underdetermined { needed: 2, got: anchors.len() });
    }
    if angles.len() != anchors.len() {
        return Err(PositioningError::CountMismatch {
            expected: anchors.len(),
            got: angles.len(),
        });
    }

    // Normal form: n·p = n·a with n = (−sin α, cos α).
    let mut a = [[F::zero(); 2]; 2];
    let mut b = [F::zero(); 2];
    for (anchor, &alpha) in anchors.iter().zip(angles) {
        let n = [-alpha.sin(), alpha.cos()];
        let rhs = n[0] * anchor.position.x + n[1] * anchor.position.y;
        a[0][0] += n[0] * n[0];
        a[0][1] += n[0] * n[1];
        a[1][1] += n[1] * n[1];
        b[0] += n[0] * rhs;
        b[1] += n[1] * rhs;
    }
    a[1][0] = a[0][1];

    let condition = condition_2x2(&a);
    let Some((x, y)) = solve_2x2(&a, &b) else {
        return Ok(degenerate(anchors, condition));
    };
    if condition > real::<F>(CONDITION_LIMIT) {
        return Ok(degenerate(anchors, condition));
    }
    let position = Point::new(x, y);

    let residual = anchors
        .iter()
        .zip(angles)
        .map(|(anchor, &alpha)| {
            let n = [-alpha.sin(), alpha.cos()];
            let e = n[0] * (position.x - anchor.position.x)
                + n[1] * (position.y - anchor.position.y);
            e * e
        })
        .fold(F::zero(), |acc, e| acc + e);

    Ok(PositionEstimate {
        position,
        iterations: 1,
        residual,
        covariance: invert_2x2(&a),
        status: SolveStatus::Converged,
        condition_number: Some(condition),
        correlated_noise_approximation: false,
    })
}

fn degenerate<F: Real>(anchors: &[Anchor<F>], condition: F) -> PositionEstimate<F> {
    PositionEstimate {
        position: anchor_centroid(anchors),
        iterations: 0,
        residual: F::infinity(),
        covariance: None,
        status: SolveStatus::Degenerate,
        condition_number: Some(condition),
        correlated_noise_approximation: false,
    }
}
