//! Two-segment continuous piecewise-linear fit.
//!
//! For each candidate breakpoint `x_k` at an interior grid point the model
//! `y = a + b x + c max(0, x - x_k)` is fitted by least squares. The
//! breakpoint with the smallest squared error is the elbow.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slope changes smaller than this mean the curve has no elbow.
pub const SLOPE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowFit {
    /// Index of the breakpoint in the input grid.
    pub index: usize,
    pub breakpoint: f64,
    pub intercept: f64,
    pub slope_left: f64,
    pub slope_right: f64,
    pub sse: f64,
    /// True when both segments have the same slope within [`SLOPE_TOL`].
    pub no_elbow: bool,
}

fn hinge_fit(x: &[f64], y: &[f64], knot: f64) -> Option<(DVector<f64>, f64)> {
    let n = x.len();
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => x[i],
        _ => (x[i] - knot).max(0.0),
    });
    let target = DVector::from_column_slice(y);
    let coef = design.clone().svd(true, true).solve(&target, 1e-12).ok()?;
    let sse = (design * &coef - target).norm_squared();
    Some((coef, sse))
}

/// Exhaustive breakpoint search over grid points that leave at least two
/// points in each segment (the breakpoint belongs to both). Ties go to the
/// smaller breakpoint.
pub fn fit_elbow(x: &[f64], y: &[f64]) -> Result<ElbowFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 4 {
        return Err(Error::Validation(format!(
            "elbow fit needs at least 2 points per segment (4 in total), got {}",
            x.len()
        )));
    }
    if x.windows(2).any(|w| !(w[0] < w[1])) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(
            "elbow fit needs a strictly increasing grid and finite values".into(),
        ));
    }
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(1.0);
    let mut best: Option<(usize, DVector<f64>, f64)> = None;
    for k in 1..x.len() - 1 {
        let Some((coef, sse)) = hinge_fit(x, y, x[k]) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((_, _, b)) => sse < b - 1e-12 * scale,
        };
        if better {
            best = Some((k, coef, sse));
        }
    }
    let (index, coef, sse) = best.ok_or_else(|| Error::Validation("elbow least squares failed".into()))?;
    Ok(ElbowFit {
        index,
        breakpoint: x[index],
        intercept: coef[0],
        slope_left: coef[1],
        slope_right: coef[1] + coef[2],
        sse,
        no_elbow: coef[2].abs() < SLOPE_TOL,
    })
}
