//! Small dense solves with a spectral condition estimate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition number beyond which a moment system is treated as singular.
/// The order-11 unit-interval system sits near 5e14 and must stay solvable;
/// anything past 1e15 has no trustworthy digits left in `f64`.
pub const CONDITION_LIMIT: f64 = 1e15;

/// Solve `A x = rhs` by LU with the 2-norm condition number of `A`.
///
/// Returns the ill-conditioned error when the condition estimate exceeds
/// [`CONDITION_LIMIT`] or the factorization breaks down. `a` and `b` only
/// annotate the error with the originating interval.
pub fn solve_conditioned(
    matrix: &DMatrix<f64>,
    rhs: &DVector<f64>,
    a: f64,
    b: f64,
) -> Result<(DVector<f64>, f64)> {
    let n = matrix.nrows();
    let condition = condition_2norm(matrix);
    let fail = || Error::IllConditioned {
        a,
        b,
        n_moments: n,
        condition,
    };
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(fail());
    }
    let lu = matrix.clone().lu();
    let x = lu.solve(rhs).ok_or_else(fail)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(fail());
    }
    Ok((x, condition))
}

/// 2-norm condition number via singular values (matrices here are at most
/// 11x11, so the SVD cost is irrelevant).
pub fn condition_2norm(matrix: &DMatrix<f64>) -> f64 {
    let svd = matrix.clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
