//! LU solve with partial pivoting in double-double arithmetic.
//!
//! The moment systems here are at most 11x11 but sit near condition 5e14,
//! where a plain `f64` factorization leaves a backward error large enough to
//! break the normalization bookkeeping downstream (the residual scales with
//! the norm of the solution, which explodes for noise-dominated high-order
//! cells). Factoring in double-double pushes the backward error to ~1e-32
//! times the solution norm, which keeps row-0 identities (the piece-mass
//! constraints) exact to far below `f64` precision.

use super::dd::Dd;

/// Dense row-major double-double matrix, square.
pub fn solve_dd(matrix: &[Vec<Dd>], rhs: &[Dd]) -> Option<Vec<Dd>> {
    let n = rhs.len();
    debug_assert!(matrix.len() == n && matrix.iter().all(|r| r.len() == n));
    let mut a: Vec<Vec<Dd>> = matrix.to_vec();
    let mut x: Vec<Dd> = rhs.to_vec();

    for col in 0..n {
        // Partial pivoting on the high parts.
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].hi.abs().total_cmp(&a[j][col].hi.abs()))?;
        if a[pivot_row][col].hi == 0.0 {
            return None;
        }
        a.swap(col, pivot_row);
        x.swap(col, pivot_row);
        let pivot = a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / pivot;
            a[row][col] = Dd::ZERO;
            for k in col + 1..n {
                let t = factor * a[col][k];
                a[row][k] = a[row][k] - t;
            }
            let t = factor * x[col];
            x[row] = x[row] - t;
        }
    }
    // Back substitution.
    for row in (0..n).rev() {
        let mut acc = x[row];
        for k in row + 1..n {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}
