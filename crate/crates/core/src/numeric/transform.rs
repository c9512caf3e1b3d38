//! Change of variable between a raw interval `[a, b]` and the unit interval,
//! carried out in double-double arithmetic.
//!
//! With `x = a + s u`, `s = b - a`, the binomial expansion
//! `x^j = sum_m C(j,m) a^(j-m) s^m u^m` connects raw moment targets to unit
//! moments and raw polynomial coefficients to unit-interval coefficients.
//! The expansion coefficients reach `(a/s)^j`, which for narrow bins far from
//! the origin is large enough that plain `f64` forward substitution destroys
//! the result; double-double keeps roughly 31 digits through the triangular
//! solves so the values handed back to `f64` are accurate to working
//! precision.

use super::dd::Dd;

/// Pascal's triangle up to row `n - 1`, exact in `f64` for the orders used
/// here (`n <= 12`).
fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = vec![1.0; j + 1];
        for m in 1..j {
            row[m] = rows[j - 1][m - 1] + rows[j - 1][m];
        }
        rows.push(row);
    }
    rows
}

/// Unit moments `U_m = integral of u^m g(u) du` from raw targets
/// `T_j = integral of x^j p(x) dx`, where `g(u) = s p(a + s u)`.
///
/// Solves the lower-triangular system `B U = T` with
/// `B[j][m] = C(j,m) a^(j-m) s^m` by forward substitution in double-double.
pub fn targets_to_unit_moments(a: f64, s: f64, targets: &[f64]) -> Vec<Dd> {
    let n = targets.len();
    let binom = binomials(n);
    let a_pow = powers(a, n);
    let s_pow = powers(s, n);
    let mut u: Vec<Dd> = Vec::with_capacity(n);
    for j in 0..n {
        let mut acc = Dd::from_f64(targets[j]);
        for (m, u_m) in u.iter().enumerate() {
            let b = Dd::from_f64(binom[j][m]) * a_pow[j - m] * s_pow[m];
            acc = acc - b * *u_m;
        }
        u.push(acc / s_pow[j]);
    }
    u
}

/// Raw monomial coefficients of `p(x) = (1/s) g((x - a)/s)` from unit-interval
/// coefficients `g(u) = sum_k c_k u^k`:
/// `w_m = sum_(k>=m) c_k C(k,m) (-a)^(k-m) / s^(k+1)`.
pub fn unit_coeffs_to_raw_dd(a: f64, s: f64, unit_coeffs: &[Dd]) -> Vec<Dd> {
    let n = unit_coeffs.len();
    let binom = binomials(n);
    let neg_a_pow = powers(-a, n);
    let s_pow = powers(s, n + 1);
    (0..n)
        .map(|m| {
            let mut acc = Dd::ZERO;
            for k in m..n {
                let term =
                    unit_coeffs[k] * Dd::from_f64(binom[k][m]) * neg_a_pow[k - m] / s_pow[k + 1];
                acc = acc + term;
            }
            acc
        })
        .collect()
}

/// `f64` convenience wrapper around [`unit_coeffs_to_raw_dd`].
pub fn unit_coeffs_to_raw(a: f64, s: f64, unit_coeffs: &[f64]) -> Vec<f64> {
    let dd: Vec<Dd> = unit_coeffs.iter().map(|&c| Dd::from_f64(c)).collect();
    unit_coeffs_to_raw_dd(a, s, &dd).iter().map(|w| w.to_f64()).collect()
}

/// Inverse of [`unit_coeffs_to_raw`]: recover the unit-interval coefficients
/// from raw ones, `c_k = s^(k+1) sum_(m>=k) w_m C(m,k) a^(m-k)`.
pub fn raw_coeffs_to_unit(a: f64, s: f64, raw_coeffs: &[f64]) -> Vec<f64> {
    let n = raw_coeffs.len();
    let binom = binomials(n);
    let a_pow = powers(a, n);
    let s_pow = powers(s, n + 1);
    (0..n)
        .map(|k| {
            let mut acc = Dd::ZERO;
            for m in k..n {
                let term =
                    Dd::from_f64(raw_coeffs[m]) * Dd::from_f64(binom[m][k]) * a_pow[m - k];
                acc = acc + term;
            }
            (acc * s_pow[k + 1]).to_f64()
        })
        .collect()
}

fn powers(x: f64, n: usize) -> Vec<Dd> {
    let mut out = Vec::with_capacity(n + 1);
    let mut p = Dd::ONE;
    let x = Dd::from_f64(x);
    for _ in 0..=n {
        out.push(p);
        p = p * x;
    }
    out
}
