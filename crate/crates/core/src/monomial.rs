//! Moment-matched polynomial in the monomial basis on one bin.
//!
//! The raw normal equations `integral of x^(j+k)` form a Hankel system whose
//! conditioning explodes with the bin's distance from the origin. Solving is
//! therefore done on the unit interval — where the matrix is the Hilbert
//! matrix, whose conditioning depends only on the order — with the target and
//! coefficient changes of variable carried in double-double arithmetic
//! (see [`crate::numeric::transform`]). The triangular solve, the Hilbert
//! solve, and the back-map all stay in double-double; the `f64` fields are
//! rounded views of that solution. Integrals are evaluated through the
//! double-double representation so that piece masses remain exact even when
//! high-order solutions are large and oscillatory.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numeric::dd::Dd;
use crate::numeric::ddlu::solve_dd;
use crate::numeric::linalg::{condition_2norm, CONDITION_LIMIT};
use crate::numeric::transform::{
    raw_coeffs_to_unit, targets_to_unit_moments, unit_coeffs_to_raw_dd,
};

/// Polynomial `p(x) = sum_m coeffs[m] x^m` matched to one bin's moment
/// targets.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialFit {
    pub a: f64,
    pub b: f64,
    /// Coefficients in the raw monomial basis, constant term first
    /// (rounded view of the extended-precision solution).
    pub coeffs: Vec<f64>,
    /// Coefficients of `g(u) = (b - a) p(a + (b - a) u)` on the unit
    /// interval; evaluation uses these because the raw coefficients cancel
    /// catastrophically for narrow bins away from the origin.
    pub local_coeffs: Vec<f64>,
    /// 2-norm condition number of the solved unit-interval (Hilbert) system.
    pub condition_estimate: f64,
    /// Full-precision unit-interval solution.
    pub(crate) local_dd: Vec<Dd>,
    /// Full-precision raw coefficients.
    pub(crate) raw_dd: Vec<Dd>,
}

impl MonomialFit {
    pub fn n_moments(&self) -> usize {
        self.coeffs.len()
    }

    /// Full-precision raw coefficients as (hi, lo) pairs. The `coeffs` field
    /// is this rounded to `f64`; residual checks against the moment system
    /// need the unrounded values once bins sit far from the origin.
    pub fn raw_coeffs_dd(&self) -> &[Dd] {
        &self.raw_dd
    }

    /// Full-precision unit-interval coefficients.
    pub fn local_coeffs_dd(&self) -> &[Dd] {
        &self.local_dd
    }

    /// Evaluate `p(x)` through the unit-interval representation.
    pub fn eval(&self, x: f64) -> f64 {
        let s = self.b - self.a;
        let u = (x - self.a) / s;
        horner(&self.local_coeffs, u) / s
    }

    /// Evaluate `p(x)` directly from the rounded raw coefficients. Exposed
    /// for diagnostics; prefer [`MonomialFit::eval`].
    pub fn eval_raw(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    /// `p'(x)`.
    pub fn deriv(&self, x: f64) -> f64 {
        let s = self.b - self.a;
        let u = (x - self.a) / s;
        let mut acc = 0.0;
        for (k, &c) in self.local_coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * u + k as f64 * c;
        }
        acc / (s * s)
    }

    /// Integral of `p` over the whole bin, from the full-precision
    /// representation.
    pub fn integral(&self) -> f64 {
        let mut acc = Dd::ZERO;
        for (k, c) in self.local_dd.iter().enumerate() {
            acc = acc + *c / Dd::from_f64(k as f64 + 1.0);
        }
        acc.to_f64()
    }

    /// Integral of `p` from the bin start to `x` (clamped to the bin), from
    /// the full-precision representation.
    pub fn integral_to(&self, x: f64) -> f64 {
        let s = self.b - self.a;
        let u = ((x - self.a) / s).clamp(0.0, 1.0);
        let u_dd = Dd::from_f64(u);
        let mut acc = Dd::ZERO;
        for (k, c) in self.local_dd.iter().enumerate().rev() {
            acc = (acc + *c / Dd::from_f64(k as f64 + 1.0)) * u_dd;
        }
        acc.to_f64()
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Matrix of the raw moment-matching system: entry `(j, k)` is
/// `integral of x^(j+k) over [a, b]`.
pub fn monomial_moment_matrix(a: f64, b: f64, n_moments: usize) -> Result<DMatrix<f64>> {
    check_interval(a, b)?;
    check_order(n_moments, 1)?;
    Ok(DMatrix::from_fn(n_moments, n_moments, |j, k| {
        let p = (j + k + 1) as i32;
        (b.powi(p) - a.powi(p)) / f64::from(p)
    }))
}

/// Solve the moment-matching system for one bin.
///
/// `targets[j]` is the desired `integral of x^j p(x) dx` over `[a, b]`
/// (mass-weighted bin moments in the density pipeline); the order equals
/// `targets.len()`. Fails with an ill-conditioned error if the unit-interval
/// system's condition exceeds [`CONDITION_LIMIT`].
pub fn solve_monomial(a: f64, b: f64, targets: &[f64]) -> Result<MonomialFit> {
    check_interval(a, b)?;
    check_order(targets.len(), 1)?;
    let n = targets.len();
    let s = b - a;
    let unit_targets = targets_to_unit_moments(a, s, targets);
    let condition_estimate = hilbert_condition(n);
    let fail = || Error::IllConditioned {
        a,
        b,
        n_moments: n,
        condition: condition_estimate,
    };
    if !condition_estimate.is_finite() || condition_estimate > CONDITION_LIMIT {
        return Err(fail());
    }
    let hilbert: Vec<Vec<Dd>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| Dd::ONE / Dd::from_f64((j + k + 1) as f64))
                .collect()
        })
        .collect();
    let local_dd = solve_dd(&hilbert, &unit_targets).ok_or_else(fail)?;
    if local_dd.iter().any(|c| !c.hi.is_finite()) {
        return Err(fail());
    }
    let raw_dd = unit_coeffs_to_raw_dd(a, s, &local_dd);
    let local_coeffs: Vec<f64> = local_dd.iter().map(|c| c.to_f64()).collect();
    let coeffs: Vec<f64> = raw_dd.iter().map(|c| c.to_f64()).collect();
    Ok(MonomialFit {
        a,
        b,
        coeffs,
        local_coeffs,
        condition_estimate,
        local_dd,
        raw_dd,
    })
}

/// Rebuild a fit from serialized raw coefficients (the extended-precision
/// carry is reconstructed from the rounded values, so a round-tripped model
/// reproduces its serialized view exactly rather than the original solve).
pub fn monomial_from_coeffs(a: f64, b: f64, coeffs: Vec<f64>) -> Result<MonomialFit> {
    check_interval(a, b)?;
    check_order(coeffs.len(), 1)?;
    let s = b - a;
    let local_coeffs = raw_coeffs_to_unit(a, s, &coeffs);
    let local_dd: Vec<Dd> = local_coeffs.iter().map(|&c| Dd::from_f64(c)).collect();
    let raw_dd: Vec<Dd> = coeffs.iter().map(|&c| Dd::from_f64(c)).collect();
    let condition_estimate = hilbert_condition(coeffs.len());
    Ok(MonomialFit {
        a,
        b,
        coeffs,
        local_coeffs,
        condition_estimate,
        local_dd,
        raw_dd,
    })
}

/// Condition of the order-`n` Hilbert matrix (what the solver factors; the
/// estimate depends only on the order).
fn hilbert_condition(n: usize) -> f64 {
    let h = DMatrix::from_fn(n, n, |j, k| 1.0 / ((j + k + 1) as f64));
    condition_2norm(&h)
}

pub(crate) fn check_interval(a: f64, b: f64) -> Result<()> {
    if !a.is_finite() || !b.is_finite() || a >= b {
        return Err(Error::DegenerateSupport { a, b });
    }
    Ok(())
}

pub(crate) fn check_order(n_moments: usize, min: usize) -> Result<()> {
    if n_moments < min {
        return Err(Error::InvalidParameter(format!(
            "moment order {n_moments} below minimum {min}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn moment_matrix_by_hand() {
        // [0, 1]: entries 1/(j+k+1) — the Hilbert matrix.
        let m = monomial_moment_matrix(0.0, 1.0, 3).unwrap();
        let expect = [1.0, 0.5, 1.0 / 3.0, 0.5, 1.0 / 3.0, 0.25, 1.0 / 3.0, 0.25, 0.2];
        for (got, want) in m.transpose().iter().zip(expect) {
            assert_relative_eq!(*got, want, max_relative = 1e-15);
        }
        // [1, 2]: first entry is the width.
        let m = monomial_moment_matrix(1.0, 2.0, 2).unwrap();
        assert_relative_eq!(m[(0, 0)], 1.0, max_relative = 1e-15);
        assert_relative_eq!(m[(0, 1)], 1.5, max_relative = 1e-15);
        assert_relative_eq!(m[(1, 1)], 7.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn recovers_uniform_density() {
        let fit = solve_monomial(0.0, 1.0, &[1.0, 0.5, 1.0 / 3.0]).unwrap();
        assert_relative_eq!(fit.coeffs[0], 1.0, max_relative = 1e-12);
        assert!(fit.coeffs[1].abs() < 1e-12);
        assert!(fit.coeffs[2].abs() < 1e-12);
        assert_relative_eq!(fit.integral(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn recovers_linear_density() {
        // p(x) = x/2 on [0, 2]: targets 1, 4/3, 2.
        let fit = solve_monomial(0.0, 2.0, &[1.0, 4.0 / 3.0, 2.0]).unwrap();
        assert!(fit.coeffs[0].abs() < 1e-12);
        assert_relative_eq!(fit.coeffs[1], 0.5, max_relative = 1e-12);
        assert!(fit.coeffs[2].abs() < 1e-12);
        assert_relative_eq!(fit.eval(1.5), 0.75, max_relative = 1e-12);
        assert_relative_eq!(fit.deriv(1.0), 0.5, max_relative = 1e-10);
    }

    #[test]
    fn recovers_parabola_off_origin() {
        // Density 6 mass u (1 - u) in bin coordinates on [2.3, 3.3].
        let (a, b) = (2.3, 3.3);
        let mass = 0.07;
        let targets: Vec<f64> = (0..5)
            .map(|j| {
                crate::numeric::gauss::integrate(
                    |x| {
                        let u = x - a;
                        x.powi(j) * mass * 6.0 * u * (1.0 - u)
                    },
                    a,
                    b,
                    8,
                )
            })
            .collect();
        let fit = solve_monomial(a, b, &targets).unwrap();
        assert_relative_eq!(fit.integral(), mass, max_relative = 1e-12);
        // f64 rounding of the targets is amplified by the shifted-bin
        // cancellation (roughly the inverse-Hilbert row norms times powers
        // of a), worth ~1e-10 relative here; allow 100x margin.
        assert_relative_eq!(fit.local_coeffs[1], 6.0 * mass, max_relative = 1e-8);
        assert_relative_eq!(fit.local_coeffs[2], -6.0 * mass, max_relative = 1e-8);
        assert_relative_eq!(fit.eval(a + 0.5), mass * 1.5, max_relative = 1e-8);
    }

    #[test]
    fn narrow_far_bin_keeps_mass_and_residual() {
        // a / width = 246: pointwise recovery from f64 targets is beyond any
        // solver here (the targets themselves no longer pin the density
        // down), but the integral and the moment residual must survive.
        let a = 12.3;
        let s = 0.05;
        let mass = 0.07;
        let targets: Vec<f64> = (0..6)
            .map(|j| {
                crate::numeric::gauss::integrate(
                    |x| {
                        let u = (x - a) / s;
                        x.powi(j) * mass * 6.0 * u * (1.0 - u) / s
                    },
                    a,
                    a + s,
                    8,
                )
            })
            .collect();
        let fit = solve_monomial(a, a + s, &targets).unwrap();
        assert_relative_eq!(fit.integral(), mass, max_relative = 1e-11);
        // Residual in double-double against the raw Hankel system.
        let b = a + s;
        let scale = targets.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        for j in 0..6u32 {
            let mut acc = Dd::ZERO;
            for (k, w) in fit.raw_coeffs_dd().iter().enumerate() {
                let p = j + k as u32 + 1;
                let entry = (Dd::from_f64(b).powi(p) - Dd::from_f64(a).powi(p))
                    / Dd::from_f64(p as f64);
                acc = acc + entry * *w;
            }
            let r = (acc - Dd::from_f64(targets[j as usize])).to_f64();
            assert!(
                r.abs() <= 1e-13 * scale,
                "row {j}: residual {r:.3e} vs scale {scale:.3e}"
            );
        }
    }

    #[test]
    fn raw_residual_small_near_origin() {
        // Close to the origin the raw-basis residual is checkable in f64
        // straight off the rounded coefficients.
        let (a, b) = (0.5, 1.5);
        let targets = [0.31, 0.33, 0.40, 0.55];
        let fit = solve_monomial(a, b, &targets).unwrap();
        let m = monomial_moment_matrix(a, b, targets.len()).unwrap();
        let w = nalgebra::DVector::from_vec(fit.coeffs.clone());
        let r = &m * &w;
        for (got, want) in r.iter().zip(&targets) {
            assert!((got - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn eval_and_eval_raw_agree_near_origin() {
        let fit = solve_monomial(0.5, 1.5, &[0.4, 0.42, 0.47]).unwrap();
        for i in 0..=10 {
            let x = 0.5 + 0.1 * i as f64;
            assert_relative_eq!(fit.eval(x), fit.eval_raw(x), max_relative = 1e-9);
        }
    }

    #[test]
    fn integral_to_spans_bin() {
        let fit = solve_monomial(2.0, 3.0, &[0.2, 0.5, 1.26]).unwrap();
        assert_eq!(fit.integral_to(2.0), 0.0);
        assert_relative_eq!(fit.integral_to(3.0), fit.integral(), max_relative = 1e-13);
        assert_relative_eq!(fit.integral_to(10.0), fit.integral(), max_relative = 1e-13);
    }

    #[test]
    fn condition_grows_with_order_but_11_passes() {
        let low = solve_monomial(0.0, 1.0, &vec![1.0; 3]).unwrap();
        let t11: Vec<f64> = (0..11).map(|j| 1.0 / (j as f64 + 1.0)).collect();
        let high = solve_monomial(0.0, 1.0, &t11).unwrap();
        assert!(high.condition_estimate > low.condition_estimate);
        // Order 11 is the worst case the selection grid uses; it must stay
        // on the solvable side of the singularity cutoff (it sits around
        // 5.2e14, uncomfortably close).
        assert!(high.condition_estimate > 1e14);
        assert!(high.condition_estimate < 1e15);
    }

    #[test]
    fn overly_high_order_is_ill_conditioned() {
        let t: Vec<f64> = (0..14).map(|j| 1.0 / (j as f64 + 1.0)).collect();
        let err = solve_monomial(0.0, 1.0, &t).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { n_moments: 14, .. }));
    }

    #[test]
    fn from_coeffs_round_trips_view() {
        let fit = solve_monomial(1.0, 2.5, &[0.3, 0.5, 0.93]).unwrap();
        let back = monomial_from_coeffs(fit.a, fit.b, fit.coeffs.clone()).unwrap();
        assert_eq!(back.coeffs, fit.coeffs);
        for (p, q) in back.local_coeffs.iter().zip(&fit.local_coeffs) {
            assert_relative_eq!(p, q, max_relative = 1e-12, epsilon = 1e-14);
        }
        assert_relative_eq!(back.eval(1.7), fit.eval(1.7), max_relative = 1e-10);
    }

    #[test]
    fn degenerate_interval_is_rejected() {
        assert!(solve_monomial(1.0, 1.0, &[1.0]).is_err());
        assert!(solve_monomial(2.0, 1.0, &[1.0]).is_err());
        assert!(monomial_moment_matrix(1.0, f64::NAN, 2).is_err());
    }
}
