//! Moment-matched polynomial represented by its values at Chebyshev extreme
//! points (Lagrange basis).
//!
//! The unknowns are the polynomial's values at the nodes, so no coefficient
//! back-map is needed: node values are invariant under the unit-interval
//! change of variable used for the solve. Evaluation uses the barycentric
//! form, whose weights for Chebyshev extreme points have the closed form
//! `(-1)^k`, halved at the ends. Basis-polynomial moment integrals are
//! computed by Gauss–Legendre quadrature (exact for the polynomial
//! integrands); the solve and all integral bookkeeping run in double-double
//! like the monomial path, and a per-fit antiderivative interpolant makes
//! CDF evaluation a single barycentric pass.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::monomial::{check_interval, check_order};
use crate::numeric::dd::Dd;
use crate::numeric::ddlu::solve_dd;
use crate::numeric::gauss::{gauss_legendre, gauss_legendre_unit_dd};
use crate::numeric::linalg::{condition_2norm, CONDITION_LIMIT};
use crate::numeric::transform::targets_to_unit_moments;

/// Polynomial on `[a, b]` stored as values `weights[k]` at Chebyshev extreme
/// nodes `nodes[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeFit {
    pub a: f64,
    pub b: f64,
    /// Chebyshev extreme points, ascending, endpoints included.
    pub nodes: Vec<f64>,
    /// Node values of the fitted polynomial (rounded view of the
    /// extended-precision solution).
    pub weights: Vec<f64>,
    /// 2-norm condition number of the solved unit-interval system.
    pub condition_estimate: f64,
    /// Full-precision node values.
    pub(crate) values_dd: Vec<Dd>,
    /// Barycentric weights for `nodes`.
    pub(crate) bary: Vec<f64>,
    /// Node values of the derivative polynomial (for feasibility scans).
    pub(crate) deriv_values: Vec<f64>,
    /// Antiderivative interpolant on the unit interval: values of
    /// `Q(u) = integral of g from 0 to u` at `n + 1` Chebyshev nodes.
    pub(crate) antider_nodes: Vec<f64>,
    pub(crate) antider_bary: Vec<f64>,
    pub(crate) antider_dd: Vec<Dd>,
}

impl LagrangeFit {
    pub fn n_moments(&self) -> usize {
        self.nodes.len()
    }

    /// Full-precision node values as (hi, lo) pairs.
    pub fn values_dd(&self) -> &[Dd] {
        &self.values_dd
    }

    /// Evaluate the polynomial at `x` (barycentric form).
    pub fn eval(&self, x: f64) -> f64 {
        bary_eval(x, &self.nodes, &self.bary, &self.weights)
    }

    /// Derivative at `x`.
    pub fn deriv(&self, x: f64) -> f64 {
        bary_eval(x, &self.nodes, &self.bary, &self.deriv_values)
    }

    /// Integral over the whole bin, from the full-precision representation.
    pub fn integral(&self) -> f64 {
        self.antider_dd.last().expect("nonempty").to_f64()
    }

    /// Integral from the bin start to `x` (clamped to the bin).
    pub fn integral_to(&self, x: f64) -> f64 {
        let s = self.b - self.a;
        let u = ((x - self.a) / s).clamp(0.0, 1.0);
        bary_eval_dd(
            Dd::from_f64(u),
            &self.antider_nodes,
            &self.antider_bary,
            &self.antider_dd,
        )
        .to_f64()
    }
}

/// Chebyshev extreme points on `[a, b]`:
/// `x_l = a + (b - a)/2 (1 - cos(l pi / (n - 1)))`, `l = 0 .. n - 1`.
pub fn chebyshev_nodes(a: f64, b: f64, n_moments: usize) -> Result<Vec<f64>> {
    check_interval(a, b)?;
    if n_moments < 2 {
        return Err(Error::InvalidParameter(format!(
            "chebyshev extreme points need at least 2 nodes, got {n_moments}"
        )));
    }
    let half = 0.5 * (b - a);
    let denom = (n_moments - 1) as f64;
    let mut nodes: Vec<f64> = (0..n_moments)
        .map(|l| a + half * (1.0 - (PI * l as f64 / denom).cos()))
        .collect();
    // cos(0) and cos(pi) are exact but the affine arithmetic is not; pin the
    // endpoints so bins tile without cracks.
    nodes[0] = a;
    nodes[n_moments - 1] = b;
    Ok(nodes)
}

/// Barycentric weights for `n` Chebyshev extreme points (any interval):
/// `(-1)^k`, halved at both ends.
pub(crate) fn chebyshev_bary_weights(n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
    w[0] *= 0.5;
    w[n - 1] *= 0.5;
    w
}

/// Barycentric weights for arbitrary distinct nodes (product formula),
/// used when rebuilding fits from serialized node/value pairs.
fn general_bary_weights(nodes: &[f64]) -> Result<Vec<f64>> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    // Scale differences by the interval half-width to keep the products in
    // range for narrow bins at high order.
    let scale = 4.0 / (nodes[n - 1] - nodes[0]);
    for k in 0..n {
        let mut p = 1.0;
        for m in 0..n {
            if m != k {
                let d = (nodes[k] - nodes[m]) * scale;
                if d == 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate interpolation node {}",
                        nodes[k]
                    )));
                }
                p *= d;
            }
        }
        w[k] = 1.0 / p;
    }
    Ok(w)
}

fn bary_eval(x: f64, nodes: &[f64], bary: &[f64], values: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xi, &bi), &vi) in nodes.iter().zip(bary).zip(values) {
        let d = x - xi;
        if d == 0.0 {
            return vi;
        }
        let t = bi / d;
        num += t * vi;
        den += t;
    }
    num / den
}

fn bary_eval_dd(x: Dd, nodes: &[f64], bary: &[f64], values: &[Dd]) -> Dd {
    let mut num = Dd::ZERO;
    let mut den = Dd::ZERO;
    for ((&xi, &bi), &vi) in nodes.iter().zip(bary).zip(values) {
        let d = x - Dd::from_f64(xi);
        if d.hi == 0.0 && d.lo == 0.0 {
            return vi;
        }
        let t = Dd::from_f64(bi) / d;
        num = num + t * vi;
        den = den + t;
    }
    num / den
}

/// All Lagrange basis values `l_k(x)` at once for the given nodes/weights.
fn basis_values_dd(x: Dd, nodes: &[f64], bary: &[f64]) -> Vec<Dd> {
    let n = nodes.len();
    let mut out = vec![Dd::ZERO; n];
    let mut terms = Vec::with_capacity(n);
    let mut den = Dd::ZERO;
    for (k, (&xi, &bi)) in nodes.iter().zip(bary).enumerate() {
        let d = x - Dd::from_f64(xi);
        if d.hi == 0.0 && d.lo == 0.0 {
            out[k] = Dd::ONE;
            return out;
        }
        let t = Dd::from_f64(bi) / d;
        den = den + t;
        terms.push(t);
    }
    for (o, t) in out.iter_mut().zip(terms) {
        *o = t / den;
    }
    out
}

/// Moment matrix in the Lagrange basis: entry `(j, k)` is
/// `integral of x^j l_k(x) over [a, b]`, by Gauss–Legendre quadrature with
/// `n_moments` points (exact: the integrand has degree at most
/// `2 n_moments - 2`).
pub fn lagrange_moment_matrix(
    a: f64,
    b: f64,
    nodes: &[f64],
    n_moments: usize,
) -> Result<DMatrix<f64>> {
    check_interval(a, b)?;
    check_order(n_moments, 2)?;
    if nodes.len() != n_moments {
        return Err(Error::InvalidParameter(format!(
            "expected {n_moments} nodes, got {}",
            nodes.len()
        )));
    }
    let bary = general_bary_weights(nodes)?;
    let (gl_nodes, gl_weights) = gauss_legendre(n_moments);
    let mid = 0.5 * (a + b);
    let scale = 0.5 * (b - a);
    let mut m = DMatrix::zeros(n_moments, n_moments);
    for (t, w) in gl_nodes.iter().zip(&gl_weights) {
        let x = mid + scale * t;
        let lam = basis_values(x, nodes, &bary);
        let mut xp = scale * w;
        for j in 0..n_moments {
            for k in 0..n_moments {
                m[(j, k)] += xp * lam[k];
            }
            xp *= x;
        }
    }
    Ok(m)
}

fn basis_values(x: f64, nodes: &[f64], bary: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut out = vec![0.0; n];
    let mut terms = Vec::with_capacity(n);
    let mut den = 0.0;
    for (k, (&xi, &bi)) in nodes.iter().zip(bary).enumerate() {
        let d = x - xi;
        if d == 0.0 {
            out[k] = 1.0;
            return out;
        }
        let t = bi / d;
        den += t;
        terms.push(t);
    }
    for (o, t) in out.iter_mut().zip(terms) {
        *o = t / den;
    }
    out
}

/// Solve the Lagrange-basis moment system for one bin.
///
/// `targets[j]` is the desired `integral of x^j p(x) dx` over `[a, b]`; the
/// order equals `targets.len()` (minimum 2). Returns the fit whose node
/// values reproduce those targets; singularity policy matches the monomial
/// solver.
pub fn solve_lagrange(a: f64, b: f64, targets: &[f64]) -> Result<LagrangeFit> {
    check_interval(a, b)?;
    check_order(targets.len(), 2)?;
    let n = targets.len();
    let s = b - a;

    // Unit-interval system: nodes, basis weights, and the moment matrix
    // Lambda[m][k] = integral of u^m lambda_k(u) over [0, 1].
    let u_nodes = chebyshev_nodes(0.0, 1.0, n)?;
    let bary = chebyshev_bary_weights(n);
    let (gl_t, gl_w) = gauss_legendre_unit_dd(n);
    let mut lambda: Vec<Vec<Dd>> = vec![vec![Dd::ZERO; n]; n];
    for (t, w) in gl_t.iter().zip(&gl_w) {
        let lam = basis_values_dd(*t, &u_nodes, &bary);
        let mut tp = *w;
        for row in lambda.iter_mut() {
            for (cell, l) in row.iter_mut().zip(&lam) {
                *cell = *cell + tp * *l;
            }
            tp = tp * *t;
        }
    }

    let lambda64 = DMatrix::from_fn(n, n, |j, k| lambda[j][k].to_f64());
    let condition_estimate = condition_2norm(&lambda64);
    let fail = || Error::IllConditioned {
        a,
        b,
        n_moments: n,
        condition: condition_estimate,
    };
    if !condition_estimate.is_finite() || condition_estimate > CONDITION_LIMIT {
        return Err(fail());
    }

    // (s Lambda) values = U  =>  Lambda values = U / s.
    let s_dd = Dd::from_f64(s);
    let rhs: Vec<Dd> = targets_to_unit_moments(a, s, targets)
        .into_iter()
        .map(|u| u / s_dd)
        .collect();
    let values_dd = solve_dd(&lambda, &rhs).ok_or_else(fail)?;
    if values_dd.iter().any(|v| !v.hi.is_finite()) {
        return Err(fail());
    }

    let nodes = chebyshev_nodes(a, b, n)?;
    let weights: Vec<f64> = values_dd.iter().map(|v| v.to_f64()).collect();
    build_fit(a, b, nodes, weights, values_dd, bary, condition_estimate, &u_nodes)
}

/// Rebuild a fit from serialized node/value pairs (general nodes accepted;
/// the extended-precision carry restarts from the rounded values).
pub fn lagrange_from_values(
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
) -> Result<LagrangeFit> {
    check_interval(a, b)?;
    check_order(nodes.len(), 2)?;
    if nodes.len() != weights.len() {
        return Err(Error::InvalidParameter(format!(
            "{} nodes but {} values",
            nodes.len(),
            weights.len()
        )));
    }
    if nodes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "interpolation nodes must be strictly ascending".into(),
        ));
    }
    let bary = general_bary_weights(&nodes)?;
    let values_dd: Vec<Dd> = weights.iter().map(|&v| Dd::from_f64(v)).collect();
    let s = b - a;
    let u_nodes: Vec<f64> = nodes.iter().map(|&x| (x - a) / s).collect();
    // Condition is a property of the solve, unknown when rebuilding.
    build_fit(a, b, nodes, weights, values_dd, bary, f64::NAN, &u_nodes)
}

#[allow(clippy::too_many_arguments)]
fn build_fit(
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values_dd: Vec<Dd>,
    bary: Vec<f64>,
    condition_estimate: f64,
    u_nodes: &[f64],
) -> Result<LagrangeFit> {
    let n = nodes.len();
    // Derivative node values via the barycentric differentiation matrix.
    let mut deriv_values = vec![0.0; n];
    for j in 0..n {
        let mut row_sum = 0.0;
        let mut acc = 0.0;
        for k in 0..n {
            if k == j {
                continue;
            }
            let d = (bary[k] / bary[j]) / (nodes[j] - nodes[k]);
            acc += d * weights[k];
            row_sum += d;
        }
        deriv_values[j] = acc - row_sum * weights[j];
    }

    // Antiderivative interpolant: Q(u) = integral of g over [0, u] sampled at
    // n + 1 Chebyshev nodes of the unit interval (degree n, so exact), where
    // g(u) = s p(a + s u) has node values s * weights at u_nodes.
    let s = b - a;
    let s_dd = Dd::from_f64(s);
    let g_values: Vec<Dd> = values_dd.iter().map(|v| *v * s_dd).collect();
    let antider_nodes = chebyshev_nodes(0.0, 1.0, n + 1)?;
    let antider_bary = chebyshev_bary_weights(n + 1);
    let (gl_t, gl_w) = gauss_legendre_unit_dd(n);
    let antider_dd: Vec<Dd> = antider_nodes
        .iter()
        .map(|&v| {
            if v == 0.0 {
                return Dd::ZERO;
            }
            let v_dd = Dd::from_f64(v);
            let mut acc = Dd::ZERO;
            for (t, w) in gl_t.iter().zip(&gl_w) {
                let u = v_dd * *t;
                let g = bary_eval_dd(u, u_nodes, &bary, &g_values);
                acc = acc + *w * g;
            }
            acc * v_dd
        })
        .collect();

    Ok(LagrangeFit {
        a,
        b,
        nodes,
        weights,
        condition_estimate,
        values_dd,
        bary,
        deriv_values,
        antider_nodes,
        antider_bary,
        antider_dd,
    })
}
