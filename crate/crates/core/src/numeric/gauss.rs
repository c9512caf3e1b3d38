//! Gauss–Legendre quadrature rules.
//!
//! Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
//! iteration from the Chebyshev-based initial guess; weights come from the
//! standard `2 / ((1 - x^2) P_n'(x)^2)` formula. An `n`-point rule is exact
//! for polynomials of degree `2n - 1`, which is what the Lagrange-basis
//! moment integrals rely on.

use super::dd::Dd;

/// Nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Roots are symmetric; solve for the non-negative half.
    let half = n.div_ceil(2);
    for i in 0..half {
        // Initial guess (Abramowitz & Stegun 22.16.6), counting from the
        // largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() <= 1e-15 * x.abs().max(1.0) {
                // One clean-up iteration after convergence.
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                x -= p / d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        // Middle root is exactly zero; the loop above computed it with
        // rounding noise, so pin it.
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `P_n(x)` and `P_n'(x)` in double-double.
fn legendre_with_derivative_dd(n: usize, x: Dd) -> (Dd, Dd) {
    let mut p0 = Dd::ONE;
    let mut p1 = x;
    if n == 0 {
        return (Dd::ONE, Dd::ZERO);
    }
    for k in 2..=n {
        let kf = Dd::from_f64(k as f64);
        let c1 = Dd::from_f64(2.0 * k as f64 - 1.0);
        let c2 = Dd::from_f64(k as f64 - 1.0);
        let p2 = (c1 * x * p1 - c2 * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = Dd::from_f64(n as f64) * (x * p1 - p0) / (x * x - Dd::ONE);
    (p1, d)
}

/// Rule on `[0, 1]` refined to double-double accuracy.
///
/// Starts from the `f64` nodes and applies two Newton steps in double-double
/// (quadratic convergence takes ~1e-16 straight to ~1e-32). Needed where
/// quadrature feeds the extended-precision integral bookkeeping: quadrature
/// exactness for polynomials holds only as accurately as the nodes and
/// weights themselves.
pub fn gauss_legendre_unit_dd(n: usize) -> (Vec<Dd>, Vec<Dd>) {
    let (nodes64, _) = gauss_legendre(n);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let half = Dd::from_f64(0.5);
    for (i, &x0) in nodes64.iter().enumerate() {
        let mut x = Dd::from_f64(x0);
        if n % 2 == 1 && i == n / 2 {
            x = Dd::ZERO; // middle root exact
        } else {
            for _ in 0..2 {
                let (p, d) = legendre_with_derivative_dd(n, x);
                x = x - p / d;
            }
        }
        let (_, d) = legendre_with_derivative_dd(n, x);
        let w = Dd::from_f64(2.0) / ((Dd::ONE - x * x) * d * d);
        nodes.push(half * (x + Dd::ONE));
        weights.push(half * w);
    }
    (nodes, weights)
}

/// Rule mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (nodes, weights) = gauss_legendre(n);
    let nodes = nodes.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let weights = weights.iter().map(|w| 0.5 * w).collect();
    (nodes, weights)
}

/// Integrate `f` over `[a, b]` with an `n`-point rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let scale = 0.5 * (b - a);
    let mut acc = 0.0;
    for (t, w) in nodes.iter().zip(&weights) {
        acc += w * f(mid + scale * t);
    }
    scale * acc
}
