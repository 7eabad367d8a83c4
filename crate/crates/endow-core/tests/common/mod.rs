//! Shared oracle helpers for the integration tests.
//!
//! Everything here is deliberately independent of the library's solvers: the root
//! oracle is plain bisection on the first-order condition written out from raw
//! parameters, and the quadrature oracle is a fixed-panel composite Simpson rule.

#![allow(dead_code)]

/// Raw per-regime market constants for oracle-side evaluations.
#[derive(Debug, Clone, Copy)]
pub struct RawRegime {
    pub mu: f64,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub r: f64,
}

pub const TABLE1_GOOD: RawRegime =
    RawRegime { mu: 0.15, sigma: 0.15, k1: 0.15, k2: 0.30, theta1: 0.3, theta2: 0.4, r: 0.05 };
pub const TABLE1_BAD: RawRegime =
    RawRegime { mu: 0.12, sigma: 0.25, k1: 0.10, k2: 0.35, theta1: 0.3, theta2: 0.4, r: 0.05 };

/// First-order condition written out directly:
/// `sigma^2 beta Pi - (mu - r) - K1 Th1 e^{-Pi K1 beta} + K2 Th2 e^{Pi K2 beta}`
/// with `beta = alpha e^{r (T - t)}`.
pub fn foc(p: &RawRegime, alpha: f64, tau: f64, pi: f64) -> f64 {
    let beta = alpha * (p.r * tau).exp();
    p.sigma * p.sigma * beta * pi - (p.mu - p.r) - p.k1 * p.theta1 * (-pi * p.k1 * beta).exp()
        + p.k2 * p.theta2 * (pi * p.k2 * beta).exp()
}

/// Objective value at `pi`.
pub fn psi(p: &RawRegime, alpha: f64, tau: f64, pi: f64) -> f64 {
    let beta = alpha * (p.r * tau).exp();
    -beta * (p.mu - p.r) * pi
        + 0.5 * beta * beta * p.sigma * p.sigma * pi * pi
        + p.theta1 * ((-pi * p.k1 * beta).exp() - 1.0)
        + p.theta2 * ((pi * p.k2 * beta).exp() - 1.0)
}

/// Bisection root of the first-order condition to absolute tolerance `tol`.
/// The condition is strictly increasing, so a wide bracket always works.
pub fn bisect_root(p: &RawRegime, alpha: f64, tau: f64, tol: f64) -> f64 {
    let mut lo = -1.0;
    let mut hi = 1.0;
    while foc(p, alpha, tau, lo) > 0.0 {
        lo *= 2.0;
        assert!(lo > -1e9, "no lower sign change");
    }
    while foc(p, alpha, tau, hi) < 0.0 {
        hi *= 2.0;
        assert!(hi < 1e9, "no upper sign change");
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if foc(p, alpha, tau, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimum of the objective via the bisection root.
pub fn inf_psi(p: &RawRegime, alpha: f64, tau: f64) -> f64 {
    psi(p, alpha, tau, bisect_root(p, alpha, tau, 1e-13))
}

/// Fixed-panel composite Simpson rule with `2n` subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / (2 * n) as f64;
    let mut acc = f(a) + f(b);
    for k in 1..2 * n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Sample mean and standard error (test-side, plain summation).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
