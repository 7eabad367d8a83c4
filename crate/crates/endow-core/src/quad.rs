//! Adaptive Simpson quadrature.

#[allow(unused_imports)]
use crate::math::FloatMath as _;

fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adapt(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, m, fm, flm);
    let right = simpson(m, fm, b, fb, frm);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adapt(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
            + adapt(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
    }
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fb, fm) = (f(a), f(b), f(m));
    let whole = simpson(a, fa, b, fb, fm);
    adapt(&f, a, fa, b, fb, fm, whole, tol.max(1e-15), 48)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn exponential() {
        let v = integrate(|x| x.exp(), 0.0, 1.0, 1e-12);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-11);
    }

    #[test]
    fn narrow_peak_resolved() {
        let v = integrate(|x| (-(x - 0.7) * (x - 0.7) * 400.0).exp(), 0.0, 1.0, 1e-11);
        let exact = (core::f64::consts::PI / 400.0).sqrt(); // erf tails negligible
        assert!((v - exact).abs() < 1e-9, "v = {v}, exact = {exact}");
    }
}
