//! Optimal investment amount under exponential utility.
//!
//! Minimizing the per-regime objective
//!
//! ```text
//! Psi(Pi; t, i) = -alpha e^{r(T-t)} (mu - r) Pi + (1/2) alpha^2 e^{2r(T-t)} sigma^2 Pi^2
//!               + Theta_1 (exp(-alpha Pi K1 e^{r(T-t)}) - 1)
//!               + Theta_2 (exp( alpha Pi K2 e^{r(T-t)}) - 1)
//! ```
//!
//! over `Pi` yields the optimal amount invested in the stock. `Psi` is strictly convex
//! (its second derivative is a sum of positive terms), so the first-order condition
//!
//! ```text
//! sigma^2 alpha e^{r(T-t)} Pi - (mu - r)
//!     = K1 Theta_1 exp(-alpha Pi K1 e^{r(T-t)}) - K2 Theta_2 exp(alpha Pi K2 e^{r(T-t)})
//! ```
//!
//! has a unique root `Pi*(t, i)`, independent of wealth. The solver runs safeguarded
//! Newton (steps clipped to a sign-changing bracket, bisection fallback) with the
//! analytic derivative. With constant coefficients the substitution `z = alpha
//! e^{r(T-t)} Pi` removes `t` from the equation, hence `Pi*(t,i) = z*_i e^{-r(T-t)}/alpha`:
//! increasing in `t` whenever `z*_i > 0` and scaling like `1/alpha`.

use alloc::format;

use crate::error::{Error, Result};
use crate::market::MarketParams;
#[allow(unused_imports)]
use crate::math::FloatMath as _;
use crate::regime::RegimePath;

/// Exponent magnitude beyond which `Psi` is reported as the +infinity sentinel.
const EXP_CLAMP: f64 = 700.0;

/// One optimal-strategy query at `(t, regime)`.
#[derive(Debug, Clone, Copy)]
pub struct StrategyQuery<'a> {
    pub t: f64,
    pub regime: usize,
    /// Absolute risk aversion (> 0).
    pub alpha: f64,
    pub market: &'a MarketParams,
    pub horizon: f64,
}

impl<'a> StrategyQuery<'a> {
    pub fn new(t: f64, regime: usize, alpha: f64, market: &'a MarketParams, horizon: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParam("risk aversion must be positive".into()));
        }
        if !(0.0 <= t && t <= horizon) {
            return Err(Error::InvalidParam("query time must lie in [0, T]".into()));
        }
        if regime >= market.n_regimes() {
            return Err(Error::InvalidParam(format!("regime {regime} out of range")));
        }
        Ok(StrategyQuery { t, regime, alpha, market, horizon })
    }

    /// Discount-adjusted risk aversion `beta = alpha e^{r(T-t)}`.
    fn beta(&self) -> f64 {
        self.alpha * (self.market.riskless_rate() * (self.horizon - self.t)).exp()
    }
}

/// Certified minimizer of `Psi`: the root, a bracket that contains it and the
/// first-order-condition residual at the root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalStrategy {
    pub pi_star: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub residual: f64,
}

/// Evaluate `Psi(Pi)` at a query point. Returns `+inf` when an exponent argument
/// exceeds the overflow clamp (far outside any bracket of interest).
pub fn psi_bar(pi: f64, query: &StrategyQuery) -> f64 {
    let (t, i) = (query.t, query.regime);
    let m = query.market;
    let beta = query.beta();
    let excess = m.mu(t, i) - m.riskless_rate();
    let sigma = m.sigma(t, i);
    let arg1 = -pi * m.k1(t, i) * beta;
    let arg2 = pi * m.k2(t, i) * beta;
    if arg1 > EXP_CLAMP || arg2 > EXP_CLAMP {
        return f64::INFINITY;
    }
    -beta * excess * pi
        + 0.5 * beta * beta * sigma * sigma * pi * pi
        + m.theta1(t) * arg1.exp_m1()
        + m.theta2(t) * arg2.exp_m1()
}

/// First-order condition `f(Pi)` (strictly increasing) and its derivative.
fn foc_and_deriv(pi: f64, query: &StrategyQuery) -> (f64, f64) {
    let (t, i) = (query.t, query.regime);
    let m = query.market;
    let beta = query.beta();
    let excess = m.mu(t, i) - m.riskless_rate();
    let sigma2 = m.sigma(t, i) * m.sigma(t, i);
    let (k1, k2) = (m.k1(t, i), m.k2(t, i));
    let (th1, th2) = (m.theta1(t), m.theta2(t));
    let e1 = (-pi * k1 * beta).clamp(-EXP_CLAMP, EXP_CLAMP).exp();
    let e2 = (pi * k2 * beta).clamp(-EXP_CLAMP, EXP_CLAMP).exp();
    let f = sigma2 * beta * pi - excess - k1 * th1 * e1 + k2 * th2 * e2;
    let df = sigma2 * beta + k1 * k1 * th1 * beta * e1 + k2 * k2 * th2 * beta * e2;
    (f, df)
}

/// Analytic root bracket: `min{0, ln((mu - r)/M2) / (alpha e^{r(T-t)})}` below and
/// `(mu - r + K1bar * M1) / (sigma^2 alpha e^{r(T-t)})` above, with the assumption
/// constants taken from the coefficient tables.
///
/// The printed lower constant can fail to bracket for extreme parameters (its proof
/// bounds the jump term by `Theta_2 K_2` on the negative branch), so the solver
/// verifies the sign change and widens adaptively instead of trusting it blindly.
pub fn strategy_bounds(query: &StrategyQuery) -> (f64, f64) {
    let (t, i) = (query.t, query.regime);
    let m = query.market;
    let beta = query.beta();
    let excess = m.mu(t, i) - m.riskless_rate();
    let sigma2 = m.sigma(t, i) * m.sigma(t, i);
    let b = m.bounds();
    let lower = if b.m2 > 0.0 { (excess / b.m2).ln() / beta } else { f64::INFINITY };
    ((0.0f64).min(lower), (excess + b.k1_bar * b.m1) / (sigma2 * beta))
}

/// Solve the first-order condition for the unique optimal amount `Pi*(t, i)`.
pub fn solve_pi_star(query: &StrategyQuery) -> Result<OptimalStrategy> {
    solve_pi_star_warm(query, None)
}

/// As [`solve_pi_star`], seeding Newton with a caller-supplied guess (used by the
/// backward ODE integrator, where consecutive stage times have nearby roots).
pub fn solve_pi_star_warm(query: &StrategyQuery, warm: Option<f64>) -> Result<OptimalStrategy> {
    let (t, i) = (query.t, query.regime);
    let m = query.market;
    let beta = query.beta();
    let excess = m.mu(t, i) - m.riskless_rate();
    let sigma2 = m.sigma(t, i) * m.sigma(t, i);
    let merton = excess / (sigma2 * beta);

    // Without jump terms the condition is linear and the minimizer closed-form.
    if m.k1(t, i) * m.theta1(t) == 0.0 && m.k2(t, i) * m.theta2(t) == 0.0 {
        let (lo, hi) = strategy_bounds(query);
        return Ok(OptimalStrategy {
            pi_star: merton,
            lower_bound: lo.min(merton),
            upper_bound: hi.max(merton),
            residual: 0.0,
        });
    }

    // Establish a sign-changing bracket starting from the analytic bounds.
    let (mut lo, mut hi) = strategy_bounds(query);
    if !lo.is_finite() {
        lo = 0.0;
    }
    let mut widen = 1.0;
    let mut tries = 0;
    while foc_and_deriv(lo, query).0 > 0.0 {
        lo -= widen;
        widen *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::BracketFailure { detail: format!("no sign change below Pi = {lo}") });
        }
    }
    widen = 1.0;
    tries = 0;
    while foc_and_deriv(hi, query).0 < 0.0 {
        hi += widen;
        widen *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::BracketFailure { detail: format!("no sign change above Pi = {hi}") });
        }
    }
    let (lower_bound, upper_bound) = (lo, hi);

    // Safeguarded Newton: steps outside the bracket fall back to bisection.
    let mut x = warm.unwrap_or(merton).clamp(lo, hi);
    let mut f = 0.0;
    for _ in 0..200 {
        let (fx, dfx) = foc_and_deriv(x, query);
        f = fx;
        let scale = sigma2 * beta * x.abs().max(1.0);
        if fx.abs() <= 1e-14 * scale {
            break;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - fx / dfx;
        x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    Ok(OptimalStrategy { pi_star: x, lower_bound, upper_bound, residual: f })
}

/// Optimal amount and the attained minimum of `Psi` (the quantity the value ODE needs).
pub fn optimal_psi(query: &StrategyQuery, warm: Option<f64>) -> Result<(f64, f64)> {
    let opt = solve_pi_star_warm(query, warm)?;
    Ok((opt.pi_star, psi_bar(opt.pi_star, query)))
}

/// A point of the optimal-strategy trajectory along a regime path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyPoint {
    pub t: f64,
    pub regime: usize,
    pub strategy: OptimalStrategy,
}

/// Evaluate `Pi*(t, X_t)` along a regime path at the given times.
///
/// The trajectory is piecewise smooth with discontinuities exactly at the switch
/// times of the path (pass a grid with those times inserted to surface them).
pub fn strategy_path(
    regime_path: &RegimePath,
    alpha: f64,
    market: &MarketParams,
    horizon: f64,
    times: &[f64],
) -> Result<alloc::vec::Vec<StrategyPoint>> {
    let mut out = alloc::vec::Vec::with_capacity(times.len());
    let mut warm: Option<f64> = None;
    let mut last_regime = usize::MAX;
    for &t in times {
        let regime = regime_path.state_at(t);
        if regime != last_regime {
            warm = None; // the root jumps with the regime
            last_regime = regime;
        }
        let query = StrategyQuery::new(t, regime, alpha, market, horizon)?;
        let strategy = solve_pi_star_warm(&query, warm)?;
        warm = Some(strategy.pi_star);
        out.push(StrategyPoint { t, regime, strategy });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{table1_market, MarketParams};

    fn no_jump_market() -> MarketParams {
        MarketParams::new(
            0.05,
            alloc::vec![0.15.into()],
            alloc::vec![0.15.into()],
            alloc::vec![0.15.into()],
            alloc::vec![0.30.into()],
            0.0.into(),
            0.0.into(),
        )
        .unwrap()
    }

    #[test]
    fn psi_vanishes_at_zero() {
        let m = table1_market();
        for i in 0..2 {
            let q = StrategyQuery::new(0.0, i, 1.0, &m, 10.0).unwrap();
            assert_eq!(psi_bar(0.0, &q), 0.0);
        }
    }

    #[test]
    fn psi_quadratic_vertex_without_jumps() {
        // Theta = 0: Psi at the Merton point equals -(mu - r)^2 / (2 sigma^2).
        let m = no_jump_market();
        let q = StrategyQuery::new(3.0, 0, 2.0, &m, 10.0).unwrap();
        let beta = 2.0 * (0.05f64 * 7.0).exp();
        let vertex = 0.10 / (0.0225 * beta);
        let want = -0.10 * 0.10 / (2.0 * 0.0225);
        assert!((psi_bar(vertex, &q) - want).abs() < 1e-15);
    }

    #[test]
    fn psi_overflow_sentinel() {
        let m = table1_market();
        let q = StrategyQuery::new(0.0, 0, 1.0, &m, 10.0).unwrap();
        assert_eq!(psi_bar(1e6, &q), f64::INFINITY);
        assert_eq!(psi_bar(-1e6, &q), f64::INFINITY);
    }

    #[test]
    fn merton_degeneration_is_exact() {
        let m = no_jump_market();
        for &(t, alpha) in &[(0.0, 0.5), (5.0, 1.0), (9.9, 2.0)] {
            let q = StrategyQuery::new(t, 0, alpha, &m, 10.0).unwrap();
            let opt = solve_pi_star(&q).unwrap();
            let want = 0.10 / (0.0225 * alpha * (0.05 * (10.0 - t)).exp());
            assert!((opt.pi_star - want).abs() <= 1e-12);
            assert_eq!(opt.residual, 0.0);
        }
    }

    #[test]
    fn root_inside_bracket_with_small_residual() {
        let m = table1_market();
        for i in 0..2 {
            for &alpha in &[0.5, 1.0, 2.0] {
                for &t in &[0.0, 5.0, 9.9] {
                    let q = StrategyQuery::new(t, i, alpha, &m, 10.0).unwrap();
                    let opt = solve_pi_star(&q).unwrap();
                    assert!(opt.lower_bound <= opt.pi_star && opt.pi_star <= opt.upper_bound);
                    let beta = alpha * (0.05 * (10.0 - t)).exp();
                    let sigma2 = m.sigma(t, i) * m.sigma(t, i);
                    let scale = sigma2 * beta * opt.pi_star.abs().max(1.0);
                    assert!(opt.residual.abs() <= 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn bad_regime_short_sells() {
        let m = table1_market();
        let q = StrategyQuery::new(0.0, 1, 1.0, &m, 10.0).unwrap();
        let opt = solve_pi_star(&q).unwrap();
        assert!(opt.pi_star < 0.0, "bear-market amount should be negative, got {}", opt.pi_star);
        let good = solve_pi_star(&StrategyQuery::new(0.0, 0, 1.0, &m, 10.0).unwrap()).unwrap();
        assert!(good.pi_star > 0.0);
    }

    #[test]
    fn bounds_boundary_case_log_of_one() {
        // mu - r = M2 makes the logarithm vanish: lower bound min{0, 0} = 0.
        let m = MarketParams::new(
            0.05,
            alloc::vec![0.45.into()],
            alloc::vec![0.15.into()],
            alloc::vec![0.15.into()],
            alloc::vec![0.30.into()],
            0.3.into(),
            0.4.into(),
        )
        .unwrap();
        let q = StrategyQuery::new(0.0, 0, 1.0, &m, 10.0).unwrap();
        let (lo, _) = strategy_bounds(&q);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn bounds_scale_inversely_with_alpha() {
        let m = table1_market();
        let q1 = StrategyQuery::new(0.0, 0, 1.0, &m, 10.0).unwrap();
        let q100 = StrategyQuery::new(0.0, 0, 100.0, &m, 10.0).unwrap();
        let (lo1, hi1) = strategy_bounds(&q1);
        let (lo100, hi100) = strategy_bounds(&q100);
        assert!((lo100 - lo1 / 100.0).abs() < 1e-15);
        assert!((hi100 - hi1 / 100.0).abs() < 1e-15);
    }

    #[test]
    fn good_regime_amount_increases_with_time() {
        // Constant coefficients: Pi*(t) = z* e^{-r(T-t)} / alpha with z* > 0 in the
        // bull regime.
        let m = table1_market();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..20 {
            let t = k as f64 * 0.5;
            let q = StrategyQuery::new(t, 0, 1.0, &m, 10.0).unwrap();
            let pi = solve_pi_star(&q).unwrap().pi_star;
            assert!(pi > prev, "t = {t}");
            prev = pi;
        }
    }

    #[test]
    fn path_discontinuity_only_at_switch() {
        let m = table1_market();
        let path = RegimePath {
            initial_state: 0,
            switch_times: alloc::vec![5.0],
            states: alloc::vec![1],
            horizon: 10.0,
        };
        let times: alloc::vec::Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let traj = strategy_path(&path, 1.0, &m, 10.0, &times).unwrap();
        let mut jumps = 0;
        for w in traj.windows(2) {
            let gap = (w[1].strategy.pi_star - w[0].strategy.pi_star).abs();
            if gap > 0.05 {
                jumps += 1;
                assert_eq!(w[1].t, 5.0);
            }
        }
        assert_eq!(jumps, 1);
        // Constant regime: smooth trajectory.
        let flat = strategy_path(&RegimePath::constant(0, 10.0), 1.0, &m, 10.0, &times).unwrap();
        for w in flat.windows(2) {
            assert!((w[1].strategy.pi_star - w[0].strategy.pi_star).abs() < 0.05);
        }
    }

    #[test]
    fn warm_start_matches_cold_start() {
        let m = table1_market();
        let q = StrategyQuery::new(2.5, 1, 1.3, &m, 10.0).unwrap();
        let cold = solve_pi_star(&q).unwrap().pi_star;
        let warm = solve_pi_star_warm(&q, Some(cold + 0.01)).unwrap().pi_star;
        assert!((cold - warm).abs() < 1e-12);
    }
}
