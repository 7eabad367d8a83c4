//! Regime-modulated jump-diffusion market and wealth dynamics.
//!
//! The stock follows
//!
//! ```text
//! dS = S_{t-} { mu(t,i) dt + sigma(t,i) dZ^S + K1(t,i) dN^1 - K2(t,i) dN^2 }
//! ```
//!
//! with `i` the current regime and `N^1, N^2` Poisson with intensities
//! `Theta_1(t), Theta_2(t)`. Since `K2 < 1`, `S_t = S_0 exp(L_t)` with the log-return
//!
//! ```text
//! dL = (mu - sigma^2/2) dt + sigma dZ^S + ln(1 + K1) dN^1 + ln(1 - K2) dN^2,
//! ```
//!
//! which the simulator integrates exactly over each step (regimes are constant within
//! a step because switch times are inserted into the grid). Wealth under a strategy
//! `Pi` invested in the stock earns `r` on the remainder:
//!
//! ```text
//! dW = (rW + Pi (mu - r)) dt + Pi sigma dZ^S + Pi (K1 dN^1 - K2 dN^2).
//! ```

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
#[allow(unused_imports)]
use crate::math::FloatMath as _;
use crate::quad;
use crate::regime::RegimePath;

/// Coefficient that is constant or piecewise constant in time.
///
/// `values[k]` applies on `[breakpoints[k-1], breakpoints[k])` with implicit outer
/// breakpoints at 0 and the horizon.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    PiecewiseConstant { breakpoints: Vec<f64>, values: Vec<f64> },
}

impl Coefficient {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::PiecewiseConstant { breakpoints, values } => {
                let k = breakpoints.partition_point(|&b| b <= t);
                values[k]
            }
        }
    }

    /// Exact bounds over all of time (piecewise-constant coefficients attain them).
    pub fn min_value(&self) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::PiecewiseConstant { values, .. } => {
                values.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::PiecewiseConstant { values, .. } => {
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    fn validate_shape(&self, name: &str) -> Result<()> {
        if let Coefficient::PiecewiseConstant { breakpoints, values } = self {
            if values.len() != breakpoints.len() + 1 {
                return Err(Error::InvalidParam(alloc::format!(
                    "{name}: piecewise table needs len(values) = len(breakpoints) + 1"
                )));
            }
            if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParam(alloc::format!(
                    "{name}: breakpoints must be strictly increasing"
                )));
            }
        }
        if !self.min_value().is_finite() || !self.max_value().is_finite() {
            return Err(Error::InvalidParam(alloc::format!("{name}: values must be finite")));
        }
        Ok(())
    }
}

impl From<f64> for Coefficient {
    fn from(v: f64) -> Self {
        Coefficient::Constant(v)
    }
}

/// Bounds backing the standing assumptions, computed from the coefficient tables:
/// `Theta_1 <= m1`, `Theta_2 <= m2`, `K1 <= k1_bar` and `(mu - r)/sigma <= sharpe`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionBounds {
    pub m1: f64,
    pub m2: f64,
    pub k1_bar: f64,
    pub sharpe: f64,
}

/// Validated market description: riskless rate, per-regime stock coefficients and
/// jump intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams {
    riskless_rate: f64,
    mu: Vec<Coefficient>,
    sigma: Vec<Coefficient>,
    k1: Vec<Coefficient>,
    k2: Vec<Coefficient>,
    theta1: Coefficient,
    theta2: Coefficient,
    bounds: AssumptionBounds,
}

impl MarketParams {
    /// Validate per-regime coefficients. All vectors must share the regime count;
    /// `mu > r`, `sigma > 0`, `K1 > 0` and `0 < K2 < 1` segment by segment.
    pub fn new(
        riskless_rate: f64,
        mu: Vec<Coefficient>,
        sigma: Vec<Coefficient>,
        k1: Vec<Coefficient>,
        k2: Vec<Coefficient>,
        theta1: Coefficient,
        theta2: Coefficient,
    ) -> Result<Self> {
        let m = mu.len();
        if m == 0 {
            return Err(Error::InvalidParam("market needs at least one regime".into()));
        }
        if sigma.len() != m || k1.len() != m || k2.len() != m {
            return Err(Error::InvalidParam("per-regime coefficient lists differ in length".into()));
        }
        if !riskless_rate.is_finite() || riskless_rate < 0.0 {
            return Err(Error::InvalidParam("riskless rate must be finite and nonnegative".into()));
        }
        let check = |c: &Coefficient, name: String, lo: f64, hi: f64| -> Result<()> {
            c.validate_shape(&name)?;
            if c.min_value() <= lo || c.max_value() >= hi {
                return Err(Error::InvalidParam(alloc::format!(
                    "{name} must lie in ({lo}, {hi}); got [{}, {}]",
                    c.min_value(),
                    c.max_value()
                )));
            }
            Ok(())
        };
        let mut sharpe = 0.0f64;
        for i in 0..m {
            check(&mu[i], alloc::format!("mu regime {i}"), riskless_rate, f64::INFINITY)?;
            check(&sigma[i], alloc::format!("sigma regime {i}"), 0.0, f64::INFINITY)?;
            check(&k1[i], alloc::format!("K1 regime {i}"), 0.0, f64::INFINITY)?;
            check(&k2[i], alloc::format!("K2 regime {i}"), 0.0, 1.0)?;
            // Piecewise-constant tables attain their extremes, so the ratio bound
            // over segment values dominates the true supremum.
            sharpe = sharpe.max((mu[i].max_value() - riskless_rate) / sigma[i].min_value());
        }
        theta1.validate_shape("Theta_1")?;
        theta2.validate_shape("Theta_2")?;
        if theta1.min_value() < 0.0 || theta2.min_value() < 0.0 {
            return Err(Error::InvalidParam("jump intensities must be nonnegative".into()));
        }
        let bounds = AssumptionBounds {
            m1: theta1.max_value(),
            m2: theta2.max_value(),
            k1_bar: k1.iter().map(|c| c.max_value()).fold(0.0, f64::max),
            sharpe,
        };
        Ok(MarketParams { riskless_rate, mu, sigma, k1, k2, theta1, theta2, bounds })
    }

    pub fn n_regimes(&self) -> usize {
        self.mu.len()
    }

    pub fn riskless_rate(&self) -> f64 {
        self.riskless_rate
    }

    pub fn mu(&self, t: f64, regime: usize) -> f64 {
        self.mu[regime].at(t)
    }

    pub fn sigma(&self, t: f64, regime: usize) -> f64 {
        self.sigma[regime].at(t)
    }

    pub fn k1(&self, t: f64, regime: usize) -> f64 {
        self.k1[regime].at(t)
    }

    pub fn k2(&self, t: f64, regime: usize) -> f64 {
        self.k2[regime].at(t)
    }

    pub fn theta1(&self, t: f64) -> f64 {
        self.theta1.at(t)
    }

    pub fn theta2(&self, t: f64) -> f64 {
        self.theta2.at(t)
    }

    pub fn bounds(&self) -> AssumptionBounds {
        self.bounds
    }
}

/// How jump counts are drawn within a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JumpScheme {
    /// Exact Poisson counts per step; unbiased on any grid.
    #[default]
    Poisson,
    /// At most one jump per step with probability `theta * dt`; errors when
    /// `theta * dt > 1`.
    Bernoulli,
}

/// One simulated stock trajectory together with the per-step noise that produced it,
/// so wealth can be driven by the same increments (common random numbers).
#[derive(Debug, Clone, PartialEq)]
pub struct StockPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Brownian increments `dZ^S` per step.
    pub dz: Vec<f64>,
    /// Per-step counts of upward (N^1) and downward (N^2) jumps.
    pub jumps_up: Vec<u32>,
    pub jumps_down: Vec<u32>,
    /// Regime in force on each step (left endpoint).
    pub regimes: Vec<usize>,
}

impl StockPath {
    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Simulate the stock on `grid` given a regime trajectory.
///
/// The caller is expected to have inserted the regime switch times into `grid` so no
/// step straddles a switch; the regime at the left endpoint then rules the whole step.
pub fn simulate_stock(
    params: &MarketParams,
    regime_path: &RegimePath,
    s0: f64,
    grid: &TimeGrid,
    rng_diffusion: &mut ChaCha12Rng,
    rng_jump_up: &mut ChaCha12Rng,
    rng_jump_down: &mut ChaCha12Rng,
    scheme: JumpScheme,
) -> Result<StockPath> {
    if !(s0 > 0.0) {
        return Err(Error::InvalidParam("initial stock price must be positive".into()));
    }
    let n = grid.n_steps();
    let mut values = Vec::with_capacity(n + 1);
    let mut dz = Vec::with_capacity(n);
    let mut jumps_up = Vec::with_capacity(n);
    let mut jumps_down = Vec::with_capacity(n);
    let mut regimes = Vec::with_capacity(n);
    let mut log_s = s0.ln();
    values.push(s0);
    for k in 0..n {
        let t = grid.times[k];
        let dt = grid.times[k + 1] - t;
        let i = regime_path.state_at(t);
        let (mu, sigma) = (params.mu(t, i), params.sigma(t, i));
        let (k1, k2) = (params.k1(t, i), params.k2(t, i));
        let z: f64 = StandardNormal.sample(rng_diffusion);
        let dw = z * dt.sqrt();
        let n1 = draw_jumps(params.theta1(t) * dt, rng_jump_up, scheme)?;
        let n2 = draw_jumps(params.theta2(t) * dt, rng_jump_down, scheme)?;
        log_s += (mu - 0.5 * sigma * sigma) * dt
            + sigma * dw
            + n1 as f64 * k1.ln_1p()
            + n2 as f64 * (-k2).ln_1p();
        values.push(log_s.exp());
        dz.push(dw);
        jumps_up.push(n1);
        jumps_down.push(n2);
        regimes.push(i);
    }
    Ok(StockPath { times: grid.times.clone(), values, dz, jumps_up, jumps_down, regimes })
}

fn draw_jumps(mean: f64, rng: &mut ChaCha12Rng, scheme: JumpScheme) -> Result<u32> {
    if mean == 0.0 {
        return Ok(0);
    }
    match scheme {
        JumpScheme::Poisson => {
            let p = Poisson::new(mean)
                .map_err(|_| Error::InvalidParam("jump intensity must be positive".into()))?;
            Ok(p.sample(rng) as u32)
        }
        JumpScheme::Bernoulli => {
            if mean > 1.0 {
                return Err(Error::StepTooCoarse { theta_dt: mean });
            }
            Ok(u32::from(rng.gen::<f64>() < mean))
        }
    }
}

/// One wealth trajectory under a strategy, driven by a stock path's increments.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Amount invested in the stock on each step.
    pub strategy_values: Vec<f64>,
}

impl WealthPath {
    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

/// Integrate the wealth equation with the increments recorded in `stock_path`.
///
/// The riskless part is integrated exactly; per step
///
/// ```text
/// W_{k+1} = e^{r dt} W_k + Pi_k [ (mu - r) dt + sigma dZ + K1 dN^1 - K2 dN^2 ],
/// ```
///
/// so `Pi = 0` reproduces `W_T = W_0 e^{rT}` to machine precision and the map
/// `W_0 -> W_T` is affine with slope `e^{rT}` path by path.
pub fn simulate_wealth(
    params: &MarketParams,
    stock_path: &StockPath,
    strategy: impl Fn(f64, usize) -> f64,
    w0: f64,
) -> Result<WealthPath> {
    let n = stock_path.times.len() - 1;
    let mut values = Vec::with_capacity(n + 1);
    let mut strategy_values = Vec::with_capacity(n);
    let r = params.riskless_rate();
    let mut w = w0;
    values.push(w);
    for k in 0..n {
        let t = stock_path.times[k];
        let dt = stock_path.times[k + 1] - t;
        let i = stock_path.regimes[k];
        let pi = strategy(t, i);
        if !pi.is_finite() {
            return Err(Error::InvalidParam("strategy value must be finite on the grid".into()));
        }
        let excess = (params.mu(t, i) - r) * dt
            + params.sigma(t, i) * stock_path.dz[k]
            + params.k1(t, i) * stock_path.jumps_up[k] as f64
            - params.k2(t, i) * stock_path.jumps_down[k] as f64;
        w = (r * dt).exp() * w + pi * excess;
        values.push(w);
        strategy_values.push(pi);
    }
    Ok(WealthPath { times: stock_path.times.clone(), values, strategy_values })
}

/// Admissibility report for a candidate strategy bound `eta(t, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// `int_0^T eta (mu - r + eta sigma^2) dt` per regime.
    pub integrals: Vec<f64>,
    pub admissible: bool,
}

/// Check the integrability condition that makes every strategy dominated by `eta`
/// admissible: the integral must be finite for every regime (it always is for
/// bounded inputs; the value is reported).
pub fn check_admissibility_bound(
    params: &MarketParams,
    eta: impl Fn(f64, usize) -> f64,
    horizon: f64,
) -> AdmissibilityReport {
    let r = params.riskless_rate();
    let integrals: Vec<f64> = (0..params.n_regimes())
        .map(|i| {
            quad::integrate(
                |t| {
                    let e = eta(t, i);
                    let sigma = params.sigma(t, i);
                    e * ((params.mu(t, i) - r) + e * sigma * sigma)
                },
                0.0,
                horizon,
                1e-10,
            )
        })
        .collect();
    let admissible = integrals.iter().all(|v| v.is_finite());
    AdmissibilityReport { integrals, admissible }
}

/// Table-1 market of the two-regime experiment: regime 0 is the 'Good' (bull) state,
/// regime 1 the 'Bad' (bear) state.
pub fn table1_market() -> MarketParams {
    MarketParams::new(
        0.05,
        alloc::vec![0.15.into(), 0.12.into()],
        alloc::vec![0.15.into(), 0.25.into()],
        alloc::vec![0.15.into(), 0.10.into()],
        alloc::vec![0.30.into(), 0.35.into()],
        0.3.into(),
        0.4.into(),
    )
    .expect("reference parameters are valid")
}
