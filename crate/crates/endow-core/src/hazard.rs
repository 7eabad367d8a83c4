//! Stochastic force of mortality and survival probabilities.
//!
//! The hazard rate solves `d lambda = b(t,lambda) lambda dt + c(t,lambda) lambda dZ`,
//! strictly positive by construction: paths are integrated in log space,
//!
//! ```text
//! d ln lambda = (b - c^2/2) dt + c dZ.
//! ```
//!
//! The mean-reverting Brownian Gompertz instance `lambda_t = lambda_0 exp(c1 t + c2 Y_t)`
//! with `dY = -m Y dt + dZ` corresponds to the general form with
//! `b = c1 + m ln(lambda_0) + c2^2/2 - m ln(lambda) + m c1 t` and `c = c2`; it is
//! simulated exactly through the Gaussian transition of the Ornstein-Uhlenbeck factor.
//!
//! Survival to `T` from state `(t, lambda)` is `E[exp(-int_t^T lambda_v dv)]`,
//! estimated by Monte Carlo with a trapezoidal integral along each path.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::FloatMath as _;
use crate::rng::{Channel, RngSpec};
use crate::stats;

type Coeff = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Mean-reverting Brownian Gompertz parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GompertzParams {
    /// Exponential growth rate of the hazard.
    pub c1: f64,
    /// Diffusion loading on the mean-reverting factor.
    pub c2: f64,
    /// Mean-reversion speed of the factor.
    pub m: f64,
    /// Initial hazard (per year).
    pub lambda0: f64,
}

impl GompertzParams {
    pub fn new(c1: f64, c2: f64, m: f64, lambda0: f64) -> Result<Self> {
        if !(lambda0 > 0.0) {
            return Err(Error::InvalidParam("initial hazard must be positive".into()));
        }
        if !(m >= 0.0) || !(c2 >= 0.0) || !c1.is_finite() {
            return Err(Error::InvalidParam(
                "Gompertz parameters need m >= 0, c2 >= 0 and finite c1".into(),
            ));
        }
        Ok(GompertzParams { c1, c2, m, lambda0 })
    }

    /// Parameters of the two-regime experiment.
    pub fn section6() -> Self {
        GompertzParams { c1: 0.083, c2: 0.1, m: 0.5, lambda0: 0.01 }
    }

    /// Variance of the factor increment over `dt` (exact OU transition).
    fn ou_variance(&self, dt: f64) -> f64 {
        if self.m == 0.0 {
            dt
        } else {
            (1.0 - (-2.0 * self.m * dt).exp()) / (2.0 * self.m)
        }
    }
}

/// Hazard-rate model: drift and volatility of the mortality diffusion.
pub enum HazardModel {
    /// Generic coefficient functions `b(t, lambda)` and `c(t, lambda)`.
    General { drift: Coeff, vol: Coeff, lambda0: f64 },
    /// Brownian Gompertz model, simulated exactly through its OU factor.
    Gompertz(GompertzParams),
    /// Constant hazard (`b = c = 0`).
    Constant { lambda0: f64 },
}

impl fmt::Debug for HazardModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HazardModel::General { lambda0, .. } => {
                f.debug_struct("General").field("lambda0", lambda0).finish_non_exhaustive()
            }
            HazardModel::Gompertz(p) => f.debug_tuple("Gompertz").field(p).finish(),
            HazardModel::Constant { lambda0 } => {
                f.debug_struct("Constant").field("lambda0", lambda0).finish()
            }
        }
    }
}

impl HazardModel {
    pub fn constant(lambda0: f64) -> Result<Self> {
        if !(lambda0 > 0.0) {
            return Err(Error::InvalidParam("initial hazard must be positive".into()));
        }
        Ok(HazardModel::Constant { lambda0 })
    }

    pub fn general(drift: Coeff, vol: Coeff, lambda0: f64) -> Result<Self> {
        if !(lambda0 > 0.0) {
            return Err(Error::InvalidParam("initial hazard must be positive".into()));
        }
        Ok(HazardModel::General { drift, vol, lambda0 })
    }

    pub fn lambda0(&self) -> f64 {
        match self {
            HazardModel::General { lambda0, .. } => *lambda0,
            HazardModel::Gompertz(p) => p.lambda0,
            HazardModel::Constant { lambda0 } => *lambda0,
        }
    }

    /// Drift coefficient `b(t, lambda)` of the proportional form.
    pub fn drift_b(&self, t: f64, lambda: f64) -> f64 {
        match self {
            HazardModel::General { drift, .. } => drift(t, lambda),
            HazardModel::Gompertz(p) => {
                p.c1 + p.m * p.lambda0.ln() + 0.5 * p.c2 * p.c2 - p.m * lambda.ln()
                    + p.m * p.c1 * t
            }
            HazardModel::Constant { .. } => 0.0,
        }
    }

    /// Volatility coefficient `c(t, lambda)` of the proportional form.
    pub fn vol_c(&self, t: f64, lambda: f64) -> f64 {
        match self {
            HazardModel::General { vol, .. } => vol(t, lambda),
            HazardModel::Gompertz(p) => {
                let _ = (t, lambda);
                p.c2
            }
            HazardModel::Constant { .. } => 0.0,
        }
    }
}

/// Express the Gompertz model through its general coefficient functions.
///
/// The result simulates with the log-Euler scheme instead of the exact factor
/// transition; the two laws agree as the grid refines, which the equivalence tests
/// exercise.
pub fn gompertz_as_general(params: GompertzParams) -> HazardModel {
    HazardModel::General {
        drift: Box::new(move |t, lambda| {
            params.c1 + params.m * params.lambda0.ln() + 0.5 * params.c2 * params.c2
                - params.m * lambda.ln()
                + params.m * params.c1 * t
        }),
        vol: Box::new(move |_, _| params.c2),
        lambda0: params.lambda0,
    }
}

/// Simulate one hazard path on the grid `times`, starting from `(times[0], lambda_start)`.
///
/// Returns one value per grid node; paths are strictly positive for every seed.
pub fn simulate_hazard_from(
    model: &HazardModel,
    times: &[f64],
    lambda_start: f64,
    rng: &mut ChaCha12Rng,
) -> Vec<f64> {
    debug_assert!(!times.is_empty() && lambda_start > 0.0);
    let mut out = Vec::with_capacity(times.len());
    out.push(lambda_start);
    match model {
        HazardModel::Constant { .. } => {
            for _ in 1..times.len() {
                out.push(lambda_start);
            }
        }
        HazardModel::Gompertz(p) => {
            // Evolve u = ln(lambda) - ln(lambda0) - c1 t exactly: du = -m u dt + c2 dZ.
            let base = p.lambda0.ln();
            let mut u = lambda_start.ln() - base - p.c1 * times[0];
            for k in 1..times.len() {
                let dt = times[k] - times[k - 1];
                let z: f64 = StandardNormal.sample(rng);
                u = u * (-p.m * dt).exp() + p.c2 * p.ou_variance(dt).sqrt() * z;
                out.push((base + p.c1 * times[k] + u).exp());
            }
        }
        HazardModel::General { .. } => {
            let mut x = lambda_start.ln();
            for k in 1..times.len() {
                let t = times[k - 1];
                let dt = times[k] - times[k - 1];
                let lambda = out[k - 1];
                let c = model.vol_c(t, lambda);
                let z: f64 = StandardNormal.sample(rng);
                x += (model.drift_b(t, lambda) - 0.5 * c * c) * dt + c * dt.sqrt() * z;
                out.push(x.exp());
            }
        }
    }
    out
}

/// Simulate a hazard path from the model's own initial value at `times[0]`.
pub fn simulate_hazard(model: &HazardModel, times: &[f64], rng: &mut ChaCha12Rng) -> Vec<f64> {
    simulate_hazard_from(model, times, model.lambda0(), rng)
}

/// Trapezoidal integral of a path tabulated on `times`.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 1..times.len() {
        acc += 0.5 * (values[k] + values[k - 1]) * (times[k] - times[k - 1]);
    }
    acc
}

/// Draw `exp(-int_t^T lambda_v dv)` for one path started at `(t, lambda)`.
pub fn survival_sample(
    model: &HazardModel,
    t: f64,
    lambda: f64,
    horizon: f64,
    n_steps: usize,
    rng: &mut ChaCha12Rng,
) -> f64 {
    if horizon <= t {
        return 1.0;
    }
    let n = n_steps.max(1);
    let dt = (horizon - t) / n as f64;
    let times: Vec<f64> = (0..=n).map(|k| t + k as f64 * dt).collect();
    let path = simulate_hazard_from(model, &times, lambda, rng);
    (-trapezoid(&times, &path)).exp()
}

/// Monte-Carlo survival probability estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

/// Estimate `P(alive at T | alive at t, lambda_t = lambda)` with `n_paths` paths of
/// `n_steps` steps, using the hazard channel of `spec` (one stream per path).
pub fn survival_probability(
    model: &HazardModel,
    t: f64,
    lambda: f64,
    horizon: f64,
    n_steps: usize,
    n_paths: usize,
    spec: &RngSpec,
) -> Result<SurvivalEstimate> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParam("hazard state must be positive".into()));
    }
    if !(0.0 <= t && t <= horizon) {
        return Err(Error::InvalidParam("need 0 <= t <= T for survival estimates".into()));
    }
    if horizon == t {
        return Ok(SurvivalEstimate { value: 1.0, std_error: 0.0, n_paths });
    }
    if n_paths == 0 {
        return Err(Error::InvalidParam("survival estimate needs at least one path".into()));
    }
    let values: Vec<f64> = (0..n_paths as u64)
        .map(|p| {
            let mut rng = spec.stream(p, Channel::Hazard);
            survival_sample(model, t, lambda, horizon, n_steps, &mut rng)
        })
        .collect();
    let est = stats::mean_and_se(&values);
    Ok(SurvivalEstimate { value: est.mean, std_error: est.std_error, n_paths })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_model_constant_path() {
        let model = HazardModel::constant(0.02).unwrap();
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let mut rng = RngSpec::new(1).stream(0, Channel::Hazard);
        let path = simulate_hazard(&model, &times, &mut rng);
        assert!(path.iter().all(|&l| l == 0.02));
    }

    #[test]
    fn deterministic_gompertz_closed_form() {
        // c2 = 0, m = 0: lambda_t = lambda_0 exp(c1 t).
        let p = GompertzParams::new(0.083, 0.0, 0.0, 0.01).unwrap();
        let model = HazardModel::Gompertz(p);
        let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
        let mut rng = RngSpec::new(2).stream(0, Channel::Hazard);
        let path = simulate_hazard(&model, &times, &mut rng);
        let want = 0.01 * (0.83f64).exp();
        assert!((path.last().unwrap() - want).abs() < 1e-12, "got {}", path.last().unwrap());
        // The general-form scheme integrates the same ODE up to O(dt).
        let general = gompertz_as_general(p);
        let mut rng = RngSpec::new(2).stream(0, Channel::Hazard);
        let path = simulate_hazard(&general, &times, &mut rng);
        assert!((path.last().unwrap() - want).abs() < 1e-6);
    }

    #[test]
    fn paths_stay_positive() {
        let model = HazardModel::Gompertz(GompertzParams::section6());
        let times: Vec<f64> = (0..=500).map(|k| k as f64 * 0.02).collect();
        let spec = RngSpec::new(77);
        for p in 0..100 {
            let mut rng = spec.stream(p, Channel::Hazard);
            let path = simulate_hazard(&model, &times, &mut rng);
            assert!(path.iter().all(|&l| l > 0.0));
        }
    }

    #[test]
    fn survival_at_maturity_is_one() {
        let model = HazardModel::Gompertz(GompertzParams::section6());
        let est = survival_probability(&model, 10.0, 0.01, 10.0, 100, 10, &RngSpec::new(1)).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn constant_hazard_survival_closed_form() {
        // lambda = 0.02 over 10 years: survival exp(-0.2), zero variance.
        let model = HazardModel::constant(0.02).unwrap();
        let est = survival_probability(&model, 0.0, 0.02, 10.0, 1000, 64, &RngSpec::new(3)).unwrap();
        assert!((est.value - (-0.2f64).exp()).abs() < 1e-13);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn survival_monotone_in_initial_hazard() {
        // Common random numbers: identical factor noise, so the comparison is pathwise.
        let spec = RngSpec::new(5);
        let mut prev = f64::INFINITY;
        for &l0 in &[0.005, 0.01, 0.02, 0.05, 0.1] {
            let p = GompertzParams::new(0.083, 0.1, 0.5, l0).unwrap();
            let est =
                survival_probability(&HazardModel::Gompertz(p), 0.0, l0, 10.0, 200, 400, &spec)
                    .unwrap();
            assert!(est.value < prev, "survival must fall as lambda0 rises");
            prev = est.value;
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GompertzParams::new(0.08, 0.1, -0.1, 0.01).is_err());
        assert!(GompertzParams::new(0.08, 0.1, 0.5, 0.0).is_err());
        assert!(HazardModel::constant(-0.01).is_err());
        assert!(survival_probability(
            &HazardModel::constant(0.02).unwrap(),
            5.0,
            0.02,
            4.0,
            10,
            10,
            &RngSpec::new(1)
        )
        .is_err());
    }
}
