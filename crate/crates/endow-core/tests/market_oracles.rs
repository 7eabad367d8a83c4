//! Stock and wealth simulation against moment oracles.

mod common;

use endow_core::grid::TimeGrid;
use endow_core::market::{
    simulate_stock, simulate_wealth, table1_market, JumpScheme, MarketParams,
};
use endow_core::regime::{sample_regime_path, GeneratorMatrix, RegimePath};
use endow_core::rng::{Channel, RngSpec};
use endow_core::strategy::{solve_pi_star, StrategyQuery};

fn good_regime_market() -> MarketParams {
    MarketParams::new(
        0.05,
        vec![0.15.into()],
        vec![0.15.into()],
        vec![0.15.into()],
        vec![0.30.into()],
        0.3.into(),
        0.4.into(),
    )
    .unwrap()
}

/// The mean of `S_T` solves `dE[S]/dt = (mu + K1 Th1 - K2 Th2) E[S]` (semimartingale
/// drift with compensated jumps), so `E[S_T] = exp((mu + K1 Th1 - K2 Th2) T)`.
#[test]
fn stock_mean_matches_compensated_drift_oracle() {
    let params = good_regime_market();
    let spec = RngSpec::new(11);
    let horizon = 10.0;
    let grid = TimeGrid::uniform(horizon, 250).unwrap();
    let regime = RegimePath::constant(0, horizon);
    let terminal: Vec<f64> = (0..100_000u64)
        .map(|p| {
            simulate_stock(
                &params,
                &regime,
                1.0,
                &grid,
                &mut spec.stream(p, Channel::StockDiffusion),
                &mut spec.stream(p, Channel::JumpUp),
                &mut spec.stream(p, Channel::JumpDown),
                JumpScheme::Poisson,
            )
            .unwrap()
            .terminal()
        })
        .collect();
    let (mean, se) = common::mean_se(&terminal);
    let want = ((0.15 + 0.15 * 0.3 - 0.3 * 0.4) * horizon).exp();
    assert!((mean - want).abs() < 4.0 * se, "mean {mean} vs {want} (se {se})");
}

/// With `mu = r - K1 Th1 + K2 Th2` in every regime the discounted stock is a
/// martingale: `e^{-rT} E[S_T] = S_0`, chain switching included.
#[test]
fn discounted_stock_martingale_under_compensating_drift() {
    let r = 0.05;
    let mu_good = r - 0.15 * 0.3 + 0.30 * 0.4; // 0.125
    let mu_bad = r - 0.10 * 0.3 + 0.35 * 0.4; // 0.16
    let params = MarketParams::new(
        r,
        vec![mu_good.into(), mu_bad.into()],
        vec![0.15.into(), 0.25.into()],
        vec![0.15.into(), 0.10.into()],
        vec![0.30.into(), 0.35.into()],
        0.3.into(),
        0.4.into(),
    )
    .unwrap();
    let gen = GeneratorMatrix::new(vec![vec![-0.2, 0.2], vec![0.1, -0.1]]).unwrap();
    let spec = RngSpec::new(23);
    let horizon = 10.0;
    let base = TimeGrid::uniform(horizon, 200).unwrap();
    let discounted: Vec<f64> = (0..60_000u64)
        .map(|p| {
            let mut chain_rng = spec.stream(p, Channel::Chain);
            let regime = sample_regime_path(&gen, 0, horizon, &mut chain_rng).unwrap();
            let grid = base.with_inserted(&regime.switch_times);
            let s = simulate_stock(
                &params,
                &regime,
                1.0,
                &grid,
                &mut spec.stream(p, Channel::StockDiffusion),
                &mut spec.stream(p, Channel::JumpUp),
                &mut spec.stream(p, Channel::JumpDown),
                JumpScheme::Poisson,
            )
            .unwrap();
            (-r * horizon).exp() * s.terminal()
        })
        .collect();
    let (mean, se) = common::mean_se(&discounted);
    assert!((mean - 1.0).abs() < 4.0 * se, "discounted mean {mean} (se {se})");
}

/// Expected utility under the optimal amount dominates the zero strategy (which is
/// deterministic, so the comparison needs only the optimal side's error bar).
#[test]
fn optimal_strategy_beats_zero_investment_in_utility() {
    let params = table1_market();
    let gen = GeneratorMatrix::new(vec![vec![-0.2, 0.2], vec![0.1, -0.1]]).unwrap();
    let spec = RngSpec::new(37);
    let horizon = 10.0;
    let alpha = 1.0;
    let w0 = 1.0;
    // Constant coefficients: Pi*(t, i) = z_i e^{-r(T-t)} / alpha with z_i = alpha Pi*(T, i).
    let z: Vec<f64> = (0..2)
        .map(|i| {
            let q = StrategyQuery::new(horizon, i, alpha, &params, horizon).unwrap();
            alpha * solve_pi_star(&q).unwrap().pi_star
        })
        .collect();
    let r = params.riskless_rate();
    let strategy =
        move |t: f64, i: usize| z[i] * (-r * (horizon - t)).exp() / alpha;

    let base = TimeGrid::uniform(horizon, 400).unwrap();
    let utilities: Vec<f64> = (0..40_000u64)
        .map(|p| {
            let mut chain_rng = spec.stream(p, Channel::Chain);
            let regime = sample_regime_path(&gen, 0, horizon, &mut chain_rng).unwrap();
            let grid = base.with_inserted(&regime.switch_times);
            let stock = simulate_stock(
                &params,
                &regime,
                1.0,
                &grid,
                &mut spec.stream(p, Channel::StockDiffusion),
                &mut spec.stream(p, Channel::JumpUp),
                &mut spec.stream(p, Channel::JumpDown),
                JumpScheme::Poisson,
            )
            .unwrap();
            let wealth = simulate_wealth(&params, &stock, &strategy, w0).unwrap();
            -(-alpha * wealth.terminal()).exp()
        })
        .collect();
    let (mean, se) = common::mean_se(&utilities);
    let zero_strategy_utility = -(-alpha * w0 * (r * horizon).exp()).exp();
    assert!(
        mean > zero_strategy_utility - 4.0 * se,
        "optimal utility {mean} (se {se}) vs riskless {zero_strategy_utility}"
    );
    // The gain should be clearly positive, not a statistical tie.
    assert!(
        mean - zero_strategy_utility > 4.0 * se,
        "expected a strict improvement: {mean} vs {zero_strategy_utility} (se {se})"
    );
}
