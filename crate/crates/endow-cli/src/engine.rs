//! Joint scenario generation on a shared time grid with reproducible streams.
//!
//! Each path owns five channels derived from `(master seed, path index, channel)`:
//! regime-chain clocks, stock diffusion, both jump counters, and the hazard factor.
//! The hazard channel being disjoint from the market channels mirrors the
//! independence of the insurance and financial filtrations. Paths are generated in
//! parallel and collected by index; summaries reduce with a fixed-shape compensated
//! sum, so results are bit-identical for any worker count.

use endow_core::grid::TimeGrid;
use endow_core::hazard::{simulate_hazard, HazardModel};
use endow_core::market::{simulate_stock, simulate_wealth, JumpScheme, MarketParams, StockPath, WealthPath};
use endow_core::regime::{sample_regime_path, GeneratorMatrix, RegimePath};
use endow_core::rng::{Channel, RngSpec};
use endow_core::stats::{self, McEstimate};
use endow_core::Result;
use rayon::prelude::*;

/// Everything needed to generate one path.
pub struct ScenarioInputs<'a> {
    pub market: &'a MarketParams,
    pub generator: &'a GeneratorMatrix,
    pub hazard: &'a HazardModel,
    pub initial_regime: usize,
    pub s0: f64,
    pub w0: f64,
    /// Amount invested in the stock, `(t, regime) -> currency`; `None` skips wealth.
    pub strategy: Option<&'a (dyn Fn(f64, usize) -> f64 + Sync)>,
    pub base_grid: &'a TimeGrid,
    pub rng: RngSpec,
}

/// One joint realization: regimes, stock, hazard and optionally wealth share the
/// per-path grid (base grid plus this path's switch times).
#[derive(Debug, Clone)]
pub struct Scenario {
    pub path_index: u64,
    pub regime: RegimePath,
    pub grid: TimeGrid,
    pub stock: StockPath,
    pub hazard: Vec<f64>,
    pub wealth: Option<WealthPath>,
}

/// Generate the scenario for one path index (pure given the spec).
pub fn generate_scenario(inputs: &ScenarioInputs, path_index: u64) -> Result<Scenario> {
    let spec = inputs.rng;
    let mut chain_rng = spec.stream(path_index, Channel::Chain);
    let regime = sample_regime_path(
        inputs.generator,
        inputs.initial_regime,
        inputs.base_grid.horizon,
        &mut chain_rng,
    )?;
    let grid = inputs.base_grid.with_inserted(&regime.switch_times);
    let stock = simulate_stock(
        inputs.market,
        &regime,
        inputs.s0,
        &grid,
        &mut spec.stream(path_index, Channel::StockDiffusion),
        &mut spec.stream(path_index, Channel::JumpUp),
        &mut spec.stream(path_index, Channel::JumpDown),
        JumpScheme::Poisson,
    )?;
    let mut hazard_rng = spec.stream(path_index, Channel::Hazard);
    let hazard = simulate_hazard(inputs.hazard, &grid.times, &mut hazard_rng);
    let wealth = match inputs.strategy {
        Some(strategy) => Some(simulate_wealth(inputs.market, &stock, strategy, inputs.w0)?),
        None => None,
    };
    Ok(Scenario { path_index, regime, grid, stock, hazard, wealth })
}

/// A batch of scenarios with their generating spec.
#[derive(Debug)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
    pub rng: RngSpec,
}

/// Generate `n_paths` scenarios in parallel (ordered by path index).
pub fn run_scenarios(inputs: &ScenarioInputs, n_paths: usize) -> Result<ScenarioSet> {
    let scenarios: Result<Vec<Scenario>> =
        (0..n_paths as u64).into_par_iter().map(|p| generate_scenario(inputs, p)).collect();
    Ok(ScenarioSet { scenarios: scenarios?, rng: inputs.rng })
}

impl ScenarioSet {
    /// Deterministic per-path summary counts.
    pub fn summary(&self) -> ScenarioSummary {
        let stock: Vec<f64> = self.scenarios.iter().map(|s| s.stock.terminal()).collect();
        let hazard: Vec<f64> = self.scenarios.iter().map(|s| *s.hazard.last().unwrap()).collect();
        let switches: Vec<f64> = self.scenarios.iter().map(|s| s.regime.n_switches() as f64).collect();
        ScenarioSummary {
            n_paths: self.scenarios.len(),
            terminal_stock: stats::mean_and_se(&stock),
            terminal_hazard: stats::mean_and_se(&hazard),
            mean_switches: stats::mean(&switches),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScenarioSummary {
    pub n_paths: usize,
    pub terminal_stock: McEstimate,
    pub terminal_hazard: McEstimate,
    pub mean_switches: f64,
}

/// Mean and standard error of a functional over stored scenarios.
pub fn estimate_expectation(set: &ScenarioSet, f: impl Fn(&Scenario) -> f64) -> McEstimate {
    let values: Vec<f64> = set.scenarios.iter().map(f).collect();
    stats::mean_and_se(&values)
}

/// Streaming parallel estimator over path indices: values are computed in parallel,
/// stored by index and reduced with the fixed-shape sum.
pub fn mc_estimate(n_paths: usize, f: impl Fn(u64) -> f64 + Send + Sync) -> McEstimate {
    let values: Vec<f64> = (0..n_paths as u64).into_par_iter().map(f).collect();
    stats::mean_and_se(&values)
}
