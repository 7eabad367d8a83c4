//! Subcommand implementations. Every command is deterministic under a fixed seed and
//! worker count; outputs are CSV files plus a JSON summary on stdout.

use std::path::{Path, PathBuf};

use endow_core::grid::TimeGrid;
use endow_core::hazard::{GompertzParams, HazardModel};
use endow_core::pricing::{
    price_closed_form, price_feynman_kac, price_from_surface, solve_surface, PolicyKind,
    PolicySpec, PriceQuote, Route,
};
use endow_core::rng::{Channel, RngSpec};
use endow_core::strategy::strategy_path;
use endow_core::value::{solve_varphi, value_bar, value_full};
use serde_json::json;

use crate::config::{Engine, HazardBlock, RunConfig};
use crate::engine::{generate_scenario, run_scenarios, ScenarioInputs};
use crate::output::{fmt, CsvWriter};

/// Command failure with its process exit code.
#[derive(Debug)]
pub enum CmdError {
    /// Configuration or usage problem (exit 2).
    Config(String),
    /// Numerical failure inside the engine (exit 3).
    Numerical(String),
    /// Filesystem problem (exit 1).
    Io(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Numerical(_) => 3,
            CmdError::Io(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Config(m) | CmdError::Numerical(m) | CmdError::Io(m) => m,
        }
    }
}

impl From<endow_core::Error> for CmdError {
    fn from(e: endow_core::Error) -> Self {
        CmdError::Numerical(e.to_string())
    }
}

fn io_err(e: anyhow::Error) -> CmdError {
    CmdError::Io(format!("{e:#}"))
}

pub type CmdResult = Result<serde_json::Value, CmdError>;

/// `simulate`: joint stock/hazard/regime paths, one CSV per path.
pub fn cmd_simulate(config: &RunConfig, engine: &Engine, paths_override: Option<usize>) -> CmdResult {
    let n_paths = paths_override.unwrap_or(config.numerics.paths);
    let grid = TimeGrid::uniform(config.policy.maturity, config.numerics.time_steps)?;
    let inputs = ScenarioInputs {
        market: &engine.market,
        generator: &engine.generator,
        hazard: &engine.hazard,
        initial_regime: engine.initial_regime,
        s0: config.market.s0,
        w0: config.numerics.wealth0,
        strategy: None,
        base_grid: &grid,
        rng: RngSpec::new(config.numerics.seed),
    };
    let dir = PathBuf::from(&config.output.dir);
    let mut outputs = Vec::new();
    let set = run_scenarios(&inputs, n_paths)?;
    for scenario in &set.scenarios {
        let name = format!("path_{:05}.csv", scenario.path_index);
        let mut csv = CsvWriter::create(&dir, &name, "t,stock,hazard,regime").map_err(io_err)?;
        for (k, &t) in scenario.grid.times.iter().enumerate() {
            csv.row(&[
                fmt(t),
                fmt(scenario.stock.values[k]),
                fmt(scenario.hazard[k]),
                (scenario.regime.state_at(t) + 1).to_string(),
            ])
            .map_err(io_err)?;
        }
        outputs.push(csv.finish().map_err(io_err)?);
    }
    let mut warning = serde_json::Value::Null;
    if config.output.dump_channels && n_paths > 0 {
        let est_bytes = 3 * n_paths * (config.numerics.time_steps + 1) * 30;
        if est_bytes > 100_000_000 {
            warning = json!(format!(
                "channel dump estimated at {} MB (over the 100 MB advice threshold)",
                est_bytes / 1_000_000
            ));
            eprintln!("warning: {}", warning.as_str().unwrap());
        }
        for (channel, pick) in [
            ("stock", 0usize),
            ("hazard", 1),
            ("regime", 2),
        ] {
            let mut csv = CsvWriter::create(&dir, &format!("channel_{channel}.csv"), "path,t,value")
                .map_err(io_err)?;
            for scenario in &set.scenarios {
                for (k, &t) in scenario.grid.times.iter().enumerate() {
                    let value = match pick {
                        0 => fmt(scenario.stock.values[k]),
                        1 => fmt(scenario.hazard[k]),
                        _ => (scenario.regime.state_at(t) + 1).to_string(),
                    };
                    csv.row(&[scenario.path_index.to_string(), fmt(t), value]).map_err(io_err)?;
                }
            }
            outputs.push(csv.finish().map_err(io_err)?);
        }
    }
    let summary = set.summary();
    Ok(json!({
        "command": "simulate",
        "seed": config.numerics.seed,
        "paths": n_paths,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "mean_terminal_stock": summary_opt(n_paths, summary.terminal_stock.mean),
        "mean_terminal_hazard": summary_opt(n_paths, summary.terminal_hazard.mean),
        "mean_switches": summary_opt(n_paths, summary.mean_switches),
        "warning": warning,
    }))
}

fn summary_opt(n: usize, v: f64) -> serde_json::Value {
    if n == 0 {
        serde_json::Value::Null
    } else {
        json!(v)
    }
}

/// `strategy`: optimal amount along one sampled regime path.
pub fn cmd_strategy(config: &RunConfig, engine: &Engine) -> CmdResult {
    let horizon = config.policy.maturity;
    let spec = RngSpec::new(config.numerics.seed);
    let mut chain_rng = spec.stream(0, Channel::Chain);
    let regime = endow_core::regime::sample_regime_path(
        &engine.generator,
        engine.initial_regime,
        horizon,
        &mut chain_rng,
    )?;
    let grid = TimeGrid::uniform(horizon, config.numerics.time_steps)?
        .with_inserted(&regime.switch_times);
    let trajectory =
        strategy_path(&regime, config.policy.alpha, &engine.market, horizon, &grid.times)?;
    let dir = PathBuf::from(&config.output.dir);
    let mut csv = CsvWriter::create(&dir, "strategy.csv", "t,regime,pi_star,lower,upper,residual")
        .map_err(io_err)?;
    for point in &trajectory {
        csv.row(&[
            fmt(point.t),
            (point.regime + 1).to_string(),
            fmt(point.strategy.pi_star),
            fmt(point.strategy.lower_bound),
            fmt(point.strategy.upper_bound),
            fmt(point.strategy.residual),
        ])
        .map_err(io_err)?;
    }
    let path = csv.finish().map_err(io_err)?;
    Ok(json!({
        "command": "strategy",
        "seed": config.numerics.seed,
        "switches": regime.switch_times,
        "outputs": [path.display().to_string()],
    }))
}

/// `value`: the backward factor per regime plus value-function slices.
pub fn cmd_value(config: &RunConfig, engine: &Engine) -> CmdResult {
    let horizon = config.policy.maturity;
    let sol = solve_varphi(
        &engine.generator,
        &engine.market,
        config.policy.alpha,
        horizon,
        config.numerics.varphi_steps,
    )?;
    let m = engine.market.n_regimes();
    let dir = PathBuf::from(&config.output.dir);

    let header = {
        let mut h = String::from("t");
        for i in 0..m {
            h.push_str(&format!(",phi_{}", i + 1));
        }
        h
    };
    let mut csv = CsvWriter::create(&dir, "varphi.csv", &header).map_err(io_err)?;
    let times = sol.node_times();
    for (k, &t) in times.iter().enumerate() {
        let mut row = vec![fmt(t)];
        for i in 0..m {
            row.push(fmt(sol.node_values(i)[k]));
        }
        csv.row(&row).map_err(io_err)?;
    }
    let varphi_path = csv.finish().map_err(io_err)?;

    // Value slices at t = 0, lambda = lambda_0 over the configured wealth grid.
    let grid = config.pde_grid(engine, &[engine.lambda0]).map_err(|e| CmdError::Config(format!("{e:#}")))?;
    let surface = solve_surface(&engine.hazard, &engine.policy, &grid)?;
    let header = {
        let mut h = String::from("w");
        for i in 0..m {
            h.push_str(&format!(",vbar_{}", i + 1));
        }
        for i in 0..m {
            h.push_str(&format!(",v_{}", i + 1));
        }
        h
    };
    let mut csv = CsvWriter::create(&dir, "value_slice.csv", &header).map_err(io_err)?;
    let wg = &config.output.wealth_grid;
    let points = wg.points.max(2);
    for k in 0..points {
        let w = wg.min + (wg.max - wg.min) * k as f64 / (points - 1) as f64;
        let mut row = vec![fmt(w)];
        for i in 0..m {
            row.push(fmt(value_bar(&sol, 0.0, w, i)?));
        }
        for i in 0..m {
            row.push(fmt(value_full(&sol, &surface, 0.0, w, engine.lambda0, i)?));
        }
        csv.row(&row).map_err(io_err)?;
    }
    let slice_path = csv.finish().map_err(io_err)?;

    Ok(json!({
        "command": "value",
        "outputs": [varphi_path.display().to_string(), slice_path.display().to_string()],
        "local_error_estimate": sol.local_error_estimate,
        "phi_at_zero": (0..m).map(|i| sol.phi(0.0, i).unwrap()).collect::<Vec<_>>(),
    }))
}

/// Which pricing routes to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteChoice {
    Pde,
    Mc,
    Closed,
    All,
}

impl std::str::FromStr for RouteChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pde" => Ok(RouteChoice::Pde),
            "mc" => Ok(RouteChoice::Mc),
            "closed" => Ok(RouteChoice::Closed),
            "all" => Ok(RouteChoice::All),
            other => Err(format!("unknown route {other} (expected pde|mc|closed|all)")),
        }
    }
}

fn route_name(route: Route) -> &'static str {
    match route {
        Route::Pde => "pde",
        Route::MonteCarlo => "mc",
        Route::ClosedForm => "closed",
    }
}

fn kind_name(kind: PolicyKind) -> &'static str {
    match kind {
        PolicyKind::PureEndowment => "pure_endowment",
        PolicyKind::Portfolio => "portfolio",
        PolicyKind::TermLife => "term_life",
    }
}

/// `price`: quotes along the requested routes with disagreement diagnostics.
pub fn cmd_price(
    config: &RunConfig,
    engine: &Engine,
    route: RouteChoice,
    at_t: Option<f64>,
    at_lambda: Option<f64>,
    dump_surface: bool,
) -> CmdResult {
    let t = at_t.unwrap_or(0.0);
    let lambda = at_lambda.unwrap_or(engine.lambda0);
    let r = engine.market.riskless_rate();
    let policy = engine.policy;
    if !(0.0 <= t && t <= policy.maturity) {
        return Err(CmdError::Config(format!(
            "price time {t} outside [0, {}]",
            policy.maturity
        )));
    }
    let mut quotes: Vec<PriceQuote> = Vec::new();
    let mut notes = Vec::new();
    let mut surface = None;

    if matches!(route, RouteChoice::Pde | RouteChoice::All) {
        let grid = config
            .pde_grid(engine, &[lambda.min(engine.lambda0), lambda.max(engine.lambda0)])
            .map_err(|e| CmdError::Config(format!("{e:#}")))?;
        let s = solve_surface(&engine.hazard, &policy, &grid)?;
        quotes.push(price_from_surface(&s, t, lambda, r)?);
        surface = Some(s);
    }
    if matches!(route, RouteChoice::Mc | RouteChoice::All) {
        quotes.push(price_feynman_kac(
            &engine.hazard,
            &policy,
            t,
            lambda,
            r,
            config.numerics.hazard_steps,
            config.numerics.paths,
            &RngSpec::new(config.numerics.seed),
        )?);
    }
    if matches!(route, RouteChoice::Closed | RouteChoice::All) {
        match price_closed_form(&engine.hazard, &policy, t, lambda, r) {
            Ok(q) => quotes.push(q),
            Err(e) if route == RouteChoice::All => {
                notes.push(format!("closed route unavailable: {e}"));
            }
            Err(e) => {
                return Err(CmdError::Config(format!(
                    "closed route unavailable for this configuration: {e}"
                )))
            }
        }
    }

    let dir = PathBuf::from(&config.output.dir);
    let mut csv = CsvWriter::create(
        &dir,
        "quotes.csv",
        "kind,route,t,lambda,price,std_error,n_paths",
    )
    .map_err(io_err)?;
    for q in &quotes {
        csv.row(&[
            kind_name(policy.kind).to_string(),
            route_name(q.route).to_string(),
            fmt(q.t),
            fmt(q.lambda),
            fmt(q.price),
            q.std_error.map(fmt).unwrap_or_default(),
            if q.route == Route::MonteCarlo { config.numerics.paths.to_string() } else { String::new() },
        ])
        .map_err(io_err)?;
    }
    let mut outputs = vec![csv.finish().map_err(io_err)?.display().to_string()];

    if dump_surface || config.output.dump_surface {
        if let Some(s) = &surface {
            let mut csv = CsvWriter::create(&dir, "surface.csv", "t,lambda,phi,price")
                .map_err(io_err)?;
            for level in 0..s.n_levels() {
                let tl = s.time_at(level);
                for node in 0..s.n_nodes() {
                    let l = s.lambda_at(node);
                    let q = price_from_surface(s, tl, l, r)?;
                    csv.row(&[fmt(tl), fmt(l), fmt(s.value_at(level, node)), fmt(q.price)])
                        .map_err(io_err)?;
                }
            }
            outputs.push(csv.finish().map_err(io_err)?.display().to_string());
        } else {
            notes.push("surface dump skipped: PDE route not requested".into());
        }
    }

    // Disagreement diagnostics between routes.
    let mut diagnostics = serde_json::Map::new();
    let pde = quotes.iter().find(|q| q.route == Route::Pde);
    let mc = quotes.iter().find(|q| q.route == Route::MonteCarlo);
    if let (Some(p), Some(m)) = (pde, mc) {
        let se = m.std_error.unwrap_or(0.0);
        diagnostics.insert("pde_vs_mc".into(), json!((p.price - m.price).abs()));
        if se > 0.0 {
            diagnostics.insert("pde_vs_mc_in_se".into(), json!((p.price - m.price).abs() / se));
        }
    }
    Ok(json!({
        "command": "price",
        "kind": kind_name(policy.kind),
        "t": t,
        "lambda": lambda,
        "seed": config.numerics.seed,
        "quotes": quotes.iter().map(|q| json!({
            "route": route_name(q.route),
            "price": q.price,
            "std_error": q.std_error,
        })).collect::<Vec<_>>(),
        "diagnostics": diagnostics,
        "notes": notes,
        "outputs": outputs,
    }))
}

/// Sweepable parameters of `sensitivity`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Lambda0,
    Alpha,
    Rate,
    Benefit,
    Deferral,
    Cohort,
}

impl std::str::FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lambda0" => Ok(SweepParam::Lambda0),
            "alpha" => Ok(SweepParam::Alpha),
            "rate" => Ok(SweepParam::Rate),
            "benefit" => Ok(SweepParam::Benefit),
            "deferral" => Ok(SweepParam::Deferral),
            "cohort" => Ok(SweepParam::Cohort),
            other => Err(format!(
                "unknown sweep parameter {other} (expected lambda0|alpha|rate|benefit|deferral|cohort)"
            )),
        }
    }
}

/// `sensitivity`: Monte-Carlo price along a parameter grid with common random
/// numbers (the same master seed and path streams at every grid point).
pub fn cmd_sensitivity(
    config: &RunConfig,
    engine: &Engine,
    param: SweepParam,
    from: f64,
    to: f64,
    points: usize,
) -> CmdResult {
    if points < 2 {
        return Err(CmdError::Config("sensitivity needs at least two grid points".into()));
    }
    if param == SweepParam::Cohort && engine.policy.kind != PolicyKind::Portfolio {
        return Err(CmdError::Config("cohort sweeps require a portfolio policy".into()));
    }
    let spec = RngSpec::new(config.numerics.seed);
    let r0 = engine.market.riskless_rate();
    let dir = PathBuf::from(&config.output.dir);
    let name = match param {
        SweepParam::Lambda0 => "lambda0",
        SweepParam::Alpha => "alpha",
        SweepParam::Rate => "rate",
        SweepParam::Benefit => "benefit",
        SweepParam::Deferral => "deferral",
        SweepParam::Cohort => "cohort",
    };
    let mut csv = CsvWriter::create(&dir, "sensitivity.csv", "parameter,value,price,std_error")
        .map_err(io_err)?;
    let mut rows = Vec::new();
    for k in 0..points {
        let value = from + (to - from) * k as f64 / (points - 1) as f64;
        let mut policy = engine.policy;
        let mut r = r0;
        let mut t = 0.0;
        let mut lambda = engine.lambda0;
        let mut hazard_storage = None;
        match param {
            SweepParam::Lambda0 => {
                hazard_storage = Some(rebuild_hazard(&config.hazard, value)?);
                lambda = value;
            }
            SweepParam::Alpha => {
                policy = PolicySpec::new(policy.kind, policy.benefit, policy.cohort, policy.maturity, value)?;
            }
            SweepParam::Rate => r = value,
            SweepParam::Benefit => {
                policy = PolicySpec::new(policy.kind, value, policy.cohort, policy.maturity, policy.alpha)?;
            }
            SweepParam::Deferral => {
                if !(0.0 <= value && value < policy.maturity) {
                    return Err(CmdError::Config(format!(
                        "deferral sweep point {value} outside [0, T)"
                    )));
                }
                t = value;
            }
            SweepParam::Cohort => {
                let n = value.round() as u32;
                if n == 0 {
                    return Err(CmdError::Config("cohort sweep needs n >= 1".into()));
                }
                policy = PolicySpec::new(policy.kind, policy.benefit, n, policy.maturity, policy.alpha)?;
            }
        }
        let hazard = hazard_storage.as_ref().unwrap_or(&engine.hazard);
        let quote = price_feynman_kac(
            hazard,
            &policy,
            t,
            lambda,
            r,
            config.numerics.hazard_steps,
            config.numerics.paths,
            &spec,
        )?;
        csv.row(&[
            name.to_string(),
            fmt(value),
            fmt(quote.price),
            quote.std_error.map(fmt).unwrap_or_default(),
        ])
        .map_err(io_err)?;
        rows.push(json!({"value": value, "price": quote.price, "std_error": quote.std_error}));
    }
    let path = csv.finish().map_err(io_err)?;
    Ok(json!({
        "command": "sensitivity",
        "parameter": name,
        "seed": config.numerics.seed,
        "rows": rows,
        "outputs": [path.display().to_string()],
    }))
}

/// Rebuild the configured hazard with a different initial level.
fn rebuild_hazard(block: &HazardBlock, lambda0: f64) -> Result<HazardModel, CmdError> {
    let model = match block {
        HazardBlock::Gompertz { c1, c2, m, .. } => {
            HazardModel::Gompertz(GompertzParams::new(*c1, *c2, *m, lambda0)?)
        }
        HazardBlock::Constant { .. } => HazardModel::constant(lambda0)?,
        HazardBlock::Generic { b, c, .. } => {
            let b: endow_core::market::Coefficient = b.into();
            let c: endow_core::market::Coefficient = c.into();
            HazardModel::general(
                Box::new(move |t, _| b.at(t)),
                Box::new(move |t, _| c.at(t)),
                lambda0,
            )?
        }
    };
    Ok(model)
}

/// Convenience used by tests: run `simulate` into a scratch directory.
pub fn simulate_one_path_values(config: &RunConfig, engine: &Engine) -> Result<Vec<f64>, CmdError> {
    let grid = TimeGrid::uniform(config.policy.maturity, config.numerics.time_steps)?;
    let inputs = ScenarioInputs {
        market: &engine.market,
        generator: &engine.generator,
        hazard: &engine.hazard,
        initial_regime: engine.initial_regime,
        s0: config.market.s0,
        w0: config.numerics.wealth0,
        strategy: None,
        base_grid: &grid,
        rng: RngSpec::new(config.numerics.seed),
    };
    Ok(generate_scenario(&inputs, 0)?.stock.values)
}

/// Expand `~`-free relative paths against the working directory (no-op helper kept
/// for symmetry; output directories come straight from the config).
pub fn output_dir(config: &RunConfig) -> &Path {
    Path::new(&config.output.dir)
}
