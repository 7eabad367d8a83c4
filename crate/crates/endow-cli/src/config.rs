//! Run configuration: a single JSON document whose defaults reproduce the two-regime
//! reference experiment (Table-1 market, Brownian Gompertz hazard, pure endowment
//! with K = 1, alpha = 1, T = 10, 1000 time steps, 5000 paths).
//!
//! Unknown keys are rejected. Regime indices are 1-based in the file and in all CSV
//! output; the engine uses 0-based indices internally.

use anyhow::{anyhow, bail, Context};
use endow_core::hazard::{GompertzParams, HazardModel};
use endow_core::market::{Coefficient, MarketParams};
use endow_core::pricing::{PdeGridSpec, PolicyKind, PolicySpec};
use endow_core::regime::GeneratorMatrix;
use serde::{Deserialize, Serialize};

/// Constant or piecewise-constant-in-time coefficient.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CoeffSpec {
    Constant(f64),
    Table { breakpoints: Vec<f64>, values: Vec<f64> },
}

impl From<&CoeffSpec> for Coefficient {
    fn from(spec: &CoeffSpec) -> Self {
        match spec {
            CoeffSpec::Constant(v) => Coefficient::Constant(*v),
            CoeffSpec::Table { breakpoints, values } => Coefficient::PiecewiseConstant {
                breakpoints: breakpoints.clone(),
                values: values.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeBlock {
    pub name: String,
    pub mu: CoeffSpec,
    pub sigma: CoeffSpec,
    pub k1: CoeffSpec,
    pub k2: CoeffSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketBlock {
    pub riskless_rate: f64,
    pub regimes: Vec<RegimeBlock>,
    pub theta1: CoeffSpec,
    pub theta2: CoeffSpec,
    pub s0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorBlock {
    /// Row-major transition-rate matrix.
    pub rates: Vec<Vec<f64>>,
    /// Starting regime, 1-based.
    pub initial_state: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HazardBlock {
    Gompertz { c1: f64, c2: f64, m: f64, lambda0: f64 },
    Constant { lambda0: f64 },
    /// Generic proportional-form coefficients, functions of time only.
    Generic { b: CoeffSpec, c: CoeffSpec, lambda0: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKindSpec {
    PureEndowment,
    Portfolio,
    TermLife,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyBlock {
    pub kind: PolicyKindSpec,
    pub benefit: f64,
    pub cohort: u32,
    pub alpha: f64,
    pub maturity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeBlock {
    /// Hazard-grid points; 0 asks the solver to size the grid itself.
    pub n_x: usize,
    pub n_t: usize,
    /// Multiplicative pad around query hazards (log-space decades when 10).
    pub lambda_pad: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsBlock {
    /// Master simulation grid steps over [0, T].
    pub time_steps: usize,
    /// Monte-Carlo paths.
    pub paths: usize,
    pub seed: u64,
    /// Steps of the hazard integral in Monte-Carlo quotes.
    pub hazard_steps: usize,
    /// Backward ODE grid steps for the value system.
    pub varphi_steps: usize,
    pub pde: PdeBlock,
    /// Initial wealth for simulated wealth paths and value slices.
    pub wealth0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WealthGridBlock {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: String,
    pub dump_surface: bool,
    pub dump_channels: bool,
    pub wealth_grid: WealthGridBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub market: MarketBlock,
    pub generator: GeneratorBlock,
    pub hazard: HazardBlock,
    pub policy: PolicyBlock,
    pub numerics: NumericsBlock,
    pub output: OutputBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            market: MarketBlock {
                riskless_rate: 0.05,
                regimes: vec![
                    RegimeBlock {
                        name: "good".into(),
                        mu: CoeffSpec::Constant(0.15),
                        sigma: CoeffSpec::Constant(0.15),
                        k1: CoeffSpec::Constant(0.15),
                        k2: CoeffSpec::Constant(0.30),
                    },
                    RegimeBlock {
                        name: "bad".into(),
                        mu: CoeffSpec::Constant(0.12),
                        sigma: CoeffSpec::Constant(0.25),
                        k1: CoeffSpec::Constant(0.10),
                        k2: CoeffSpec::Constant(0.35),
                    },
                ],
                theta1: CoeffSpec::Constant(0.3),
                theta2: CoeffSpec::Constant(0.4),
                s0: 1.0,
            },
            generator: GeneratorBlock {
                rates: vec![vec![-0.2, 0.2], vec![0.1, -0.1]],
                initial_state: 1,
            },
            hazard: HazardBlock::Gompertz { c1: 0.083, c2: 0.1, m: 0.5, lambda0: 0.01 },
            policy: PolicyBlock {
                kind: PolicyKindSpec::PureEndowment,
                benefit: 1.0,
                cohort: 1,
                alpha: 1.0,
                maturity: 10.0,
            },
            numerics: NumericsBlock {
                time_steps: 1000,
                paths: 5000,
                seed: 1,
                hazard_steps: 1000,
                varphi_steps: 2000,
                pde: PdeBlock { n_x: 0, n_t: 400, lambda_pad: 10.0 },
                wealth0: 1.0,
            },
            output: OutputBlock {
                dir: "out".into(),
                dump_surface: false,
                dump_channels: false,
                wealth_grid: WealthGridBlock { min: 0.0, max: 2.0, points: 41 },
            },
        }
    }
}

/// Validated engine objects built from a [`RunConfig`].
#[derive(Debug)]
pub struct Engine {
    pub market: MarketParams,
    pub generator: GeneratorMatrix,
    pub hazard: HazardModel,
    pub policy: PolicySpec,
    /// 0-based initial regime.
    pub initial_regime: usize,
    pub lambda0: f64,
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<RunConfig> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| anyhow!("config error at line {}, column {}: {e}", e.line(), e.column()))?;
        Ok(config)
    }

    /// Apply a `key.path=value` override onto the JSON form, then re-validate.
    pub fn with_override(&self, assignment: &str) -> anyhow::Result<RunConfig> {
        let (path, raw_value) = assignment
            .split_once('=')
            .ok_or_else(|| anyhow!("override must look like key.path=value: {assignment}"))?;
        let mut root = serde_json::to_value(self)?;
        let mut cursor = &mut root;
        let segments: Vec<&str> = path.split('.').collect();
        for (i, segment) in segments.iter().enumerate() {
            let last = i + 1 == segments.len();
            let next: &mut serde_json::Value = if let Ok(index) = segment.parse::<usize>() {
                cursor
                    .as_array_mut()
                    .and_then(|a| a.get_mut(index))
                    .ok_or_else(|| anyhow!("no array element {segment} under {path}"))?
            } else {
                cursor
                    .as_object_mut()
                    .and_then(|o| o.get_mut(*segment))
                    .ok_or_else(|| anyhow!("unknown config key `{segment}` in {path}"))?
            };
            if last {
                *next = serde_json::from_str(raw_value)
                    .unwrap_or_else(|_| serde_json::Value::String(raw_value.to_string()));
            }
            cursor = next;
        }
        let updated: RunConfig = serde_json::from_value(root)
            .map_err(|e| anyhow!("override {assignment} leaves an invalid config: {e}"))?;
        Ok(updated)
    }

    /// Build and validate the engine objects.
    pub fn build(&self) -> anyhow::Result<Engine> {
        let m = self.market.regimes.len();
        if m == 0 {
            bail!("config error: market.regimes must not be empty");
        }
        let market = MarketParams::new(
            self.market.riskless_rate,
            self.market.regimes.iter().map(|r| (&r.mu).into()).collect(),
            self.market.regimes.iter().map(|r| (&r.sigma).into()).collect(),
            self.market.regimes.iter().map(|r| (&r.k1).into()).collect(),
            self.market.regimes.iter().map(|r| (&r.k2).into()).collect(),
            (&self.market.theta1).into(),
            (&self.market.theta2).into(),
        )
        .map_err(|e| anyhow!("config error in market block: {e}"))?;
        if !(self.market.s0 > 0.0) {
            bail!("config error: market.s0 must be positive");
        }
        let generator = GeneratorMatrix::new(self.generator.rates.clone())
            .map_err(|e| anyhow!("config error in generator block: {e}"))?;
        if generator.n_states() != m {
            bail!(
                "config error: generator has {} states but the market defines {m} regimes",
                generator.n_states()
            );
        }
        if self.generator.initial_state == 0 || self.generator.initial_state > m {
            bail!("config error: generator.initial_state must lie in 1..={m}");
        }
        let hazard = match &self.hazard {
            HazardBlock::Gompertz { c1, c2, m, lambda0 } => HazardModel::Gompertz(
                GompertzParams::new(*c1, *c2, *m, *lambda0)
                    .map_err(|e| anyhow!("config error in hazard block: {e}"))?,
            ),
            HazardBlock::Constant { lambda0 } => HazardModel::constant(*lambda0)
                .map_err(|e| anyhow!("config error in hazard block: {e}"))?,
            HazardBlock::Generic { b, c, lambda0 } => {
                let b: Coefficient = b.into();
                let c: Coefficient = c.into();
                HazardModel::general(
                    Box::new(move |t, _| b.at(t)),
                    Box::new(move |t, _| c.at(t)),
                    *lambda0,
                )
                .map_err(|e| anyhow!("config error in hazard block: {e}"))?
            }
        };
        let kind = match self.policy.kind {
            PolicyKindSpec::PureEndowment => PolicyKind::PureEndowment,
            PolicyKindSpec::Portfolio => PolicyKind::Portfolio,
            PolicyKindSpec::TermLife => PolicyKind::TermLife,
        };
        let policy = PolicySpec::new(
            kind,
            self.policy.benefit,
            if kind == PolicyKind::Portfolio { self.policy.cohort } else { 1 },
            self.policy.maturity,
            self.policy.alpha,
        )
        .map_err(|e| anyhow!("config error in policy block: {e}"))?;
        if self.numerics.time_steps == 0 || self.numerics.hazard_steps == 0 {
            bail!("config error: numerics.time_steps and numerics.hazard_steps must be positive");
        }
        let lambda0 = hazard.lambda0();
        Ok(Engine {
            market,
            generator,
            hazard,
            policy,
            initial_regime: self.generator.initial_state - 1,
            lambda0,
        })
    }

    /// PDE grid spec covering the given hazard queries with the configured pad.
    pub fn pde_grid(&self, engine: &Engine, queries: &[f64]) -> anyhow::Result<PdeGridSpec> {
        let pad = self.numerics.pde.lambda_pad.max(10.0);
        let lo = queries.iter().copied().fold(f64::INFINITY, f64::min) / pad;
        let hi = queries.iter().copied().fold(0.0f64, f64::max) * pad;
        let n_t = self.numerics.pde.n_t.max(2);
        let base = PdeGridSpec::new(lo, hi, 257, n_t)
            .map_err(|e| anyhow!("config error in numerics.pde: {e}"))?;
        let n_x = if self.numerics.pde.n_x == 0 {
            endow_core::pricing::suggest_n_x(&engine.hazard, &base, self.policy.maturity)
        } else {
            self.numerics.pde.n_x
        };
        PdeGridSpec::new(lo, hi, n_x, n_t).map_err(|e| anyhow!("config error in numerics.pde: {e}"))
    }

    pub fn load(path: &std::path::Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        RunConfig::parse(&text)
    }
}
