use clap::{Parser, Subcommand};
use endow_cli::commands::{
    cmd_price, cmd_sensitivity, cmd_simulate, cmd_strategy, cmd_value, CmdError, RouteChoice,
    SweepParam,
};
use endow_cli::config::RunConfig;
use endow_cli::output::print_summary;

/// Indifference pricing of endowment contracts in a regime-switching
/// jump-diffusion market with stochastic mortality.
#[derive(Parser)]
#[command(name = "endow", version, about)]
struct Cli {
    /// Configuration file (JSON). Falls back to $ENDOW_CONFIG, then to built-in
    /// defaults reproducing the two-regime reference experiment.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    /// Override a config key by dotted path, e.g. --set market.riskless_rate=0.04.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Cap the worker thread count (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory override.
    #[arg(long, global = true)]
    out_dir: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate joint stock/hazard/regime paths and write one CSV per path.
    Simulate {
        /// Number of paths (defaults to numerics.paths).
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Optimal investment amount along a sampled regime path.
    Strategy,
    /// Backward value factor per regime and value-function slices.
    Value,
    /// Indifference price quotes along one or more routes.
    Price {
        /// Route: pde | mc | closed | all.
        #[arg(long, default_value = "all")]
        route: RouteChoice,
        /// Valuation time (defaults to 0).
        #[arg(long)]
        at_t: Option<f64>,
        /// Hazard level at valuation (defaults to the configured lambda0).
        #[arg(long)]
        at_lambda: Option<f64>,
        /// Also dump the full factor surface as CSV.
        #[arg(long)]
        dump_surface: bool,
    },
    /// Monte-Carlo price along a parameter grid with common random numbers.
    Sensitivity {
        /// lambda0 | alpha | rate | benefit | deferral | cohort.
        #[arg(long)]
        param: SweepParam,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, CmdError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| CmdError::Config(format!("{e:#}")))?,
        None => match std::env::var_os("ENDOW_CONFIG") {
            Some(path) => RunConfig::load(std::path::Path::new(&path))
                .map_err(|e| CmdError::Config(format!("{e:#}")))?,
            None => RunConfig::default(),
        },
    };
    for assignment in &cli.overrides {
        config = config
            .with_override(assignment)
            .map_err(|e| CmdError::Config(format!("{e:#}")))?;
    }
    if let Some(dir) = &cli.out_dir {
        config.output.dir = dir.clone();
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<serde_json::Value, CmdError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CmdError::Config(format!("cannot configure {n} threads: {e}")))?;
    }
    let config = load_config(&cli)?;
    let engine = config.build().map_err(|e| CmdError::Config(format!("{e:#}")))?;
    match cli.command {
        Command::Simulate { paths } => cmd_simulate(&config, &engine, paths),
        Command::Strategy => cmd_strategy(&config, &engine),
        Command::Value => cmd_value(&config, &engine),
        Command::Price { route, at_t, at_lambda, dump_surface } => {
            cmd_price(&config, &engine, route, at_t, at_lambda, dump_surface)
        }
        Command::Sensitivity { param, from, to, points } => {
            cmd_sensitivity(&config, &engine, param, from, to, points)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => print_summary(&summary),
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}
