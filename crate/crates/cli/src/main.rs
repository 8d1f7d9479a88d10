//! `firmcomp` command-line front end.
//!
//! Every command writes `<name>.csv` and `<name>.meta.json` into the output
//! directory. Exit status: 0 success, 1 failed validation, 2 an equilibrium
//! did not converge, 64 bad command line, 65 bad configuration, 70 other
//! solver failure, 74 I/O failure.

mod commands;
mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use firmcomp::{ModelError, SolverError};
use serde_json::json;

use commands::Product;
use config::{GridSpec, ScenarioConfig};

pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::NotConverged(_) => 2,
            CliError::Usage(_) => 64,
            CliError::Config(_) => 65,
            CliError::Solver(_) => 70,
            CliError::Io(_) => 74,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            SolverError::Model(m) => m.into(),
            SolverError::InvalidSpace { .. } | SolverError::InvalidSetting(_) => CliError::Config(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "firmcomp", version, about = "Firm competition under probabilistic consumer choice")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// Consumer quality sensitivity. A comma-separated list replaces the
    /// alpha lists of the sweep figures; single-population commands use the first value.
    #[arg(long, global = true, value_delimiter = ',', value_name = "ALPHA", allow_negative_numbers = true)]
    alpha: Vec<f64>,
    /// Maximal price.
    #[arg(long = "p-max", global = true, allow_negative_numbers = true)]
    p_max: Option<f64>,
    /// Number of symmetric firms for `nash` and `simulate`.
    #[arg(long, global = true)]
    firms: Option<usize>,
    /// Output directory.
    #[arg(long = "out-dir", global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    damping: Option<f64>,
    /// Convergence tolerance on offer changes, relative to p_max.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[arg(long = "max-iterations", global = true)]
    max_iterations: Option<usize>,
    /// Monte Carlo consumers.
    #[arg(long, global = true)]
    consumers: Option<u64>,
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replace a grid: `name=start:stop:step` or `name=v1,v2,...` with name
    /// one of alpha, tau, lambda, eta, n, sigma.
    #[arg(long = "grid", global = true, value_name = "NAME=SPEC")]
    grids: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monopolist optimum, closed form and numerical.
    Monopolist,
    /// Symmetric Nash equilibrium, or the equilibrium of the configured firms.
    Nash,
    /// Data behind one figure.
    Figure {
        #[arg(value_enum)]
        figure: Figure,
    },
    /// Monte Carlo consumer simulation.
    Simulate,
    /// Run the self-check suite.
    Validate,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

fn apply_overrides(cfg: &mut ScenarioConfig, o: &Overrides) -> Result<(), CliError> {
    if let Some(&first) = o.alpha.first() {
        cfg.population.alpha = first;
        cfg.grids.alpha = GridSpec::List(o.alpha.clone());
        cfg.grids.efficiency_alphas = o.alpha.clone();
        cfg.grids.acceptance_alphas = o.alpha.clone();
    }
    if o.p_max.is_some() {
        cfg.population.p_max = o.p_max;
    }
    if let Some(n) = o.firms {
        cfg.symmetric_firms = n;
        cfg.firms.clear();
    }
    if let Some(dir) = &o.out_dir {
        cfg.output.dir = dir.clone();
    }
    if let Some(v) = o.damping {
        cfg.solver.damping = v;
    }
    if let Some(v) = o.tolerance {
        cfg.solver.tolerance = v;
    }
    if let Some(v) = o.max_iterations {
        cfg.solver.max_iterations = v;
    }
    if let Some(v) = o.consumers {
        cfg.montecarlo.num_consumers = v;
    }
    if let Some(v) = o.seed {
        cfg.montecarlo.seed = v;
    }
    for entry in &o.grids {
        let (name, spec) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--grid expects NAME=SPEC, got `{entry}`")))?;
        let spec = GridSpec::parse(spec).map_err(|e| CliError::Usage(format!("--grid {name}: {e}")))?;
        let list = || spec.values(name);
        match name {
            "alpha" => cfg.grids.alpha = spec.clone(),
            "tau" => cfg.grids.tau = spec.clone(),
            "lambda" => cfg.grids.lambda = spec.clone(),
            "eta" => cfg.grids.eta = spec.clone(),
            "sigma" => cfg.grids.sigma = list()?,
            "n" => {
                cfg.grids.n = list()?
                    .into_iter()
                    .map(|v| {
                        if v >= 2.0 && v.fract() == 0.0 {
                            Ok(v as u64)
                        } else {
                            Err(CliError::Usage(format!("--grid n: {v} is not an integer >= 2")))
                        }
                    })
                    .collect::<Result<_, _>>()?
            }
            other => return Err(CliError::Usage(format!("--grid: unknown grid `{other}`"))),
        }
    }
    Ok(())
}

fn write_outputs(product: &Product, cfg: &ScenarioConfig, args: &[OsString]) -> Result<(PathBuf, PathBuf), CliError> {
    let dir: &Path = &cfg.output.dir;
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", product.name));
    let meta_path = dir.join(format!("{}.meta.json", product.name));
    fs::write(&csv_path, &product.csv)?;
    let meta = json!({
        "tool": "firmcomp",
        "version": env!("CARGO_PKG_VERSION"),
        "schema": product.name,
        "schema_version": CSV_SCHEMA_VERSION,
        "arguments": args.iter().skip(1).map(|a| a.to_string_lossy()).collect::<Vec<_>>(),
        "config": cfg,
        "diagnostics": product.diagnostics,
        "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    });
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok((csv_path, meta_path))
}

fn run(args: Vec<OsString>) -> Result<(), CliError> {
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.to_string().trim_end().to_string())),
    };
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    apply_overrides(&mut cfg, &cli.overrides)?;
    cfg.validate()?;

    let product = match cli.command {
        Command::Monopolist => commands::monopolist(&cfg)?,
        Command::Nash => commands::nash(&cfg)?,
        Command::Simulate => commands::simulate_market(&cfg)?,
        Command::Validate => commands::validate(&cfg)?,
        Command::Figure { figure } => match figure {
            Figure::Fig1 => commands::fig1(&cfg)?,
            Figure::Fig2 => commands::fig2(&cfg)?,
            Figure::Fig3 => commands::fig3(&cfg)?,
            Figure::Fig4 => commands::fig4(&cfg)?,
            Figure::Fig5 => commands::fig5(&cfg)?,
            Figure::Fig6 => commands::fig6(&cfg)?,
            Figure::Fig7 => commands::fig7(&cfg)?,
        },
    };
    let (csv_path, meta_path) = write_outputs(&product, &cfg, &args)?;
    if product.csv.len() <= 4096 {
        print!("{}", String::from_utf8_lossy(&product.csv));
    }
    eprintln!("wrote {} and {}", csv_path.display(), meta_path.display());

    if !product.failed_checks.is_empty() {
        return Err(CliError::Validation(product.failed_checks.join(", ")));
    }
    if product.non_converged > 0 {
        return Err(CliError::NotConverged(format!(
            "{} equilibria (see the converged column)",
            product.non_converged
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string();
            eprintln!("firmcomp: {}", line.lines().next().unwrap_or_default());
            ExitCode::from(e.exit_code())
        }
    }
}
