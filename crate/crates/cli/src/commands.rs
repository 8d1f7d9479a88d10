//! One function per command. Each returns the CSV rows it produced plus
//! diagnostics for the metadata sidecar; nothing here touches the filesystem.

use firmcomp::analytic::{
    many_firms, monopolist_optimum, nash_symmetric, profit_ratio_alpha_limit, quality_ratio_threshold,
    small_firm_optimum,
};
use firmcomp::model::{acceptance, attractiveness, gaussian_acceptance_probability, per_consumer_profit};
use firmcomp::montecarlo::{simulate, SimulationConfig};
use firmcomp::scenarios::{
    efficiency_equilibrium, farsighted_sweep, scenario_price_competition, size_asymmetric_equilibrium,
    size_threshold,
};
use firmcomp::solver::{find_nash, monopolist_numeric, StrategyMode, StrategySpace};
use firmcomp::validation::{run_validation, ValidationOptions};
use firmcomp::{ConsumerPopulation, Firm, Market, Offer, SolverError};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ScenarioConfig;
use crate::CliError;

/// Result of one command: a CSV table and what goes into the sidecar.
pub struct Product {
    pub name: String,
    pub csv: Vec<u8>,
    pub diagnostics: Value,
    /// Grid points whose equilibrium did not converge.
    pub non_converged: usize,
    /// Names of failed validation checks.
    pub failed_checks: Vec<String>,
}

impl Product {
    fn new<R: Serialize>(name: &str, rows: &[R], diagnostics: Value) -> Result<Self, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let csv = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Self { name: name.to_string(), csv, diagnostics, non_converged: 0, failed_checks: Vec::new() })
    }

    fn with_non_converged(mut self, count: usize) -> Self {
        self.non_converged = count;
        self
    }
}

fn population(alpha: f64, p_max: f64) -> Result<ConsumerPopulation, CliError> {
    Ok(ConsumerPopulation::new(alpha, p_max)?)
}

/// `points` evenly spaced values on `[lo, hi]`.
fn linspace(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(move |k| if k + 1 == points { hi } else { lo + step * k as f64 })
}

#[derive(Serialize)]
struct MonopolistRow {
    alpha: f64,
    p_max: f64,
    q_star: f64,
    p_star: f64,
    x_star: f64,
    q_numeric: f64,
    p_numeric: f64,
    x_numeric: f64,
}

pub fn monopolist(cfg: &ScenarioConfig) -> Result<Product, CliError> {
    let pop = population(cfg.population.alpha, cfg.p_max_or(1.0))?;
    let exact = monopolist_optimum(pop);
    let numeric = monopolist_numeric(pop, 1.0)?;
    let row = MonopolistRow {
        alpha: pop.alpha(),
        p_max: pop.p_max(),
        q_star: exact.q_star,
        p_star: exact.p_star,
        x_star: exact.x_star,
        q_numeric: numeric.offer.quality(),
        p_numeric: numeric.offer.price(),
        x_numeric: numeric.profit,
    };
    let rel = (numeric.profit - exact.x_star).abs() / exact.x_star;
    Product::new("monopolist", &[row], json!({ "profit_relative_error": rel }))
}

#[derive(Serialize)]
struct NashRow {
    alpha: f64,
    n: u64,
    q_nash: f64,
    p_nash: f64,
    x_nash: f64,
    rho: f64,
    xi: f64,
    marginal: f64,
    q_numeric: f64,
    p_numeric: f64,
    x_numeric: f64,
    iterations: usize,
    residual: f64,
    converged: bool,
}

#[derive(Serialize)]
struct NashFirmRow {
    firm: usize,
    alpha: f64,
    p_max: f64,
    size_weight: f64,
    efficiency: f64,
    quality: f64,
    price: f64,
    profit: f64,
    profit_ratio: f64,
    clamped: bool,
    converged: bool,
}

pub fn nash(cfg: &ScenarioConfig) -> Result<Product, CliError> {
    let pop = population(cfg.population.alpha, cfg.p_max_or(1.0))?;
    let settings = cfg.solver.settings()?;
    if cfg.firms.is_empty() {
        let n = cfg.symmetric_firms;
        if n < 2 {
            return Err(CliError::Config("nash needs at least 2 firms; use `monopolist` for one".into()));
        }
        let exact = nash_symmetric(n as u64, pop);
        let market = Market::symmetric(n, monopolist_optimum(pop).offer(), pop)?;
        let eq = find_nash(&market, &StrategySpace::for_market(&market, StrategyMode::Both), &settings)?;
        let row = NashRow {
            alpha: pop.alpha(),
            n: n as u64,
            q_nash: exact.q_nash,
            p_nash: exact.p_nash,
            x_nash: exact.x_nash,
            rho: exact.quality_ratio,
            xi: exact.profit_ratio,
            marginal: exact.marginal,
            q_numeric: eq.offers[0].quality(),
            p_numeric: eq.offers[0].price(),
            x_numeric: eq.profits[0],
            iterations: eq.iterations,
            residual: eq.residual,
            converged: eq.converged,
        };
        let diag = json!({ "p_max": pop.p_max(), "equilibrium": eq });
        return Ok(Product::new("nash", &[row], diag)?.with_non_converged(usize::from(!eq.converged)));
    }

    let start = monopolist_optimum(pop).offer();
    let firms = cfg
        .firms
        .iter()
        .map(|f| {
            let offer = Offer::new(f.quality.unwrap_or(start.quality()), f.price.unwrap_or(start.price()))?;
            Firm::new(offer, f.size_weight, f.efficiency)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let market = Market::new(firms, pop)?;
    let eq = find_nash(&market, &StrategySpace::for_market(&market, StrategyMode::Both), &settings)?;
    let rows: Vec<NashFirmRow> = market
        .firms()
        .iter()
        .enumerate()
        .map(|(i, f)| NashFirmRow {
            firm: i + 1,
            alpha: pop.alpha(),
            p_max: pop.p_max(),
            size_weight: f.size_weight(),
            efficiency: f.efficiency(),
            quality: eq.offers[i].quality(),
            price: eq.offers[i].price(),
            profit: eq.profits[i],
            profit_ratio: eq.profit_ratios[i],
            clamped: eq.clamped[i],
            converged: eq.converged,
        })
        .collect();
    let diag = json!({ "equilibrium": eq });
    Ok(Product::new("nash_firms", &rows, diag)?.with_non_converged(usize::from(!eq.converged)))
}

#[derive(Serialize)]
struct SimulationRow {
    firm: usize,
    quality: f64,
    price: f64,
    size_weight: f64,
    efficiency: f64,
    units_sold: u64,
    revenue: f64,
    cost: f64,
    profit_estimate: f64,
    standard_error: f64,
    analytic_profit: f64,
    z_score: Option<f64>,
}

pub fn simulate_market(cfg: &ScenarioConfig) -> Result<Product, CliError> {
    let pop = population(cfg.population.alpha, cfg.p_max_or(1.0))?;
    let market = if cfg.firms.is_empty() {
        let n = cfg.symmetric_firms;
        let offer = if n >= 2 { nash_symmetric(n as u64, pop).offer() } else { monopolist_optimum(pop).offer() };
        Market::symmetric(n, offer, pop)?
    } else {
        let firms = cfg
            .firms
            .iter()
            .enumerate()
            .map(|(i, f)| match (f.quality, f.price) {
                (Some(q), Some(p)) => Ok(Firm::new(Offer::new(q, p)?, f.size_weight, f.efficiency)?),
                _ => Err(CliError::Config(format!("firm {} needs both quality and price to simulate", i + 1))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Market::new(firms, pop)?
    };
    let config = SimulationConfig::new(market.clone(), cfg.montecarlo.num_consumers, cfg.montecarlo.seed)?;
    let report = simulate(&config)?;
    let rows = market
        .firms()
        .iter()
        .zip(&report.firms)
        .enumerate()
        .map(|(i, (f, t))| {
            let analytic = per_consumer_profit(i, &market)?;
            Ok(SimulationRow {
                firm: i + 1,
                quality: f.offer().quality(),
                price: f.offer().price(),
                size_weight: f.size_weight(),
                efficiency: f.efficiency(),
                units_sold: t.units_sold,
                revenue: t.revenue,
                cost: t.cost,
                profit_estimate: t.profit_estimate,
                standard_error: t.standard_error,
                analytic_profit: analytic,
                z_score: (t.standard_error > 0.0).then(|| (t.profit_estimate - analytic) / t.standard_error),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let diag = json!({
        "num_consumers": report.num_consumers,
        "seed": report.seed,
        "total_units": report.total_units(),
        "rng": "ChaCha8, one stream per block of 65536 consumers",
    });
    Product::new("simulate", &rows, diag)
}

#[derive(Serialize)]
struct CheckRow<'a> {
    check: &'a str,
    passed: bool,
    value: f64,
    tolerance: f64,
    detail: &'a str,
}

pub fn validate(cfg: &ScenarioConfig) -> Result<Product, CliError> {
    let options = ValidationOptions {
        num_consumers: cfg.montecarlo.num_consumers,
        seed: cfg.montecarlo.seed,
        settings: cfg.solver.settings()?,
    };
    let report = run_validation(&options);
    let rows: Vec<CheckRow> = report
        .checks
        .iter()
        .map(|c| CheckRow { check: c.name, passed: c.passed, value: c.value, tolerance: c.tolerance, detail: &c.detail })
        .collect();
    let failed: Vec<String> = report.failures().map(|c| c.name.to_string()).collect();
    let diag = json!({ "checks": report.checks.len(), "failed": failed });
    let mut product = Product::new("validate", &rows, diag)?;
    product.failed_checks = failed;
    Ok(product)
}

#[derive(Serialize)]
struct AcceptanceRow {
    panel: &'static str,
    alpha: f64,
    p_max: f64,
    quality: f64,
    price: f64,
    attractiveness: f64,
    acceptance: f64,
    clamped: bool,
}

/// Acceptance probability against quality at fixed price (panel a) and
/// against price at fixed quality (panel b); both fixed values are `p_max/2`.
pub fn fig1(cfg: &ScenarioConfig) -> Result<Product, CliError> {
    let pm = cfg.p_max_or(2.0);
    let mid = pm / 2.0;
    let points = cfg.grids.curve_points;
    let mut rows = Vec::new();
    for &alpha in &cfg.grids.acceptance_alphas {
        let pop = population(alpha, pm)?;
        let a = linspace(0.0, pm, points).map(|q| ("a", q, mid));
        let b = linspace(0.0, pm, points).skip(1).map(|p| ("b", mid, p));
        for (panel, q, p) in a.chain(b) {
            let offer = Offer::new(q, p)?;
            let acc = acceptance(offer, pop);
            rows.push(AcceptanceRow {
                panel,
                alpha,
                p_max: pm,
                quality: q,
                price: p,
                attractiveness: attractiveness(offer, pop),
                acceptance: acc.probability,
                clamped: acc.clamped,
            });
        }
    }
    Product::new("fig1", &rows, json!({ "fixed_price": mid, "fixed_quality": mid, "p_max": pm }))
}

#[derive(Serialize)]
struct Fig2Row {
    alpha: f64,
    n: u64,
    q_nash: f64,
    p_nash: f64,
    x_nash: f64,
    rho: f64,
    xi: f64,
    marginal: f64,
}

pub fn fig2(cfg: &ScenarioConfig) -> Result<Product, CliError> {
    let pm = cfg.p_max_or(1.0);
    let alphas = cfg.grids.alpha.values("alpha")?;
    let mut rows = Vec::new();
    for &n in &cfg.grids.n {
        for &alpha in &alphas {
            let e = nash_symmetric(n, population(alpha, pm)?);
            rows.push(Fig2Row {
                alpha,
                n,
                q_nash: e.q_nash,
                p_nash: e.p_nash,
                x_nash: e.x_nash,
                rho: e.quality_ratio,
                xi: e.profit_ratio,
                marginal: e.marginal,
            });
        }
    }
    let thresholds: Vec<Value> = cfg
        .grids
        .n
        .iter()
        .map(|&n| json!({ "n": n, "rho_crosses_one_at_alpha": quality_ratio_threshold(n), "xi_alpha_limit": profit_ratio_alpha_limit(n) }))
        .collect();
    let diag = json!({
        "p_max": pm,
        "reference_lines": {
            "xi_two_firms_alpha_to_infinity": profit_ratio_alpha_limit(2),
            "xi_many_firms_alpha_to_infinity": many_firms::profit_ratio_floor(),
        },
        "per_n": thresholds,
    });
    Product::new("fig2", &rows, diag)
}

pub fn fig3(cfg: &ScenarioConfig) -> Result<Product, CliError> {
    let pm = cfg.p_max_or(1.0);
    let alphas = cfg.grids.alpha.values("alpha")?;
    let rows = scenario_price_competition(pm, &alphas, &cfg.solver.settings()?)?;
    let non_converged = rows.iter().filter(|r| !r.converged).count();
    // alpha = 0 leaves quality irrelevant, so ties show up as rounding noise
    let slack = 1e-8;
    let violations: Vec<f64> = rows
        .iter()
        .filter(|r| {
            let s = slack * r.both.abs();
            !(r.both + s >= r.price_only && r.price_only + s >= r.quality_only && r.quality_only + s >= r.do_nothing)
        })
        .map(|r| r.alpha)
        .collect();
    let diag = json!({
        "p_max": pm,
        "firm1": "quality fixed at the monopolist optimum, price free",
        "baseline": "half the monopolist profit",
        "non_converged": non_converged,
        "ordering_violations_at_alpha": violations,
    });
    Ok(Product::new("fig3", &rows, diag)?.with_non_converged(non_converged))
}

#[derive(Serialize)]
struct Fig4Row {
    tau: f64,
    quality: f64,
    price: f64,
    xi_farsighted: f64,
    xi_optimizing: f64,
    xi_vs_nash: f64,
    xi_nash: f64,
}

pub fn fig4(cfg: &ScenarioConfig) -> Result<Product, CliError> {
    let pop = population(cfg.population.alpha, cfg.p_max_or(1.0))?;
    let sweep = farsighted_sweep(pop, &cfg.grids.tau.values("tau")?)?;
    let rows: Vec<Fig4Row> = sweep
        .rows
        .iter()
        .map(|r| Fig4Row {
            tau: r.tau,
            quality: r.quality,
            price: r.price,
            xi_farsighted: r.xi_farsighted,
            xi_optimizing: r.xi_optimizing,
            xi_vs_nash: r.xi_vs_nash,
            xi_nash: sweep.xi_nash,
        })
        .collect();
    let diag = json!({
        "alpha": pop.alpha(),
        "p_max": pop.p_max(),
        "tau_star": sweep.tau_star,
        "xi_star": sweep.xi_star,
        "xi_nash": sweep.xi_nash,
        "tau_vs_nash_peak": sweep.tau_vs_nash,
    });
    Product::new("fig4", &rows, diag)
}

#[derive(Serialize)]
struct Fig5Row {
    panel: &'static str,
    mode: &'static str,
    alpha: f64,
    lambda: f64,
    q_small: f64,
    p_small: f64,
    q_big: f64,
    p_big: f64,
    xi_small: f64,
    xi_big: f64,
    xi_small_limit: Option<f64>,
    converged: bool,
}

const SMALL_FIRM_MODES: [StrategyMode; 3] = [StrategyMode::QualityOnly, StrategyMode::PriceOnly, StrategyMode::Both];

pub fn fig5(cfg: &ScenarioConfig) -> Result<Product, CliError> {
    let pm = cfg.p_max_or(1.0);
    let settings = cfg.solver.settings()?;
    let lambdas = cfg.grids.lambda.values("lambda")?;
    if let Some(bad) = lambdas.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
        return Err(CliError::Config(format!("lambda grid value {bad} outside (0, 1)")));
    }
    let alphas = cfg.grids.alpha.values("alpha")?;
    let alpha_a = cfg.population.alpha;
    let small = cfg.grids.small_lambda;

    let mut tasks: Vec<(&'static str, StrategyMode, f64, f64)> = Vec::new();
    for mode in SMALL_FIRM_MODES {
        tasks.extend(lambdas.iter().map(|&l| ("a", mode, alpha_a, l)));
    }
    for mode in SMALL_FIRM_MODES {
        tasks.extend(alphas.iter().map(|&a| ("b", mode, a, small)));
    }
    let rows = tasks
        .par_iter()
        .map(|&(panel, mode, alpha, lambda)| {
            let pop = population(alpha, pm)?;
            let r = size_asymmetric_equilibrium(lambda, pop, mode, &settings)?;
            let [s, b] = [r.equilibrium.offers[0], r.equilibrium.offers[1]];
            let limit = (panel == "b" && mode == StrategyMode::Both).then(|| small_firm_optimum(pop).xi_s);
            Ok(Fig5Row {
                panel,
                mode: mode.as_str(),
                alpha,
                lambda,
                q_small: s.quality(),
                p_small: s.price(),
                q_big: b.quality(),
                p_big: b.price(),
                xi_small: r.xi_small,
                xi_big: r.xi_big,
                xi_small_limit: limit,
                converged: r.equilibrium.converged,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let non_converged = rows.iter().filter(|r| !r.converged).count();

    let pop_a = population(alpha_a, pm)?;
    let thresholds: Vec<Value> = SMALL_FIRM_MODES
        .par_iter()
        .map(|&mode| match size_threshold(pop_a, mode, &settings, (0.01, 0.5), 1e-3) {
            Ok(t) => json!({ "mode": mode.as_str(), "lambda_star": t }),
            Err(e @ (SolverError::Bracket(_) | SolverError::NotConverged { .. })) => {
                json!({ "mode": mode.as_str(), "lambda_star": null, "reason": e.to_string() })
            }
            Err(e) => json!({ "mode": mode.as_str(), "lambda_star": null, "reason": format!("error: {e}") }),
        })
        .collect();
    let diag = json!({
        "p_max": pm,
        "panel_a_alpha": alpha_a,
        "panel_b_lambda": small,
        "thresholds": thresholds,
        "threshold_search": { "bracket": [0.01, 0.5], "tolerance": 1e-3 },
        "non_converged": non_converged,
    });
    Ok(Product::new("fig5", &rows, diag)?.with_non_converged(non_converged))
}

#[derive(Serialize)]
struct Fig6Row {
    alpha: f64,
    eta1: f64,
    q1: f64,
    p1: f64,
    q2: f64,
    p2: f64,
    x1: f64,
    x2: f64,
    xi1: f64,
    xi2: f64,
    aggregate: f64,
    clamped1: bool,
    converged: bool,
}

pub fn fig6(cfg: &ScenarioConfig) -> Result<Product, CliError> {
    let pm = cfg.p_max_or(1.0);
    let settings = cfg.solver.settings()?;
    let etas = cfg.grids.eta.values("eta")?;
    let tasks: Vec<(f64, f64)> = cfg
        .grids
        .efficiency_alphas
        .iter()
        .flat_map(|&a| etas.iter().map(move |&e| (a, e)))
        .collect();
    let rows = tasks
        .par_iter()
        .map(|&(alpha, eta1)| {
            let r = efficiency_equilibrium(eta1, population(alpha, pm)?, &settings)?;
            let eq = &r.equilibrium;
            Ok(Fig6Row {
                alpha,
                eta1,
                q1: eq.offers[0].quality(),
                p1: eq.offers[0].price(),
                q2: eq.offers[1].quality(),
                p2: eq.offers[1].price(),
                x1: eq.profits[0],
                x2: eq.profits[1],
                xi1: r.xi[0],
                xi2: r.xi[1],
                aggregate: r.aggregate,
                clamped1: r.clamped,
                converged: eq.converged,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let non_converged = rows.iter().filter(|r| !r.converged).count();
    let clamped: Vec<(f64, f64)> = rows.iter().filter(|r| r.clamped1).map(|r| (r.alpha, r.eta1)).collect();
    let diag = json!({
        "p_max": pm,
        "baseline": "symmetric two-firm Nash profit",
        "non_converged": non_converged,
        "firm1_clamped_at": clamped,
    });
    Ok(Product::new("fig6", &rows, diag)?.with_non_converged(non_converged))
}

#[derive(Serialize)]
struct Fig7Row {
    panel: &'static str,
    curve: &'static str,
    parameter: f64,
    quality: f64,
    price: f64,
    acceptance: f64,
}

/// Gaussian-perception acceptance against quality at fixed price (`main`)
/// and against price at fixed quality (`inset`), with alpha-model overlays.
pub fn fig7(cfg: &ScenarioConfig) -> Result<Product, CliError> {
    let pm = cfg.p_max_or(2.0);
    let mid = pm / 2.0;
    let points = cfg.grids.curve_points;
    let grid: Vec<(&'static str, f64, f64)> = linspace(0.0, pm, points)
        .map(|q| ("main", q, mid))
        .chain(linspace(0.0, pm, points).skip(1).map(|p| ("inset", mid, p)))
        .collect();
    let mut rows = Vec::new();
    for &sigma in &cfg.grids.sigma {
        for &(panel, q, p) in &grid {
            let acceptance = gaussian_acceptance_probability(Offer::new(q, p)?, sigma)?;
            rows.push(Fig7Row { panel, curve: "gaussian", parameter: sigma, quality: q, price: p, acceptance });
        }
    }
    for &alpha in &cfg.grids.overlay_alphas {
        let pop = population(alpha, pm)?;
        for &(panel, q, p) in &grid {
            let acceptance = acceptance(Offer::new(q, p)?, pop).probability;
            rows.push(Fig7Row { panel, curve: "alpha_model", parameter: alpha, quality: q, price: p, acceptance });
        }
    }
    Product::new("fig7", &rows, json!({ "fixed_price": mid, "fixed_quality": mid, "overlay_p_max": pm }))
}
