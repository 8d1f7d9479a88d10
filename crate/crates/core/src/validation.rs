//! Self-check suite: closed forms against the numerical solver and the
//! numerical model against Monte Carlo consumers.
//!
//! Every check records the worst observed deviation next to its tolerance so
//! a failing run says by how much it failed.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analytic::{
    many_firms, monopolist_optimum, nash_symmetric, profit_ratio, quality_ratio, quality_ratio_threshold,
    small_firm_optimum,
};
use crate::error::{ModelError, SolverError};
use crate::model::{gaussian_acceptance_probability, per_consumer_profit, ConsumerPopulation, Firm, Market, Offer};
use crate::montecarlo::{simulate, FirmTally, SimulationConfig};
use crate::scenarios::{
    efficiency_equilibrium, farsighted_sweep, grid, scenario_price_competition, size_asymmetric_equilibrium,
    size_threshold,
};
use crate::solver::{best_response, find_nash, monopolist_numeric, probe_equilibria, NashSettings, StrategyMode, StrategySpace};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst deviation observed (or the measured quantity).
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationOptions {
    pub num_consumers: u64,
    pub seed: u64,
    pub settings: NashSettings,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { num_consumers: 1_000_000, seed: 20_240_101, settings: NashSettings::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

type CheckFn = fn(&ValidationOptions) -> Result<(f64, f64, bool, String), SolverError>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("nash_closed_form", nash_closed_form),
    ("monopolist_closed_form", monopolist_closed_form),
    ("profit_ratio_limits", profit_ratio_limits),
    ("quality_ratio_threshold", quality_threshold_flip),
    ("best_response_grid", best_response_grid),
    ("nash_perturbation", nash_perturbation),
    ("scale_invariance", scale_invariance),
    ("small_firm_limit", small_firm_limit),
    ("size_thresholds", size_thresholds),
    ("strategy_ordering", strategy_ordering),
    ("farsighted_optimum", farsighted_optimum),
    ("efficiency_monotone", efficiency_monotone),
    ("unique_equilibria", unique_equilibria),
    ("monte_carlo_oracle", monte_carlo_oracle),
    ("gaussian_acceptance", gaussian_acceptance),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(name, _)| *name).collect()
}

/// Runs every check. Solver errors inside a check count as a failure of
/// that check, not of the run.
pub fn run_validation(options: &ValidationOptions) -> ValidationReport {
    let checks = CHECKS
        .iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let outcome = f(options);
            let seconds = start.elapsed().as_secs_f64();
            match outcome {
                Ok((value, tolerance, passed, detail)) => CheckOutcome { name, passed, value, tolerance, detail, seconds },
                Err(e) => CheckOutcome {
                    name,
                    passed: false,
                    value: f64::NAN,
                    tolerance: f64::NAN,
                    detail: format!("error: {e}"),
                    seconds,
                },
            }
        })
        .collect();
    ValidationReport { checks }
}

fn pop(alpha: f64, p_max: f64) -> ConsumerPopulation {
    ConsumerPopulation::new(alpha, p_max).expect("valid population")
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

const N_GRID: [u64; 4] = [2, 3, 5, 10];
const ALPHA_GRID: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 4.0, 10.0];

fn nash_closed_form(o: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let mut worst = 0.0f64;
    let mut unconverged = 0;
    for n in N_GRID {
        for alpha in ALPHA_GRID {
            let pop = pop(alpha, 1.0);
            let exact = nash_symmetric(n, pop);
            // start away from the answer so the iteration has work to do
            let start = monopolist_optimum(pop).offer();
            let market = Market::symmetric(n as usize, start, pop)?;
            let spaces = StrategySpace::for_market(&market, StrategyMode::Both);
            let eq = find_nash(&market, &spaces, &o.settings)?;
            unconverged += usize::from(!eq.converged);
            for (offer, x) in eq.offers.iter().zip(&eq.profits) {
                let q_err = if exact.q_nash == 0.0 { offer.quality().abs() } else { rel(offer.quality(), exact.q_nash) };
                worst = worst.max(q_err).max(rel(offer.price(), exact.p_nash)).max(rel(*x, exact.x_nash));
            }
        }
    }
    let tol = 1e-6;
    Ok((worst, tol, worst < tol && unconverged == 0, format!("24 markets, {unconverged} not converged")))
}

fn monopolist_closed_form(_: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let mut worst = 0.0f64;
    for alpha in [0.5, 1.0, 2.0, 4.0] {
        let pop = pop(alpha, 1.0);
        let exact = monopolist_optimum(pop);
        let br = monopolist_numeric(pop, 1.0)?;
        worst = worst
            .max(rel(br.offer.quality(), exact.q_star))
            .max(rel(br.offer.price(), exact.p_star))
            .max(rel(br.profit, exact.x_star));
        // two-firm ratio from the monopolist profit against its closed form
        let xi = nash_symmetric(2, pop).x_nash / (exact.x_star / 2.0);
        worst = worst.max(rel(xi, profit_ratio(2, alpha)));
    }
    let tol = 1e-6;
    Ok((worst, tol, worst < tol, "alpha in {0.5, 1, 2, 4}".into()))
}

fn profit_ratio_limits(_: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let duo = (profit_ratio(2, 1e4) - 16.0 * (1.0f64 / 3.0).exp() / 25.0).abs();
    let many = (profit_ratio(1_000_000, 1e4) - 4.0 * 0.5f64.exp() / 9.0).abs();
    let floor = (many_firms::profit_ratio(1e6) - many_firms::profit_ratio_floor()).abs();
    let worst = duo.max(many).max(floor);
    let tol = 1e-3;
    Ok((worst, tol, worst < tol, format!("n=2: {duo:.2e}, n=1e6: {many:.2e}, n=inf: {floor:.2e}")))
}

fn quality_threshold_flip(_: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let eps = 1e-9;
    let mut ok = true;
    for n in N_GRID {
        let t = quality_ratio_threshold(n);
        ok &= quality_ratio(n, t - eps) > 1.0 && quality_ratio(n, t + eps) < 1.0;
    }
    Ok((eps, eps, ok, "sign of rho_n - 1 flips at n/(2n-1)".into()))
}

fn random_market(rng: &mut ChaCha8Rng, max_firms: usize) -> Result<Market, SolverError> {
    let p_max = rng.gen_range(0.5..2.0);
    let pop = pop(rng.gen_range(0.0..5.0), p_max);
    let n = rng.gen_range(1..=max_firms);
    let firms = (0..n)
        .map(|_| {
            let offer = Offer::new(rng.gen_range(0.0..p_max), rng.gen_range(0.05..0.95) * p_max)?;
            Firm::new(offer, rng.gen_range(0.1..1.0), rng.gen_range(0.5..1.0))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Market::new(firms, pop)?)
}

fn best_response_grid(o: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut worst = f64::NEG_INFINITY;
    let points = 100;
    for _ in 0..20 {
        let market = random_market(&mut rng, 3)?;
        let firm = *market.firm(0)?;
        let space = StrategySpace::both(market.population(), firm.efficiency());
        let br = match best_response(0, &market, &space) {
            Ok(br) => br,
            Err(SolverError::NoProfitablePoint { .. }) => continue,
            Err(e) => return Err(e),
        };
        let (qb, pb) = (space.quality_bounds, space.price_bounds);
        let mut probe = market.clone();
        for a in 0..=points {
            for b in 0..=points {
                let q = qb.0 + (qb.1 - qb.0) * a as f64 / points as f64;
                let p = pb.0 + (pb.1 - pb.0) * b as f64 / points as f64;
                probe.set_offer(0, Offer::new(q, p)?);
                // a zero-weight probe facing zero-weight rivals sells nothing
                let x = match per_consumer_profit(0, &probe) {
                    Err(ModelError::AllWeightsZero) => 0.0,
                    other => other?,
                };
                worst = worst.max(x - br.profit);
            }
        }
    }
    let tol = 1e-8;
    Ok((worst, tol, worst <= tol, "20 random markets, 101x101 grid".into()))
}

fn perturbation_gain(market: &Market, spaces: &[StrategySpace], step: f64) -> Result<f64, SolverError> {
    let mut worst = f64::NEG_INFINITY;
    for (i, space) in spaces.iter().enumerate() {
        let base = per_consumer_profit(i, market)?;
        let offer = market.firm(i)?.offer();
        let mut moves = Vec::new();
        if space.free_quality {
            moves.extend([(step, 0.0), (-step, 0.0)]);
        }
        if space.free_price {
            moves.extend([(0.0, step), (0.0, -step)]);
        }
        for (dq, dp) in moves {
            let (q, p) = (offer.quality() + dq, offer.price() + dp);
            if q < space.quality_bounds.0 || q > space.quality_bounds.1 || p < space.price_bounds.0 || p > space.price_bounds.1 {
                continue;
            }
            let mut probe = market.clone();
            probe.set_offer(i, Offer::new(q, p)?);
            worst = worst.max(per_consumer_profit(i, &probe)? - base);
        }
    }
    Ok(worst)
}

fn nash_perturbation(o: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let mut worst = f64::NEG_INFINITY;
    for alpha in [0.5, 2.0, 4.0] {
        let pop = pop(alpha, 1.0);
        for lambda in [0.1, 0.3] {
            let r = size_asymmetric_equilibrium(lambda, pop, StrategyMode::Both, &o.settings)?;
            let market = Market::new(
                vec![Firm::new(r.equilibrium.offers[0], lambda, 1.0)?, Firm::new(r.equilibrium.offers[1], 1.0 - lambda, 1.0)?],
                pop,
            )?;
            worst = worst.max(perturbation_gain(&market, &StrategySpace::for_market(&market, StrategyMode::Both), 1e-4)?);
        }
        for eta in [0.7, 0.9] {
            let r = efficiency_equilibrium(eta, pop, &o.settings)?;
            let market = Market::new(
                vec![Firm::new(r.equilibrium.offers[0], 1.0, eta)?, Firm::new(r.equilibrium.offers[1], 1.0, 1.0)?],
                pop,
            )?;
            worst = worst.max(perturbation_gain(&market, &StrategySpace::for_market(&market, StrategyMode::Both), 1e-4)?);
        }
    }
    let tol = 1e-9;
    Ok((worst, tol, worst <= tol, "size and efficiency equilibria, steps of 1e-4 p_max".into()))
}

fn scale_invariance(o: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let mut worst = 0.0f64;
    for c in [0.25, 3.0] {
        let base = pop(2.0, 1.0);
        let scaled = base.scaled(c)?;
        let a = size_asymmetric_equilibrium(0.2, base, StrategyMode::Both, &o.settings)?;
        let b = size_asymmetric_equilibrium(0.2, scaled, StrategyMode::Both, &o.settings)?;
        for (x, y) in a.equilibrium.offers.iter().zip(&b.equilibrium.offers) {
            worst = worst.max(rel(y.quality(), c * x.quality())).max(rel(y.price(), c * x.price()));
        }
        for (x, y) in a.equilibrium.profits.iter().zip(&b.equilibrium.profits) {
            worst = worst.max(rel(*y, c * x));
        }
        worst = worst.max((a.xi_small - b.xi_small).abs()).max((a.xi_big - b.xi_big).abs());
    }
    let tol = 1e-10;
    Ok((worst, tol, worst < tol, "lambda = 0.2, alpha = 2, p_max scaled by 0.25 and 3".into()))
}

fn small_firm_limit(o: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let mut worst = 0.0f64;
    for alpha in [0.0, 0.5, 2.0] {
        let pop = pop(alpha, 1.0);
        let exact = small_firm_optimum(pop);
        let r = size_asymmetric_equilibrium(1e-4, pop, StrategyMode::Both, &o.settings)?;
        let offer = r.equilibrium.offers[0];
        let q_err = if exact.q_s == 0.0 { offer.quality().abs() } else { rel(offer.quality(), exact.q_s) };
        worst = worst.max(q_err).max(rel(offer.price(), exact.p_s)).max((r.xi_small - exact.xi_s).abs());
    }
    let tol = 1e-3;
    Ok((worst, tol, worst < tol, "lambda = 1e-4, alpha in {0, 0.5, 2}".into()))
}

fn size_thresholds(o: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let mut worst = 0.0f64;
    let mut found = Vec::new();
    for (alpha, expected) in [(0.0, 0.30), (2.0, 0.279), (4.0, 0.275)] {
        let t = size_threshold(pop(alpha, 1.0), StrategyMode::Both, &o.settings, (0.01, 0.5), 1e-3)?;
        found.push(format!("{t:.4}"));
        worst = worst.max((t - expected).abs());
    }
    let tol = 5e-3;
    Ok((worst, tol, worst <= tol, format!("lambda* at alpha 0, 2, 4: {}", found.join(", "))))
}

fn strategy_ordering(o: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let rows = scenario_price_competition(1.0, &grid(0.0, 10.0, 0.25), &o.settings)?;
    // alpha = 0 makes quality irrelevant, so two responses tie up to solver noise
    let slack = 1e-8;
    let mut ok = true;
    let mut gap = 0.0f64;
    for r in &rows {
        let s = slack * r.both.abs();
        ok &= r.converged
            && r.both + s >= r.price_only
            && r.price_only + s >= r.quality_only
            && r.quality_only + s >= r.do_nothing;
        if r.alpha <= 1.0 {
            gap = gap.max((r.both - r.price_only) / r.both);
        }
    }
    let tol = 0.02;
    Ok((gap, tol, ok && gap < tol, format!("{} alphas; value is the price-only gap for alpha <= 1", rows.len())))
}

fn farsighted_optimum(_: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let sweep = farsighted_sweep(pop(2.0, 1.0), &grid(0.0, 1.5, 0.005))?;
    let ok = (sweep.tau_star - 0.92).abs() <= 0.01 + 1e-12
        && sweep.xi_star > sweep.xi_nash
        && (sweep.tau_vs_nash - 1.0).abs() <= 0.005 + 1e-12;
    Ok((
        sweep.tau_star,
        0.01,
        ok,
        format!("tau* = {:.3}, vs-Nash peak at {:.3}", sweep.tau_star, sweep.tau_vs_nash),
    ))
}

fn efficiency_monotone(o: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let mut ok = true;
    let mut sym = 0.0f64;
    for alpha in [1.0, 2.0, 4.0] {
        let pop = pop(alpha, 1.0);
        let nash = nash_symmetric(2, pop);
        let results = grid(0.6, 1.0, 0.05)
            .into_iter()
            .map(|eta| efficiency_equilibrium(eta, pop, &o.settings))
            .collect::<Result<Vec<_>, _>>()?;
        let last = results.last().expect("grid has points");
        for offer in &last.equilibrium.offers {
            sym = sym.max(rel(offer.quality(), nash.q_nash)).max(rel(offer.price(), nash.p_nash));
        }
        for pair in results.windows(2) {
            let (lo, hi) = (&pair[0], &pair[1]);
            ok &= lo.equilibrium.converged
                && lo.equilibrium.profits[0] > hi.equilibrium.profits[0]
                && lo.aggregate > hi.aggregate;
        }
        for r in &results[..results.len() - 1] {
            let gain = r.equilibrium.profits[0] - nash.x_nash;
            let loss = nash.x_nash - r.equilibrium.profits[1];
            ok &= gain > loss && r.equilibrium.offers[0].quality() > r.equilibrium.offers[1].quality();
        }
    }
    let tol = 1e-8;
    Ok((sym, tol, ok && sym < tol, "alpha in {1, 2, 4}; value is the deviation from symmetric Nash at eta = 1".into()))
}

fn unique_equilibria(o: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let pop = pop(2.0, 1.0);
    let pm = pop.p_max();
    let starts: Vec<Vec<Offer>> = [0.2, 0.5, 0.8]
        .iter()
        .flat_map(|&fq| [0.2, 0.5, 0.8].map(|fp| (fq, fp)))
        .map(|(fq, fp)| Offer::new(fq * fp * pm, fp * pm).map(|o| vec![o, o]))
        .collect::<Result<_, _>>()?;
    let mut counts = Vec::new();
    for (weights, effs) in [([0.2, 0.8], [1.0, 1.0]), ([0.5, 0.5], [0.7, 1.0])] {
        let firms = (0..2)
            .map(|i| Firm::new(starts[0][0], weights[i], effs[i]))
            .collect::<Result<Vec<_>, _>>()?;
        let market = Market::new(firms, pop)?;
        let spaces = StrategySpace::for_market(&market, StrategyMode::Both);
        counts.push(probe_equilibria(&market, &spaces, &o.settings, &starts)?.len());
    }
    let ok = counts.iter().all(|&c| c == 1);
    Ok((counts.iter().copied().max().unwrap_or(0) as f64, 1.0, ok, format!("distinct equilibria from 9 starts: {counts:?}")))
}

/// Deviation of a simulated profit from `exact` in standard errors. When
/// every consumer (or none) bought, the sample SE is zero and the SE implied
/// by the exact purchase probability `exact / margin` is used instead.
pub fn z_score(tally: &FirmTally, exact: f64, margin: f64, num_consumers: u64) -> f64 {
    let diff = (tally.profit_estimate - exact).abs();
    let se = if tally.standard_error > 0.0 {
        tally.standard_error
    } else if margin != 0.0 {
        let pi = (exact / margin).clamp(0.0, 1.0);
        margin.abs() * (pi * (1.0 - pi) / num_consumers as f64).sqrt()
    } else {
        0.0
    };
    if se > 0.0 {
        diff / se
    } else if diff <= 4.0 * f64::EPSILON * exact.abs().max(tally.profit_estimate.abs()) {
        0.0
    } else {
        f64::INFINITY
    }
}

fn monte_carlo_oracle(o: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed ^ 0x5eed);
    let mut worst_z = 0.0f64;
    let mut worst_scaling = 0.0f64;
    for k in 0..10 {
        let market = random_market(&mut rng, 4)?;
        if market.selection_weights().iter().all(|&w| w == 0.0) {
            continue;
        }
        let exact = market.profits()?;
        let seed = o.seed.wrapping_add(k);
        let big = simulate(&SimulationConfig::new(market.clone(), o.num_consumers, seed)?)?;
        let small = simulate(&SimulationConfig::new(market.clone(), (o.num_consumers / 100).max(2), seed)?)?;
        let margins: Vec<f64> = market.firms().iter().map(|f| f.offer().margin(f.efficiency())).collect();
        for (((b, s), x), m) in big.firms.iter().zip(&small.firms).zip(&exact).zip(&margins) {
            worst_z = worst_z.max(z_score(b, *x, *m, o.num_consumers));
            // the SE estimate itself is only trustworthy with plenty of both outcomes
            let rare = s.units_sold.min(small.num_consumers - s.units_sold);
            if rare >= 100 && b.standard_error > 0.0 {
                worst_scaling = worst_scaling.max((s.standard_error / b.standard_error / 10.0 - 1.0).abs());
            }
        }
    }
    let tol = 4.0;
    Ok((
        worst_z,
        tol,
        worst_z < tol && worst_scaling < 0.2,
        format!("10 random markets, {} consumers; worst SE scaling deviation {worst_scaling:.3}", o.num_consumers),
    ))
}

fn gaussian_acceptance(o: &ValidationOptions) -> Result<(f64, f64, bool, String), SolverError> {
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let mut ok = true;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = rng.gen_range(0.01..2.0);
        let sigma = rng.gen_range(0.05..2.0);
        ok &= gaussian_acceptance_probability(Offer::new(q, q)?, sigma)? == 0.5;
        let d = rng.gen_range(-1.0..1.0);
        let p = 3.0;
        let up = gaussian_acceptance_probability(Offer::new(p + d, p)?, sigma)?;
        let down = gaussian_acceptance_probability(Offer::new(p - d, p)?, sigma)?;
        worst = worst.max((up + down - 1.0).abs());
    }
    let tol = 1e-12;
    Ok((worst, tol, ok && worst < tol, "P(Q = p) = 1/2 and P(p + d) + P(p - d) = 1".into()))
}
