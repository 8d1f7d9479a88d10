//! Competition scenarios built on the equilibrium solver.
//!
//! Profit ratios compare a firm's equilibrium profit with what it earns when
//! nobody competes: its size-weighted share of the monopolist profit, or the
//! symmetric Nash profit for the efficiency scenario.

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{farsighted_offer, monopolist_optimum, nash_symmetric};
use crate::error::SolverError;
use crate::model::{per_consumer_profit, ConsumerPopulation, Firm, Market, Offer};
use crate::solver::{best_response, find_nash, EquilibriumResult, NashSettings, StrategyMode, StrategySpace};

/// Evenly spaced grid from `start` to `stop` inclusive.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && stop >= start, "empty grid");
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| start + step * k as f64).collect()
}

/// Firm 2's profit ratio under each response to a price-cutting firm 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceCompetitionRow {
    pub alpha: f64,
    pub do_nothing: f64,
    pub quality_only: f64,
    pub price_only: f64,
    pub both: f64,
    pub converged: bool,
}

impl PriceCompetitionRow {
    pub fn get(&self, mode: StrategyMode) -> f64 {
        match mode {
            StrategyMode::Fixed => self.do_nothing,
            StrategyMode::QualityOnly => self.quality_only,
            StrategyMode::PriceOnly => self.price_only,
            StrategyMode::Both => self.both,
        }
    }
}

/// Firm 1 keeps the monopolist quality and competes on price only; firm 2
/// responds with `response`. Both start from the monopolist offer.
pub fn price_competition_equilibrium(
    pop: ConsumerPopulation,
    response: StrategyMode,
    settings: &NashSettings,
) -> Result<EquilibriumResult, SolverError> {
    let mono = monopolist_optimum(pop);
    let market = Market::symmetric(2, mono.offer(), pop)?;
    let spaces = [
        StrategySpace::new(StrategyMode::PriceOnly, pop, 1.0),
        StrategySpace::new(response, pop, 1.0),
    ];
    find_nash(&market, &spaces, settings)
}

/// One row per `alpha`, computed in parallel.
pub fn scenario_price_competition(
    p_max: f64,
    alphas: &[f64],
    settings: &NashSettings,
) -> Result<Vec<PriceCompetitionRow>, SolverError> {
    alphas
        .par_iter()
        .map(|&alpha| {
            let pop = ConsumerPopulation::new(alpha, p_max)?;
            let mut ratios = [0.0; 4];
            let mut converged = true;
            for (slot, mode) in ratios.iter_mut().zip(StrategyMode::ALL) {
                let eq = price_competition_equilibrium(pop, mode, settings)?;
                converged &= eq.converged;
                *slot = eq.profit_ratios[1];
            }
            Ok(PriceCompetitionRow {
                alpha,
                do_nothing: ratios[0],
                quality_only: ratios[1],
                price_only: ratios[2],
                both: ratios[3],
                converged,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FarsightedRow {
    pub tau: f64,
    pub quality: f64,
    pub price: f64,
    /// Farsighted firm 2 against a best-responding firm 1.
    pub xi_farsighted: f64,
    /// The best-responding firm 1.
    pub xi_optimizing: f64,
    /// Farsighted firm 2 against a firm 1 pinned at the Nash offer.
    pub xi_vs_nash: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FarsightedSweep {
    pub rows: Vec<FarsightedRow>,
    /// Two-firm Nash profit ratio.
    pub xi_nash: f64,
    /// `tau` maximizing `xi_farsighted` on the grid.
    pub tau_star: f64,
    pub xi_star: f64,
    /// `tau` maximizing `xi_vs_nash` on the grid.
    pub tau_vs_nash: f64,
}

pub fn farsighted_point(tau: f64, pop: ConsumerPopulation) -> Result<FarsightedRow, SolverError> {
    let baseline = monopolist_optimum(pop).x_star / 2.0;
    let fixed = farsighted_offer(tau, pop);
    let nash = nash_symmetric(2, pop).offer();

    let market = Market::symmetric(2, nash, pop)?.with_offers(&[nash, fixed]);
    let response = best_response(0, &market, &StrategySpace::both(pop, 1.0))?;
    let market = market.with_offers(&[response.offer, fixed]);
    let xi_optimizing = per_consumer_profit(0, &market)? / baseline;
    let xi_farsighted = per_consumer_profit(1, &market)? / baseline;

    let pinned = Market::symmetric(2, nash, pop)?.with_offers(&[nash, fixed]);
    let xi_vs_nash = per_consumer_profit(1, &pinned)? / baseline;
    Ok(FarsightedRow {
        tau,
        quality: fixed.quality(),
        price: fixed.price(),
        xi_farsighted,
        xi_optimizing,
        xi_vs_nash,
    })
}

pub fn farsighted_sweep(pop: ConsumerPopulation, taus: &[f64]) -> Result<FarsightedSweep, SolverError> {
    if taus.is_empty() {
        return Err(SolverError::InvalidSetting("empty tau grid".into()));
    }
    let rows: Vec<FarsightedRow> = taus
        .par_iter()
        .map(|&tau| farsighted_point(tau, pop))
        .collect::<Result<_, _>>()?;
    let argmax = |key: fn(&FarsightedRow) -> f64| {
        rows.iter()
            .fold(&rows[0], |best, r| if key(r) > key(best) { r } else { best })
    };
    let best = argmax(|r| r.xi_farsighted);
    let vs_nash = argmax(|r| r.xi_vs_nash);
    Ok(FarsightedSweep {
        xi_nash: nash_symmetric(2, pop).profit_ratio,
        tau_star: best.tau,
        xi_star: best.xi_farsighted,
        tau_vs_nash: vs_nash.tau,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeAsymmetricResult {
    pub lambda: f64,
    pub mode: StrategyMode,
    pub equilibrium: EquilibriumResult,
    /// Small firm (index 0) profit over `lambda * X1*`.
    pub xi_small: f64,
    /// Big firm (index 1) profit over `(1 - lambda) * X1*`.
    pub xi_big: f64,
}

/// Small firm of weight `lambda` (free variables chosen by `mode`) against a
/// big firm of weight `1 - lambda` adjusting both variables. Both start at the
/// monopolist offer; the small firm's fixed variable stays there.
pub fn size_asymmetric_equilibrium(
    lambda: f64,
    pop: ConsumerPopulation,
    mode: StrategyMode,
    settings: &NashSettings,
) -> Result<SizeAsymmetricResult, SolverError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(SolverError::InvalidSetting(format!("lambda {lambda} outside (0, 1)")));
    }
    let mono = monopolist_optimum(pop).offer();
    let market = Market::new(
        vec![Firm::new(mono, lambda, 1.0)?, Firm::new(mono, 1.0 - lambda, 1.0)?],
        pop,
    )?;
    let spaces = [StrategySpace::new(mode, pop, 1.0), StrategySpace::both(pop, 1.0)];
    let equilibrium = find_nash(&market, &spaces, settings)?;
    Ok(SizeAsymmetricResult {
        lambda,
        mode,
        xi_small: equilibrium.profit_ratios[0],
        xi_big: equilibrium.profit_ratios[1],
        equilibrium,
    })
}

/// Largest small-firm weight at which competing still beats adopting the
/// monopolist offer, i.e. the root of `xi_small(lambda) = 1`, by bisection
/// on `[lo, hi]` down to width `tol`.
pub fn size_threshold(
    pop: ConsumerPopulation,
    mode: StrategyMode,
    settings: &NashSettings,
    (lo, hi): (f64, f64),
    tol: f64,
) -> Result<f64, SolverError> {
    let excess = |lambda: f64| -> Result<f64, SolverError> {
        let r = size_asymmetric_equilibrium(lambda, pop, mode, settings)?;
        r.equilibrium.clone().require_converged()?;
        Ok(r.xi_small - 1.0)
    };
    let (mut lo, mut hi) = (lo, hi);
    let f_lo = excess(lo)?;
    let f_hi = excess(hi)?;
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(SolverError::Bracket(format!(
            "xi_small - 1 = {f_lo:.3e} at lambda {lo}, {f_hi:.3e} at lambda {hi}; no sign change"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntrantResult {
    pub lambda: f64,
    pub offer: Offer,
    pub profit: f64,
    /// Entrant profit over its profit when adopting the incumbents' offer.
    pub xi_entrant: f64,
    /// Market with incumbents at indices 0 and 1, entrant at 2.
    pub equilibrium: EquilibriumResult,
}

/// A firm of weight `lambda` enters against two incumbents of weight
/// `(1 - lambda)/2` each, frozen at the two-firm Nash offer.
pub fn entrant_vs_duopoly(
    lambda: f64,
    pop: ConsumerPopulation,
    settings: &NashSettings,
) -> Result<EntrantResult, SolverError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(SolverError::InvalidSetting(format!("lambda {lambda} outside (0, 1)")));
    }
    let nash = nash_symmetric(2, pop).offer();
    let incumbent = (1.0 - lambda) / 2.0;
    let friendly = Market::new(
        vec![
            Firm::new(nash, incumbent, 1.0)?,
            Firm::new(nash, incumbent, 1.0)?,
            Firm::new(nash, lambda, 1.0)?,
        ],
        pop,
    )?;
    let baseline = friendly.profits()?;
    let spaces = [
        StrategySpace::fixed(pop),
        StrategySpace::fixed(pop),
        StrategySpace::both(pop, 1.0),
    ];
    let mut equilibrium = find_nash(&friendly, &spaces, settings)?;
    equilibrium.profit_ratios = equilibrium.profits.iter().zip(&baseline).map(|(x, b)| x / b).collect();
    Ok(EntrantResult {
        lambda,
        offer: equilibrium.offers[2],
        profit: equilibrium.profits[2],
        xi_entrant: equilibrium.profit_ratios[2],
        equilibrium,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyResult {
    pub eta1: f64,
    pub equilibrium: EquilibriumResult,
    /// Profit of each firm over the symmetric two-firm Nash profit.
    pub xi: [f64; 2],
    pub aggregate: f64,
    /// Firm 1's equilibrium offer sits where acceptance is clamped to 1.
    pub clamped: bool,
}

/// Two equal-size firms; firm 1 produces with cost `eta1 * Q`, firm 2 with `Q`.
/// Both start at the symmetric Nash offer.
pub fn efficiency_equilibrium(
    eta1: f64,
    pop: ConsumerPopulation,
    settings: &NashSettings,
) -> Result<EfficiencyResult, SolverError> {
    if !(eta1 > 0.0 && eta1 <= 1.0) {
        return Err(SolverError::InvalidSetting(format!("eta1 {eta1} outside (0, 1]")));
    }
    let nash = nash_symmetric(2, pop);
    let market = Market::new(
        vec![Firm::new(nash.offer(), 1.0, eta1)?, Firm::new(nash.offer(), 1.0, 1.0)?],
        pop,
    )?;
    let spaces = StrategySpace::for_market(&market, StrategyMode::Both);
    let equilibrium = find_nash(&market, &spaces, settings)?;
    let xi = [equilibrium.profits[0] / nash.x_nash, equilibrium.profits[1] / nash.x_nash];
    Ok(EfficiencyResult {
        eta1,
        aggregate: equilibrium.profits.iter().sum(),
        clamped: equilibrium.clamped[0],
        xi,
        equilibrium,
    })
}
