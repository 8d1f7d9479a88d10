//! Numerical best responses and Nash equilibria.
//!
//! A best response maximizes one firm's per-consumer profit over its free
//! variables with every other offer held fixed. Because the other firms only
//! enter through the sum of their selection weights, that sum is computed
//! once per best response.
//!
//! Equilibria are found by damped round-robin best-response iteration. The
//! damping is halved whenever the largest offer change fails to shrink over a
//! full oscillation window.

use serde::Serialize;

use crate::analytic::monopolist_optimum;
use crate::error::SolverError;
use crate::model::{attractiveness_raw, ConsumerPopulation, Market, Offer};
use crate::optimize::{maximize_scalar, newton_polish, Interval};

/// Lowest admissible price, as a fraction of `p_max`.
const PRICE_FLOOR: f64 = 1e-9;
/// Highest admissible price, as a fraction of `p_max`.
const PRICE_CEILING: f64 = 1.0 - 1e-12;
const OUTER_SCAN: usize = 24;
const INNER_SCAN: usize = 12;
const GOLDEN_TOL: f64 = 1e-11;
const POLISH_STEPS: usize = 12;
/// Finite-difference step for first-order checks, as a fraction of `p_max`.
pub const FD_STEP: f64 = 1e-6;

/// Which of its two variables a firm may adjust.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyMode {
    Fixed,
    QualityOnly,
    PriceOnly,
    Both,
}

impl StrategyMode {
    pub const ALL: [StrategyMode; 4] = [Self::Fixed, Self::QualityOnly, Self::PriceOnly, Self::Both];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Fixed => "do_nothing",
            Self::QualityOnly => "quality",
            Self::PriceOnly => "price",
            Self::Both => "both",
        }
    }

    fn flags(&self) -> (bool, bool) {
        match self {
            Self::Fixed => (false, false),
            Self::QualityOnly => (true, false),
            Self::PriceOnly => (false, true),
            Self::Both => (true, true),
        }
    }
}

/// Free variables of one firm and the box they live in. Fixed variables keep
/// whatever value the firm's current offer has.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategySpace {
    pub free_quality: bool,
    pub free_price: bool,
    pub quality_bounds: (f64, f64),
    pub price_bounds: (f64, f64),
}

impl StrategySpace {
    /// Widest economically meaningful box: `0 <= Q <= p_max/eta`, `0 < p < p_max`.
    pub fn new(mode: StrategyMode, pop: ConsumerPopulation, efficiency: f64) -> Self {
        let (free_quality, free_price) = mode.flags();
        let pm = pop.p_max();
        Self {
            free_quality,
            free_price,
            quality_bounds: (0.0, pm / efficiency),
            price_bounds: (PRICE_FLOOR * pm, PRICE_CEILING * pm),
        }
    }

    pub fn both(pop: ConsumerPopulation, efficiency: f64) -> Self {
        Self::new(StrategyMode::Both, pop, efficiency)
    }

    pub fn fixed(pop: ConsumerPopulation) -> Self {
        Self::new(StrategyMode::Fixed, pop, 1.0)
    }

    /// One space per firm, all with the given mode and each firm's own efficiency.
    pub fn for_market(market: &Market, mode: StrategyMode) -> Vec<Self> {
        market
            .firms()
            .iter()
            .map(|f| Self::new(mode, market.population(), f.efficiency()))
            .collect()
    }

    pub fn is_optimizing(&self) -> bool {
        self.free_quality || self.free_price
    }

    fn quality(&self) -> Interval {
        Interval::new(self.quality_bounds.0, self.quality_bounds.1)
    }

    fn price(&self) -> Interval {
        Interval::new(self.price_bounds.0, self.price_bounds.1)
    }

    pub fn validate(&self, pop: ConsumerPopulation, efficiency: f64) -> Result<(), String> {
        let (qlo, qhi) = self.quality_bounds;
        let (plo, phi) = self.price_bounds;
        let q_cap = pop.p_max() / efficiency * (1.0 + 1e-12);
        if !(qlo >= 0.0 && qlo < qhi && qhi <= q_cap) {
            return Err(format!("quality bounds ({qlo}, {qhi}) must satisfy 0 <= lo < hi <= p_max/eta"));
        }
        if !(plo > 0.0 && plo < phi && phi < pop.p_max()) {
            return Err(format!("price bounds ({plo}, {phi}) must satisfy 0 < lo < hi < p_max"));
        }
        Ok(())
    }

    /// Moves the free variables of `offer` into the box.
    fn project(&self, offer: Offer) -> Offer {
        let q = if self.free_quality { self.quality().clamp(offer.quality()) } else { offer.quality() };
        let p = if self.free_price { self.price().clamp(offer.price()) } else { offer.price() };
        Offer::from_raw(q, p)
    }
}

/// Profit of one firm as a function of its own offer, rivals frozen.
#[derive(Debug, Clone, Copy)]
struct Objective {
    alpha: f64,
    p_max: f64,
    weight: f64,
    efficiency: f64,
    rivals: f64,
}

impl Objective {
    fn new(i: usize, market: &Market) -> Self {
        let pop = market.population();
        let weights = market.selection_weights();
        let rivals = weights.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, w)| w).sum();
        let firm = market.firms()[i];
        Self {
            alpha: pop.alpha(),
            p_max: pop.p_max(),
            weight: firm.size_weight(),
            efficiency: firm.efficiency(),
            rivals,
        }
    }

    fn profit(&self, q: f64, p: f64) -> f64 {
        let w = attractiveness_raw(q, p, self.alpha, self.p_max);
        let own = self.weight * w;
        let total = own + self.rivals;
        if !(total > 0.0) {
            return 0.0;
        }
        own / total * w.min(1.0) * (p - self.efficiency * q)
    }

    fn clamped(&self, q: f64, p: f64) -> bool {
        at_clamp(attractiveness_raw(q, p, self.alpha, self.p_max))
    }
}

/// Optima pinned to the kink at w = 1 land within solver accuracy of it.
const CLAMP_TOLERANCE: f64 = 1e-6;

fn at_clamp(w: f64) -> bool {
    w >= 1.0 - CLAMP_TOLERANCE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestResponse {
    pub offer: Offer,
    pub profit: f64,
    /// The optimum sits on or beyond the acceptance clamp boundary (raw
    /// acceptance expression >= 1, up to solver accuracy).
    pub clamped: bool,
}

/// Profit-maximizing offer of firm `i` with all other offers held fixed.
///
/// Fails with [`SolverError::NoProfitablePoint`] (carrying the best point
/// found) when no strictly positive profit is reachable.
pub fn best_response(i: usize, market: &Market, space: &StrategySpace) -> Result<BestResponse, SolverError> {
    let firm = *market.firm(i)?;
    let pop = market.population();
    space
        .validate(pop, firm.efficiency())
        .map_err(|reason| SolverError::InvalidSpace { firm: i, reason })?;
    let obj = Objective::new(i, market);
    let scale = pop.p_max();
    let tol = GOLDEN_TOL * scale;
    let current = firm.offer();
    let eta = firm.efficiency();
    let qrange = space.quality();
    let prange = space.price();
    // profitable qualities never exceed p/eta
    let quality_range = |p: f64| {
        let hi = qrange.hi.min(p / eta);
        Interval::new(qrange.lo, hi.max(qrange.lo))
    };

    let (q, p) = match (space.free_quality, space.free_price) {
        (false, false) => (current.quality(), current.price()),
        (false, true) => {
            let q = current.quality();
            let (mut p, _) = maximize_scalar(|p| obj.profit(q, p), prange, OUTER_SCAN, tol);
            let mut x = [p];
            newton_polish(|v| obj.profit(q, v[0]), &mut x, &[prange], scale, POLISH_STEPS);
            p = x[0];
            (q, p)
        }
        (true, false) => {
            let p = current.price();
            let range = quality_range(p);
            let (mut q, _) = maximize_scalar(|q| obj.profit(q, p), range, OUTER_SCAN, tol);
            let mut x = [q];
            newton_polish(|v| obj.profit(v[0], p), &mut x, &[range], scale, POLISH_STEPS);
            q = x[0];
            (q, p)
        }
        (true, true) => {
            let inner = |p: f64| maximize_scalar(|q| obj.profit(q, p), quality_range(p), INNER_SCAN, tol);
            let (p, _) = maximize_scalar(|p| inner(p).1, prange, OUTER_SCAN, tol);
            let (q, _) = inner(p);
            let mut x = [q, p];
            newton_polish(|v| obj.profit(v[0], v[1]), &mut x, &[qrange, prange], scale, POLISH_STEPS);
            (x[0], x[1])
        }
    };
    let offer = Offer::from_raw(q, p);
    let profit = obj.profit(q, p);
    if profit > 0.0 {
        Ok(BestResponse {
            offer,
            profit,
            clamped: obj.clamped(q, p),
        })
    } else {
        Err(SolverError::NoProfitablePoint { offer, profit })
    }
}

/// First-order optimality residual of firm `i` over its free variables,
/// relative to `profit / p_max`.
///
/// At smooth interior points this is the central-difference slope. Next to a
/// bound or across the acceptance clamp kink only ascent directions count,
/// measured with one-sided differences, so a maximum sitting there scores zero.
pub fn first_order_residual(i: usize, market: &Market, space: &StrategySpace) -> f64 {
    let obj = Objective::new(i, market);
    let offer = market.firms()[i].offer();
    let (q, p) = (offer.quality(), offer.price());
    let pm = market.population().p_max();
    let h = FD_STEP * pm;
    let base = obj.profit(q, p);
    let mut slope: f64 = 0.0;
    let mut probe = |free: bool, bounds: Interval, x: f64, at: &dyn Fn(f64) -> (f64, f64)| {
        if !free {
            return;
        }
        let up = (x + h <= bounds.hi).then(|| at(x + h));
        let down = (x - h >= bounds.lo).then(|| at(x - h));
        let here = at(x).1;
        match (up, down) {
            (Some((fu, ku)), Some((fd, kd))) if ku == here && kd == here => {
                slope = slope.max(((fu - fd) / (2.0 * h)).abs());
            }
            _ => {
                if let Some((fu, _)) = up {
                    slope = slope.max((fu - base) / h);
                }
                if let Some((fd, _)) = down {
                    slope = slope.max((fd - base) / h);
                }
            }
        }
    };
    let kink = |q: f64, p: f64| if attractiveness_raw(q, p, obj.alpha, obj.p_max) > 1.0 { 1.0 } else { 0.0 };
    probe(space.free_quality, space.quality(), q, &|v| (obj.profit(v, p), kink(v, p)));
    probe(space.free_price, space.price(), p, &|v| (obj.profit(q, v), kink(q, v)));
    if slope == 0.0 {
        0.0
    } else {
        slope * pm / base.abs().max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NashSettings {
    /// Fraction of the way each offer moves toward its best response.
    pub damping: f64,
    /// Stop once no offer variable moves more than `tolerance * p_max`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Iterations over which the change must shrink before damping is halved.
    pub oscillation_window: usize,
    /// Largest first-order residual accepted as converged.
    pub residual_tolerance: f64,
}

impl Default for NashSettings {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-9,
            max_iterations: 10_000,
            oscillation_window: 100,
            residual_tolerance: 1e-6,
        }
    }
}

impl NashSettings {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidSetting(m.to_string()));
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if !(self.tolerance > 0.0) || !(self.residual_tolerance > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_iterations == 0 || self.oscillation_window == 0 {
            return bad("iteration limits must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub offers: Vec<Offer>,
    pub profits: Vec<f64>,
    /// Profit over the firm's size-weighted share of the monopolist profit,
    /// unless a scenario states another baseline.
    pub profit_ratios: Vec<f64>,
    pub iterations: usize,
    /// Largest [`first_order_residual`] over optimizing firms.
    pub residual: f64,
    pub converged: bool,
    /// Largest offer change in the last iteration, relative to `p_max`.
    pub last_change: f64,
    pub final_damping: f64,
    /// Per firm: the offer lies where the acceptance probability is clamped.
    pub clamped: Vec<bool>,
}

impl EquilibriumResult {
    pub fn require_converged(self) -> Result<Self, SolverError> {
        if self.converged {
            Ok(self)
        } else {
            Err(SolverError::NotConverged {
                iterations: self.iterations,
                change: self.last_change,
                residual: self.residual,
            })
        }
    }

    pub fn market(&self, template: &Market) -> Market {
        template.clone().with_offers(&self.offers)
    }
}

/// Damped round-robin best-response iteration starting from the offers in `market`.
///
/// A result is always returned when inputs are valid; `converged` tells
/// whether the offer change and the first-order residual both fell below
/// their tolerances.
pub fn find_nash(
    market: &Market,
    spaces: &[StrategySpace],
    settings: &NashSettings,
) -> Result<EquilibriumResult, SolverError> {
    settings.validate()?;
    if spaces.len() != market.len() {
        return Err(SolverError::InvalidSetting(format!(
            "{} strategy spaces for {} firms",
            spaces.len(),
            market.len()
        )));
    }
    let pop = market.population();
    for (i, (space, firm)) in spaces.iter().zip(market.firms()).enumerate() {
        if space.is_optimizing() {
            space
                .validate(pop, firm.efficiency())
                .map_err(|reason| SolverError::InvalidSpace { firm: i, reason })?;
        }
    }
    let pm = pop.p_max();
    let mut current = market.clone();
    for (i, space) in spaces.iter().enumerate() {
        if space.is_optimizing() {
            let projected = space.project(current.firms()[i].offer());
            current.set_offer(i, projected);
        }
    }
    let free: Vec<usize> = (0..market.len()).filter(|&i| spaces[i].is_optimizing()).collect();
    // with a single optimizing firm the best response does not depend on its own offer
    let mut damping = if free.len() == 1 { 1.0 } else { settings.damping };
    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut last_change = 0.0;
    let mut settled = free.is_empty();

    while !settled && iterations < settings.max_iterations {
        iterations += 1;
        let mut change: f64 = 0.0;
        for &i in &free {
            let old = current.firms()[i].offer();
            let target = match best_response(i, &current, &spaces[i]) {
                Ok(br) => br.offer,
                Err(SolverError::NoProfitablePoint { offer, .. }) => offer,
                Err(e) => return Err(e),
            };
            let q = old.quality() + damping * (target.quality() - old.quality());
            let p = old.price() + damping * (target.price() - old.price());
            change = change.max((q - old.quality()).abs()).max((p - old.price()).abs());
            current.set_offer(i, Offer::from_raw(q.max(0.0), p));
        }
        last_change = change / pm;
        if free.len() == 1 {
            settled = true;
            break;
        }
        if last_change < settings.tolerance {
            let worst = free
                .iter()
                .map(|&i| first_order_residual(i, &current, &spaces[i]))
                .fold(0.0, f64::max);
            // small steps but a visible gradient: keep iterating
            if worst < settings.residual_tolerance {
                settled = true;
                break;
            }
        }
        history.push(last_change);
        let w = settings.oscillation_window;
        if history.len() > w && last_change >= history[history.len() - 1 - w] {
            damping *= 0.5;
            history.clear();
        }
    }

    let residual = free
        .iter()
        .map(|&i| first_order_residual(i, &current, &spaces[i]))
        .fold(0.0, f64::max);
    let profits = current.profits()?;
    let x_star = monopolist_optimum(pop).x_star;
    let total_weight: f64 = current.firms().iter().map(|f| f.size_weight()).sum();
    let profit_ratios = profits
        .iter()
        .zip(current.firms())
        .map(|(x, f)| x / (f.size_weight() / total_weight * x_star))
        .collect();
    let clamped = current
        .firms()
        .iter()
        .map(|f| at_clamp(crate::model::attractiveness(f.offer(), pop)))
        .collect();
    Ok(EquilibriumResult {
        offers: current.offers(),
        profits,
        profit_ratios,
        iterations,
        residual,
        converged: settled && residual < settings.residual_tolerance,
        last_change,
        final_damping: damping,
        clamped,
    })
}

/// Runs [`find_nash`] from several starting profiles and keeps the distinct
/// converged equilibria (offers differing by more than `1e-6 * p_max`).
pub fn probe_equilibria(
    market: &Market,
    spaces: &[StrategySpace],
    settings: &NashSettings,
    starts: &[Vec<Offer>],
) -> Result<Vec<EquilibriumResult>, SolverError> {
    let pm = market.population().p_max();
    let mut found: Vec<EquilibriumResult> = Vec::new();
    for start in starts {
        let result = find_nash(&market.clone().with_offers(start), spaces, settings)?;
        if !result.converged {
            continue;
        }
        let distinct = found.iter().all(|other| {
            other.offers.iter().zip(&result.offers).any(|(a, b)| {
                (a.quality() - b.quality()).abs() > 1e-6 * pm || (a.price() - b.price()).abs() > 1e-6 * pm
            })
        });
        if distinct {
            found.push(result);
        }
    }
    Ok(found)
}

/// Numerical monopolist optimum (single firm, both variables free).
pub fn monopolist_numeric(pop: ConsumerPopulation, efficiency: f64) -> Result<BestResponse, SolverError> {
    let start = monopolist_optimum(pop).offer();
    let market = Market::new(vec![crate::model::Firm::new(start, 1.0, efficiency)?], pop)?;
    best_response(0, &market, &StrategySpace::both(pop, efficiency))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{nash_symmetric, small_firm_optimum};
    use crate::model::Firm;

    fn pop(alpha: f64, p_max: f64) -> ConsumerPopulation {
        ConsumerPopulation::new(alpha, p_max).unwrap()
    }

    #[test]
    fn monopolist_best_response() {
        let p = pop(1.0, 2.0);
        let br = monopolist_numeric(p, 1.0).unwrap();
        assert!((br.offer.quality() - 0.5).abs() < 1e-10, "{:?}", br);
        assert!((br.offer.price() - 1.0).abs() < 1e-10);
        assert!((br.profit - 0.125).abs() < 1e-15);
    }

    #[test]
    fn alpha_zero_breaks_ties_toward_zero_quality() {
        let br = monopolist_numeric(pop(0.0, 1.0), 1.0).unwrap();
        assert_eq!(br.offer.quality(), 0.0);
        assert!((br.offer.price() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn small_firm_against_monopolist() {
        let p = pop(1.0, 1.0);
        let mono = monopolist_optimum(p).offer();
        let market = Market::new(
            vec![Firm::new(mono, 1e-9, 1.0).unwrap(), Firm::new(mono, 1.0, 1.0).unwrap()],
            p,
        )
        .unwrap();
        let br = best_response(0, &market, &StrategySpace::both(p, 1.0)).unwrap();
        let s = small_firm_optimum(p);
        assert!((s.q_s - 2.0 / 9.0).abs() < 1e-15);
        assert!((br.offer.quality() - s.q_s).abs() < 1e-7, "{br:?}");
        assert!((br.offer.price() - s.p_s).abs() < 1e-7);
    }

    #[test]
    fn fixed_variables_are_untouched() {
        let p = pop(2.0, 1.0);
        let mono = monopolist_optimum(p).offer();
        let market = Market::symmetric(2, mono, p).unwrap();
        let space = StrategySpace::new(StrategyMode::PriceOnly, p, 1.0);
        let br = best_response(0, &market, &space).unwrap();
        assert_eq!(br.offer.quality(), mono.quality());
        assert!(br.offer.price() < mono.price());
        let space = StrategySpace::new(StrategyMode::QualityOnly, p, 1.0);
        let br = best_response(0, &market, &space).unwrap();
        assert_eq!(br.offer.price(), mono.price());
        let br = best_response(0, &market, &StrategySpace::fixed(p)).unwrap();
        assert_eq!(br.offer, mono);
    }

    #[test]
    fn unprofitable_region_reported() {
        let p = pop(1.0, 1.0);
        // price pinned at the budget ceiling: nobody buys
        let stuck = Offer::new(0.1, 1.0).unwrap();
        let market = Market::symmetric(2, stuck, p).unwrap();
        let space = StrategySpace::new(StrategyMode::QualityOnly, p, 1.0);
        match best_response(0, &market, &space) {
            Err(SolverError::NoProfitablePoint { offer, profit }) => {
                assert!(profit <= 0.0);
                assert_eq!(offer.price(), stuck.price());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_space_rejected() {
        let p = pop(1.0, 1.0);
        let market = Market::symmetric(2, monopolist_optimum(p).offer(), p).unwrap();
        let mut space = StrategySpace::both(p, 1.0);
        space.price_bounds = (0.2, 1.5);
        assert!(matches!(
            best_response(0, &market, &space),
            Err(SolverError::InvalidSpace { .. })
        ));
        space = StrategySpace::both(p, 1.0);
        space.quality_bounds = (0.5, 0.2);
        assert!(find_nash(&market, &[space, space], &NashSettings::default()).is_err());
    }

    #[test]
    fn invalid_settings_rejected() {
        let p = pop(1.0, 1.0);
        let market = Market::symmetric(2, monopolist_optimum(p).offer(), p).unwrap();
        let spaces = StrategySpace::for_market(&market, StrategyMode::Both);
        for bad in [
            NashSettings { damping: 0.0, ..Default::default() },
            NashSettings { damping: 1.5, ..Default::default() },
            NashSettings { tolerance: 0.0, ..Default::default() },
            NashSettings { max_iterations: 0, ..Default::default() },
        ] {
            assert!(matches!(find_nash(&market, &spaces, &bad), Err(SolverError::InvalidSetting(_))));
        }
        assert!(find_nash(&market, &spaces[..1], &NashSettings::default()).is_err());
    }

    #[test]
    fn duopoly_equilibrium() {
        let p = pop(1.0, 1.0);
        let market = Market::symmetric(2, monopolist_optimum(p).offer(), p).unwrap();
        let spaces = StrategySpace::for_market(&market, StrategyMode::Both);
        let eq = find_nash(&market, &spaces, &NashSettings::default()).unwrap();
        assert!(eq.converged, "{eq:?}");
        for o in &eq.offers {
            assert!((o.quality() - 0.24).abs() < 0.24e-6);
            assert!((o.price() - 0.4).abs() < 0.4e-6);
        }
        let nash = nash_symmetric(2, p);
        assert!((eq.profit_ratios[0] - nash.profit_ratio).abs() < 1e-9);
    }

    #[test]
    fn single_firm_takes_one_iteration() {
        let p = pop(1.0, 2.0);
        let market = Market::new(vec![Firm::standard(Offer::new(0.2, 0.7).unwrap())], p).unwrap();
        let eq = find_nash(&market, &[StrategySpace::both(p, 1.0)], &NashSettings::default()).unwrap();
        assert_eq!(eq.iterations, 1);
        assert!(eq.converged);
        assert!((eq.offers[0].quality() - 0.5).abs() < 1e-10);
        assert!((eq.offers[0].price() - 1.0).abs() < 1e-10);
        assert!((eq.profit_ratios[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nothing_to_optimize() {
        let p = pop(1.0, 1.0);
        let market = Market::symmetric(3, Offer::new(0.2, 0.4).unwrap(), p).unwrap();
        let spaces = StrategySpace::for_market(&market, StrategyMode::Fixed);
        let eq = find_nash(&market, &spaces, &NashSettings::default()).unwrap();
        assert_eq!(eq.iterations, 0);
        assert!(eq.converged);
        assert_eq!(eq.offers, market.offers());
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let p = pop(2.0, 1.0);
        let market = Market::symmetric(2, monopolist_optimum(p).offer(), p).unwrap();
        let spaces = StrategySpace::for_market(&market, StrategyMode::Both);
        let settings = NashSettings { max_iterations: 2, ..Default::default() };
        let eq = find_nash(&market, &spaces, &settings).unwrap();
        assert!(!eq.converged);
        assert_eq!(eq.iterations, 2);
        assert!(matches!(eq.require_converged(), Err(SolverError::NotConverged { iterations: 2, .. })));
    }

    #[test]
    fn residual_zero_at_bound_maximum() {
        // alpha = 0: profit falls with quality, optimum pinned at Q = 0
        let p = pop(0.0, 1.0);
        let market = Market::symmetric(2, Offer::new(0.0, 0.4).unwrap(), p).unwrap();
        let r = first_order_residual(0, &market, &StrategySpace::both(p, 1.0));
        assert!(r < 1e-6, "{r}");
    }
}
