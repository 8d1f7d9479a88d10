mod common;

use common::{from_market, to_market, unilateral_gain, weight, RefMarket};
use firmcomp::model::{acceptance, gaussian_acceptance_probability};
use firmcomp::montecarlo::{simulate, SimulationConfig};
use firmcomp::solver::{best_response, find_nash, NashSettings, StrategySpace};
use firmcomp::{ConsumerPopulation, Firm, Market, Offer};
use proptest::prelude::*;

fn firm_strategy(p_max: f64) -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0..1.0f64, 0.05..0.95f64, 0.1..1.0f64, 0.5..1.0f64).prop_map(move |(q, p, l, e)| (q * p_max, p * p_max, l, e))
}

fn market_strategy(max_firms: usize) -> impl Strategy<Value = RefMarket> {
    (0.0..5.0f64, 0.5..2.0f64).prop_flat_map(move |(alpha, p_max)| {
        prop::collection::vec(firm_strategy(p_max), 1..=max_firms).prop_map(move |firms| RefMarket { alpha, p_max, firms })
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn selection_probabilities_form_a_distribution(r in market_strategy(6)) {
        let m = to_market(&r);
        prop_assume!(m.selection_weights().iter().any(|&w| w > 0.0));
        let probs = m.selection_probabilities().unwrap();
        for (i, &s) in probs.iter().enumerate() {
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!((s - r.share(i)).abs() < 1e-12);
        }
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profits_match_reference(r in market_strategy(6)) {
        let m = to_market(&r);
        prop_assume!(m.selection_weights().iter().any(|&w| w > 0.0));
        let profits = m.profits().unwrap();
        for (i, &x) in profits.iter().enumerate() {
            prop_assert!(close(x, r.profit(i), 1e-12), "firm {}: {} vs {}", i, x, r.profit(i));
        }
    }

    #[test]
    fn relabelling_firms_permutes_profits(r in market_strategy(5), seed in any::<u64>()) {
        prop_assume!(r.firms.iter().any(|&(q, p, _, _)| weight(q, p, r.alpha, r.p_max) > 0.0));
        let n = r.firms.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled = RefMarket { firms: perm.iter().map(|&i| r.firms[i]).collect(), ..r.clone() };
        let a = to_market(&r).profits().unwrap();
        let b = to_market(&shuffled).profits().unwrap();
        for (k, &i) in perm.iter().enumerate() {
            prop_assert!(close(b[k], a[i], 1e-12));
        }
    }

    #[test]
    fn acceptance_is_a_probability(alpha in 0.0..10.0f64, p_max in 0.1..10.0f64, q in 0.0..3.0f64, p in 0.01..3.0f64) {
        let pop = ConsumerPopulation::new(alpha, p_max).unwrap();
        let a = acceptance(Offer::new(q * p_max, p * p_max).unwrap(), pop);
        prop_assert!((0.0..=1.0).contains(&a.probability));
        let raw = weight(q * p_max, p * p_max, alpha, p_max);
        prop_assert_eq!(a.clamped, raw > 1.0);
        prop_assert!(close(a.probability, raw.min(1.0), 1e-12) || a.probability == raw.min(1.0));
    }

    #[test]
    fn gaussian_acceptance_reflects(q in 0.01..2.0f64, p in 0.01..2.0f64, sigma in 0.01..1.0f64) {
        let forward = gaussian_acceptance_probability(Offer::new(q, p).unwrap(), sigma).unwrap();
        let mirrored = gaussian_acceptance_probability(Offer::new(p, q).unwrap(), sigma).unwrap();
        prop_assert!((0.0..=1.0).contains(&forward));
        prop_assert!((forward + mirrored - 1.0).abs() < 1e-12);
        let better = gaussian_acceptance_probability(Offer::new(q + 0.01, p).unwrap(), sigma).unwrap();
        prop_assert!(better >= forward);
    }

    #[test]
    fn profits_scale_with_budget(r in market_strategy(4), factor in 0.1..10.0f64) {
        prop_assume!(r.firms.iter().any(|&(q, p, _, _)| weight(q, p, r.alpha, r.p_max) > 0.0));
        let scaled = RefMarket {
            p_max: r.p_max * factor,
            firms: r.firms.iter().map(|&(q, p, l, e)| (q * factor, p * factor, l, e)).collect(),
            ..r.clone()
        };
        let a = to_market(&r).profits().unwrap();
        let b = to_market(&scaled).profits().unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y - factor * x).abs() <= 1e-10 * (factor * x).abs().max(1e-12));
        }
    }

    #[test]
    fn simulation_is_deterministic_and_bounded(r in market_strategy(4), n in 1u64..150_000, seed in any::<u64>()) {
        let m = to_market(&r);
        prop_assume!(m.selection_weights().iter().any(|&w| w > 0.0));
        let cfg = SimulationConfig::new(m, n, seed).unwrap();
        let a = simulate(&cfg).unwrap();
        prop_assert!(a.total_units() <= n);
        for f in &a.firms {
            prop_assert!(f.units_sold <= n);
            prop_assert!(f.standard_error >= 0.0);
        }
        prop_assert_eq!(a, simulate(&cfg).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn best_response_beats_grid(r in market_strategy(3)) {
        let m = to_market(&r);
        let eta = r.firms[0].3;
        let space = StrategySpace::both(m.population(), eta);
        let br = match best_response(0, &m, &space) {
            Ok(br) => br,
            Err(_) => return Ok(()),
        };
        let steps = 200;
        let mut best = 0.0f64;
        for b in 1..steps {
            let p = r.p_max * b as f64 / steps as f64;
            for a in 0..=steps {
                let q = r.p_max * a as f64 / steps as f64;
                best = best.max(r.with_offer(0, q, p).profit(0));
            }
        }
        let found = r.with_offer(0, br.offer.quality(), br.offer.price()).profit(0);
        prop_assert!(close(found, br.profit, 1e-9));
        prop_assert!(found >= best - 1e-9 * r.p_max, "best response {} below grid {}", found, best);
    }

    #[test]
    fn converged_equilibria_admit_no_profitable_deviation(
        alpha in 0.2..5.0f64,
        weights in prop::collection::vec((0.2..1.0f64, 0.7..1.0f64), 2..=3),
    ) {
        let pop = ConsumerPopulation::new(alpha, 1.0).unwrap();
        let start = Offer::new(0.3, 0.4).unwrap();
        let firms: Vec<Firm> = weights.iter().map(|&(l, e)| Firm::new(start, l, e).unwrap()).collect();
        let market = Market::new(firms, pop).unwrap();
        let spaces: Vec<StrategySpace> = weights.iter().map(|&(_, e)| StrategySpace::both(pop, e)).collect();
        let eq = find_nash(&market, &spaces, &NashSettings::default()).unwrap();
        prop_assume!(eq.converged);
        let r = from_market(&eq.market(&market));
        let scale = eq.profits.iter().cloned().fold(0.0, f64::max);
        for h in [1e-3, 1e-5] {
            let gain = unilateral_gain(&r, h);
            prop_assert!(gain <= 1e-9 * scale, "h {}: gain {:e} (profit scale {:e})", h, gain, scale);
        }
    }
}
