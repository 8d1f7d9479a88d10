//! Independent reference implementations used to check the library.
//! Written straight from the model definitions and deliberately not sharing
//! code with the crate.
#![allow(dead_code)]

use rand::Rng;

/// Unclamped attractiveness of an offer.
pub fn weight(q: f64, p: f64, alpha: f64, p_max: f64) -> f64 {
    if p >= p_max {
        return 0.0;
    }
    (1.0 - p / p_max) * (q / p).powf(alpha)
}

#[derive(Debug, Clone)]
pub struct RefMarket {
    pub alpha: f64,
    pub p_max: f64,
    /// (quality, price, size weight, efficiency)
    pub firms: Vec<(f64, f64, f64, f64)>,
}

impl RefMarket {
    pub fn symmetric(n: usize, q: f64, p: f64, alpha: f64, p_max: f64) -> Self {
        Self { alpha, p_max, firms: vec![(q, p, 1.0, 1.0); n] }
    }

    pub fn profit(&self, i: usize) -> f64 {
        let ws: Vec<f64> = self.firms.iter().map(|&(q, p, l, _)| l * weight(q, p, self.alpha, self.p_max)).collect();
        let total: f64 = ws.iter().sum();
        if total == 0.0 {
            return 0.0;
        }
        let (q, p, _, eta) = self.firms[i];
        let accept = weight(q, p, self.alpha, self.p_max).min(1.0);
        ws[i] / total * accept * (p - eta * q)
    }

    pub fn with_offer(&self, i: usize, q: f64, p: f64) -> Self {
        let mut m = self.clone();
        m.firms[i].0 = q;
        m.firms[i].1 = p;
        m
    }

    /// Selection share of firm `i`.
    pub fn share(&self, i: usize) -> f64 {
        let ws: Vec<f64> = self.firms.iter().map(|&(q, p, l, _)| l * weight(q, p, self.alpha, self.p_max)).collect();
        ws[i] / ws.iter().sum::<f64>()
    }
}

/// Symmetric n-firm Nash offer `(Q, p)`.
pub fn nash_offer(n: f64, alpha: f64, p_max: f64) -> (f64, f64) {
    let q = alpha * n * (2.0 * n - 1.0) * p_max / ((3.0 * n - 1.0) * (n + alpha * (2.0 * n - 1.0)));
    (q, n * p_max / (3.0 * n - 1.0))
}

/// Monopolist optimum `(Q, p, X)` from the first-order conditions.
pub fn monopolist(alpha: f64, p_max: f64) -> (f64, f64, f64) {
    let p = p_max / 2.0;
    let q = alpha / (alpha + 1.0) * p;
    let x = (1.0 - p / p_max) * (q / p).powf(alpha) * (p - q);
    (q, p, x)
}

/// Brute-force monopolist maximum on a grid with spacing `step * p_max`.
pub fn monopolist_grid(alpha: f64, p_max: f64, step: f64) -> (f64, f64, f64) {
    let k = (1.0 / step).round() as usize;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for b in 1..k {
        let p = p_max * b as f64 / k as f64;
        for a in 0..=b {
            let q = p_max * a as f64 / k as f64;
            let x = weight(q, p, alpha, p_max).min(1.0) * (p - q);
            if x > best.2 {
                best = (q, p, x);
            }
        }
    }
    best
}

/// Stationarity of an interior, unclamped two-or-more firm equilibrium:
/// with selection share `s`, a best response satisfies
/// `p = p_max / (3 - s)` and `eta Q = p * alpha k / (alpha k + 1)`, `k = 2 - s`.
/// Returns the largest relative violation over the firms.
pub fn share_condition_violation(m: &RefMarket) -> f64 {
    (0..m.firms.len())
        .map(|i| {
            let (q, p, _, eta) = m.firms[i];
            let s = m.share(i);
            let k = 2.0 - s;
            let p_ref = m.p_max / (3.0 - s);
            let q_ref = p_ref * m.alpha * k / (m.alpha * k + 1.0) / eta;
            let dq = if q_ref == 0.0 { q.abs() / m.p_max } else { ((q - q_ref) / q_ref).abs() };
            dq.max(((p - p_ref) / p_ref).abs())
        })
        .fold(0.0, f64::max)
}

/// Largest profit gain any firm gets from moving one variable by `h`.
pub fn unilateral_gain(m: &RefMarket, h: f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for i in 0..m.firms.len() {
        let base = m.profit(i);
        let (q, p, _, _) = m.firms[i];
        for (dq, dp) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            if q + dq < 0.0 || p + dp <= 0.0 || p + dp >= m.p_max {
                continue;
            }
            worst = worst.max(m.with_offer(i, q + dq, p + dp).profit(i) - base);
        }
    }
    worst
}

/// Market with random parameters and offers.
pub fn random_market<R: Rng>(rng: &mut R, max_firms: usize) -> RefMarket {
    let p_max = rng.gen_range(0.5..2.0);
    let n = rng.gen_range(1..=max_firms);
    RefMarket {
        alpha: rng.gen_range(0.0..5.0),
        p_max,
        firms: (0..n)
            .map(|_| {
                (
                    rng.gen_range(0.0..p_max),
                    rng.gen_range(0.05..0.95) * p_max,
                    rng.gen_range(0.1..1.0),
                    rng.gen_range(0.5..1.0),
                )
            })
            .collect(),
    }
}

pub fn to_market(m: &RefMarket) -> firmcomp::Market {
    let pop = firmcomp::ConsumerPopulation::new(m.alpha, m.p_max).unwrap();
    let firms = m
        .firms
        .iter()
        .map(|&(q, p, l, e)| firmcomp::Firm::new(firmcomp::Offer::new(q, p).unwrap(), l, e).unwrap())
        .collect();
    firmcomp::Market::new(firms, pop).unwrap()
}

pub fn from_market(market: &firmcomp::Market) -> RefMarket {
    let pop = market.population();
    RefMarket {
        alpha: pop.alpha(),
        p_max: pop.p_max(),
        firms: market
            .firms()
            .iter()
            .map(|f| (f.offer().quality(), f.offer().price(), f.size_weight(), f.efficiency()))
            .collect(),
    }
}
