//! Closed-form optima and equilibria.
//!
//! These are the reference values the numerical solver is checked against.
//! Everything scales linearly in `p_max`.

use serde::Serialize;

use crate::model::{attractiveness, ConsumerPopulation, Offer};

/// Profit-maximizing offer of a single firm and its profit per consumer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonopolistOptimum {
    pub q_star: f64,
    pub p_star: f64,
    pub x_star: f64,
}

impl MonopolistOptimum {
    pub fn offer(&self) -> Offer {
        Offer::from_raw(self.q_star, self.p_star)
    }
}

/// Symmetric Nash equilibrium of `n` identical firms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricNash {
    pub n: u64,
    pub q_nash: f64,
    pub p_nash: f64,
    pub x_nash: f64,
    /// `q_nash / q_star`
    pub quality_ratio: f64,
    /// `x_nash / (x_star / n)`
    pub profit_ratio: f64,
    /// `p_nash - q_nash`
    pub marginal: f64,
}

impl SymmetricNash {
    pub fn offer(&self) -> Offer {
        Offer::from_raw(self.q_nash, self.p_nash)
    }
}

/// Best offer of a negligibly small firm facing a monopolist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallFirmOptimum {
    pub q_s: f64,
    pub p_s: f64,
    /// Profit relative to adopting the monopolist's offer.
    pub xi_s: f64,
    /// `2*alpha + 1`
    pub beta: f64,
}

impl SmallFirmOptimum {
    pub fn offer(&self) -> Offer {
        Offer::from_raw(self.q_s, self.p_s)
    }
}

/// `(alpha/(alpha+1))^alpha`, equal to 1 at `alpha = 0`.
fn tilt(alpha: f64) -> f64 {
    (alpha / (alpha + 1.0)).powf(alpha)
}

pub fn monopolist_optimum(pop: ConsumerPopulation) -> MonopolistOptimum {
    let (a, pm) = (pop.alpha(), pop.p_max());
    MonopolistOptimum {
        q_star: a * pm / (2.0 * (a + 1.0)),
        p_star: pm / 2.0,
        x_star: pm / (4.0 * (a + 1.0)) * tilt(a),
    }
}

pub fn nash_quality(n: u64, pop: ConsumerPopulation) -> f64 {
    let (a, pm, n) = (pop.alpha(), pop.p_max(), n as f64);
    a * n * (2.0 * n - 1.0) * pm / ((3.0 * n - 1.0) * (n + a * (2.0 * n - 1.0)))
}

pub fn nash_price(n: u64, pop: ConsumerPopulation) -> f64 {
    let n = n as f64;
    n * pop.p_max() / (3.0 * n - 1.0)
}

/// Symmetric equilibrium of `n >= 2` identical firms competing on quality and price.
pub fn nash_symmetric(n: u64, pop: ConsumerPopulation) -> SymmetricNash {
    assert!(n >= 2, "symmetric equilibrium needs at least two firms");
    let q_nash = nash_quality(n, pop);
    let p_nash = nash_price(n, pop);
    let offer = Offer::from_raw(q_nash, p_nash);
    // every firm gets 1/n of the consumers; attractiveness < 1 here so no clamp
    let x_nash = attractiveness(offer, pop) * (p_nash - q_nash) / n as f64;
    SymmetricNash {
        n,
        q_nash,
        p_nash,
        x_nash,
        quality_ratio: quality_ratio(n, pop.alpha()),
        profit_ratio: profit_ratio(n, pop.alpha()),
        marginal: marginal_profit_nash(n, pop),
    }
}

/// `Q_n / Q_1*`.
pub fn quality_ratio(n: u64, alpha: f64) -> f64 {
    let n = n as f64;
    let k = 2.0 * n - 1.0;
    2.0 * n * k * (1.0 + alpha) / ((3.0 * n - 1.0) * (n + alpha * k))
}

/// Consumer ability below which competition among `n` firms raises quality.
pub fn quality_ratio_threshold(n: u64) -> f64 {
    let n = n as f64;
    n / (2.0 * n - 1.0)
}

/// Equilibrium profit of each of `n` firms relative to sharing the monopolist profit.
pub fn profit_ratio(n: u64, alpha: f64) -> f64 {
    let n = n as f64;
    let k = 2.0 * n - 1.0;
    let lead = 4.0 * n * n / ((3.0 * n - 1.0) * (3.0 * n - 1.0));
    lead * ((1.0 + alpha) * k / (n + alpha * k)).powf(alpha + 1.0)
}

/// `p_n - Q_n` in equilibrium.
pub fn marginal_profit_nash(n: u64, pop: ConsumerPopulation) -> f64 {
    let (a, pm, n) = (pop.alpha(), pop.p_max(), n as f64);
    let k = 2.0 * n - 1.0;
    // p_n (1 - a k / (n + a k)) = p_n n / (n + a k)
    n * pm / (3.0 * n - 1.0) * n / (n + a * k)
}

/// Limits as the number of firms grows without bound.
pub mod many_firms {
    use super::*;

    pub fn quality(pop: ConsumerPopulation) -> f64 {
        let a = pop.alpha();
        2.0 * a * pop.p_max() / (3.0 * (2.0 * a + 1.0))
    }

    pub fn price(pop: ConsumerPopulation) -> f64 {
        pop.p_max() / 3.0
    }

    pub fn quality_ratio(alpha: f64) -> f64 {
        4.0 * (1.0 + alpha) / (3.0 * (2.0 * alpha + 1.0))
    }

    pub fn profit_ratio(alpha: f64) -> f64 {
        4.0 / 9.0 * (2.0 * (1.0 + alpha) / (2.0 * alpha + 1.0)).powf(alpha + 1.0)
    }

    pub fn marginal(pop: ConsumerPopulation) -> f64 {
        pop.p_max() / (3.0 * (2.0 * pop.alpha() + 1.0))
    }

    /// Profit ratio for infinitely able consumers and infinitely many firms, `4 sqrt(e) / 9`.
    pub fn profit_ratio_floor() -> f64 {
        4.0 * 0.5f64.exp() / 9.0
    }
}

/// Profit ratio of `n` firms as consumer ability grows without bound.
pub fn profit_ratio_alpha_limit(n: u64) -> f64 {
    let n = n as f64;
    4.0 * n * n * ((n - 1.0) / (2.0 * n - 1.0)).exp() / ((3.0 * n - 1.0) * (3.0 * n - 1.0))
}

/// Two-firm profit ratio in its own closed form, used to cross-check [`profit_ratio`].
pub fn duopoly_profit_ratio(alpha: f64) -> f64 {
    16.0 / 25.0 * ((3.0 + 3.0 * alpha) / (2.0 + 3.0 * alpha)).powf(1.0 + alpha)
}

pub fn small_firm_optimum(pop: ConsumerPopulation) -> SmallFirmOptimum {
    let pm = pop.p_max();
    let beta = 2.0 * pop.alpha() + 1.0;
    SmallFirmOptimum {
        q_s: (beta - 1.0) * pm / (3.0 * beta),
        p_s: pm / 3.0,
        xi_s: 16.0 / 27.0 * ((beta + 1.0) / beta).powf(beta),
        beta,
    }
}

/// Offer on the straight line from the monopolist optimum (`tau = 0`) to the
/// two-firm Nash point (`tau = 1`). Values outside `[0, 1]` extrapolate.
pub fn farsighted_offer(tau: f64, pop: ConsumerPopulation) -> Offer {
    let mono = monopolist_optimum(pop);
    let q = mono.q_star + tau * (nash_quality(2, pop) - mono.q_star);
    let p = mono.p_star + tau * (nash_price(2, pop) - mono.p_star);
    Offer::from_raw(q.max(0.0), p)
}
