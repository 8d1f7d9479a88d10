//! Consumer choice probabilities and per-consumer profit.
//!
//! A consumer facing several offers first selects one of them with probability
//! proportional to the firm's size weight times its attractiveness
//! `(1 - p/p_max) (Q/p)^alpha`, and then buys the selected product with the
//! acceptance probability, which is the same attractiveness clamped to `[0, 1]`.
//! A firm earns `p - eta*Q` on every unit sold.

use serde::Serialize;

use crate::error::{check, ModelError};

/// Homogeneous consumer population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsumerPopulation {
    alpha: f64,
    p_max: f64,
}

impl ConsumerPopulation {
    /// `alpha` is the quality-assessment ability, `p_max` the largest price
    /// any consumer can afford.
    pub fn new(alpha: f64, p_max: f64) -> Result<Self, ModelError> {
        check("alpha", alpha, alpha >= 0.0 && alpha.is_finite(), "must be finite and >= 0")?;
        check("p_max", p_max, p_max > 0.0 && p_max.is_finite(), "must be finite and > 0")?;
        Ok(Self { alpha, p_max })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    /// Same consumers, budget multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        Self::new(self.alpha, self.p_max * factor)
    }
}

/// A product as seen by consumers: intrinsic quality and price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Offer {
    quality: f64,
    price: f64,
}

impl Offer {
    pub fn new(quality: f64, price: f64) -> Result<Self, ModelError> {
        check("quality", quality, quality >= 0.0 && quality.is_finite(), "must be finite and >= 0")?;
        check("price", price, price > 0.0 && price.is_finite(), "must be finite and > 0")?;
        Ok(Self { quality, price })
    }

    pub fn quality(&self) -> f64 {
        self.quality
    }

    pub fn price(&self) -> f64 {
        self.price
    }

    /// Per-unit margin `p - eta*Q`; negative when the product is sold at a loss.
    pub fn margin(&self, efficiency: f64) -> f64 {
        self.price - efficiency * self.quality
    }

    pub(crate) fn from_raw(quality: f64, price: f64) -> Self {
        debug_assert!(quality >= 0.0 && price > 0.0, "offer ({quality}, {price})");
        Self { quality, price }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Firm {
    offer: Offer,
    size_weight: f64,
    efficiency: f64,
}

impl Firm {
    pub fn new(offer: Offer, size_weight: f64, efficiency: f64) -> Result<Self, ModelError> {
        check(
            "size_weight",
            size_weight,
            size_weight > 0.0 && size_weight.is_finite(),
            "must be finite and > 0",
        )?;
        check(
            "efficiency",
            efficiency,
            efficiency > 0.0 && efficiency.is_finite(),
            "must be finite and > 0",
        )?;
        Ok(Self {
            offer,
            size_weight,
            efficiency,
        })
    }

    /// Unit size weight and unit efficiency.
    pub fn standard(offer: Offer) -> Self {
        Self {
            offer,
            size_weight: 1.0,
            efficiency: 1.0,
        }
    }

    pub fn offer(&self) -> Offer {
        self.offer
    }

    pub fn size_weight(&self) -> f64 {
        self.size_weight
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn with_offer(mut self, offer: Offer) -> Self {
        self.offer = offer;
        self
    }
}

/// Firms competing for one consumer population. Size weights only matter
/// relative to each other.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Market {
    firms: Vec<Firm>,
    population: ConsumerPopulation,
}

impl Market {
    pub fn new(firms: Vec<Firm>, population: ConsumerPopulation) -> Result<Self, ModelError> {
        if firms.is_empty() {
            return Err(ModelError::EmptyMarket);
        }
        Ok(Self { firms, population })
    }

    /// `n` firms of unit weight and efficiency all playing `offer`.
    pub fn symmetric(n: usize, offer: Offer, population: ConsumerPopulation) -> Result<Self, ModelError> {
        Self::new(vec![Firm::standard(offer); n], population)
    }

    pub fn firms(&self) -> &[Firm] {
        &self.firms
    }

    pub fn firm(&self, i: usize) -> Result<&Firm, ModelError> {
        self.firms.get(i).ok_or(ModelError::FirmIndex {
            index: i,
            len: self.firms.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.firms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firms.is_empty()
    }

    pub fn population(&self) -> ConsumerPopulation {
        self.population
    }

    pub fn offers(&self) -> Vec<Offer> {
        self.firms.iter().map(Firm::offer).collect()
    }

    pub fn set_offer(&mut self, i: usize, offer: Offer) {
        self.firms[i].offer = offer;
    }

    pub fn with_offers(mut self, offers: &[Offer]) -> Self {
        for (firm, offer) in self.firms.iter_mut().zip(offers) {
            firm.offer = *offer;
        }
        self
    }

    /// Size-weighted, unnormalized selection weight of every firm.
    pub fn selection_weights(&self) -> Vec<f64> {
        self.firms
            .iter()
            .map(|f| f.size_weight * attractiveness(f.offer, self.population))
            .collect()
    }

    pub fn selection_probabilities(&self) -> Result<Vec<f64>, ModelError> {
        selection_probabilities(self)
    }

    pub fn per_consumer_profit(&self, i: usize) -> Result<f64, ModelError> {
        per_consumer_profit(i, self)
    }

    pub fn profits(&self) -> Result<Vec<f64>, ModelError> {
        let shares = selection_probabilities(self)?;
        Ok(self
            .firms
            .iter()
            .zip(shares)
            .map(|(f, s)| s * acceptance_probability(f.offer, self.population) * f.offer.margin(f.efficiency))
            .collect())
    }
}

/// Unclamped `(1 - p/p_max)(Q/p)^alpha`, zero for `p >= p_max`.
///
/// `(Q/p)^0` is taken as 1 even for `Q = 0`.
pub fn attractiveness_raw(quality: f64, price: f64, alpha: f64, p_max: f64) -> f64 {
    if price >= p_max {
        return 0.0;
    }
    let budget = 1.0 - price / p_max;
    if alpha == 0.0 {
        budget
    } else {
        budget * (quality / price).powf(alpha)
    }
}

pub fn attractiveness(offer: Offer, pop: ConsumerPopulation) -> f64 {
    attractiveness_raw(offer.quality, offer.price, pop.alpha, pop.p_max)
}

/// Acceptance probability together with a flag telling whether the raw
/// expression had to be clamped to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Acceptance {
    pub probability: f64,
    pub clamped: bool,
}

pub fn acceptance(offer: Offer, pop: ConsumerPopulation) -> Acceptance {
    let raw = attractiveness(offer, pop);
    Acceptance {
        probability: raw.clamp(0.0, 1.0),
        clamped: raw > 1.0,
    }
}

/// Probability that a consumer who examined `offer` buys it.
pub fn acceptance_probability(offer: Offer, pop: ConsumerPopulation) -> f64 {
    acceptance(offer, pop).probability
}

/// Probability of each firm being examined. Size weights enter as
/// multiplicative factors; with equal weights this is the plain normalized
/// attractiveness.
pub fn selection_probabilities(market: &Market) -> Result<Vec<f64>, ModelError> {
    let weights = market.selection_weights();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(ModelError::AllWeightsZero);
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Expected profit of firm `i` per consumer in the market.
pub fn per_consumer_profit(i: usize, market: &Market) -> Result<f64, ModelError> {
    let firm = *market.firm(i)?;
    let shares = selection_probabilities(market)?;
    Ok(shares[i] * acceptance_probability(firm.offer, market.population) * firm.offer.margin(firm.efficiency))
}

/// Profit of a firm alone in the market.
pub fn monopolist_profit(offer: Offer, pop: ConsumerPopulation, efficiency: f64) -> f64 {
    acceptance_probability(offer, pop) * offer.margin(efficiency)
}

/// Acceptance probability when perceived quality is normally distributed
/// around the true quality with standard deviation `sigma` and the consumer
/// buys whenever perceived quality exceeds the price.
pub fn gaussian_acceptance_probability(offer: Offer, sigma: f64) -> Result<f64, ModelError> {
    check("sigma", sigma, sigma > 0.0, "must be > 0")?;
    let z = (offer.price - offer.quality) / (std::f64::consts::SQRT_2 * sigma);
    Ok(0.5 * libm::erfc(z))
}
