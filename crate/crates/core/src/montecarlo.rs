//! Monte Carlo simulation of individual consumers.
//!
//! Each consumer picks one firm from the selection probabilities and then
//! buys from it with that firm's acceptance probability. Consumers are
//! simulated in fixed blocks of [`BLOCK_SIZE`]; block `b` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `b`, so a consumer's random
//! numbers depend only on the seed and its index, and the result does not
//! depend on how blocks are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check, ModelError};
use crate::model::{acceptance_probability, selection_probabilities, Market};

pub const BLOCK_SIZE: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub market: Market,
    pub num_consumers: u64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(market: Market, num_consumers: u64, seed: u64) -> Result<Self, ModelError> {
        check("num_consumers", num_consumers as f64, num_consumers >= 1, "must be at least 1")?;
        Ok(Self { market, num_consumers, seed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirmTally {
    pub units_sold: u64,
    pub revenue: f64,
    pub cost: f64,
    /// `(revenue - cost) / num_consumers`
    pub profit_estimate: f64,
    /// Standard error of `profit_estimate`.
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub num_consumers: u64,
    pub seed: u64,
    pub firms: Vec<FirmTally>,
}

impl SimulationReport {
    pub fn total_units(&self) -> u64 {
        self.firms.iter().map(|f| f.units_sold).sum()
    }

    pub fn profit_estimates(&self) -> Vec<f64> {
        self.firms.iter().map(|f| f.profit_estimate).collect()
    }
}

/// Index of the firm chosen by uniform draw `u` over cumulative probabilities;
/// never returns a firm with zero probability.
fn pick(cumulative: &[f64], probabilities: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .zip(probabilities)
        .position(|(&c, &p)| p > 0.0 && u < c)
        .unwrap_or_else(|| probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0))
}

fn simulate_block(seed: u64, block: u64, consumers: u64, cumulative: &[f64], probs: &[f64], accept: &[f64]) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let mut sold = vec![0u64; probs.len()];
    for _ in 0..consumers {
        let i = pick(cumulative, probs, rng.gen::<f64>());
        // always draw, so the stream position is independent of the outcome
        if rng.gen::<f64>() < accept[i] {
            sold[i] += 1;
        }
    }
    sold
}

pub fn simulate(config: &SimulationConfig) -> Result<SimulationReport, ModelError> {
    let market = &config.market;
    let n = config.num_consumers;
    check("num_consumers", n as f64, n >= 1, "must be at least 1")?;
    let probs = selection_probabilities(market)?;
    let cumulative: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let pop = market.population();
    let accept: Vec<f64> = market.firms().iter().map(|f| acceptance_probability(f.offer(), pop)).collect();

    let blocks = n.div_ceil(BLOCK_SIZE);
    let sold = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let consumers = BLOCK_SIZE.min(n - b * BLOCK_SIZE);
            simulate_block(config.seed, b, consumers, &cumulative, &probs, &accept)
        })
        .reduce(
            || vec![0u64; probs.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let nf = n as f64;
    let firms = market
        .firms()
        .iter()
        .zip(sold)
        .map(|(firm, units)| {
            let offer = firm.offer();
            let k = units as f64;
            let margin = offer.margin(firm.efficiency());
            let revenue = k * offer.price();
            let cost = k * firm.efficiency() * offer.quality();
            let mean = k * margin / nf;
            // each consumer contributes either `margin` or 0
            let standard_error = if n < 2 {
                0.0
            } else {
                let var = ((k * margin * margin - nf * mean * mean) / (nf - 1.0)).max(0.0);
                (var / nf).sqrt()
            };
            FirmTally {
                units_sold: units,
                revenue,
                cost,
                profit_estimate: (revenue - cost) / nf,
                standard_error,
            }
        })
        .collect();
    Ok(SimulationReport { num_consumers: n, seed: config.seed, firms })
}
