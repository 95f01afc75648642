//! Adaptive selection among the four variation strategies.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Ga,
    De,
    Pso,
    LocalSearch,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Ga, Strategy::De, Strategy::Pso, Strategy::LocalSearch];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Ga => "GA",
            Strategy::De => "DE",
            Strategy::Pso => "PSO",
            Strategy::LocalSearch => "LS",
        })
    }
}

/// Denominator of a strategy's success rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessDenominator {
    /// Offspring produced by that strategy.
    #[default]
    PerStrategy,
    /// All offspring produced in the generation.
    GrandTotal,
}

/// Strategy probabilities plus per-generation success counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyState {
    probabilities: [f64; 4],
    successes: [u64; 4],
    totals: [u64; 4],
    alpha: f64,
    floor: f64,
}

impl StrategyState {
    pub fn new(probabilities: [f64; 4], alpha: f64, floor: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::config(format!("learning rate {alpha} outside [0, 1]")));
        }
        if !(0.0..=0.25).contains(&floor) {
            return Err(Error::config(format!("probability floor {floor} outside [0, 0.25]")));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || probabilities.iter().any(|&p| p < floor) {
            return Err(Error::config(format!(
                "strategy probabilities {probabilities:?} must sum to 1 and respect the floor {floor}"
            )));
        }
        Ok(StrategyState {
            probabilities,
            successes: [0; 4],
            totals: [0; 4],
            alpha,
            floor,
        })
    }

    /// Uniform start, `[0.25; 4]`.
    pub fn uniform(alpha: f64, floor: f64) -> Result<Self> {
        Self::new([0.25; 4], alpha, floor)
    }

    pub fn probabilities(&self) -> [f64; 4] {
        self.probabilities
    }

    pub fn probability(&self, s: Strategy) -> f64 {
        self.probabilities[s.index()]
    }

    pub fn successes(&self) -> [u64; 4] {
        self.successes
    }

    pub fn totals(&self) -> [u64; 4] {
        self.totals
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Roulette-wheel draw.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Strategy {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for s in Strategy::ALL {
            acc += self.probabilities[s.index()];
            if u < acc {
                return s;
            }
        }
        // Rounding left u past the last cumulative bound.
        *Strategy::ALL
            .iter()
            .rev()
            .find(|s| self.probabilities[s.index()] > 0.0)
            .expect("probabilities sum to one")
    }

    pub fn reset_counts(&mut self) {
        self.successes = [0; 4];
        self.totals = [0; 4];
    }

    pub fn record(&mut self, s: Strategy, success: bool) {
        self.totals[s.index()] += 1;
        if success {
            self.successes[s.index()] += 1;
        }
    }

    /// Success rate per strategy; zero for strategies that produced nothing.
    pub fn success_rates(&self, denominator: SuccessDenominator) -> [f64; 4] {
        let grand: u64 = self.totals.iter().sum();
        std::array::from_fn(|i| {
            let total = match denominator {
                SuccessDenominator::PerStrategy => self.totals[i],
                SuccessDenominator::GrandTotal => grand,
            };
            if total == 0 {
                0.0
            } else {
                self.successes[i] as f64 / total as f64
            }
        })
    }

    /// Applies the update from the recorded counters.
    pub fn update(&mut self, denominator: SuccessDenominator) {
        let rates = self.success_rates(denominator);
        self.apply_rates(rates);
    }

    /// `p ← (1 − α) p + α R`, then renormalized with every entry held at or
    /// above the floor.
    pub fn apply_rates(&mut self, rates: [f64; 4]) {
        let alpha = self.alpha;
        let raw: [f64; 4] =
            std::array::from_fn(|i| (1.0 - alpha) * self.probabilities[i] + alpha * rates[i]);
        self.probabilities = normalize_with_floor(raw, self.floor);
    }
}

fn normalize_with_floor(raw: [f64; 4], floor: f64) -> [f64; 4] {
    let sum: f64 = raw.iter().sum();
    let mut p = if sum > 0.0 {
        raw.map(|x| x / sum)
    } else {
        [0.25; 4]
    };
    if floor <= 0.0 {
        return p;
    }
    let mut pinned = [false; 4];
    loop {
        let free_mass = 1.0 - floor * pinned.iter().filter(|&&b| b).count() as f64;
        let free_sum: f64 = (0..4).filter(|&i| !pinned[i]).map(|i| p[i]).sum();
        for i in 0..4 {
            if pinned[i] {
                p[i] = floor;
            } else if free_sum > 0.0 {
                p[i] *= free_mass / free_sum;
            }
        }
        let mut changed = false;
        for i in 0..4 {
            if !pinned[i] && p[i] < floor {
                pinned[i] = true;
                changed = true;
            }
        }
        if !changed {
            return p;
        }
    }
}
