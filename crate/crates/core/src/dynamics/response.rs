use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::game::{Configuration, GameInstance};

/// How an active unstable node picks its new strategy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseRule {
    /// Largest gain, lowest index among ties.
    #[default]
    Best,
    /// Lowest-index strategy with a positive gain.
    BetterLowest,
    /// Uniform over strategies with a positive gain; consumes randomness.
    BetterUniform,
}

impl ResponseRule {
    pub fn is_deterministic(self) -> bool {
        !matches!(self, Self::BetterUniform)
    }

    /// Picks from local costs, where the gain of `s` is
    /// `costs[current] - costs[s]`. Returns `current` when nothing gains.
    pub fn choose<R: Rng + ?Sized>(self, current: usize, costs: &[i64], rng: &mut R) -> usize {
        let here = costs[current];
        match self {
            Self::Best => {
                let mut best = current;
                let mut best_cost = here;
                for (s, &c) in costs.iter().enumerate() {
                    if c < best_cost {
                        best = s;
                        best_cost = c;
                    }
                }
                best
            }
            Self::BetterLowest => costs.iter().position(|&c| c < here).unwrap_or(current),
            Self::BetterUniform => {
                let improving = costs.iter().filter(|&&c| c < here).count();
                if improving == 0 {
                    return current;
                }
                let pick = rng.random_range(0..improving);
                costs
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| c < here)
                    .nth(pick)
                    .map_or(current, |(s, _)| s)
            }
        }
    }

    /// Response of `u` against `config`, evaluated from scratch.
    pub fn respond<R: Rng + ?Sized>(
        self,
        instance: &GameInstance,
        config: &Configuration,
        u: usize,
        rng: &mut R,
    ) -> usize {
        self.choose(config.get(u), &instance.local_costs(config, u), rng)
    }
}
