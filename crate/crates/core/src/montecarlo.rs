//! Agent-based simulation of imitation dynamics with explicit mutation.
//!
//! Used as an independent check on the analytical small-mutation chain.
//! Randomness comes from `ChaCha8Rng` seeded with `seed_from_u64`, so a
//! given configuration reproduces bit-identical runs on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_pop::PopulationParams;
use crate::game::PayoffMatrix;
use crate::strategy::{Strategy, NUM_STRATEGIES};

pub const DEFAULT_BATCHES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// Every agent starts with the same strategy.
    Monomorphic(Strategy),
    /// Agent `i` starts with strategy `i mod 8`.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub pop: PopulationParams,
    /// Probability that an update is a random switch to another strategy.
    pub mutation: f64,
    pub steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub initial: InitialState,
    pub batches: usize,
}

impl SimulationConfig {
    /// Burn-in of 10% of `steps`, 50 batches, all agents starting as NDD.
    pub fn new(pop: PopulationParams, mutation: f64, steps: u64, seed: u64) -> Result<Self> {
        let cfg = SimulationConfig {
            pop,
            mutation,
            steps,
            burn_in: steps / 10,
            seed,
            initial: InitialState::Monomorphic(Strategy::NDD),
            batches: DEFAULT_BATCHES,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mutation) {
            return Err(Error::param(
                "mu",
                self.mutation,
                "mutation probability must lie in [0, 1]",
            ));
        }
        if self.steps == 0 {
            return Err(Error::param("steps", self.steps, "must be positive"));
        }
        if self.burn_in >= self.steps {
            return Err(Error::param(
                "burn_in",
                self.burn_in,
                "must be smaller than steps",
            ));
        }
        if self.batches == 0 || self.batches as u64 > self.steps - self.burn_in {
            return Err(Error::param(
                "batches",
                self.batches,
                "must lie in [1, steps - burn_in]",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    /// Time-averaged fraction of agents using each strategy after burn-in.
    pub mean_frequency: [f64; NUM_STRATEGIES],
    /// Batch-means standard error of each mean.
    pub standard_error: [f64; NUM_STRATEGIES],
    pub sampled_updates: u64,
    /// Fraction of sampled updates at which the population was monomorphic.
    pub monomorphic_fraction: f64,
}

impl FrequencyEstimate {
    pub fn get(&self, s: Strategy) -> f64 {
        self.mean_frequency[s.index()]
    }

    pub fn ranking(&self) -> [Strategy; NUM_STRATEGIES] {
        let mut order = Strategy::ALL;
        order.sort_by(|a, b| self.get(*b).total_cmp(&self.get(*a)));
        order
    }
}

/// Strategy counts after a given update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: u64,
    pub counts: [u32; NUM_STRATEGIES],
}

struct Population<'a> {
    agents: Vec<u8>,
    counts: [u32; NUM_STRATEGIES],
    matrix: &'a PayoffMatrix,
}

impl<'a> Population<'a> {
    fn new(n: usize, initial: InitialState, matrix: &'a PayoffMatrix) -> Self {
        let agents: Vec<u8> = match initial {
            InitialState::Monomorphic(s) => vec![s.index() as u8; n],
            InitialState::Uniform => (0..n).map(|i| (i % NUM_STRATEGIES) as u8).collect(),
        };
        let mut counts = [0; NUM_STRATEGIES];
        for &a in &agents {
            counts[a as usize] += 1;
        }
        Population {
            agents,
            counts,
            matrix,
        }
    }

    /// Expected payoff of a `s`-player against everyone else.
    fn fitness(&self, s: usize) -> f64 {
        let row = &self.matrix.entries[s];
        let total: f64 = row.iter().zip(self.counts).map(|(p, c)| p * c as f64).sum();
        (total - row[s]) / (self.agents.len() - 1) as f64
    }

    fn set(&mut self, agent: usize, s: usize) {
        let old = self.agents[agent] as usize;
        self.counts[old] -= 1;
        self.counts[s] += 1;
        self.agents[agent] = s as u8;
    }

    fn is_monomorphic(&self) -> bool {
        self.counts.iter().any(|&c| c as usize == self.agents.len())
    }
}

pub fn simulate(matrix: &PayoffMatrix, config: &SimulationConfig) -> Result<FrequencyEstimate> {
    run(matrix, config, None).map(|(est, _)| est)
}

/// Like [`simulate`], also recording the counts every `thin` updates.
pub fn simulate_with_trajectory(
    matrix: &PayoffMatrix,
    config: &SimulationConfig,
    thin: u64,
) -> Result<(FrequencyEstimate, Vec<Snapshot>)> {
    if thin == 0 {
        return Err(Error::param("thin", thin, "must be positive"));
    }
    run(matrix, config, Some(thin))
}

/// Independent replicates, one per seed, returned in seed order.
pub fn simulate_replicates(
    matrix: &PayoffMatrix,
    config: &SimulationConfig,
    seeds: &[u64],
) -> Result<Vec<FrequencyEstimate>> {
    seeds
        .par_iter()
        .map(|&seed| simulate(matrix, &SimulationConfig { seed, ..*config }))
        .collect()
}

/// Combines independent replicates: means are averaged and standard errors
/// come from the spread of the replicate means.
pub fn pool_estimates(replicates: &[FrequencyEstimate]) -> Result<FrequencyEstimate> {
    let r = replicates.len();
    if r == 0 {
        return Err(Error::param("replicates", 0, "need at least one replicate"));
    }
    let rf = r as f64;
    let mut mean_frequency = [0.0; NUM_STRATEGIES];
    let mut standard_error = [0.0; NUM_STRATEGIES];
    for s in 0..NUM_STRATEGIES {
        let mean = replicates.iter().map(|e| e.mean_frequency[s]).sum::<f64>() / rf;
        mean_frequency[s] = mean;
        standard_error[s] = if r > 1 {
            let var = replicates
                .iter()
                .map(|e| (e.mean_frequency[s] - mean).powi(2))
                .sum::<f64>()
                / (rf - 1.0);
            (var / rf).sqrt()
        } else {
            replicates[0].standard_error[s]
        };
    }
    Ok(FrequencyEstimate {
        mean_frequency,
        standard_error,
        sampled_updates: replicates.iter().map(|e| e.sampled_updates).sum(),
        monomorphic_fraction: replicates
            .iter()
            .map(|e| e.monomorphic_fraction)
            .sum::<f64>()
            / rf,
    })
}

fn run(
    matrix: &PayoffMatrix,
    config: &SimulationConfig,
    thin: Option<u64>,
) -> Result<(FrequencyEstimate, Vec<Snapshot>)> {
    config.validate()?;
    let n = config.pop.size();
    let beta = config.pop.beta();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pop = Population::new(n, config.initial, matrix);

    let sampled = config.steps - config.burn_in;
    let batches = config.batches;
    let mut batch_sums = vec![[0u64; NUM_STRATEGIES]; batches];
    let mut batch_lens = vec![0u64; batches];
    let mut monomorphic = 0u64;
    let mut trajectory = Vec::new();

    for step in 0..config.steps {
        let focal = rng.random_range(0..n);
        let current = pop.agents[focal] as usize;
        if rng.random::<f64>() < config.mutation {
            let k = rng.random_range(0..NUM_STRATEGIES - 1);
            let target = if k >= current { k + 1 } else { k };
            pop.set(focal, target);
        } else {
            let pick = rng.random_range(0..n - 1);
            let model = if pick >= focal { pick + 1 } else { pick };
            let other = pop.agents[model] as usize;
            if other != current {
                let gain = pop.fitness(other) - pop.fitness(current);
                let p = 1.0 / (1.0 + (-beta * gain).exp());
                if rng.random::<f64>() < p {
                    pop.set(focal, other);
                }
            }
        }

        if step >= config.burn_in {
            let t = step - config.burn_in;
            let b = ((t as u128 * batches as u128) / sampled as u128) as usize;
            for (acc, &c) in batch_sums[b].iter_mut().zip(&pop.counts) {
                *acc += c as u64;
            }
            batch_lens[b] += 1;
            if pop.is_monomorphic() {
                monomorphic += 1;
            }
        }
        if let Some(thin) = thin {
            if (step + 1) % thin == 0 {
                trajectory.push(Snapshot {
                    step: step + 1,
                    counts: pop.counts,
                });
            }
        }
    }

    let nf = n as f64;
    let mut mean_frequency = [0.0; NUM_STRATEGIES];
    let mut standard_error = [0.0; NUM_STRATEGIES];
    for s in 0..NUM_STRATEGIES {
        let total: u64 = batch_sums.iter().map(|b| b[s]).sum();
        mean_frequency[s] = total as f64 / (sampled as f64 * nf);
        let means: Vec<f64> = batch_sums
            .iter()
            .zip(&batch_lens)
            .map(|(b, &len)| b[s] as f64 / (len as f64 * nf))
            .collect();
        let grand = means.iter().sum::<f64>() / batches as f64;
        if batches > 1 {
            let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
            standard_error[s] = (var / batches as f64).sqrt();
        }
    }
    Ok((
        FrequencyEstimate {
            mean_frequency,
            standard_error,
            sampled_updates: sampled,
            monomorphic_fraction: monomorphic as f64 / sampled as f64,
        },
        trajectory,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{build_matrix, CommitmentParams, GameParams, IncentivePolicy};

    fn matrix() -> PayoffMatrix {
        build_matrix(
            &GameParams::default(),
            &IncentivePolicy::reward(2.0, 0.0).unwrap(),
            &CommitmentParams::new(0.5, 0.0).unwrap(),
        )
    }

    #[test]
    fn config_validation() {
        let pop = PopulationParams::default();
        assert!(SimulationConfig::new(pop, 0.001, 0, 1).is_err());
        assert!(SimulationConfig::new(pop, 1.5, 100, 1).is_err());
        let mut cfg = SimulationConfig::new(pop, 0.001, 1000, 1).unwrap();
        assert_eq!(cfg.burn_in, 100);
        cfg.burn_in = 1000;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn no_mutation_keeps_monomorphic_state() {
        let mut cfg = SimulationConfig::new(PopulationParams::default(), 0.0, 20_000, 3).unwrap();
        cfg.initial = InitialState::Monomorphic(Strategy::ADC);
        let est = simulate(&matrix(), &cfg).unwrap();
        assert_eq!(est.get(Strategy::ADC), 1.0);
        assert_eq!(est.standard_error, [0.0; 8]);
        assert_eq!(est.monomorphic_fraction, 1.0);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let mut cfg =
            SimulationConfig::new(PopulationParams::new(20, 0.5).unwrap(), 0.01, 50_000, 42)
                .unwrap();
        cfg.initial = InitialState::Uniform;
        let (a, ta) = simulate_with_trajectory(&matrix(), &cfg, 1000).unwrap();
        let (b, tb) = simulate_with_trajectory(&matrix(), &cfg, 1000).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        assert_eq!(ta.len(), 50);
        for snap in &ta {
            assert_eq!(snap.counts.iter().sum::<u32>(), 20);
        }
        let other = simulate(&matrix(), &SimulationConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, other);
        assert!((a.mean_frequency.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn replicates_follow_seed_order() {
        let cfg =
            SimulationConfig::new(PopulationParams::new(10, 0.2).unwrap(), 0.05, 5_000, 0).unwrap();
        let reps = simulate_replicates(&matrix(), &cfg, &[7, 8]).unwrap();
        assert_eq!(
            reps[0],
            simulate(&matrix(), &SimulationConfig { seed: 7, ..cfg }).unwrap()
        );
        assert_eq!(
            reps[1],
            simulate(&matrix(), &SimulationConfig { seed: 8, ..cfg }).unwrap()
        );
        let pooled = pool_estimates(&reps).unwrap();
        assert_eq!(pooled.sampled_updates, 2 * reps[0].sampled_updates);
        for s in 0..NUM_STRATEGIES {
            let mean = (reps[0].mean_frequency[s] + reps[1].mean_frequency[s]) / 2.0;
            assert!((pooled.mean_frequency[s] - mean).abs() < 1e-15);
        }
        assert!(pool_estimates(&[]).is_err());
    }
}
