//! Metropolis sampler over microstates with single-token transfer moves.
//!
//! A move picks an ordered pair of distinct components `(i, j)` uniformly
//! and transfers one token from `i` to `j`. Under the target
//! `W · exp(-β U)` the acceptance ratio is
//! `t_i / (t_j + 1) · exp(-β (ε_j - ε_i))`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EnsembleError, EnsembleSystem, Microstate};
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub steps: u64,
    /// Defaults to a tenth of `steps`.
    #[serde(default)]
    pub burn_in: Option<u64>,
    pub seed: u64,
    /// Batches for batch-means standard errors.
    #[serde(default = "default_batches")]
    pub batches: u64,
    /// Record per-component size histograms.
    #[serde(default = "default_true")]
    pub histograms: bool,
}

fn default_batches() -> u64 {
    50
}

fn default_true() -> bool {
    true
}

impl SamplerConfig {
    pub fn new(steps: u64, seed: u64) -> Self {
        SamplerConfig {
            steps,
            burn_in: None,
            seed,
            batches: default_batches(),
            histograms: true,
        }
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in.unwrap_or(self.steps / 10)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub steps: u64,
    pub burn_in: u64,
    pub chains: usize,
    /// Time-averaged size of each component after burn-in.
    pub means: Vec<f64>,
    /// Batch-means standard error of each entry of `means`.
    pub mean_stderr: Vec<f64>,
    /// Steps spent at each size, per component, after burn-in.
    pub histograms: Vec<BTreeMap<u64, u64>>,
    /// Last state of the first chain.
    pub final_state: Microstate,
    pub acceptance_rate: f64,
    /// Per batch, the mean size of each component.
    #[serde(skip)]
    pub batch_means: Vec<Vec<f64>>,
}

/// Runs one chain from the most even split of `T`.
pub fn metropolis_sample(system: &EnsembleSystem, config: &SamplerConfig) -> Result<SampleResult, EnsembleError> {
    let m = system.components();
    let total = system.total_tokens;
    if total < m as u64 {
        return Err(EnsembleError::TooFewTokens { t: total, m });
    }
    let burn_in = config.burn_in();
    let measured = config.steps.saturating_sub(burn_in);
    let batches = config.batches.max(2);
    if measured < batches {
        return Err(EnsembleError::NotEnoughSteps {
            steps: config.steps,
            burn_in,
        });
    }

    let mut t: Vec<u64> = (0..m as u64)
        .map(|i| total / m as u64 + u64::from(i < total % m as u64))
        .collect();
    let log_w: Vec<f64> = system.epsilon.iter().map(|e| -system.beta * e).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut accepted = 0u64;

    // One proposal; returns the changed pair.
    let step = |t: &mut [u64], rng: &mut ChaCha8Rng| -> Option<(usize, usize)> {
        if m < 2 {
            return None;
        }
        let i = rng.gen_range(0..m);
        let mut j = rng.gen_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        if t[i] == 0 {
            return None;
        }
        let ratio = t[i] as f64 / (t[j] + 1) as f64 * (log_w[j] - log_w[i]).exp();
        if ratio >= 1.0 || rng.gen::<f64>() < ratio {
            t[i] -= 1;
            t[j] += 1;
            Some((i, j))
        } else {
            None
        }
    };

    for _ in 0..burn_in {
        if step(&mut t, &mut rng).is_some() {
            accepted += 1;
        }
    }

    // Occupancy accounting: a component's size is charged for the steps it
    // was held, when it changes or at a batch boundary.
    let mut since = vec![0u64; m];
    let mut batch_sum = vec![0u128; m];
    let mut total_sum = vec![0u128; m];
    let mut hist: Vec<Vec<u64>> = if config.histograms {
        vec![Vec::new(); m]
    } else {
        Vec::new()
    };
    let mut batch_means = Vec::with_capacity(batches as usize);
    let record = |k: usize, value: u64, held: u64, batch_sum: &mut [u128], hist: &mut [Vec<u64>]| {
        batch_sum[k] += value as u128 * held as u128;
        if let Some(h) = hist.get_mut(k) {
            let v = value as usize;
            if h.len() <= v {
                h.resize(v + 1, 0);
            }
            h[v] += held;
        }
    };

    let mut now = 0u64;
    for b in 0..batches {
        let end = measured * (b + 1) / batches;
        let len = end - now;
        while now < end {
            // The state after this step is the sample at `now`, so the old
            // sizes were held over `since..now`.
            if let Some((i, j)) = step(&mut t, &mut rng) {
                accepted += 1;
                record(i, t[i] + 1, now - since[i], &mut batch_sum, &mut hist);
                record(j, t[j] - 1, now - since[j], &mut batch_sum, &mut hist);
                since[i] = now;
                since[j] = now;
            }
            now += 1;
        }
        for k in 0..m {
            record(k, t[k], now - since[k], &mut batch_sum, &mut hist);
            since[k] = now;
        }
        batch_means.push(batch_sum.iter().map(|&s| s as f64 / len as f64).collect::<Vec<_>>());
        for (acc, s) in total_sum.iter_mut().zip(batch_sum.iter_mut()) {
            *acc += *s;
            *s = 0;
        }
    }

    let means: Vec<f64> = total_sum.iter().map(|&s| s as f64 / measured as f64).collect();
    let mean_stderr = batch_stderr(&batch_means, m);
    let histograms = hist
        .into_iter()
        .map(|h| {
            h.into_iter()
                .enumerate()
                .filter(|&(_, c)| c > 0)
                .map(|(v, c)| (v as u64, c))
                .collect()
        })
        .collect();
    Ok(SampleResult {
        steps: config.steps,
        burn_in,
        chains: 1,
        means,
        mean_stderr,
        histograms,
        final_state: Microstate::new(t),
        acceptance_rate: accepted as f64 / config.steps.max(1) as f64,
        batch_means,
    })
}

fn batch_stderr(batch_means: &[Vec<f64>], m: usize) -> Vec<f64> {
    let b = batch_means.len() as f64;
    (0..m)
        .map(|k| {
            let mean = batch_means.iter().map(|v| v[k]).sum::<f64>() / b;
            let var = batch_means.iter().map(|v| (v[k] - mean).powi(2)).sum::<f64>() / (b - 1.0);
            (var / b).sqrt()
        })
        .collect()
}

/// Runs `chains` independent chains with seeds `seed, seed + 1, ...` and
/// pools them: means are averaged, histograms summed, and standard errors
/// taken over every chain's batches.
pub fn metropolis_chains(
    system: &EnsembleSystem,
    config: &SamplerConfig,
    chains: usize,
    exec: Execution,
) -> Result<SampleResult, EnsembleError> {
    let chains = chains.max(1);
    let runs = exec.map_range(chains, |k| {
        let cfg = SamplerConfig {
            seed: config.seed.wrapping_add(k as u64),
            ..config.clone()
        };
        metropolis_sample(system, &cfg)
    });
    let runs: Vec<SampleResult> = runs.into_iter().collect::<Result<_, _>>()?;
    let m = system.components();
    let n = runs.len() as f64;
    let means = (0..m)
        .map(|k| runs.iter().map(|r| r.means[k]).sum::<f64>() / n)
        .collect();
    let batch_means: Vec<Vec<f64>> = runs.iter().flat_map(|r| r.batch_means.iter().cloned()).collect();
    let mean_stderr = batch_stderr(&batch_means, m);
    let mut histograms: Vec<BTreeMap<u64, u64>> = vec![BTreeMap::new(); runs[0].histograms.len()];
    for r in &runs {
        for (acc, h) in histograms.iter_mut().zip(&r.histograms) {
            for (&v, &c) in h {
                *acc.entry(v).or_insert(0) += c;
            }
        }
    }
    Ok(SampleResult {
        steps: config.steps,
        burn_in: runs[0].burn_in,
        chains: runs.len(),
        means,
        mean_stderr,
        histograms,
        final_state: runs[0].final_state.clone(),
        acceptance_rate: runs.iter().map(|r| r.acceptance_rate).sum::<f64>() / n,
        batch_means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{enumerate_exact, DEFAULT_MAX_STATES};

    #[test]
    fn histograms_account_for_every_measured_step() {
        let sys = EnsembleSystem::from_alphabet_sizes(12, &[2, 4, 8], 1.0).unwrap();
        let r = metropolis_sample(&sys, &SamplerConfig::new(20_000, 3)).unwrap();
        for h in &r.histograms {
            assert_eq!(h.values().sum::<u64>(), 18_000);
        }
        assert_eq!(r.final_state.total(), 12);
        // Occupancy-weighted histogram means equal the reported means.
        for (h, m) in r.histograms.iter().zip(&r.means) {
            let hm = h.iter().map(|(&v, &c)| v as f64 * c as f64).sum::<f64>() / 18_000.0;
            assert!((hm - m).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_output() {
        let sys = EnsembleSystem::from_alphabet_sizes(30, &[2, 4, 8], 2.0).unwrap();
        let cfg = SamplerConfig::new(50_000, 11);
        assert_eq!(
            metropolis_sample(&sys, &cfg).unwrap(),
            metropolis_sample(&sys, &cfg).unwrap()
        );
        let other = SamplerConfig {
            seed: 12,
            ..cfg.clone()
        };
        assert_ne!(
            metropolis_sample(&sys, &cfg).unwrap(),
            metropolis_sample(&sys, &other).unwrap()
        );
    }

    #[test]
    fn small_system_matches_enumeration() {
        let sys = EnsembleSystem::from_alphabet_sizes(30, &[2, 4, 8], 1.0).unwrap();
        let exact = enumerate_exact(&sys, DEFAULT_MAX_STATES, Execution::Sequential)
            .unwrap()
            .means();
        let r = metropolis_sample(&sys, &SamplerConfig::new(400_000, 5)).unwrap();
        for k in 0..3 {
            assert!(
                (r.means[k] - exact[k]).abs() < 4.0 * r.mean_stderr[k],
                "{k}: {:?} vs {exact:?}",
                r.means
            );
        }
    }

    #[test]
    fn single_component_never_moves() {
        let sys = EnsembleSystem::new(7, vec![1.0], 1.0).unwrap();
        let r = metropolis_sample(&sys, &SamplerConfig::new(100, 1)).unwrap();
        assert_eq!(r.means, vec![7.0]);
        assert_eq!(r.acceptance_rate, 0.0);
    }

    #[test]
    fn chains_pool_and_agree_across_modes() {
        let sys = EnsembleSystem::from_alphabet_sizes(20, &[3, 5], 0.5).unwrap();
        let cfg = SamplerConfig::new(10_000, 9);
        let a = metropolis_chains(&sys, &cfg, 4, Execution::Sequential).unwrap();
        let b = metropolis_chains(&sys, &cfg, 4, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.chains, a.batch_means.len()), (4, 200));
        assert_eq!(a.histograms[0].values().sum::<u64>(), 4 * 9_000);
    }

    #[test]
    fn rejects_bad_configs() {
        let sys = EnsembleSystem::new(2, vec![0.0; 3], 0.0).unwrap();
        assert!(matches!(
            metropolis_sample(&sys, &SamplerConfig::new(100, 1)),
            Err(EnsembleError::TooFewTokens { .. })
        ));
        let sys = EnsembleSystem::new(9, vec![0.0; 3], 0.0).unwrap();
        assert!(matches!(
            metropolis_sample(&sys, &SamplerConfig::new(10, 1)),
            Err(EnsembleError::NotEnoughSteps { .. })
        ));
    }
}
