//! Canonical ensemble of `T` tokens distributed over `M` components under
//! a fixed total cost `U = Σ t_i ε_i`.
//!
//! The target measure over microstates is `W(t) · exp(-β Σ t_i ε_i)` with
//! `W` the multinomial count of arrangements. With `ε_i = ln a_i` its mode
//! sits at `t_i / T ≈ a_i^-β / Σ a_j^-β`.

mod config;
mod emergence;
mod enumerate;
mod sampler;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distfit::special::ln_factorial;
use crate::distfit::FitError;
use crate::metrics::ComponentRecord;

pub use config::{ExperimentConfig, ExperimentMode};
pub use emergence::{powerlaw_emergence_experiment, EmergenceResult};
pub use enumerate::{composition_count, enumerate_exact, ExactDistribution, DEFAULT_MAX_STATES};
pub use sampler::{metropolis_chains, metropolis_sample, SampleResult, SamplerConfig};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("a system needs at least one component")]
    NoComponents,
    #[error("a system needs at least one token")]
    NoTokens,
    #[error("non-finite value: {0}")]
    NonFinite(&'static str),
    #[error("microstate has {found} components, system has {expected}")]
    WrongLength { found: usize, expected: usize },
    #[error("microstate holds {found} tokens, system has {expected}")]
    NotConserved { found: u64, expected: u64 },
    #[error(
        "{states} microstates exceed the enumeration limit of {limit}; use the Metropolis sampler for a system this large"
    )]
    TooManyStates { states: String, limit: u64 },
    #[error("need T >= M for sampling, got T = {t}, M = {m}")]
    TooFewTokens { t: u64, m: usize },
    #[error("steps ({steps}) must exceed burn-in ({burn_in})")]
    NotEnoughSteps { steps: u64, burn_in: u64 },
    #[error("target U = {target} lies outside the attainable range ({lo}, {hi})")]
    UnattainableU { target: f64, lo: f64, hi: f64 },
    #[error("alphabet size 0 is not allowed")]
    ZeroAlphabet,
    #[error("experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Fit(#[from] FitError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSystem {
    #[serde(rename = "T")]
    pub total_tokens: u64,
    /// Per-token cost of each component; the component count is its length.
    pub epsilon: Vec<f64>,
    pub beta: f64,
}

impl EnsembleSystem {
    pub fn new(total_tokens: u64, epsilon: Vec<f64>, beta: f64) -> Result<Self, EnsembleError> {
        if epsilon.is_empty() {
            return Err(EnsembleError::NoComponents);
        }
        if total_tokens == 0 {
            return Err(EnsembleError::NoTokens);
        }
        if epsilon.iter().any(|e| !e.is_finite()) {
            return Err(EnsembleError::NonFinite("epsilon"));
        }
        if !beta.is_finite() {
            return Err(EnsembleError::NonFinite("beta"));
        }
        Ok(EnsembleSystem {
            total_tokens,
            epsilon,
            beta,
        })
    }

    /// `ε_i = ln a_i`.
    pub fn from_alphabet_sizes(total_tokens: u64, alphabet_sizes: &[u64], beta: f64) -> Result<Self, EnsembleError> {
        if alphabet_sizes.contains(&0) {
            return Err(EnsembleError::ZeroAlphabet);
        }
        Self::new(
            total_tokens,
            alphabet_sizes.iter().map(|&a| (a as f64).ln()).collect(),
            beta,
        )
    }

    /// Component count `M`.
    pub fn components(&self) -> usize {
        self.epsilon.len()
    }

    /// Total cost `U = Σ t_i ε_i` of a microstate.
    pub fn cost(&self, state: &Microstate) -> f64 {
        state.t.iter().zip(&self.epsilon).map(|(&t, e)| t as f64 * e).sum()
    }

    pub fn validate(&self, state: &Microstate) -> Result<(), EnsembleError> {
        if state.t.len() != self.components() {
            return Err(EnsembleError::WrongLength {
                found: state.t.len(),
                expected: self.components(),
            });
        }
        let sum = state.total();
        if sum != self.total_tokens {
            return Err(EnsembleError::NotConserved {
                found: sum,
                expected: self.total_tokens,
            });
        }
        Ok(())
    }

    /// Unnormalized log probability, `ln W - β U`.
    pub fn log_weight(&self, state: &Microstate) -> f64 {
        multinomial_weight(state) - self.beta * self.cost(state)
    }
}

/// One assignment of token counts to components.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Microstate {
    pub t: Vec<u64>,
}

impl Microstate {
    pub fn new(t: Vec<u64>) -> Self {
        Microstate { t }
    }

    pub fn total(&self) -> u64 {
        self.t.iter().sum()
    }

    /// True if some component is empty, which the model treats as atypical.
    pub fn has_empty_component(&self) -> bool {
        self.t.contains(&0)
    }
}

/// `ln(T! / Π t_i!)`.
pub fn multinomial_weight(state: &Microstate) -> f64 {
    ln_factorial(state.total()) - state.t.iter().map(|&t| ln_factorial(t)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPrediction {
    /// `p_i = exp(-β ε_i) / Q`.
    pub p: Vec<f64>,
    /// `T · p_i`.
    pub t_star: Vec<f64>,
    /// `Q = Σ exp(-β ε_i)`; may be infinite where `ln_partition` is not.
    #[serde(with = "crate::distfit::lossless_f64")]
    pub partition: f64,
    pub ln_partition: f64,
}

pub fn boltzmann_equilibrium(system: &EnsembleSystem) -> EquilibriumPrediction {
    let x: Vec<f64> = system.epsilon.iter().map(|e| -system.beta * e).collect();
    let shift = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = x.iter().map(|v| (v - shift).exp()).collect();
    let sum: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|v| v / sum).collect();
    let ln_partition = shift + sum.ln();
    EquilibriumPrediction {
        t_star: p.iter().map(|pi| pi * system.total_tokens as f64).collect(),
        p,
        partition: ln_partition.exp(),
        ln_partition,
    }
}

/// Per-token information `I_i / t_i = ln a_i` of each record.
pub fn information_epsilon(records: &[ComponentRecord]) -> Vec<f64> {
    records.iter().map(|r| r.information_density()).collect()
}

/// Finds `β` whose equilibrium expected cost `T Σ p_i ε_i` equals `target_u`,
/// by bisection on that strictly decreasing map.
pub fn solve_beta(total_tokens: u64, epsilon: &[f64], target_u: f64) -> Result<f64, EnsembleError> {
    let system = EnsembleSystem::new(total_tokens, epsilon.to_vec(), 0.0)?;
    let t = total_tokens as f64;
    let lo_u = t * epsilon.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_u = t * epsilon.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(target_u > lo_u && target_u < hi_u) {
        return Err(EnsembleError::UnattainableU {
            target: target_u,
            lo: lo_u,
            hi: hi_u,
        });
    }
    let expected_u = |beta: f64| {
        let sys = EnsembleSystem { beta, ..system.clone() };
        let eq = boltzmann_equilibrium(&sys);
        t * eq.p.iter().zip(epsilon).map(|(p, e)| p * e).sum::<f64>()
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while expected_u(lo) < target_u {
        lo *= 2.0;
    }
    while expected_u(hi) > target_u {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected_u(mid) > target_u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn factorial(n: u64) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn multinomial_weights_by_factorials() {
        assert_relative_eq!(
            multinomial_weight(&Microstate::new(vec![2, 2])),
            6f64.ln(),
            max_relative = 1e-14
        );
        assert_eq!(multinomial_weight(&Microstate::new(vec![7])), 0.0);
        assert_relative_eq!(
            multinomial_weight(&Microstate::new(vec![1, 1])),
            2f64.ln(),
            max_relative = 1e-14
        );
        let s = Microstate::new(vec![5, 0, 9, 6]);
        let exact = factorial(20) / (factorial(5) * factorial(9) * factorial(6));
        assert_relative_eq!(multinomial_weight(&s), exact.ln(), max_relative = 1e-13);
    }

    #[test]
    fn equilibrium_examples() {
        let uniform = boltzmann_equilibrium(&EnsembleSystem::new(9, vec![0.3, 1.0, 4.0], 0.0).unwrap());
        for p in &uniform.p {
            assert_relative_eq!(*p, 1.0 / 3.0, max_relative = 1e-15);
        }
        assert_relative_eq!(uniform.partition, 3.0, max_relative = 1e-15);

        let two = EnsembleSystem::from_alphabet_sizes(10, &[2, 4], 2.0).unwrap();
        let eq = boltzmann_equilibrium(&two);
        // 2^-2 / (2^-2 + 4^-2) = 0.25 / 0.3125.
        assert_relative_eq!(eq.p[0], 0.8, max_relative = 1e-14);
        assert_relative_eq!(eq.p[1], 0.2, max_relative = 1e-14);
        assert_relative_eq!(eq.t_star[0], 8.0, max_relative = 1e-14);
        assert_relative_eq!(eq.partition, 0.3125, max_relative = 1e-14);

        let one = boltzmann_equilibrium(&EnsembleSystem::new(4, vec![2.5], 3.0).unwrap());
        assert_eq!(one.p, vec![1.0]);
    }

    #[test]
    fn extreme_beta_does_not_overflow() {
        let sys = EnsembleSystem::new(100, vec![-800.0, 0.0, 800.0], 1.0).unwrap();
        let eq = boltzmann_equilibrium(&sys);
        assert_eq!(eq.partition, f64::INFINITY);
        assert_relative_eq!(eq.ln_partition, 800.0, max_relative = 1e-15);
        assert_eq!(eq.p[0], 1.0);
        let json = serde_json::to_string(&eq).unwrap();
        let back: EquilibriumPrediction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, eq);
    }

    #[test]
    fn epsilon_from_records() {
        let recs = [
            ComponentRecord::new("bubble", "b.c", 94, 18, 8),
            ComponentRecord::new("one", "o.c", 3, 1, 0),
        ];
        let eps = information_epsilon(&recs);
        assert_relative_eq!(eps[0], 26f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(eps[0], recs[0].info / recs[0].t as f64, max_relative = 1e-14);
        assert_eq!(eps[1], 0.0);
    }

    #[test]
    fn validation() {
        let sys = EnsembleSystem::new(5, vec![0.0, 1.0], 1.0).unwrap();
        assert!(sys.validate(&Microstate::new(vec![2, 3])).is_ok());
        assert!(matches!(
            sys.validate(&Microstate::new(vec![2, 2])),
            Err(EnsembleError::NotConserved { found: 4, .. })
        ));
        assert!(matches!(
            sys.validate(&Microstate::new(vec![5])),
            Err(EnsembleError::WrongLength { .. })
        ));
        assert!(EnsembleSystem::new(5, vec![], 1.0).is_err());
        assert!(EnsembleSystem::new(0, vec![1.0], 1.0).is_err());
        assert!(EnsembleSystem::new(5, vec![f64::NAN], 1.0).is_err());
        assert!(EnsembleSystem::from_alphabet_sizes(5, &[0, 2], 1.0).is_err());
    }

    #[test]
    fn beta_root_recovers_known_beta() {
        let eps: Vec<f64> = [2.0f64, 4.0, 8.0, 16.0].iter().map(|a| a.ln()).collect();
        for &beta in &[-0.7, 0.0, 1.3, 2.125] {
            let sys = EnsembleSystem::new(1000, eps.clone(), beta).unwrap();
            let eq = boltzmann_equilibrium(&sys);
            let u: f64 = eq.t_star.iter().zip(&eps).map(|(t, e)| t * e).sum();
            assert_relative_eq!(solve_beta(1000, &eps, u).unwrap(), beta, epsilon = 1e-9);
        }
        assert!(matches!(
            solve_beta(10, &eps, 0.0),
            Err(EnsembleError::UnattainableU { .. })
        ));
    }
}
