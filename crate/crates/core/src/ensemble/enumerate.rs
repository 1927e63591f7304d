//! Exact canonical distribution by enumerating every composition of `T`
//! into `M` non-negative parts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EnsembleError, EnsembleSystem, Microstate};
use crate::distfit::special::ln_factorial;
use crate::exec::Execution;

pub const DEFAULT_MAX_STATES: u64 = 1_000_000;

/// `C(T + M - 1, M - 1)`, or `None` on overflow.
pub fn composition_count(total_tokens: u64, components: usize) -> Option<u128> {
    let k = components.checked_sub(1)? as u128;
    let n = total_tokens as u128 + k;
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (n - i) is divisible by (i + 1) at every step.
        c = c.checked_mul(n - i)? / (i + 1);
    }
    Some(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDistribution {
    /// Normalized probability of every microstate.
    pub probabilities: BTreeMap<Microstate, f64>,
}

impl ExactDistribution {
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn components(&self) -> usize {
        self.probabilities.keys().next().map_or(0, |s| s.t.len())
    }

    /// Expected size of each component.
    pub fn means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.components()];
        for (s, p) in &self.probabilities {
            for (acc, &t) in m.iter_mut().zip(&s.t) {
                *acc += p * t as f64;
            }
        }
        m
    }

    /// Marginal distribution of component `i`'s size.
    pub fn marginal(&self, i: usize) -> BTreeMap<u64, f64> {
        let mut out = BTreeMap::new();
        for (s, p) in &self.probabilities {
            *out.entry(s.t[i]).or_insert(0.0) += p;
        }
        out
    }

    /// Most probable microstate; ties go to the first in lexicographic order.
    pub fn argmax(&self) -> Option<(&Microstate, f64)> {
        let mut best: Option<(&Microstate, f64)> = None;
        for (s, &p) in &self.probabilities {
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((s, p));
            }
        }
        best
    }

    /// Probability of states with an empty component.
    pub fn empty_component_mass(&self) -> f64 {
        self.probabilities
            .iter()
            .filter(|(s, _)| s.has_empty_component())
            .map(|(_, p)| p)
            .sum()
    }
}

/// Enumerates the full canonical distribution, refusing state spaces larger
/// than `max_states`.
pub fn enumerate_exact(
    system: &EnsembleSystem,
    max_states: u64,
    exec: Execution,
) -> Result<ExactDistribution, EnsembleError> {
    let m = system.components();
    let total = system.total_tokens;
    match composition_count(total, m) {
        Some(n) if n <= max_states as u128 => {}
        n => {
            return Err(EnsembleError::TooManyStates {
                states: n.map_or_else(|| "more than 2^128".to_string(), |n| n.to_string()),
                limit: max_states,
            })
        }
    }

    let ln_t_fact = ln_factorial(total);
    let log_weight = |t: &[u64]| {
        let mut lw = ln_t_fact;
        for (&ti, e) in t.iter().zip(&system.epsilon) {
            lw -= ln_factorial(ti) + system.beta * ti as f64 * e;
        }
        lw
    };

    // Each first-coordinate value is an independent block, listed in
    // lexicographic order so the merge below is deterministic.
    let blocks: Vec<Vec<(Vec<u64>, f64)>> = exec.map_range(total as usize + 1, |first| {
        let mut out = Vec::new();
        let mut t = vec![0u64; m];
        t[0] = first as u64;
        fill(&mut t, 1, total - first as u64, &mut |t: &[u64]| {
            out.push((t.to_vec(), log_weight(t)))
        });
        out
    });

    let shift = blocks
        .iter()
        .flatten()
        .map(|(_, lw)| *lw)
        .fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = blocks.iter().flatten().map(|(_, lw)| (lw - shift).exp()).sum();
    let probabilities = blocks
        .into_iter()
        .flatten()
        .map(|(t, lw)| (Microstate::new(t), (lw - shift).exp() / z))
        .collect();
    Ok(ExactDistribution { probabilities })
}

/// Visits every way of placing `remaining` tokens in `t[pos..]`.
fn fill(t: &mut [u64], pos: usize, remaining: u64, visit: &mut impl FnMut(&[u64])) {
    if pos == t.len() {
        if remaining == 0 {
            visit(t);
        }
        return;
    }
    if pos == t.len() - 1 {
        t[pos] = remaining;
        visit(t);
        return;
    }
    for v in 0..=remaining {
        t[pos] = v;
        fill(t, pos + 1, remaining - v, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn counts_compositions() {
        assert_eq!(composition_count(4, 2), Some(5));
        assert_eq!(composition_count(30, 3), Some(496));
        assert_eq!(composition_count(7, 1), Some(1));
        assert_eq!(composition_count(7, 0), None);
        assert_eq!(composition_count(u64::MAX, 40), None);
    }

    #[test]
    fn two_components_four_tokens() {
        let sys = EnsembleSystem::new(4, vec![1.0, 2.0], 0.0).unwrap();
        let d = enumerate_exact(&sys, 100, Execution::Sequential).unwrap();
        assert_eq!(d.len(), 5);
        // W = 1, 4, 6, 4, 1 over t_0 = 0..=4.
        let expected = [1.0, 4.0, 6.0, 4.0, 1.0].map(|w| w / 16.0);
        for ((s, p), e) in d.probabilities.iter().zip(expected) {
            assert_eq!(s.total(), 4);
            assert_relative_eq!(*p, e, max_relative = 1e-14);
        }
        assert_eq!(d.argmax().unwrap().0.t, vec![2, 2]);
        assert_relative_eq!(d.empty_component_mass(), 2.0 / 16.0, max_relative = 1e-14);
    }

    #[test]
    fn single_component() {
        let sys = EnsembleSystem::new(9, vec![0.5], 3.0).unwrap();
        let d = enumerate_exact(&sys, 10, Execution::Sequential).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.probabilities[&Microstate::new(vec![9])], 1.0);
    }

    #[test]
    fn symmetric_means_at_zero_beta() {
        let sys = EnsembleSystem::new(30, vec![0.1, 5.0, -2.0], 0.0).unwrap();
        let d = enumerate_exact(&sys, DEFAULT_MAX_STATES, Execution::Parallel).unwrap();
        assert_eq!(d.len(), 496);
        assert_relative_eq!(d.probabilities.values().sum::<f64>(), 1.0, epsilon = 1e-12);
        for m in d.means() {
            assert_relative_eq!(m, 10.0, max_relative = 1e-12);
        }
        let marginal: f64 = d.marginal(1).values().sum();
        assert_relative_eq!(marginal, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn means_match_multinomial_expectation() {
        // The canonical measure is Multinomial(T, p) with p the equilibrium.
        let sys = EnsembleSystem::from_alphabet_sizes(30, &[2, 4, 8], 1.0).unwrap();
        let d = enumerate_exact(&sys, DEFAULT_MAX_STATES, Execution::Sequential).unwrap();
        let eq = super::super::boltzmann_equilibrium(&sys);
        for (m, t) in d.means().iter().zip(&eq.t_star) {
            assert_relative_eq!(m, t, max_relative = 1e-12);
        }
    }

    #[test]
    fn modes_agree_bitwise() {
        let sys = EnsembleSystem::from_alphabet_sizes(40, &[2, 3, 5, 7], 1.5).unwrap();
        let a = enumerate_exact(&sys, DEFAULT_MAX_STATES, Execution::Sequential).unwrap();
        let b = enumerate_exact(&sys, DEFAULT_MAX_STATES, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn refuses_large_spaces() {
        let sys = EnsembleSystem::new(1000, vec![0.0; 6], 0.0).unwrap();
        let err = enumerate_exact(&sys, DEFAULT_MAX_STATES, Execution::Sequential).unwrap_err();
        assert!(err.to_string().contains("sampler"), "{err}");
    }
}
