//! JSON experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sampler::SamplerConfig;
use super::{EnsembleError, EnsembleSystem, DEFAULT_MAX_STATES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMode {
    /// Enumerate when feasible, otherwise sample; run both when both fit.
    #[default]
    Auto,
    Enumerate,
    Sample,
    /// Sample and fit the token-weighted CCDF over alphabet sizes.
    Emergence,
}

/// Exactly one of `epsilon` and `alphabet_sizes` is given; `M`, if present,
/// must equal its length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    #[serde(rename = "T")]
    pub total_tokens: u64,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet_sizes: Option<Vec<u64>>,
    pub steps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(default)]
    pub mode: ExperimentMode,
    #[serde(default = "default_max_states")]
    pub max_states: u64,
    #[serde(default = "default_chains")]
    pub chains: usize,
    /// In `auto` mode, sample when enumeration is infeasible.
    #[serde(default = "default_true")]
    pub allow_sampler_fallback: bool,
}

fn default_max_states() -> u64 {
    DEFAULT_MAX_STATES
}

fn default_chains() -> usize {
    1
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, EnsembleError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnsembleError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| EnsembleError::Config(format!("{}: {e}", path.display())))?;
        cfg.system()?;
        Ok(cfg)
    }

    pub fn system(&self) -> Result<EnsembleSystem, EnsembleError> {
        let system = match (&self.epsilon, &self.alphabet_sizes) {
            (Some(eps), None) => EnsembleSystem::new(self.total_tokens, eps.clone(), self.beta)?,
            (None, Some(a)) => EnsembleSystem::from_alphabet_sizes(self.total_tokens, a, self.beta)?,
            _ => {
                return Err(EnsembleError::Config(
                    "give exactly one of `epsilon` and `alphabet_sizes`".into(),
                ))
            }
        };
        if let Some(m) = self.components {
            if m != system.components() {
                return Err(EnsembleError::Config(format!(
                    "M = {m} but {} per-component values were given",
                    system.components()
                )));
            }
        }
        Ok(system)
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            burn_in: self.burn_in,
            ..SamplerConfig::new(self.steps, self.seed)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_forms() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"M": 3, "T": 30, "beta": 1.0, "alphabet_sizes": [2, 4, 8], "steps": 1000, "seed": 4}"#,
        )
        .unwrap();
        assert_eq!(cfg.system().unwrap().components(), 3);
        assert_eq!(
            (cfg.mode, cfg.chains, cfg.max_states),
            (ExperimentMode::Auto, 1, DEFAULT_MAX_STATES)
        );
        assert_eq!(cfg.sampler().burn_in(), 100);

        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"T": 10, "beta": 0, "epsilon": [0.5, 1.5], "steps": 10, "mode": "enumerate"}"#)
                .unwrap();
        assert_eq!(cfg.system().unwrap().epsilon, vec![0.5, 1.5]);
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let both: ExperimentConfig =
            serde_json::from_str(r#"{"T": 10, "beta": 0, "epsilon": [1.0], "alphabet_sizes": [2], "steps": 10}"#)
                .unwrap();
        assert!(both.system().is_err());
        let wrong_m: ExperimentConfig =
            serde_json::from_str(r#"{"M": 2, "T": 10, "beta": 0, "epsilon": [1.0], "steps": 10}"#).unwrap();
        assert!(wrong_m.system().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"T": 1, "beta": 0, "steps": 1, "bogus": 1}"#).is_err());
    }
}
