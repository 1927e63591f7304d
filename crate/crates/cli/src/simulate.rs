use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::anyhow;
use clap::Args;
use infocons::distfit::write_plot_files;
use infocons::ensemble::{
    boltzmann_equilibrium, composition_count, enumerate_exact, metropolis_chains, powerlaw_emergence_experiment,
    EmergenceResult, EnsembleError, EquilibriumPrediction, ExperimentConfig, ExperimentMode, Microstate, SampleResult,
};
use serde::{Deserialize, Serialize};

use crate::{emit, to_json, Cli, CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Experiment configuration (JSON).
    pub config: PathBuf,
    /// Directory for plot data of the emergence CCDF.
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSummary {
    pub states: usize,
    pub means: Vec<f64>,
    pub argmax: Microstate,
    pub argmax_probability: f64,
    /// Probability of states with an empty component.
    pub empty_component_mass: f64,
}

/// Sampler mean against exact mean, per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub component: usize,
    pub exact_mean: f64,
    pub sampled_mean: f64,
    pub stderr: f64,
    /// `(sampled - exact) / stderr`.
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: ExperimentConfig,
    pub equilibrium: EquilibriumPrediction,
    pub exact: Option<ExactSummary>,
    pub sample: Option<SampleResult>,
    pub agreement: Option<Vec<Agreement>>,
    pub emergence: Option<EmergenceResult>,
    pub timing: BTreeMap<String, f64>,
}

pub fn simulate(cli: &Cli, mut config: ExperimentConfig) -> CliResult<SimulationReport> {
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let exec = cli.execution();
    let system = config.system().map_err(CliError::input)?;
    let equilibrium = boltzmann_equilibrium(&system);
    let mut timing = BTreeMap::new();
    let mut report = SimulationReport {
        config: config.clone(),
        equilibrium,
        exact: None,
        sample: None,
        agreement: None,
        emergence: None,
        timing: BTreeMap::new(),
    };

    if config.mode == ExperimentMode::Emergence {
        let sizes = config
            .alphabet_sizes
            .as_ref()
            .ok_or_else(|| CliError::input(anyhow!("emergence mode needs `alphabet_sizes`")))?;
        let started = Instant::now();
        let result = powerlaw_emergence_experiment(sizes, config.beta, config.total_tokens, &config.sampler())
            .map_err(CliError::input)?;
        timing.insert("emergence".to_string(), started.elapsed().as_secs_f64());
        report.emergence = Some(result);
        report.timing = timing;
        return Ok(report);
    }

    let feasible =
        composition_count(system.total_tokens, system.components()).is_some_and(|n| n <= config.max_states as u128);
    let run_exact = match config.mode {
        ExperimentMode::Enumerate => true,
        ExperimentMode::Auto => feasible || !config.allow_sampler_fallback,
        _ => false,
    };
    let run_sampler = match config.mode {
        ExperimentMode::Sample => true,
        ExperimentMode::Auto => config.steps > 0,
        _ => false,
    };

    if run_exact {
        let started = Instant::now();
        let exact = enumerate_exact(&system, config.max_states, exec).map_err(|e| match e {
            EnsembleError::TooManyStates { .. } => CliError::input(e),
            e => CliError::internal(e),
        })?;
        timing.insert("enumerate".to_string(), started.elapsed().as_secs_f64());
        let (argmax, p) = exact.argmax().expect("at least one state");
        report.exact = Some(ExactSummary {
            states: exact.len(),
            means: exact.means(),
            argmax: argmax.clone(),
            argmax_probability: p,
            empty_component_mass: exact.empty_component_mass(),
        });
    }
    if run_sampler {
        let started = Instant::now();
        let sample = metropolis_chains(&system, &config.sampler(), config.chains, exec).map_err(CliError::input)?;
        timing.insert("sample".to_string(), started.elapsed().as_secs_f64());
        report.sample = Some(sample);
    }
    if let (Some(exact), Some(sample)) = (&report.exact, &report.sample) {
        report.agreement = Some(
            (0..exact.means.len())
                .map(|k| Agreement {
                    component: k,
                    exact_mean: exact.means[k],
                    sampled_mean: sample.means[k],
                    stderr: sample.mean_stderr[k],
                    z: (sample.means[k] - exact.means[k]) / sample.mean_stderr[k],
                })
                .collect(),
        );
    }
    report.timing = timing;
    Ok(report)
}

pub fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> CliResult<SimulationReport> {
    let config = ExperimentConfig::load(&args.config).map_err(CliError::input)?;
    let report = simulate(cli, config)?;
    if let (Some(dir), Some(e)) = (&args.plot_dir, &report.emergence) {
        write_plot_files(dir, "emergence_ccdf", &e.ccdf.points, e).map_err(CliError::input)?;
    }
    if let Some(a) = &report.agreement {
        for row in a {
            eprintln!(
                "component {}: exact {:.4}, sampled {:.4} ± {:.4} (z = {:+.2})",
                row.component, row.exact_mean, row.sampled_mean, row.stderr, row.z
            );
        }
    }
    if let Some(e) = &report.emergence {
        match (&e.fit, e.delta) {
            (Some(f), Some(d)) => eprintln!(
                "emergence: ccdf slope {:.4} vs 1 - beta = {:.4} (delta {:+.4}); size-vs-alphabet slope {:.4}",
                f.slope,
                e.target_slope,
                d,
                e.pdf_fit.as_ref().map_or(f64::NAN, |p| p.slope)
            ),
            _ => eprintln!(
                "emergence: degenerate ccdf fit ({})",
                e.fit_error.as_deref().unwrap_or("flat")
            ),
        }
    }
    emit(cli.output.as_deref(), &to_json(&report)?)?;
    Ok(report)
}
