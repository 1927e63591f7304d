use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use infocons::genome::{
    kingdom_regression, load_gene_lengths, synthetic_kingdom, uniformity_check, write_gene_lengths, GeneSet,
    GenomeError, Kingdom, KingdomRegression, SyntheticKingdom, UniformityReport, MIN_UNIFORMITY_GENES,
};
use serde::{Deserialize, Serialize};

use crate::{emit, to_json, Cli, CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct GenesArgs {
    /// Gene-length table (`species,kingdom,length` or `species,kingdom,lengths`).
    pub table: PathBuf,
    /// Kingdom to analyse; every kingdom present when absent.
    #[arg(long)]
    pub kingdom: Option<Kingdom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KingdomReport {
    pub regression: KingdomRegression,
    pub uniformity: Vec<UniformityReport>,
    /// Species with too few genes for a uniformity check.
    pub unchecked_species: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenesReport {
    pub table: PathBuf,
    pub kingdoms: Vec<KingdomReport>,
    /// Kingdoms present but with too few species to regress.
    pub skipped_kingdoms: Vec<String>,
}

fn genome_error(e: GenomeError) -> CliError {
    match e {
        GenomeError::Io(_)
        | GenomeError::Csv(_)
        | GenomeError::BadRow { .. }
        | GenomeError::BadHeader
        | GenomeError::Empty => CliError::input(e),
        GenomeError::TooFewSpecies { .. } | GenomeError::DegenerateRegression(_) | GenomeError::TooFewGenes { .. } => {
            CliError::input(e)
        }
        e => CliError::internal(e),
    }
}

pub fn analyse(sets: &[GeneSet], kingdom: Option<Kingdom>) -> CliResult<(Vec<KingdomReport>, Vec<String>)> {
    let present: BTreeSet<Kingdom> = sets.iter().map(|s| s.kingdom).collect();
    let wanted: Vec<Kingdom> = match kingdom {
        Some(k) => vec![k],
        None => present.iter().copied().collect(),
    };
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for k in wanted {
        let regression = match kingdom_regression(sets, k) {
            Ok(r) => r,
            // Only an explicitly requested kingdom must be regressable.
            Err(e @ GenomeError::TooFewSpecies { .. }) if kingdom.is_none() => {
                skipped.push(e.to_string());
                continue;
            }
            Err(e) => return Err(genome_error(e)),
        };
        let mut uniformity = Vec::new();
        let mut unchecked_species = Vec::new();
        for s in sets.iter().filter(|s| s.kingdom == k) {
            if s.lengths.len() < MIN_UNIFORMITY_GENES {
                unchecked_species.push(s.species.clone());
            } else {
                uniformity.push(uniformity_check(s).map_err(genome_error)?);
            }
        }
        reports.push(KingdomReport {
            regression,
            uniformity,
            unchecked_species,
        });
    }
    if reports.is_empty() {
        return Err(CliError::input(anyhow!(
            "no kingdom has enough species to regress: {}",
            skipped.join("; ")
        )));
    }
    Ok((reports, skipped))
}

pub fn cmd_genes(cli: &Cli, args: &GenesArgs) -> CliResult<GenesReport> {
    let sets = load_gene_lengths(&args.table).map_err(genome_error)?;
    let (kingdoms, skipped_kingdoms) = analyse(&sets, args.kingdom)?;
    for k in &kingdoms {
        let r = &k.regression;
        let tails = k.uniformity.iter().filter(|u| u.power_law_tail).count();
        eprintln!(
            "{}: {} species, k' = {:.3} ± {:.3}, mean length {:.3}, r² = {:.6}; {} of {} species show a power-law tail",
            r.kingdom,
            r.species,
            r.k_prime,
            r.fit.slope_stderr,
            r.mean_length,
            r.fit.r_squared,
            tails,
            k.uniformity.len()
        );
    }
    let report = GenesReport {
        table: args.table.clone(),
        kingdoms,
        skipped_kingdoms,
    };
    emit(cli.output.as_deref(), &to_json(&report)?)?;
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct GenGenesArgs {
    /// Generator configuration (JSON): `{"seed": n, "kingdoms": [...]}`.
    pub config: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    #[serde(default)]
    pub seed: u64,
    pub kingdoms: Vec<SyntheticKingdom>,
}

/// Generates every kingdom of `config`; kingdom `i` uses seed `seed + i`.
pub fn generate(config: &GeneratorConfig) -> CliResult<Vec<GeneSet>> {
    let mut sets = Vec::new();
    for (i, k) in config.kingdoms.iter().enumerate() {
        sets.extend(synthetic_kingdom(k, config.seed.wrapping_add(i as u64)).map_err(CliError::input)?);
    }
    Ok(sets)
}

pub fn cmd_gen_genes(cli: &Cli, args: &GenGenesArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::input(anyhow!("{}: {e}", args.config.display())))?;
    let mut config: GeneratorConfig =
        serde_json::from_str(&text).map_err(|e| CliError::input(anyhow!("{}: {e}", args.config.display())))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let sets = generate(&config)?;
    let mut buf = Vec::new();
    write_gene_lengths(&mut buf, &sets).map_err(CliError::internal)?;
    emit(cli.output.as_deref(), &buf)
}
