use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use infocons::distfit::{
    build_ccdf, fit_tail, predicted_shape_check, write_plot_files, Ccdf, FitError, LinearFit, Measure, PlotFiles,
    ShapeReport, DEFAULT_FIT_RANGE,
};
use infocons::metrics::{summarize_corpus, ComponentRecord, CorpusSummary};
use serde::{Deserialize, Serialize};

use crate::scan::load_records;
use crate::{emit, to_json, Cli, CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Records written by `scan` (`.csv` or `.json`).
    pub records: PathBuf,
    /// Size measure: token count or unique alphabet.
    #[arg(long, default_value = "tokens")]
    pub measure: Measure,
    /// Smallest size in the fit window.
    #[arg(long, default_value_t = DEFAULT_FIT_RANGE.0)]
    pub s_min: u64,
    /// Largest size in the fit window.
    #[arg(long, default_value_t = DEFAULT_FIT_RANGE.1)]
    pub s_max: u64,
    /// Directory for plot data (`ccdf_<measure>.dat/.csv/.json`).
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub records: PathBuf,
    pub measure: Measure,
    pub s_min: u64,
    pub s_max: u64,
    /// Corpus totals recomputed from the records.
    pub corpus: CorpusTotalsOnly,
    pub points: usize,
    pub fit: LinearFit,
    /// `None` with fewer than ten distinct sizes.
    pub shape: Option<ShapeReport>,
    pub shape_error: Option<String>,
    /// `1 - slope`, the density exponent a CCDF slope implies.
    pub implied_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusTotalsOnly {
    #[serde(rename = "T")]
    pub total_tokens: u64,
    #[serde(rename = "M")]
    pub components: u64,
    #[serde(rename = "I")]
    pub total_information: f64,
}

impl From<&CorpusSummary> for CorpusTotalsOnly {
    fn from(s: &CorpusSummary) -> Self {
        CorpusTotalsOnly {
            total_tokens: s.total_tokens,
            components: s.components,
            total_information: s.total_information,
        }
    }
}

pub fn sizes(records: &[ComponentRecord], measure: Measure) -> Vec<u64> {
    records
        .iter()
        .map(|r| match measure {
            Measure::Tokens => r.t,
            Measure::Alphabet => r.a,
        })
        .collect()
}

/// CCDF, tail fit and shape report for in-memory records.
pub fn fit_records(records: &[ComponentRecord], args: &FitArgs) -> CliResult<(Ccdf, FitReport)> {
    let summary = summarize_corpus(records).map_err(CliError::input)?;
    let ccdf = build_ccdf(&sizes(records, args.measure), args.measure).map_err(CliError::input)?;
    let fit = fit_tail(&ccdf.points, args.s_min, args.s_max).map_err(|e| match e {
        FitError::ZeroVarianceResponse { .. } => CliError::input(anyhow!(
            "degenerate fit: every size in [{}, {}] has the same count ({e})",
            args.s_min,
            args.s_max
        )),
        e => CliError::input(e),
    })?;
    let (shape, shape_error) = match predicted_shape_check(&ccdf.points) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = FitReport {
        records: args.records.clone(),
        measure: args.measure,
        s_min: args.s_min,
        s_max: args.s_max,
        corpus: (&summary).into(),
        points: ccdf.points.len(),
        implied_beta: 1.0 - fit.slope,
        fit,
        shape,
        shape_error,
    };
    Ok((ccdf, report))
}

/// A coefficient table in the layout of a classical linear-model summary.
pub fn format_table(fit: &LinearFit) -> String {
    let p = if fit.p_value.is_below_threshold() {
        "< 2.2e-16".to_string()
    } else {
        format!("{:.4e}", fit.p_value.upper_bound())
    };
    let t_intercept = fit.intercept / fit.intercept_stderr;
    let mut s = String::new();
    s.push_str("Coefficients:\n");
    s.push_str(&format!(
        "{:<12}{:>12} {:>12} {:>10} {:>12}\n",
        "", "Estimate", "Std. Error", "t value", "Pr(>|t|)"
    ));
    s.push_str(&format!(
        "{:<12}{:>12.6} {:>12.6} {:>10.1} {:>12}\n",
        "(Intercept)",
        fit.intercept,
        fit.intercept_stderr,
        t_intercept,
        p_for(t_intercept, fit.df)
    ));
    s.push_str(&format!(
        "{:<12}{:>12.6} {:>12.6} {:>10.1} {:>12}\n",
        "ln s", fit.slope, fit.slope_stderr, fit.t_value, p
    ));
    s.push_str(&format!(
        "\nResidual standard error: {:.4} on {} degrees of freedom\n",
        fit.residual_stderr, fit.df
    ));
    s.push_str(&format!("R-squared: {:.4}\n", fit.r_squared));
    s
}

fn p_for(t: f64, df: usize) -> String {
    let p = infocons::distfit::PValue::from_probability(infocons::distfit::special::student_t_two_sided(t, df as f64));
    if p.is_below_threshold() {
        "< 2.2e-16".to_string()
    } else {
        format!("{:.4e}", p.upper_bound())
    }
}

pub fn cmd_fit(cli: &Cli, args: &FitArgs) -> CliResult<FitReport> {
    let records = load_records(&args.records)?;
    let (ccdf, report) = fit_records(&records, args)?;
    print!("{}", format_table(&report.fit));
    if let Some(dir) = &args.plot_dir {
        let stem = format!("ccdf_{}", measure_name(args.measure));
        let files: PlotFiles = write_plot_files(dir, &stem, &ccdf.points, &report).map_err(CliError::input)?;
        log::info!("plot data in {}", files.plot.display());
    }
    if let Some(out) = &cli.output {
        emit(Some(out), &to_json(&report)?)?;
    }
    Ok(report)
}

pub fn measure_name(m: Measure) -> &'static str {
    match m {
        Measure::Tokens => "tokens",
        Measure::Alphabet => "alphabet",
    }
}
