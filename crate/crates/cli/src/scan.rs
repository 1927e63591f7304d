use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::Args;
use globset::{Glob, GlobSet, GlobSetBuilder};
use infocons::lexicon::{load_language_spec, scan_source, LanguageSpec};
use infocons::metrics::{component_metrics, write_records_csv, write_records_json, ComponentRecord};
use infocons::Execution;
use walkdir::WalkDir;

use crate::report::{CorpusTotals, Diagnostics, LanguageCount, RunReport, TOOL_VERSION};
use crate::{emit, to_json, Cli, CliError, CliResult, Format};

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Files or directories to scan.
    #[arg(required = true)]
    pub roots: Vec<PathBuf>,
    /// Language for every file, or `auto` to choose by extension.
    #[arg(long, default_value = "auto")]
    pub language: String,
    /// Additional language specification file; its extensions join the
    /// `auto` table.
    #[arg(long)]
    pub spec: Vec<PathBuf>,
    /// Extension mapping override such as `inc=c` (repeatable).
    #[arg(long = "map", value_name = "EXT=LANG")]
    pub maps: Vec<String>,
    /// Only scan paths matching one of these globs (repeatable).
    #[arg(long)]
    pub include: Vec<String>,
    /// Skip paths matching any of these globs (repeatable).
    #[arg(long)]
    pub exclude: Vec<String>,
    /// Drop components with fewer tokens.
    #[arg(long, default_value_t = 1)]
    pub min_component_tokens: u64,
    /// Run-report JSON path; defaults to `<output stem>.report.json` beside
    /// `--output`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub records: Vec<ComponentRecord>,
    pub report: RunReport,
}

/// Maps file extensions (lowercase, without the dot) to language names.
struct Languages {
    specs: HashMap<String, LanguageSpec>,
    by_extension: HashMap<String, String>,
    forced: Option<String>,
}

impl Languages {
    fn new(args: &ScanArgs) -> CliResult<Self> {
        let mut specs = HashMap::new();
        for name in LanguageSpec::bundled_names() {
            specs.insert(
                name.to_string(),
                LanguageSpec::bundled(name).map_err(CliError::internal)?,
            );
        }
        for path in &args.spec {
            let spec = load_language_spec(path).map_err(CliError::input)?;
            specs.insert(spec.name.clone(), spec);
        }
        let mut by_extension = HashMap::new();
        let mut names: Vec<&String> = specs.keys().collect();
        // Bundled names sort first so a custom spec wins shared extensions.
        names.sort_by_key(|n| (!LanguageSpec::bundled_names().any(|b| b == n.as_str()), n.to_string()));
        for name in names {
            for ext in &specs[name].extensions {
                by_extension.insert(ext.trim_start_matches('.').to_ascii_lowercase(), name.clone());
            }
        }
        for m in &args.maps {
            let (ext, lang) = m
                .split_once('=')
                .ok_or_else(|| CliError::usage(anyhow!("--map expects EXT=LANG, got `{m}`")))?;
            if !specs.contains_key(lang) {
                return Err(CliError::usage(anyhow!("--map: unknown language `{lang}`")));
            }
            by_extension.insert(ext.trim_start_matches('.').to_ascii_lowercase(), lang.to_string());
        }
        let forced = match args.language.as_str() {
            "auto" => None,
            name if specs.contains_key(name) => Some(name.to_string()),
            name => {
                let mut known: Vec<&str> = specs.keys().map(String::as_str).collect();
                known.sort_unstable();
                return Err(CliError::usage(anyhow!(
                    "unknown language `{name}` (known: auto, {})",
                    known.join(", ")
                )));
            }
        };
        Ok(Languages {
            specs,
            by_extension,
            forced,
        })
    }

    fn language_of(&self, path: &Path) -> Option<&str> {
        if let Some(f) = &self.forced {
            return Some(f);
        }
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        self.by_extension.get(&ext).map(String::as_str)
    }
}

fn globset(patterns: &[String], flag: &str) -> CliResult<Option<GlobSet>> {
    if patterns.is_empty() {
        return Ok(None);
    }
    let mut b = GlobSetBuilder::new();
    for p in patterns {
        b.add(Glob::new(p).map_err(|e| CliError::usage(anyhow!("--{flag} `{p}`: {e}")))?);
    }
    b.build()
        .map(Some)
        .map_err(|e| CliError::usage(anyhow!("--{flag}: {e}")))
}

struct FileResult {
    records: Vec<ComponentRecord>,
    diagnostics: Diagnostics,
    language: String,
}

/// Walks the roots, scans every file of a known language and measures each
/// component. Records are ordered by path, then by position in the file.
pub fn scan(args: &ScanArgs, exec: Execution) -> CliResult<ScanOutcome> {
    let mut timing = BTreeMap::new();
    let started = Instant::now();
    let languages = Languages::new(args)?;
    let include = globset(&args.include, "include")?;
    let exclude = globset(&args.exclude, "exclude")?;

    let mut diagnostics = Diagnostics::default();
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    for root in &args.roots {
        if !root.exists() {
            return Err(CliError::input(anyhow!(
                "{}: no such file or directory",
                root.display()
            )));
        }
        for entry in WalkDir::new(root).sort_by_file_name() {
            let entry = match entry {
                Ok(e) => e,
                Err(e) => {
                    log::warn!("{e}");
                    diagnostics.files_unreadable += 1;
                    continue;
                }
            };
            if !entry.file_type().is_file() {
                continue;
            }
            let path = entry.path();
            let rel = path.strip_prefix(root).unwrap_or(path);
            let rel = if rel.as_os_str().is_empty() { path } else { rel };
            if include.as_ref().is_some_and(|g| !g.is_match(rel)) || exclude.as_ref().is_some_and(|g| g.is_match(rel)) {
                continue;
            }
            match languages.language_of(path) {
                Some(lang) => files.push((path.to_path_buf(), lang.to_string())),
                None => {
                    log::debug!("{}: no language for this extension", path.display());
                    diagnostics.files_unknown_language += 1;
                }
            }
        }
    }
    files.sort();
    files.dedup();
    timing.insert("discover".to_string(), started.elapsed().as_secs_f64());

    let scanning = Instant::now();
    let results: Vec<Option<FileResult>> = exec.map(&files, |(path, lang)| {
        let bytes = match std::fs::read(path) {
            Ok(b) => b,
            Err(e) => {
                log::warn!("{}: {e}", path.display());
                return None;
            }
        };
        Some(scan_file(
            &bytes,
            &languages.specs[lang],
            path,
            lang,
            args.min_component_tokens,
        ))
    });
    timing.insert("scan".to_string(), scanning.elapsed().as_secs_f64());

    let mut records = Vec::new();
    let mut langs: BTreeMap<String, LanguageCount> = BTreeMap::new();
    for r in results {
        let Some(r) = r else {
            diagnostics.files_unreadable += 1;
            continue;
        };
        let d = &r.diagnostics;
        diagnostics.files_scanned += 1;
        diagnostics.files_without_components += d.files_without_components;
        diagnostics.lines += d.lines;
        diagnostics.tokens += d.tokens;
        diagnostics.tokens_outside_components += d.tokens_outside_components;
        diagnostics.components_below_minimum += d.components_below_minimum;
        diagnostics.small_components += d.small_components;
        diagnostics.lex.merge(&d.lex);
        diagnostics.segment.merge(&d.segment);
        let lc = langs.entry(r.language).or_default();
        lc.files += 1;
        lc.components += r.records.len() as u64;
        lc.lines += d.lines;
        records.extend(r.records);
    }
    if diagnostics.files_scanned == 0 {
        let roots: Vec<String> = args.roots.iter().map(|r| r.display().to_string()).collect();
        return Err(CliError::input(anyhow!(
            "no analyzable files under {}",
            roots.join(", ")
        )));
    }

    let corpus = CorpusTotals {
        total_tokens: records.iter().map(|r| r.t).sum(),
        components: records.len() as u64,
        total_information: records.iter().map(|r| r.info).sum(),
    };
    timing.insert("total".to_string(), started.elapsed().as_secs_f64());
    Ok(ScanOutcome {
        records,
        report: RunReport {
            tool_version: TOOL_VERSION.to_string(),
            corpus,
            diagnostics,
            timing,
            languages: langs,
        },
    })
}

fn scan_file(bytes: &[u8], spec: &LanguageSpec, path: &Path, lang: &str, min_tokens: u64) -> FileResult {
    let scan = scan_source(bytes, spec, path);
    let mut d = Diagnostics {
        lines: scan.lines,
        tokens: scan.tokens.len() as u64,
        tokens_outside_components: scan.tokens_outside() as u64,
        files_without_components: u64::from(scan.spans.is_empty()),
        lex: scan.lex.clone(),
        segment: scan.segment.clone(),
        ..Default::default()
    };
    let mut records = Vec::with_capacity(scan.spans.len());
    for span in &scan.spans {
        if (span.tokens.len() as u64) < min_tokens {
            d.components_below_minimum += 1;
            continue;
        }
        // Spans always hold at least one token.
        let rec = component_metrics(span).expect("non-empty span");
        d.small_components += u64::from(rec.is_small());
        records.push(rec);
    }
    FileResult {
        records,
        diagnostics: d,
        language: lang.to_string(),
    }
}

pub fn write_records(records: &[ComponentRecord], format: Format) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_records_csv(&mut buf, records),
        Format::Json => write_records_json(&mut buf, records),
    }
    .map_err(CliError::internal)?;
    Ok(buf)
}

fn default_report_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map_or_else(|| "scan".into(), |s| s.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}.report.json"))
}

pub fn cmd_scan(cli: &Cli, args: &ScanArgs) -> CliResult<ScanOutcome> {
    let mut outcome = scan(args, cli.execution())?;
    let writing = Instant::now();
    emit(cli.output.as_deref(), &write_records(&outcome.records, cli.format)?)?;
    outcome
        .report
        .timing
        .insert("write".to_string(), writing.elapsed().as_secs_f64());
    let report_path = args
        .report
        .clone()
        .or_else(|| cli.output.as_deref().map(default_report_path));
    if let Some(path) = &report_path {
        emit(Some(path), &to_json(&outcome.report)?)
            .map_err(|e| CliError::input(e.error.context("writing run report")))?;
    }
    let d = &outcome.report.diagnostics;
    eprintln!(
        "scanned {} files ({} lines): {} components, {} tokens; {} skipped (unknown language), {} unreadable",
        d.files_scanned,
        d.lines,
        outcome.report.corpus.components,
        outcome.report.corpus.total_tokens,
        d.files_unknown_language,
        d.files_unreadable
    );
    Ok(outcome)
}

/// Loads records written by `scan`, choosing the format by extension.
pub fn load_records(path: &Path) -> CliResult<Vec<ComponentRecord>> {
    infocons::metrics::read_records(path)
        .with_context(|| format!("reading records from {}", path.display()))
        .map_err(CliError::input)
}
