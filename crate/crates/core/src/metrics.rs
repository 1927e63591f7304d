//! Per-component token counts, alphabets and Hartley information, plus
//! corpus-level totals and the CSV/JSON record formats.
//!
//! Information is measured in natural-log units: a component of `t` tokens
//! drawn from a unique alphabet of `a` lexemes carries `t * ln(a)`.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distfit::{ols, FitError, LinearFit};
use crate::lexicon::{ComponentSpan, TokenClass};

/// Components smaller than this are kept but flagged: the ensemble model
/// assumes components of many tokens.
pub const SMALL_COMPONENT_TOKENS: u64 = 10;

/// CSV header of the record export, in column order.
pub const RECORD_CSV_HEADER: &str = "name,file,t,a_fixed,a_var,a,info";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub name: String,
    pub file: String,
    /// Total tokens.
    pub t: u64,
    /// Distinct fixed lexemes used.
    pub a_fixed: u64,
    /// Distinct variable lexemes used.
    pub a_var: u64,
    /// Unique alphabet, `a_fixed + a_var`.
    pub a: u64,
    /// `t * ln(a)`.
    pub info: f64,
}

impl ComponentRecord {
    pub fn new(name: impl Into<String>, file: impl Into<String>, t: u64, a_fixed: u64, a_var: u64) -> Self {
        let a = a_fixed + a_var;
        ComponentRecord {
            name: name.into(),
            file: file.into(),
            t,
            a_fixed,
            a_var,
            a,
            info: information(t, a),
        }
    }

    pub fn is_small(&self) -> bool {
        self.t < SMALL_COMPONENT_TOKENS
    }

    /// Information per token, `ln(a)`.
    pub fn information_density(&self) -> f64 {
        (self.a as f64).ln()
    }
}

/// Hartley information of `t` symbols over an alphabet of `a`, in nats.
pub fn information(t: u64, a: u64) -> f64 {
    if a <= 1 {
        0.0
    } else {
        t as f64 * (a as f64).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    /// Total tokens over all components.
    #[serde(rename = "T")]
    pub total_tokens: u64,
    /// Number of components.
    #[serde(rename = "M")]
    pub components: u64,
    /// Total information.
    #[serde(rename = "I")]
    pub total_information: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<ComponentRecord>,
}

impl CorpusSummary {
    /// Associative merge; `records` are concatenated in order.
    pub fn merge(mut self, other: CorpusSummary) -> CorpusSummary {
        self.total_tokens += other.total_tokens;
        self.components += other.components;
        self.total_information += other.total_information;
        self.records.extend(other.records);
        self
    }
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("component `{0}` has no tokens")]
    EmptyComponent(String),
    #[error("no component records")]
    NoRecords,
    #[error("empty genetic sequence")]
    EmptySequence,
    #[error("invalid base {found:?} at position {position}")]
    InvalidBase { position: usize, found: char },
    #[error("need at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },
    #[error("all records have the same token count; regression is degenerate")]
    DegenerateRegression,
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("record file: {0}")]
    Csv(#[from] csv::Error),
    #[error("record file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("record file: {0}")]
    Io(#[from] std::io::Error),
    #[error("record line {line}: {message}")]
    BadRecord { line: u64, message: String },
}

/// Measures one component span.
pub fn component_metrics(span: &ComponentSpan) -> Result<ComponentRecord, MetricsError> {
    if span.tokens.is_empty() {
        return Err(MetricsError::EmptyComponent(span.name.clone()));
    }
    let mut fixed = HashSet::new();
    let mut variable = HashSet::new();
    for tok in &span.tokens {
        match tok.class {
            TokenClass::Fixed => fixed.insert(tok.lexeme.as_str()),
            TokenClass::Variable => variable.insert(tok.lexeme.as_str()),
        };
    }
    Ok(ComponentRecord::new(
        span.name.clone(),
        span.file.to_string_lossy(),
        span.tokens.len() as u64,
        fixed.len() as u64,
        variable.len() as u64,
    ))
}

/// Totals over `records`, which are retained in the summary.
pub fn summarize_corpus(records: &[ComponentRecord]) -> Result<CorpusSummary, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::NoRecords);
    }
    Ok(CorpusSummary {
        total_tokens: records.iter().map(|r| r.t).sum(),
        components: records.len() as u64,
        total_information: records.iter().map(|r| r.info).sum(),
        records: records.to_vec(),
    })
}

/// Measures a nucleotide sequence as a single component over `{a,c,g,t}`.
/// ASCII whitespace is ignored so grouped sequence listings can be pasted.
pub fn genetic_metrics(name: &str, sequence: &str) -> Result<ComponentRecord, MetricsError> {
    let mut seen = [false; 4];
    let mut t = 0u64;
    for (position, ch) in sequence.chars().enumerate() {
        let slot = match ch.to_ascii_lowercase() {
            'a' => 0,
            'c' => 1,
            'g' => 2,
            't' => 3,
            c if c.is_ascii_whitespace() => continue,
            _ => return Err(MetricsError::InvalidBase { position, found: ch }),
        };
        seen[slot] = true;
        t += 1;
    }
    if t == 0 {
        return Err(MetricsError::EmptySequence);
    }
    let a_var = seen.iter().filter(|s| **s).count() as u64;
    Ok(ComponentRecord::new(name, "", t, 0, a_var))
}

/// Fixed-alphabet growth with component size, and the variable/fixed
/// alphabet ratio for small versus large components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphabetGrowth {
    pub slope: f64,
    pub intercept: f64,
    /// `None` when `a_fixed` is identical in every record.
    pub fit: Option<LinearFit>,
    pub constant_response: bool,
    /// Records with `t` at or below this are "small".
    pub median_t: f64,
    /// Median of `a_var / a_fixed` over small records (those with `a_fixed > 0`).
    pub small_ratio: Option<f64>,
    pub large_ratio: Option<f64>,
}

/// Ordinary least squares of `a_fixed` on `t`.
pub fn alphabet_growth_regression(records: &[ComponentRecord]) -> Result<AlphabetGrowth, MetricsError> {
    if records.len() < 3 {
        return Err(MetricsError::TooFewRecords {
            needed: 3,
            got: records.len(),
        });
    }
    if records.iter().all(|r| r.t == records[0].t) {
        return Err(MetricsError::DegenerateRegression);
    }
    let x: Vec<f64> = records.iter().map(|r| r.t as f64).collect();
    let y: Vec<f64> = records.iter().map(|r| r.a_fixed as f64).collect();

    let (slope, intercept, fit, constant_response) = match ols(&x, &y) {
        Ok(fit) => (fit.slope, fit.intercept, Some(fit), false),
        Err(FitError::ZeroVarianceResponse { intercept, .. }) => (0.0, intercept, None, true),
        Err(e) => return Err(e.into()),
    };

    let mut ts: Vec<u64> = records.iter().map(|r| r.t).collect();
    ts.sort_unstable();
    let median_t = median_sorted(&ts.iter().map(|&t| t as f64).collect::<Vec<_>>());
    let ratios = |small: bool| {
        let mut v: Vec<f64> = records
            .iter()
            .filter(|r| r.a_fixed > 0 && ((r.t as f64) <= median_t) == small)
            .map(|r| r.a_var as f64 / r.a_fixed as f64)
            .collect();
        v.sort_by(f64::total_cmp);
        (!v.is_empty()).then(|| median_sorted(&v))
    };
    Ok(AlphabetGrowth {
        slope,
        intercept,
        fit,
        constant_response,
        median_t,
        small_ratio: ratios(true),
        large_ratio: ratios(false),
    })
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn write_records_csv<W: Write>(out: W, records: &[ComponentRecord]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_json<W: Write>(out: W, records: &[ComponentRecord]) -> Result<(), MetricsError> {
    serde_json::to_writer_pretty(out, records)?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<ComponentRecord>, MetricsError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != RECORD_CSV_HEADER {
        return Err(MetricsError::BadRecord {
            line: 1,
            message: format!("expected header `{RECORD_CSV_HEADER}`"),
        });
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let rec: ComponentRecord = row?;
        out.push(rec);
    }
    for (i, r) in out.iter().enumerate() {
        check_record(r, i as u64 + 2)?;
    }
    Ok(out)
}

pub fn read_records_json<R: Read>(input: R) -> Result<Vec<ComponentRecord>, MetricsError> {
    let out: Vec<ComponentRecord> = serde_json::from_reader(input)?;
    for (i, r) in out.iter().enumerate() {
        check_record(r, i as u64 + 1)?;
    }
    Ok(out)
}

/// Reads records, choosing the format by extension (`.json` or CSV).
pub fn read_records(path: &Path) -> Result<Vec<ComponentRecord>, MetricsError> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        read_records_json(file)
    } else {
        read_records_csv(file)
    }
}

fn check_record(r: &ComponentRecord, line: u64) -> Result<(), MetricsError> {
    let bad = |message: String| Err(MetricsError::BadRecord { line, message });
    if r.a != r.a_fixed + r.a_var {
        return bad(format!("a = {} but a_fixed + a_var = {}", r.a, r.a_fixed + r.a_var));
    }
    if r.a < 1 || r.a > r.t {
        return bad(format!("need 1 <= a <= t, got a = {}, t = {}", r.a, r.t));
    }
    if !r.info.is_finite() || r.info < 0.0 {
        return bad(format!("info must be finite and non-negative, got {}", r.info));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{scan_source, LanguageSpec, Token};
    use approx::assert_relative_eq;
    use std::path::PathBuf;

    fn bubble() -> ComponentRecord {
        let c = LanguageSpec::bundled("c").unwrap();
        let scan = scan_source(include_bytes!("../../../data/fixtures/bubble.c"), &c, "bubble.c");
        component_metrics(&scan.spans[0]).unwrap()
    }

    #[test]
    fn bubble_sort_alphabet() {
        let c = LanguageSpec::bundled("c").unwrap();
        let scan = scan_source(include_bytes!("../../../data/fixtures/bubble.c"), &c, "bubble.c");
        let lexemes = |class| {
            let mut v: Vec<&str> = scan.spans[0]
                .tokens
                .iter()
                .filter(|t| t.class == class)
                .map(|t| t.lexeme.as_str())
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let mut fixed = vec![
            "void", "int", "(", ")", "[", "]", "{", "}", ",", ";", "for", "=", ">=", "--", "<=", "++", "if", ">", "-",
        ];
        fixed.sort_unstable();
        let mut var = vec!["bubble", "a", "N", "i", "j", "t", "1", "2"];
        var.sort_unstable();
        assert_eq!(lexemes(TokenClass::Fixed), fixed);
        assert_eq!(lexemes(TokenClass::Variable), var);

        let r = bubble();
        assert_eq!((r.t, r.a_fixed, r.a_var, r.a), (94, 19, 8, 27));
        // ln 27 = 3 ln 3 = 3.295836866004329
        assert_relative_eq!(r.info, 94.0 * 3.295836866004329, max_relative = 1e-12);
    }

    #[test]
    fn single_token_component() {
        let span = ComponentSpan {
            name: "x".into(),
            file: PathBuf::from("f"),
            first_token_index: 0,
            last_token_index: 0,
            tokens: vec![Token {
                lexeme: "x".into(),
                class: TokenClass::Variable,
                line: 1,
                column: 1,
                offset: 0,
            }],
        };
        let r = component_metrics(&span).unwrap();
        assert_eq!((r.t, r.a, r.info), (1, 1, 0.0));
        assert!(r.is_small());
    }

    #[test]
    fn empty_span_is_rejected() {
        let span = ComponentSpan {
            name: "e".into(),
            file: PathBuf::from("f"),
            first_token_index: 0,
            last_token_index: 0,
            tokens: vec![],
        };
        assert!(matches!(component_metrics(&span), Err(MetricsError::EmptyComponent(_))));
    }

    #[test]
    fn corpus_sums() {
        let one = ComponentRecord::new("one", "f", 1, 0, 1);
        let b = ComponentRecord::new("bubble", "bubble.c", 94, 18, 8);
        // 94 ln 26 with ln 26 = 3.258096538021482.
        assert_relative_eq!(b.info, 306.2610745740193, max_relative = 1e-12);
        let s = summarize_corpus(&[b, one]).unwrap();
        assert_eq!((s.total_tokens, s.components), (95, 2));
        assert_relative_eq!(s.total_information, 306.2610745740193, max_relative = 1e-12);

        let r = ComponentRecord::new("r", "f", 10, 2, 2);
        let s = summarize_corpus(&[r.clone(), r.clone(), r]).unwrap();
        assert_eq!(s.total_tokens, 30);
        assert_relative_eq!(s.total_information, 30.0 * 4f64.ln(), max_relative = 1e-15);

        assert!(matches!(summarize_corpus(&[]), Err(MetricsError::NoRecords)));
    }

    #[test]
    fn measles_prefix() {
        let seq = "atggactcgc tatctgtcaa ccagatcttg taccccgaag ttcacctaga tagcccgata";
        let r = genetic_metrics("measles", seq).unwrap();
        assert_eq!((r.t, r.a_fixed, r.a_var, r.a), (60, 0, 4, 4));
        assert_relative_eq!(r.info, 83.17766166719343, max_relative = 1e-12);
    }

    #[test]
    fn genetic_edge_cases() {
        let r = genetic_metrics("a", "aaaa").unwrap();
        assert_eq!((r.t, r.a, r.info), (4, 1, 0.0));
        let r = genetic_metrics("b", "ACgt").unwrap();
        assert_eq!(r.a, 4);
        assert_relative_eq!(r.info, 5.545177444479562, max_relative = 1e-12);
        match genetic_metrics("c", "acgu") {
            Err(MetricsError::InvalidBase { position, found }) => assert_eq!((position, found), (3, 'u')),
            other => panic!("{other:?}"),
        }
        assert!(matches!(genetic_metrics("d", " \n"), Err(MetricsError::EmptySequence)));
    }

    #[test]
    fn constant_fixed_alphabet_has_zero_slope() {
        let recs: Vec<_> = (1..=5).map(|i| ComponentRecord::new("r", "f", 20 * i, 12, i)).collect();
        let g = alphabet_growth_regression(&recs).unwrap();
        assert_eq!(g.slope, 0.0);
        assert!(g.constant_response && g.fit.is_none());
        assert_eq!(g.median_t, 60.0);
    }

    #[test]
    fn alphabet_growth_recovers_known_slope() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let recs: Vec<_> = (0..400)
            .map(|i| {
                let t = 20 + 25 * i as u64;
                let noise: f64 = rng.gen_range(-2.0..2.0);
                let a_fixed = (20.0 + 0.0007 * t as f64 + noise).round() as u64;
                ComponentRecord::new("r", "f", t, a_fixed, 5)
            })
            .collect();
        let g = alphabet_growth_regression(&recs).unwrap();
        let fit = g.fit.unwrap();
        assert!((fit.slope - 7e-4).abs() < 2.0 * fit.slope_stderr, "{fit:?}");
    }

    #[test]
    fn degenerate_regressions() {
        let same: Vec<_> = (0..3).map(|i| ComponentRecord::new("r", "f", 50, 10 + i, 1)).collect();
        assert!(matches!(
            alphabet_growth_regression(&same),
            Err(MetricsError::DegenerateRegression)
        ));
        assert!(matches!(
            alphabet_growth_regression(&same[..2]),
            Err(MetricsError::TooFewRecords { .. })
        ));
    }

    #[test]
    fn csv_and_json_round_trip() {
        let recs = vec![bubble(), ComponentRecord::new("g, \"q\"", "dir/x.c", 12, 7, 3)];
        let mut csv_buf = Vec::new();
        write_records_csv(&mut csv_buf, &recs).unwrap();
        let text = String::from_utf8(csv_buf.clone()).unwrap();
        assert!(text.starts_with(RECORD_CSV_HEADER));
        assert_eq!(read_records_csv(&csv_buf[..]).unwrap(), recs);

        let mut json_buf = Vec::new();
        write_records_json(&mut json_buf, &recs).unwrap();
        assert_eq!(read_records_json(&json_buf[..]).unwrap(), recs);
    }

    #[test]
    fn inconsistent_records_are_rejected() {
        let text = format!("{RECORD_CSV_HEADER}\nf,x.c,10,3,3,7,1.0\n");
        assert!(matches!(
            read_records_csv(text.as_bytes()),
            Err(MetricsError::BadRecord { line: 2, .. })
        ));
    }
}
