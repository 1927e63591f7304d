//! Run report written next to scan output.

use std::collections::BTreeMap;

use infocons::lexicon::{LexDiagnostics, SegmentDiagnostics};
use serde::{Deserialize, Serialize};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub files_scanned: u64,
    pub files_unreadable: u64,
    pub files_unknown_language: u64,
    pub files_without_components: u64,
    pub lines: u64,
    pub tokens: u64,
    /// Tokens at file scope, outside every component.
    pub tokens_outside_components: u64,
    /// Components dropped by the minimum-size filter.
    pub components_below_minimum: u64,
    /// Kept components with fewer than 10 tokens.
    pub small_components: u64,
    pub lex: LexDiagnostics,
    pub segment: SegmentDiagnostics,
}

/// Corpus totals as in a `CorpusSummary`, without the records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusTotals {
    #[serde(rename = "T")]
    pub total_tokens: u64,
    #[serde(rename = "M")]
    pub components: u64,
    #[serde(rename = "I")]
    pub total_information: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub corpus: CorpusTotals,
    pub diagnostics: Diagnostics,
    /// Wall-clock seconds per phase.
    pub timing: BTreeMap<String, f64>,
    /// Files and components per language.
    pub languages: BTreeMap<String, LanguageCount>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageCount {
    pub files: u64,
    pub components: u64,
    pub lines: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips() {
        let mut timing = BTreeMap::new();
        timing.insert("scan".to_string(), 0.125);
        let mut languages = BTreeMap::new();
        languages.insert(
            "c".to_string(),
            LanguageCount {
                files: 3,
                components: 7,
                lines: 99,
            },
        );
        let report = RunReport {
            tool_version: TOOL_VERSION.into(),
            corpus: CorpusTotals {
                total_tokens: 95,
                components: 2,
                total_information: 306.26107457401935,
            },
            diagnostics: Diagnostics {
                files_scanned: 3,
                lex: LexDiagnostics {
                    skipped_lines: 4,
                    ..Default::default()
                },
                ..Default::default()
            },
            timing,
            languages,
        };
        let text = serde_json::to_string(&report).unwrap();
        assert_eq!(serde_json::from_str::<RunReport>(&text).unwrap(), report);
    }
}
