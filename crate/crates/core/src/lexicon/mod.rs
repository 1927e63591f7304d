//! Tokenization by declarative language specification, fixed/variable token
//! classification, and segmentation of token streams into components.

mod lexer;
mod segment;
mod spec;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lexer::{
    segments, tokenize, tokenize_bytes, LexDiagnostic, LexDiagnosticKind, LexDiagnostics, Segment, SegmentKind,
};
pub use segment::{segment_components, SegmentDiagnostics};
pub use spec::{
    load_language_spec, ByteClass, CommentClose, CommentRule, ComponentRules, IdentifierPattern, LanguageSpec,
    NumberPattern, StringRule,
};

/// Fixed tokens are defined by the language; variable tokens are invented
/// by the programmer (identifiers, literals).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenClass {
    Fixed,
    Variable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub lexeme: String,
    pub class: TokenClass,
    /// 1-based.
    pub line: u32,
    /// 1-based, in bytes.
    pub column: u32,
    /// Byte offset of the first character.
    pub offset: usize,
}

/// A component (function, procedure, subroutine) of one file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSpan {
    pub name: String,
    pub file: PathBuf,
    pub first_token_index: usize,
    pub last_token_index: usize,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read language spec {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("language spec line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("language spec: {0}")]
    Invalid(String),
    #[error("language spec has no fixed lexemes")]
    EmptyFixed,
    #[error("fixed lexeme `{lexeme}` is listed twice (line {line})")]
    DuplicateFixed { lexeme: String, line: usize },
    #[error("fixed lexeme `{lexeme}` is ambiguous: {reason}")]
    AmbiguousFixed { lexeme: String, reason: &'static str },
    #[error("no bundled language spec named `{0}`")]
    UnknownLanguage(String),
}

/// Result of scanning one file.
#[derive(Debug, Clone)]
pub struct FileScan {
    pub tokens: Vec<Token>,
    pub spans: Vec<ComponentSpan>,
    pub lex: LexDiagnostics,
    pub segment: SegmentDiagnostics,
    pub lines: u64,
}

impl FileScan {
    /// Tokens that fall inside no component (file-scope declarations).
    pub fn tokens_outside(&self) -> usize {
        self.tokens.len() - self.spans.iter().map(|s| s.tokens.len()).sum::<usize>()
    }
}

/// Tokenizes and segments one file's contents.
pub fn scan_source(source: &[u8], spec: &LanguageSpec, file: impl Into<PathBuf>) -> FileScan {
    let file = file.into();
    let (tokens, lex) = tokenize_bytes(source, spec);
    let (spans, segment) = segment_components(&tokens, spec, &file);
    let lines = count_lines(source);
    FileScan {
        tokens,
        spans,
        lex,
        segment,
        lines,
    }
}

pub fn count_lines(source: &[u8]) -> u64 {
    let newlines = source.iter().filter(|&&b| b == b'\n').count() as u64;
    newlines + u64::from(!source.is_empty() && source.last() != Some(&b'\n'))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUBBLE: &str = include_str!("../../../../data/fixtures/bubble.c");

    #[test]
    fn bubble_sort_has_94_tokens_in_one_component() {
        let c = LanguageSpec::bundled("c").unwrap();
        let scan = scan_source(BUBBLE.as_bytes(), &c, "bubble.c");
        assert_eq!(scan.tokens.len(), 94);
        assert_eq!(scan.spans.len(), 1);
        assert_eq!(scan.spans[0].name, "bubble");
        assert_eq!(scan.spans[0].tokens.len(), 94);
        assert_eq!(scan.tokens_outside(), 0);
        assert_eq!(scan.lines, 14);
    }

    #[test]
    fn only_comments_and_declarations() {
        let c = LanguageSpec::bundled("c").unwrap();
        let scan = scan_source(b"/* c */\nextern int x;\ntypedef int t;\n", &c, "d.c");
        assert!(scan.spans.is_empty());
        assert_eq!(scan.tokens_outside(), scan.tokens.len());
    }

    #[test]
    fn line_counting() {
        assert_eq!(count_lines(b""), 0);
        assert_eq!(count_lines(b"a"), 1);
        assert_eq!(count_lines(b"a\n"), 1);
        assert_eq!(count_lines(b"a\nb"), 2);
    }
}
