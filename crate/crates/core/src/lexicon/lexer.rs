use serde::{Deserialize, Serialize};

use super::spec::{CommentClose, LanguageSpec};
use super::{Token, TokenClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Token(TokenClass),
    Whitespace,
    Comment,
    /// A whole line skipped by `skip_line_prefix` (C preprocessor).
    SkippedLine,
    /// Unterminated string or comment, running to end of input.
    Unterminated,
    /// One byte that matched no rule.
    Invalid,
}

/// A contiguous byte range of the source and what the lexer made of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexDiagnosticKind {
    UnterminatedString,
    UnterminatedComment,
    InvalidCharacter,
    SkippedLine,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexDiagnostic {
    pub kind: LexDiagnosticKind,
    pub line: u32,
    pub column: u32,
}

/// Per-file tally of everything the lexer skipped or could not classify.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexDiagnostics {
    pub unterminated_strings: u64,
    pub unterminated_comments: u64,
    pub invalid_characters: u64,
    pub skipped_lines: u64,
    #[serde(skip)]
    pub entries: Vec<LexDiagnostic>,
}

impl LexDiagnostics {
    fn record(&mut self, kind: LexDiagnosticKind, line: u32, column: u32) {
        match kind {
            LexDiagnosticKind::UnterminatedString => self.unterminated_strings += 1,
            LexDiagnosticKind::UnterminatedComment => self.unterminated_comments += 1,
            LexDiagnosticKind::InvalidCharacter => self.invalid_characters += 1,
            LexDiagnosticKind::SkippedLine => self.skipped_lines += 1,
        }
        self.entries.push(LexDiagnostic { kind, line, column });
    }

    pub fn merge(&mut self, other: &LexDiagnostics) {
        self.unterminated_strings += other.unterminated_strings;
        self.unterminated_comments += other.unterminated_comments;
        self.invalid_characters += other.invalid_characters;
        self.skipped_lines += other.skipped_lines;
    }

    pub fn total(&self) -> u64 {
        self.unterminated_strings + self.unterminated_comments + self.invalid_characters + self.skipped_lines
    }
}

#[inline]
fn is_space(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\r' | b'\n' | 0x0b | 0x0c)
}

struct Cursor<'a> {
    spec: &'a LanguageSpec,
    src: &'a [u8],
    pos: usize,
    line: u32,
    line_start: usize,
    // Only whitespace seen since the start of the current line.
    blank_prefix: bool,
    diagnostics: LexDiagnostics,
}

impl<'a> Cursor<'a> {
    /// Moves to `end`, keeping line bookkeeping in step.
    fn advance_to(&mut self, end: usize) {
        for (i, &b) in self.src[self.pos..end].iter().enumerate() {
            if b == b'\n' {
                self.line += 1;
                self.line_start = self.pos + i + 1;
                self.blank_prefix = true;
            } else if !is_space(b) {
                self.blank_prefix = false;
            }
        }
        self.pos = end;
    }

    fn column(&self) -> u32 {
        (self.pos - self.line_start + 1) as u32
    }

    fn line_end(&self, from: usize) -> usize {
        self.src[from..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(self.src.len(), |i| from + i)
    }

    fn skipped_line_end(&self) -> usize {
        let mut end = self.line_end(self.pos);
        while let Some(cont) = self.spec.line_continuation {
            let body = self.src[..end].strip_suffix(b"\r").unwrap_or(&self.src[..end]);
            if body.last() == Some(&cont) && end < self.src.len() {
                end = self.line_end(end + 1);
            } else {
                break;
            }
        }
        end
    }

    fn next_segment(&mut self) -> Option<Segment> {
        let src = self.src;
        let start = self.pos;
        if start >= src.len() {
            return None;
        }
        let line = self.line;
        let column = self.column();
        let b = src[start];
        let spec = self.spec;
        let rest = &src[start..];

        let (kind, end) = if is_space(b) {
            let len = rest.iter().position(|c| !is_space(*c)).unwrap_or(rest.len());
            (SegmentKind::Whitespace, start + len)
        } else if self.blank_prefix
            && spec
                .skip_line_prefix
                .as_ref()
                .is_some_and(|p| rest.starts_with(p.as_bytes()))
        {
            self.diagnostics.record(LexDiagnosticKind::SkippedLine, line, column);
            (SegmentKind::SkippedLine, self.skipped_line_end())
        } else if let Some(rule) = spec
            .comment_rules
            .iter()
            .find(|r| rest.starts_with(r.open.as_bytes()) && (!r.column_one || start == self.line_start))
        {
            match &rule.close {
                CommentClose::EndOfLine => (SegmentKind::Comment, self.line_end(start)),
                CommentClose::Delimiter(close) => {
                    let body = start + rule.open.len();
                    match find(&src[body..], close.as_bytes()) {
                        Some(i) => (SegmentKind::Comment, body + i + close.len()),
                        None => {
                            self.diagnostics
                                .record(LexDiagnosticKind::UnterminatedComment, line, column);
                            (SegmentKind::Unterminated, src.len())
                        }
                    }
                }
            }
        } else if let Some(rule) = spec.string_rules.iter().find(|r| r.quote == b) {
            let mut i = start + 1;
            let mut closed = None;
            while i < src.len() {
                let c = src[i];
                if Some(c) == rule.escape && c != rule.quote {
                    i += 2;
                } else if c == rule.quote {
                    closed = Some(i + 1);
                    break;
                } else {
                    i += 1;
                }
            }
            match closed {
                Some(end) => (SegmentKind::Token(TokenClass::Variable), end),
                None => {
                    self.diagnostics
                        .record(LexDiagnosticKind::UnterminatedString, line, column);
                    (SegmentKind::Unterminated, src.len())
                }
            }
        } else if spec.number.start.contains(b)
            || (spec.number.leading_dot && b == b'.' && rest.len() > 1 && spec.number.start.contains(rest[1]))
        {
            let num = &spec.number;
            let mut i = 1;
            while i < rest.len() {
                let c = rest[i];
                if num.cont.contains(c) || ((c == b'+' || c == b'-') && num.sign_after.contains(rest[i - 1])) {
                    i += 1;
                } else {
                    break;
                }
            }
            (SegmentKind::Token(TokenClass::Variable), start + i)
        } else if spec.identifier.start.contains(b) {
            let len = 1 + rest[1..]
                .iter()
                .position(|c| !spec.identifier.cont.contains(*c))
                .unwrap_or(rest.len() - 1);
            let class = if spec.is_keyword(&rest[..len]) {
                TokenClass::Fixed
            } else {
                TokenClass::Variable
            };
            (SegmentKind::Token(class), start + len)
        } else if let Some(len) = spec.match_operator(rest) {
            (SegmentKind::Token(TokenClass::Fixed), start + len)
        } else {
            self.diagnostics
                .record(LexDiagnosticKind::InvalidCharacter, line, column);
            (SegmentKind::Invalid, start + 1)
        };

        self.advance_to(end);
        Some(Segment {
            kind,
            start,
            end,
            line,
            column,
        })
    }
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    if needle.is_empty() {
        return Some(0);
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// Splits `source` into consecutive segments covering every byte.
pub fn segments(source: &[u8], spec: &LanguageSpec) -> (Vec<Segment>, LexDiagnostics) {
    let mut cursor = Cursor {
        spec,
        src: source,
        pos: 0,
        line: 1,
        line_start: 0,
        blank_prefix: true,
        diagnostics: LexDiagnostics::default(),
    };
    let mut out = Vec::new();
    while let Some(seg) = cursor.next_segment() {
        out.push(seg);
    }
    (out, cursor.diagnostics)
}

/// Tokenizes raw 8-bit source text.
pub fn tokenize_bytes(source: &[u8], spec: &LanguageSpec) -> (Vec<Token>, LexDiagnostics) {
    let (segs, diagnostics) = segments(source, spec);
    let tokens = segs
        .into_iter()
        .filter_map(|s| match s.kind {
            SegmentKind::Token(class) => Some(Token {
                lexeme: String::from_utf8_lossy(&source[s.start..s.end]).into_owned(),
                class,
                line: s.line,
                column: s.column,
                offset: s.start,
            }),
            _ => None,
        })
        .collect();
    (tokens, diagnostics)
}

/// Tokenizes `source`, returning the tokens and a diagnostics tally.
pub fn tokenize(source: &str, spec: &LanguageSpec) -> (Vec<Token>, LexDiagnostics) {
    tokenize_bytes(source.as_bytes(), spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenClass::{Fixed as F, Variable as V};

    fn c() -> LanguageSpec {
        LanguageSpec::bundled("c").unwrap()
    }

    fn lex(src: &str) -> Vec<(String, TokenClass)> {
        tokenize(src, &c()).0.into_iter().map(|t| (t.lexeme, t.class)).collect()
    }

    #[test]
    fn empty_source() {
        assert!(tokenize("", &c()).0.is_empty());
    }

    #[test]
    fn increment_statement() {
        let got = lex("i = i + 1 ;");
        let classes: Vec<_> = got.iter().map(|(_, c)| *c).collect();
        assert_eq!(classes, [V, F, V, F, V, F]);
    }

    #[test]
    fn longest_match() {
        assert_eq!(lex("a>=b"), [("a".into(), V), (">=".into(), F), ("b".into(), V)]);
        assert_eq!(lex("x>>=2")[1].0, ">>=");
        assert_eq!(lex("p->q")[1].0, "->");
    }

    #[test]
    fn literals_are_single_variable_tokens() {
        let got = lex(r#"s = "a \" b"; c = '\''; x = 1.5e-3f + .5 + 0x1F;"#);
        let lexemes: Vec<_> = got.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(
            lexemes,
            [
                "s",
                "=",
                r#""a \" b""#,
                ";",
                "c",
                "=",
                r"'\''",
                ";",
                "x",
                "=",
                "1.5e-3f",
                "+",
                ".5",
                "+",
                "0x1F",
                ";"
            ]
        );
    }

    #[test]
    fn comments_and_preprocessor_produce_no_tokens() {
        let src = "#include <stdio.h>\n#define X \\\n  1\n/* a\n b */ int // tail\nx;";
        let (tokens, diag) = tokenize(src, &c());
        let lexemes: Vec<_> = tokens.iter().map(|t| t.lexeme.as_str()).collect();
        assert_eq!(lexemes, ["int", "x", ";"]);
        assert_eq!(diag.skipped_lines, 2);
        assert_eq!((tokens[0].line, tokens[0].column), (5, 7));
        assert_eq!((tokens[1].line, tokens[1].column), (6, 1));
    }

    #[test]
    fn hash_mid_line_is_not_a_directive() {
        let (tokens, diag) = tokenize("x # y", &c());
        assert_eq!(tokens.len(), 3);
        assert_eq!(diag.skipped_lines, 0);
    }

    #[test]
    fn unterminated_string_skips_to_end() {
        let (tokens, diag) = tokenize("a = \"oops\nb = 2;", &c());
        assert_eq!(tokens.len(), 2);
        assert_eq!(diag.unterminated_strings, 1);
        assert_eq!(diag.entries[0].line, 1);
        assert_eq!(diag.entries[0].column, 5);
    }

    #[test]
    fn unterminated_comment_is_counted() {
        let (tokens, diag) = tokenize("a /* never closed", &c());
        assert_eq!(tokens.len(), 1);
        assert_eq!(diag.unterminated_comments, 1);
    }

    #[test]
    fn invalid_characters_are_counted_and_skipped() {
        let (tokens, diag) = tokenize("a @ b ` c", &c());
        assert_eq!(tokens.len(), 3);
        assert_eq!(diag.invalid_characters, 2);
    }

    #[test]
    fn segments_reconstruct_source() {
        let src = "#if 1\nint f(void) { return 'x' + \"y\"; } /* c */ @\n";
        let (segs, _) = segments(src.as_bytes(), &c());
        let rebuilt: Vec<u8> = segs
            .iter()
            .flat_map(|s| src.as_bytes()[s.start..s.end].to_vec())
            .collect();
        assert_eq!(rebuilt, src.as_bytes());
    }

    #[test]
    fn case_insensitive_keywords() {
        let f = LanguageSpec::bundled("fortran90").unwrap();
        let (tokens, _) = tokenize("SUBROUTINE Foo(X)\n  x = x + 1\nEND SUBROUTINE", &f);
        assert_eq!(tokens[0].class, F);
        assert_eq!(tokens[1].class, V);
        assert_eq!(tokens.last().unwrap().class, F);
    }
}
