//! Declarative language specifications.
//!
//! A `.lang` file is line oriented. Settings before the first section
//! header form the preamble (`name = c`, `extensions = .c .h`, ...). Section
//! headers are `[fixed]`, `[comments]`, `[strings]`, `[identifier]`,
//! `[number]` and `[components]`. A line whose first non-blank character is
//! `#` is a comment; an entry that must begin with `#` is written `\#`.
//! The full grammar lives in `docs/lang-spec-format.md`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use super::LexiconError;

/// A set of bytes, used for identifier and number character classes.
#[derive(Clone, PartialEq, Eq)]
pub struct ByteClass([u64; 4]);

impl ByteClass {
    pub const fn empty() -> Self {
        ByteClass([0; 4])
    }

    pub fn insert(&mut self, b: u8) {
        self.0[(b >> 6) as usize] |= 1u64 << (b & 63);
    }

    pub fn insert_range(&mut self, lo: u8, hi: u8) {
        for b in lo..=hi {
            self.insert(b);
        }
    }

    #[inline]
    pub fn contains(&self, b: u8) -> bool {
        self.0[(b >> 6) as usize] & (1u64 << (b & 63)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == [0; 4]
    }

    /// Parses a list of entries such as `A-Z a-z _ $`.
    fn parse(values: &[&str]) -> Result<Self, String> {
        let mut class = ByteClass::empty();
        for raw in values {
            let v = unescape(raw);
            let bytes = v.as_bytes();
            match bytes.len() {
                1 => class.insert(bytes[0]),
                3 if bytes[1] == b'-' => {
                    if bytes[0] > bytes[2] {
                        return Err(format!("reversed character range `{v}`"));
                    }
                    class.insert_range(bytes[0], bytes[2]);
                }
                _ => return Err(format!("bad character class entry `{v}`")),
            }
        }
        Ok(class)
    }
}

impl fmt::Debug for ByteClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let members: String = (0u8..=255)
            .filter(|b| self.contains(*b))
            .map(|b| if b.is_ascii_graphic() { b as char } else { '?' })
            .collect();
        write!(f, "ByteClass({members:?})")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommentClose {
    EndOfLine,
    Delimiter(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentRule {
    pub open: String,
    pub close: CommentClose,
    /// Only recognised in column 1 (fixed-form Fortran `C` comments).
    pub column_one: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StringRule {
    pub quote: u8,
    pub escape: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentifierPattern {
    pub start: ByteClass,
    pub cont: ByteClass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberPattern {
    pub start: ByteClass,
    pub cont: ByteClass,
    /// A `+` or `-` directly after one of these continues the literal (`1e-5`).
    pub sign_after: ByteClass,
    /// `.5` starts a number when a digit follows the dot.
    pub leading_dot: bool,
}

/// How component (function, subroutine, procedure) boundaries are found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComponentRules {
    /// C-family: `name ( ... ) {` opens a component closed by the matching
    /// brace. Braces whose header has no parameter list are containers
    /// (struct, class, namespace) and are looked through.
    Brace {
        open: String,
        close: String,
        terminator: String,
        params_open: String,
        params_close: String,
        /// Tokens that disqualify a header when seen outside parentheses.
        forbid: Vec<String>,
    },
    /// Tcl: `proc name args {body}` from the keyword to the end of the command.
    KeywordBrace {
        keywords: Vec<String>,
        open: String,
        close: String,
        terminator: String,
    },
    /// Fortran and Ada: keyword-introduced units closed by an `end` statement.
    KeywordEnd {
        keywords: Vec<String>,
        end: String,
        end_excludes: Vec<String>,
        terminator: Option<String>,
        header_requires: Option<String>,
        cancel_after: Vec<String>,
        nest: Vec<String>,
    },
}

/// An immutable, validated language description.
#[derive(Debug, Clone)]
pub struct LanguageSpec {
    pub name: String,
    pub extensions: Vec<String>,
    pub case_insensitive: bool,
    pub skip_line_prefix: Option<String>,
    pub line_continuation: Option<u8>,
    pub comment_rules: Vec<CommentRule>,
    pub string_rules: Vec<StringRule>,
    pub identifier: IdentifierPattern,
    pub number: NumberPattern,
    pub components: ComponentRules,
    fixed: BTreeSet<String>,
    // Identifier-shaped fixed lexemes (keywords), folded when case-insensitive.
    keywords: HashSet<String>,
    // Operator and punctuator lexemes indexed by first byte, longest first.
    operators: Vec<Vec<Box<[u8]>>>,
}

pub(crate) const BUNDLED: &[(&str, &str)] = &[
    ("c", include_str!("../../specs/c.lang")),
    ("java", include_str!("../../specs/java.lang")),
    ("tcl", include_str!("../../specs/tcl.lang")),
    ("cpp", include_str!("../../specs/cpp.lang")),
    ("fortran", include_str!("../../specs/fortran.lang")),
    ("fortran90", include_str!("../../specs/fortran90.lang")),
    ("ada", include_str!("../../specs/ada.lang")),
];

/// Reads and validates a language specification file.
pub fn load_language_spec(path: impl AsRef<Path>) -> Result<LanguageSpec, LexiconError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    LanguageSpec::parse(&text)
}

impl LanguageSpec {
    /// One of the specifications compiled into the library.
    pub fn bundled(name: &str) -> Result<LanguageSpec, LexiconError> {
        let (_, text) = BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| LexiconError::UnknownLanguage(name.to_string()))?;
        LanguageSpec::parse(text)
    }

    pub fn bundled_names() -> impl Iterator<Item = &'static str> {
        BUNDLED.iter().map(|(n, _)| *n)
    }

    pub fn parse(text: &str) -> Result<LanguageSpec, LexiconError> {
        Parser::default().run(text)
    }

    pub fn fixed_lexemes(&self) -> &BTreeSet<String> {
        &self.fixed
    }

    /// Whether `lexeme` is a fixed lexeme of the language, honouring case folding.
    pub fn is_fixed(&self, lexeme: &str) -> bool {
        if self.case_insensitive {
            self.fixed.contains(&lexeme.to_ascii_lowercase())
        } else {
            self.fixed.contains(lexeme)
        }
    }

    #[inline]
    pub(crate) fn is_keyword(&self, word: &[u8]) -> bool {
        // Identifiers are ASCII by construction of the character classes
        // unless a spec puts high bytes in them; lossy is fine for lookup.
        if self.case_insensitive {
            let folded: String = word.iter().map(|b| b.to_ascii_lowercase() as char).collect();
            self.keywords.contains(&folded)
        } else {
            match std::str::from_utf8(word) {
                Ok(s) => self.keywords.contains(s),
                Err(_) => false,
            }
        }
    }

    /// Longest fixed operator starting at `src[0]`.
    #[inline]
    pub(crate) fn match_operator(&self, src: &[u8]) -> Option<usize> {
        self.operators[src[0] as usize]
            .iter()
            .find(|op| src.starts_with(op))
            .map(|op| op.len())
    }

    /// Compares a token lexeme against a spec-level word (component rules).
    pub(crate) fn lexeme_eq(&self, lexeme: &str, word: &str) -> bool {
        if self.case_insensitive {
            lexeme.eq_ignore_ascii_case(word)
        } else {
            lexeme == word
        }
    }

    fn is_identifier(&self, s: &str) -> bool {
        let b = s.as_bytes();
        !b.is_empty()
            && self.identifier.start.contains(b[0])
            && b[1..].iter().all(|c| self.identifier.cont.contains(*c))
    }

    fn is_number(&self, s: &str) -> bool {
        let b = s.as_bytes();
        !b.is_empty()
            && self.number.start.contains(b[0])
            && b[1..]
                .iter()
                .all(|c| self.number.cont.contains(*c) || *c == b'+' || *c == b'-')
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Fixed,
    Comments,
    Strings,
    Identifier,
    Number,
    Components,
}

impl Section {
    fn from_header(line: &str) -> Option<Section> {
        match line {
            "[fixed]" => Some(Section::Fixed),
            "[comments]" => Some(Section::Comments),
            "[strings]" => Some(Section::Strings),
            "[identifier]" => Some(Section::Identifier),
            "[number]" => Some(Section::Number),
            "[components]" => Some(Section::Components),
            _ => None,
        }
    }
}

fn unescape(entry: &str) -> &str {
    match entry.as_bytes() {
        [b'\\', b'#' | b'\\' | b'[', ..] => &entry[1..],
        _ => entry,
    }
}

fn split_setting(line: &str) -> Option<(&str, Vec<&str>)> {
    let (key, value) = line.split_once('=')?;
    let key = key.trim();
    if key.is_empty() || key.contains(char::is_whitespace) {
        return None;
    }
    Some((key, value.split_whitespace().collect()))
}

fn parse_bool(v: &[&str]) -> Option<bool> {
    match v {
        ["true" | "yes"] => Some(true),
        ["false" | "no"] => Some(false),
        _ => None,
    }
}

#[derive(Default)]
struct Parser {
    name: Option<String>,
    extensions: Vec<String>,
    case_insensitive: bool,
    skip_line_prefix: Option<String>,
    line_continuation: Option<u8>,
    fixed: Vec<(usize, String)>,
    comments: Vec<CommentRule>,
    strings: Vec<StringRule>,
    ident_start: Option<ByteClass>,
    ident_cont: Option<ByteClass>,
    num_start: Option<ByteClass>,
    num_cont: Option<ByteClass>,
    num_sign_after: Option<ByteClass>,
    num_leading_dot: bool,
    comp: Vec<(usize, String, Vec<String>)>,
}

impl Parser {
    fn run(mut self, text: &str) -> Result<LanguageSpec, LexiconError> {
        let mut section = Section::Preamble;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(s) = Section::from_header(line) {
                section = s;
                continue;
            }
            self.entry(section, line, line_no)
                .map_err(|message| LexiconError::Malformed { line: line_no, message })?;
        }
        self.finish()
    }

    fn entry(&mut self, section: Section, line: &str, line_no: usize) -> Result<(), String> {
        match section {
            Section::Preamble => {
                let (key, v) = split_setting(line).ok_or("expected `key = value`")?;
                match key {
                    "name" => match v.as_slice() {
                        [n] => self.name = Some(n.to_string()),
                        _ => return Err("`name` takes one word".into()),
                    },
                    "extensions" => self.extensions = v.iter().map(|s| s.to_string()).collect(),
                    "case_insensitive" => self.case_insensitive = parse_bool(&v).ok_or("expected true or false")?,
                    "skip_line_prefix" => match v.as_slice() {
                        [p] => self.skip_line_prefix = Some(p.to_string()),
                        _ => return Err("`skip_line_prefix` takes one value".into()),
                    },
                    "line_continuation" => match v.as_slice() {
                        [c] if c.len() == 1 => self.line_continuation = Some(c.as_bytes()[0]),
                        _ => return Err("`line_continuation` takes one character".into()),
                    },
                    other => return Err(format!("unknown setting `{other}`")),
                }
            }
            Section::Fixed => {
                let lexeme = unescape(line);
                if lexeme.contains(char::is_whitespace) {
                    return Err(format!("fixed lexeme `{lexeme}` contains whitespace"));
                }
                self.fixed.push((line_no, lexeme.to_string()));
            }
            Section::Comments => {
                let parts: Vec<&str> = line.split_whitespace().collect();
                let (open, close, column_one) = match parts.as_slice() {
                    [o, c] => (o, c, false),
                    [o, c, "bol"] => (o, c, true),
                    _ => return Err("expected `OPEN CLOSE` or `OPEN CLOSE bol`".into()),
                };
                let close = match *close {
                    "EOL" => CommentClose::EndOfLine,
                    c => CommentClose::Delimiter(unescape(c).to_string()),
                };
                self.comments.push(CommentRule {
                    open: unescape(open).to_string(),
                    close,
                    column_one,
                });
            }
            Section::Strings => {
                let parts: Vec<&str> = line.split_whitespace().collect();
                let [quote, escape] = parts.as_slice() else {
                    return Err("expected `QUOTE ESCAPE`".into());
                };
                let quote = unescape(quote);
                if quote.len() != 1 {
                    return Err("string quote must be one character".into());
                }
                let escape = match *escape {
                    "none" => None,
                    e if unescape(e).len() == 1 => Some(unescape(e).as_bytes()[0]),
                    _ => return Err("escape must be one character or `none`".into()),
                };
                self.strings.push(StringRule {
                    quote: quote.as_bytes()[0],
                    escape,
                });
            }
            Section::Identifier => {
                let (key, v) = split_setting(line).ok_or("expected `key = value`")?;
                let class = ByteClass::parse(&v)?;
                match key {
                    "start" => self.ident_start = Some(class),
                    "continue" => self.ident_cont = Some(class),
                    other => return Err(format!("unknown identifier key `{other}`")),
                }
            }
            Section::Number => {
                let (key, v) = split_setting(line).ok_or("expected `key = value`")?;
                match key {
                    "start" => self.num_start = Some(ByteClass::parse(&v)?),
                    "continue" => self.num_cont = Some(ByteClass::parse(&v)?),
                    "sign_after" => self.num_sign_after = Some(ByteClass::parse(&v)?),
                    "leading_dot" => self.num_leading_dot = parse_bool(&v).ok_or("expected true or false")?,
                    other => return Err(format!("unknown number key `{other}`")),
                }
            }
            Section::Components => {
                let (key, v) = split_setting(line).ok_or("expected `key = value`")?;
                let v = v.iter().map(|s| unescape(s).to_string()).collect();
                self.comp.push((line_no, key.to_string(), v));
            }
        }
        Ok(())
    }

    fn components(&self, case_insensitive: bool) -> Result<ComponentRules, LexiconError> {
        let fold = |s: &String| {
            if case_insensitive {
                s.to_ascii_lowercase()
            } else {
                s.clone()
            }
        };
        let get_list = |key: &str| -> Option<Vec<String>> {
            self.comp
                .iter()
                .rev()
                .find(|(_, k, _)| k == key)
                .map(|(_, _, v)| v.iter().map(fold).collect())
        };
        let get_one = |key: &str| -> Result<Option<String>, LexiconError> {
            match self.comp.iter().rev().find(|(_, k, _)| k == key) {
                None => Ok(None),
                Some((_, _, v)) if v.len() == 1 => Ok(Some(fold(&v[0]))),
                Some((line, _, _)) => Err(LexiconError::Malformed {
                    line: *line,
                    message: format!("`{key}` takes one value"),
                }),
            }
        };
        let known = [
            "style",
            "open",
            "close",
            "terminator",
            "params",
            "forbid",
            "keywords",
            "end",
            "end_excludes",
            "header_requires",
            "cancel_after",
            "nest",
        ];
        if let Some((line, key, _)) = self.comp.iter().find(|(_, k, _)| !known.contains(&k.as_str())) {
            return Err(LexiconError::Malformed {
                line: *line,
                message: format!("unknown components key `{key}`"),
            });
        }
        let missing = |what: &str| LexiconError::Invalid(format!("[components] needs `{what}`"));
        let style = get_one("style")?.ok_or_else(|| missing("style"))?;
        let rules = match style.as_str() {
            "brace" => {
                let params = get_list("params").unwrap_or_else(|| vec!["(".into(), ")".into()]);
                let [params_open, params_close] = <[String; 2]>::try_from(params)
                    .map_err(|_| LexiconError::Invalid("`params` takes two lexemes".into()))?;
                ComponentRules::Brace {
                    open: get_one("open")?.unwrap_or_else(|| "{".into()),
                    close: get_one("close")?.unwrap_or_else(|| "}".into()),
                    terminator: get_one("terminator")?.unwrap_or_else(|| ";".into()),
                    params_open,
                    params_close,
                    forbid: get_list("forbid").unwrap_or_default(),
                }
            }
            "keyword-brace" => ComponentRules::KeywordBrace {
                keywords: get_list("keywords").ok_or_else(|| missing("keywords"))?,
                open: get_one("open")?.unwrap_or_else(|| "{".into()),
                close: get_one("close")?.unwrap_or_else(|| "}".into()),
                terminator: get_one("terminator")?.unwrap_or_else(|| ";".into()),
            },
            "keyword-end" => ComponentRules::KeywordEnd {
                keywords: get_list("keywords").ok_or_else(|| missing("keywords"))?,
                end: get_one("end")?.ok_or_else(|| missing("end"))?,
                end_excludes: get_list("end_excludes").unwrap_or_default(),
                terminator: get_one("terminator")?,
                header_requires: get_one("header_requires")?,
                cancel_after: get_list("cancel_after").unwrap_or_default(),
                nest: get_list("nest").unwrap_or_default(),
            },
            other => return Err(LexiconError::Invalid(format!("unknown component style `{other}`"))),
        };
        Ok(rules)
    }

    fn finish(self) -> Result<LanguageSpec, LexiconError> {
        let name = self
            .name
            .clone()
            .ok_or_else(|| LexiconError::Invalid("missing `name` setting".into()))?;
        let components = self.components(self.case_insensitive)?;
        if self.fixed.is_empty() {
            return Err(LexiconError::EmptyFixed);
        }
        let identifier = IdentifierPattern {
            start: self
                .ident_start
                .ok_or_else(|| LexiconError::Invalid("[identifier] needs `start`".into()))?,
            cont: self
                .ident_cont
                .ok_or_else(|| LexiconError::Invalid("[identifier] needs `continue`".into()))?,
        };
        let number = NumberPattern {
            start: self
                .num_start
                .ok_or_else(|| LexiconError::Invalid("[number] needs `start`".into()))?,
            cont: self
                .num_cont
                .ok_or_else(|| LexiconError::Invalid("[number] needs `continue`".into()))?,
            sign_after: self.num_sign_after.unwrap_or(ByteClass::empty()),
            leading_dot: self.num_leading_dot,
        };
        if identifier.start.is_empty() || number.start.is_empty() {
            return Err(LexiconError::Invalid("empty start character class".into()));
        }
        if (0u8..=255).any(|b| identifier.start.contains(b) && number.start.contains(b)) {
            return Err(LexiconError::Invalid(
                "identifier and number start classes overlap".into(),
            ));
        }

        let mut spec = LanguageSpec {
            name,
            extensions: self.extensions,
            case_insensitive: self.case_insensitive,
            skip_line_prefix: self.skip_line_prefix,
            line_continuation: self.line_continuation,
            comment_rules: self.comments,
            string_rules: self.strings,
            identifier,
            number,
            components,
            fixed: BTreeSet::new(),
            keywords: HashSet::new(),
            operators: vec![Vec::new(); 256],
        };
        // Longest comment opener wins.
        spec.comment_rules.sort_by_key(|r| std::cmp::Reverse(r.open.len()));

        for (line, lexeme) in self.fixed {
            let lexeme = if spec.case_insensitive {
                lexeme.to_ascii_lowercase()
            } else {
                lexeme
            };
            if spec.fixed.contains(&lexeme) {
                return Err(LexiconError::DuplicateFixed { lexeme, line });
            }
            let first = lexeme.as_bytes()[0];
            if spec.is_number(&lexeme) {
                return Err(LexiconError::AmbiguousFixed {
                    lexeme,
                    reason: "it matches the number pattern",
                });
            }
            if spec.identifier.start.contains(first) {
                if !spec.is_identifier(&lexeme) {
                    return Err(LexiconError::AmbiguousFixed {
                        lexeme,
                        reason: "it starts like an identifier but is not one, so it can never be scanned",
                    });
                }
                spec.keywords.insert(lexeme.clone());
            } else if spec.number.start.contains(first) {
                return Err(LexiconError::AmbiguousFixed {
                    lexeme,
                    reason: "it starts like a number",
                });
            } else {
                spec.operators[first as usize].push(lexeme.as_bytes().into());
            }
            spec.fixed.insert(lexeme);
        }
        for ops in &mut spec.operators {
            ops.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
name = mini
[fixed]
if
+
+=
\\#
[comments]
// EOL
[strings]
\" \\
[identifier]
start = a-z _
continue = a-z 0-9 _
[number]
start = 0-9
continue = 0-9
[components]
style = brace
";

    #[test]
    fn parses_minimal_spec() {
        let spec = LanguageSpec::parse(MINIMAL).unwrap();
        assert_eq!(spec.name, "mini");
        let fixed: Vec<_> = spec.fixed_lexemes().iter().cloned().collect();
        assert_eq!(fixed, ["#", "+", "+=", "if"]);
        assert!(spec.is_keyword(b"if"));
        assert_eq!(spec.match_operator(b"+=x"), Some(2));
        assert_eq!(spec.match_operator(b"+x"), Some(1));
        assert_eq!(spec.match_operator(b"#"), Some(1));
        assert_eq!(spec.string_rules[0].escape, Some(b'\\'));
    }

    #[test]
    fn rejects_duplicates() {
        let text = MINIMAL.replace("+=\n", "+=\nif\n");
        match LanguageSpec::parse(&text) {
            Err(LexiconError::DuplicateFixed { lexeme, .. }) => assert_eq!(lexeme, "if"),
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_fixed() {
        let text = MINIMAL.replace("if\n+\n+=\n\\#\n", "");
        assert!(matches!(LanguageSpec::parse(&text), Err(LexiconError::EmptyFixed)));
    }

    #[test]
    fn rejects_unscannable_fixed() {
        for bad in ["a+", "12", "1x"] {
            let text = MINIMAL.replace("+=\n", &format!("+=\n{bad}\n"));
            assert!(
                matches!(LanguageSpec::parse(&text), Err(LexiconError::AmbiguousFixed { .. })),
                "{bad} should be rejected"
            );
        }
    }

    #[test]
    fn malformed_lines_report_position() {
        let text = MINIMAL.replace("start = 0-9", "start 0-9");
        match LanguageSpec::parse(&text) {
            Err(LexiconError::Malformed { line, .. }) => assert_eq!(line, 15),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn all_bundled_specs_load() {
        for name in LanguageSpec::bundled_names() {
            let spec = LanguageSpec::bundled(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(spec.name, name);
            assert!(!spec.extensions.is_empty());
        }
    }

    #[test]
    fn c_spec_fixes_keywords_and_braces() {
        let c = LanguageSpec::bundled("c").unwrap();
        for lexeme in ["if", "else", "while", "{", "}"] {
            assert!(c.fixed_lexemes().contains(lexeme), "{lexeme}");
        }
    }
}
