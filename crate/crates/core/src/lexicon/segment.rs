//! Component boundary recognition over a token stream.
//!
//! Components are non-nested: a definition found inside an open component
//! (a method of a local class, a Fortran internal procedure) is folded into
//! the enclosing one.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::{ComponentRules, LanguageSpec};
use super::{ComponentSpan, Token, TokenClass};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentDiagnostics {
    /// Components still open at end of file; they are discarded.
    pub unterminated_components: u64,
    /// Closing delimiters with nothing to close.
    pub unbalanced_closers: u64,
}

impl SegmentDiagnostics {
    pub fn merge(&mut self, other: &SegmentDiagnostics) {
        self.unterminated_components += other.unterminated_components;
        self.unbalanced_closers += other.unbalanced_closers;
    }
}

/// Finds the components of one file. Spans are returned in source order.
pub fn segment_components(
    tokens: &[Token],
    spec: &LanguageSpec,
    file: &Path,
) -> (Vec<ComponentSpan>, SegmentDiagnostics) {
    let mut out = Segmenter {
        spec,
        tokens,
        spans: Vec::new(),
        diagnostics: SegmentDiagnostics::default(),
    };
    match &spec.components {
        ComponentRules::Brace {
            open,
            close,
            terminator,
            params_open,
            params_close,
            forbid,
        } => out.brace(open, close, terminator, params_open, params_close, forbid),
        ComponentRules::KeywordBrace {
            keywords,
            open,
            close,
            terminator,
        } => out.keyword_brace(keywords, open, close, terminator),
        ComponentRules::KeywordEnd {
            keywords,
            end,
            end_excludes,
            terminator,
            header_requires,
            cancel_after,
            nest,
        } => out.keyword_end(KeywordEnd {
            keywords,
            end,
            end_excludes,
            terminator: terminator.as_deref(),
            header_requires: header_requires.as_deref(),
            cancel_after,
            nest,
        }),
    }
    let spans = out
        .spans
        .into_iter()
        .map(|(first, last, name)| ComponentSpan {
            name,
            file: file.to_path_buf(),
            first_token_index: first,
            last_token_index: last,
            tokens: tokens[first..=last].to_vec(),
        })
        .collect();
    (spans, out.diagnostics)
}

struct KeywordEnd<'a> {
    keywords: &'a [String],
    end: &'a str,
    end_excludes: &'a [String],
    terminator: Option<&'a str>,
    header_requires: Option<&'a str>,
    cancel_after: &'a [String],
    nest: &'a [String],
}

// Attribute-like calls that precede a C-family header without naming it.
const NOT_NAMES: &[&str] = &["__attribute__", "__declspec", "__asm__", "asm"];

struct Segmenter<'a> {
    spec: &'a LanguageSpec,
    tokens: &'a [Token],
    spans: Vec<(usize, usize, String)>,
    diagnostics: SegmentDiagnostics,
}

impl<'a> Segmenter<'a> {
    fn is(&self, i: usize, word: &str) -> bool {
        self.spec.lexeme_eq(&self.tokens[i].lexeme, word)
    }

    fn is_any(&self, i: usize, words: &[String]) -> bool {
        words.iter().any(|w| self.is(i, w))
    }

    /// Name of a C-family header `tokens[start..end]`, or `None` when the
    /// header is not a function definition.
    fn brace_header_name(
        &self,
        start: usize,
        end: usize,
        params_open: &str,
        params_close: &str,
        forbid: &[String],
    ) -> Option<String> {
        let mut depth = 0usize;
        let mut outer = None;
        let mut inner = None;
        for i in start..end {
            if self.is(i, params_open) {
                if i > start {
                    let prev = &self.tokens[i - 1];
                    let annotated = i >= start + 2 && self.tokens[i - 2].lexeme == "@";
                    if prev.class == TokenClass::Variable
                        && !annotated
                        && !NOT_NAMES.contains(&prev.lexeme.as_str())
                        && is_wordlike(&prev.lexeme)
                    {
                        if depth == 0 {
                            outer.get_or_insert(i - 1);
                        } else {
                            inner.get_or_insert(i - 1);
                        }
                    }
                }
                depth += 1;
            } else if self.is(i, params_close) {
                depth = depth.saturating_sub(1);
            } else if depth == 0 && self.is_any(i, forbid) {
                return None;
            }
        }
        outer.or(inner).map(|i| self.tokens[i].lexeme.clone())
    }

    fn brace(
        &mut self,
        open: &str,
        close: &str,
        terminator: &str,
        params_open: &str,
        params_close: &str,
        forbid: &[String],
    ) {
        let mut depth = 0usize;
        let mut parens = 0usize;
        let mut header: Option<usize> = None;
        // (start index, name, depth outside the body)
        let mut current: Option<(usize, String, usize)> = None;

        for i in 0..self.tokens.len() {
            if let Some(&(_, _, base)) = current.as_ref() {
                if self.is(i, open) {
                    depth += 1;
                } else if self.is(i, close) {
                    depth -= 1;
                    if depth == base {
                        let (start, name, _) = current.take().expect("open component");
                        self.spans.push((start, i, name));
                        header = None;
                        parens = 0;
                    }
                }
                continue;
            }

            if self.is(i, open) {
                let name = match header {
                    Some(h) if parens == 0 => self.brace_header_name(h, i, params_open, params_close, forbid),
                    _ => None,
                };
                match name {
                    Some(name) => current = Some((header.expect("header"), name, depth)),
                    None => header = None,
                }
                depth += 1;
            } else if self.is(i, close) {
                if depth == 0 {
                    self.diagnostics.unbalanced_closers += 1;
                } else {
                    depth -= 1;
                }
                header = None;
            } else {
                if parens == 0 && self.is(i, terminator) {
                    header = None;
                    continue;
                }
                if self.is(i, params_open) {
                    parens += 1;
                } else if self.is(i, params_close) {
                    parens = parens.saturating_sub(1);
                }
                header.get_or_insert(i);
            }
        }
        if current.is_some() {
            self.diagnostics.unterminated_components += 1;
        }
    }

    fn keyword_brace(&mut self, keywords: &[String], open: &str, close: &str, terminator: &str) {
        let tokens = self.tokens;
        let mut depth = 0usize;
        let mut current: Option<(usize, String, usize)> = None;

        for i in 0..tokens.len() {
            let command_start = i == 0
                || tokens[i - 1].line != tokens[i].line
                || self.is(i - 1, terminator)
                || self.is(i - 1, open)
                || tokens[i - 1].lexeme == "[";
            if current.is_none()
                && tokens[i].class == TokenClass::Fixed
                && command_start
                && self.is_any(i, keywords)
                && i + 1 < tokens.len()
            {
                current = Some((i, tokens[i + 1].lexeme.clone(), depth));
                continue;
            }
            if self.is(i, open) {
                depth += 1;
            } else if self.is(i, close) {
                if depth == 0 {
                    self.diagnostics.unbalanced_closers += 1;
                    continue;
                }
                depth -= 1;
                if let Some((start, _, base)) = &current {
                    let command_ends = i + 1 == tokens.len()
                        || tokens[i + 1].line != tokens[i].line
                        || self.is(i + 1, terminator)
                        || self.is(i + 1, close);
                    if depth == *base && command_ends {
                        let start = *start;
                        let (_, name, _) = current.take().expect("open component");
                        self.spans.push((start, i, name));
                    }
                }
            }
        }
        if current.is_some() {
            self.diagnostics.unterminated_components += 1;
        }
    }

    fn keyword_end(&mut self, rules: KeywordEnd<'_>) {
        let tokens = self.tokens;
        let n = tokens.len();
        // (start, name, nesting)
        let mut current: Option<(usize, String, usize)> = None;
        let mut i = 0;
        while i < n {
            let after_end = i > 0 && self.is(i - 1, rules.end) && tokens[i - 1].line == tokens[i].line;
            if tokens[i].class == TokenClass::Fixed && !after_end && self.is_any(i, rules.keywords) {
                if self.opens_unit(i, &rules) {
                    match &mut current {
                        Some((_, _, nest)) => *nest += 1,
                        None => {
                            let mut start = i;
                            while start > 0
                                && tokens[start - 1].line == tokens[i].line
                                && !rules.terminator.is_some_and(|t| self.is(start - 1, t))
                            {
                                start -= 1;
                            }
                            let name = tokens[i + 1..]
                                .iter()
                                .find(|t| t.class == TokenClass::Variable)
                                .map(|t| t.lexeme.clone())
                                .unwrap_or_default();
                            current = Some((start, name, 1));
                        }
                    }
                }
            } else if current.is_some() && self.is_any(i, rules.nest) {
                if let Some((_, _, nest)) = &mut current {
                    *nest += 1;
                }
            } else if self.is(i, rules.end) {
                let qualifier = (i + 1 < n && tokens[i + 1].line == tokens[i].line).then_some(i + 1);
                let excluded = qualifier.is_some_and(|q| self.is_any(q, rules.end_excludes));
                if !excluded {
                    if let Some((_, _, nest)) = &mut current {
                        *nest -= 1;
                        if *nest == 0 {
                            // The end statement runs to its terminator or end of line.
                            let mut last = i;
                            while last + 1 < n
                                && tokens[last + 1].line == tokens[i].line
                                && !rules.terminator.is_some_and(|t| self.is(last, t))
                            {
                                last += 1;
                            }
                            let (start, name, _) = current.take().expect("open component");
                            self.spans.push((start, last, name));
                            i = last + 1;
                            continue;
                        }
                    }
                }
            }
            i += 1;
        }
        if current.is_some() {
            self.diagnostics.unterminated_components += 1;
        }
    }

    fn opens_unit(&self, i: usize, rules: &KeywordEnd<'_>) -> bool {
        let Some(required) = rules.header_requires else {
            return true;
        };
        let mut depth = 0i32;
        for j in i + 1..self.tokens.len() {
            match self.tokens[j].lexeme.as_str() {
                "(" => depth += 1,
                ")" => depth -= 1,
                _ => {}
            }
            if depth > 0 {
                continue;
            }
            if rules.terminator.is_some_and(|t| self.is(j, t)) {
                return false;
            }
            if self.is(j, required) {
                return !(j + 1 < self.tokens.len() && self.is_any(j + 1, rules.cancel_after));
            }
        }
        false
    }
}

fn is_wordlike(s: &str) -> bool {
    s.bytes()
        .next()
        .is_some_and(|b| b.is_ascii_alphabetic() || b == b'_' || b == b'$' || b >= 0x80)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::tokenize;

    fn spans(src: &str, lang: &str) -> (Vec<ComponentSpan>, SegmentDiagnostics) {
        let spec = LanguageSpec::bundled(lang).unwrap();
        let (tokens, _) = tokenize(src, &spec);
        segment_components(&tokens, &spec, Path::new("t"))
    }

    fn names(src: &str, lang: &str) -> Vec<String> {
        spans(src, lang).0.into_iter().map(|s| s.name).collect()
    }

    #[test]
    fn two_c_functions() {
        let src = "int f(int x) { return x; }\nstatic void g(void)\n{\n  if (1) { f(2); }\n}\n";
        let (s, d) = spans(src, "c");
        assert_eq!(s.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(), ["f", "g"]);
        assert_eq!((s[0].first_token_index, s[0].last_token_index), (0, 10));
        assert_eq!(s[1].first_token_index, 11);
        assert_eq!(d, SegmentDiagnostics::default());
    }

    #[test]
    fn declarations_are_not_components() {
        let src = "/* header */\nstruct s { int a; int (*fp)(int); };\nint table[] = { 1, 2 };\nint f(int);\nenum e { A, B };\n";
        assert!(names(src, "c").is_empty());
    }

    #[test]
    fn unterminated_component_is_discarded() {
        let (s, d) = spans("int f(void) { return 1; }\nint g(void) { if (x) {", "c");
        assert_eq!(s.len(), 1);
        assert_eq!(d.unterminated_components, 1);
    }

    #[test]
    fn stray_closer_is_counted() {
        let (s, d) = spans("} int f(void) { }", "c");
        assert_eq!(s.len(), 1);
        assert_eq!(d.unbalanced_closers, 1);
    }

    #[test]
    fn attribute_does_not_name_the_function() {
        let src = "static int (*getf(int k))(int) { return 0; }\n";
        assert_eq!(names(src, "c"), ["getf"]);
    }

    #[test]
    fn java_methods_fold_nested_definitions() {
        let src = r#"
            package p;
            @SuppressWarnings("x")
            public class A extends B {
                private int n = 3;
                @Override
                public void run() {
                    Runnable r = new Runnable() { public void run() { n++; } };
                }
                static int twice(int v) throws Exception { return 2 * v; }
            }
        "#;
        assert_eq!(names(src, "java"), ["run", "twice"]);
    }

    #[test]
    fn tcl_procs() {
        let src = "set x 1\nproc add {a b} {\n  return [expr {$a + $b}]\n}\nnamespace eval ns {\n  proc one {} { return 1 }\n}\n";
        assert_eq!(names(src, "tcl"), ["add", "one"]);
    }

    #[test]
    fn fortran_units_fold_internal_procedures() {
        let src = "\
program main
  call s(1)
contains
  subroutine inner(k)
    integer k
    if (k > 0) then
      k = 0
    end if
  end subroutine inner
end program main
real function f(x)
  real x
  f = x
end
";
        assert_eq!(names(src, "fortran90"), ["main", "f"]);
        let (s, _) = spans(src, "fortran90");
        assert_eq!(s[1].tokens[0].lexeme, "real");
        assert_eq!(s[1].tokens.last().unwrap().lexeme, "end");
    }

    #[test]
    fn ada_bodies_skip_specifications() {
        let src = "\
package body P is
   procedure Spec_Only (X : Integer);
   procedure Inst is new Gen;
   procedure Run (X : Integer) is
      Y : Integer := X;
   begin
      if Y > 0 then
         Y := 0;
      end if;
   end Run;
end P;
";
        let (s, _) = spans(src, "ada");
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].name, "Run");
        assert_eq!(s[0].tokens.last().unwrap().lexeme, ";");
    }
}
