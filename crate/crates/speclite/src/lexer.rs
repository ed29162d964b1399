//! Tokenizer for interface files and spec-comment content.
//!
//! The host pass turns each `(*@ ... *)` block into a single [`Tok::SpecBlock`]
//! token holding the byte range of its content; the parser re-lexes that
//! range with the same tokenizer, so spans stay global to the file.

use crate::span::Span;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    KwType,
    KwVal,
    KwException,
    KwOf,
    KwRequires,
    KwEnsures,
    KwModifies,
    KwRaises,
    KwModel,
    KwMutable,
    KwInvariant,
    KwWith,
    KwPredicate,
    KwOld,
    KwForall,
    KwExists,
    KwIf,
    KwThen,
    KwElse,
    KwLet,
    KwIn,
    KwTrue,
    KwFalse,
    KwNot,
    KwMod,
    Ident(String),
    TyVar(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Colon,
    Semi,
    ColonColon,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Arrow,
    Iff,
    At,
    Plus,
    Minus,
    Star,
    Slash,
    Bang,
    Question,
    /// Content byte range of a `(*@ ... *)` block.
    SpecBlock {
        start: usize,
        end: usize,
    },
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::TyVar(s) => format!("type variable `'{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::SpecBlock { .. } => "spec comment".to_string(),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::KwType => "type",
            Tok::KwVal => "val",
            Tok::KwException => "exception",
            Tok::KwOf => "of",
            Tok::KwRequires => "requires",
            Tok::KwEnsures => "ensures",
            Tok::KwModifies => "modifies",
            Tok::KwRaises => "raises",
            Tok::KwModel => "model",
            Tok::KwMutable => "mutable",
            Tok::KwInvariant => "invariant",
            Tok::KwWith => "with",
            Tok::KwPredicate => "predicate",
            Tok::KwOld => "old",
            Tok::KwForall => "forall",
            Tok::KwExists => "exists",
            Tok::KwIf => "if",
            Tok::KwThen => "then",
            Tok::KwElse => "else",
            Tok::KwLet => "let",
            Tok::KwIn => "in",
            Tok::KwTrue => "true",
            Tok::KwFalse => "false",
            Tok::KwNot => "not",
            Tok::KwMod => "mod",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::ColonColon => "::",
            Tok::Eq => "=",
            Tok::Ne => "<>",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Arrow => "->",
            Tok::Iff => "<->",
            Tok::At => "@",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Bang => "!",
            Tok::Question => "?",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

/// Maps byte offsets to 1-based line/column pairs.
pub struct LineMap {
    line_starts: Vec<usize>,
}

impl LineMap {
    pub fn new(source: &str) -> Self {
        let mut line_starts = vec![0usize];
        for (i, b) in source.bytes().enumerate() {
            if b == b'\n' {
                line_starts.push(i + 1);
            }
        }
        LineMap { line_starts }
    }

    pub fn position(&self, offset: usize) -> (u32, u32) {
        let line_idx = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let col = offset - self.line_starts[line_idx] + 1;
        (line_idx as u32 + 1, col as u32)
    }

    pub fn span(&self, start: usize, end: usize) -> Span {
        let (line, col) = self.position(start);
        Span::new(start, end, line, col)
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "type" => Tok::KwType,
        "val" => Tok::KwVal,
        "exception" => Tok::KwException,
        "of" => Tok::KwOf,
        "requires" => Tok::KwRequires,
        "ensures" => Tok::KwEnsures,
        "modifies" => Tok::KwModifies,
        "raises" => Tok::KwRaises,
        "model" => Tok::KwModel,
        "mutable" => Tok::KwMutable,
        "invariant" => Tok::KwInvariant,
        "with" => Tok::KwWith,
        "predicate" => Tok::KwPredicate,
        "old" => Tok::KwOld,
        "forall" => Tok::KwForall,
        "exists" | "exists_" => Tok::KwExists,
        "if" => Tok::KwIf,
        "then" => Tok::KwThen,
        "else" => Tok::KwElse,
        "let" => Tok::KwLet,
        "in" => Tok::KwIn,
        "true" => Tok::KwTrue,
        "false" => Tok::KwFalse,
        "not" => Tok::KwNot,
        "mod" => Tok::KwMod,
        _ => return None,
    })
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_continue(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'\''
}

/// Tokenize `source[range]`. In the host pass (`spec_mode = false`),
/// `(*@ ... *)` blocks become [`Tok::SpecBlock`] tokens and ordinary
/// `(* ... *)` comments are skipped (nesting respected).
pub fn lex_range(
    source: &str,
    start: usize,
    end: usize,
    map: &LineMap,
    spec_mode: bool,
) -> Result<Vec<Token>, LexError> {
    let bytes = source.as_bytes();
    let mut pos = start;
    let mut out = Vec::new();

    macro_rules! push {
        ($tok:expr, $s:expr, $e:expr) => {
            out.push(Token {
                tok: $tok,
                span: map.span($s, $e),
            })
        };
    }

    while pos < end {
        let c = bytes[pos];
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }

        // Comments and spec blocks.
        if c == b'(' && pos + 1 < end && bytes[pos + 1] == b'*' {
            let is_spec = !spec_mode && pos + 2 < end && bytes[pos + 2] == b'@';
            let content_start = if is_spec { pos + 3 } else { pos + 2 };
            let mut depth = 1;
            let mut i = content_start;
            while i < end && depth > 0 {
                if bytes[i] == b'(' && i + 1 < end && bytes[i + 1] == b'*' {
                    depth += 1;
                    i += 2;
                } else if bytes[i] == b'*' && i + 1 < end && bytes[i + 1] == b')' {
                    depth -= 1;
                    i += 2;
                } else {
                    i += 1;
                }
            }
            if depth > 0 {
                return Err(LexError {
                    message: "unterminated comment".to_string(),
                    span: map.span(pos, end),
                });
            }
            if is_spec {
                push!(
                    Tok::SpecBlock {
                        start: content_start,
                        end: i - 2,
                    },
                    pos,
                    i
                );
            }
            pos = i;
            continue;
        }

        // Type variables 'a (a quote followed by an identifier start).
        if c == b'\'' && pos + 1 < end && is_ident_start(bytes[pos + 1]) {
            let s = pos;
            pos += 1;
            let name_start = pos;
            while pos < end && is_ident_continue(bytes[pos]) {
                pos += 1;
            }
            push!(Tok::TyVar(source[name_start..pos].to_string()), s, pos);
            continue;
        }

        if is_ident_start(c) {
            let s = pos;
            while pos < end && is_ident_continue(bytes[pos]) {
                pos += 1;
            }
            let word = &source[s..pos];
            match keyword(word) {
                Some(k) => push!(k, s, pos),
                None => push!(Tok::Ident(word.to_string()), s, pos),
            }
            continue;
        }

        if c.is_ascii_digit() {
            let s = pos;
            while pos < end && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            let text = &source[s..pos];
            let n: i64 = text.parse().map_err(|_| LexError {
                message: format!("integer literal `{text}` out of range"),
                span: map.span(s, pos),
            })?;
            push!(Tok::Int(n), s, pos);
            continue;
        }

        // Multi-character operators, longest first. `get` keeps slicing
        // safe next to multi-byte characters.
        let two = if pos + 1 < end {
            source.get(pos..pos + 2).unwrap_or("")
        } else {
            ""
        };
        let three = if pos + 2 < end {
            source.get(pos..pos + 3).unwrap_or("")
        } else {
            ""
        };
        if three == "<->" {
            push!(Tok::Iff, pos, pos + 3);
            pos += 3;
            continue;
        }
        let tok2 = match two {
            "::" => Some(Tok::ColonColon),
            "<=" => Some(Tok::Le),
            "<>" => Some(Tok::Ne),
            ">=" => Some(Tok::Ge),
            "&&" => Some(Tok::AndAnd),
            "||" => Some(Tok::OrOr),
            "->" => Some(Tok::Arrow),
            "/\\" => Some(Tok::AndAnd),
            "\\/" => Some(Tok::OrOr),
            _ => None,
        };
        if let Some(t) = tok2 {
            push!(t, pos, pos + 2);
            pos += 2;
            continue;
        }

        let tok1 = match c {
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b',' => Some(Tok::Comma),
            b'.' => Some(Tok::Dot),
            b':' => Some(Tok::Colon),
            b';' => Some(Tok::Semi),
            b'=' => Some(Tok::Eq),
            b'<' => Some(Tok::Lt),
            b'>' => Some(Tok::Gt),
            b'@' => Some(Tok::At),
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'!' => Some(Tok::Bang),
            b'?' => Some(Tok::Question),
            _ => None,
        };
        match tok1 {
            Some(t) => {
                push!(t, pos, pos + 1);
                pos += 1;
            }
            None => {
                return Err(LexError {
                    message: format!("unexpected character `{}`", c as char),
                    span: map.span(pos, pos + 1),
                });
            }
        }
    }

    out.push(Token {
        tok: Tok::Eof,
        span: map.span(end, end),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(src: &str) -> Vec<Tok> {
        let map = LineMap::new(src);
        lex_range(src, 0, src.len(), &map, false)
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect()
    }

    #[test]
    fn spec_block_captures_content() {
        let src = "type 'a t\n(*@ mutable model elems : 'a list *)";
        let toks = lex(src);
        assert_eq!(toks[0], Tok::KwType);
        assert_eq!(toks[1], Tok::TyVar("a".into()));
        assert_eq!(toks[2], Tok::Ident("t".into()));
        match &toks[3] {
            Tok::SpecBlock { start, end } => {
                assert_eq!(src[*start..*end].trim(), "mutable model elems : 'a list");
            }
            other => panic!("expected spec block, got {other:?}"),
        }
    }

    #[test]
    fn plain_comments_are_skipped() {
        let toks = lex("val (* a (* nested *) b *) pop");
        assert_eq!(toks, vec![Tok::KwVal, Tok::Ident("pop".into()), Tok::Eof]);
    }

    #[test]
    fn operators_longest_match() {
        let toks = lex("<-> <= <> -> :: && /\\ \\/");
        assert_eq!(
            toks,
            vec![
                Tok::Iff,
                Tok::Le,
                Tok::Ne,
                Tok::Arrow,
                Tok::ColonColon,
                Tok::AndAnd,
                Tok::AndAnd,
                Tok::OrOr,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn primes_allowed_in_identifiers() {
        let toks = lex("v' exists_");
        assert_eq!(toks, vec![Tok::Ident("v'".into()), Tok::KwExists, Tok::Eof]);
    }

    #[test]
    fn line_and_column_positions() {
        let src = "val x\nval y";
        let map = LineMap::new(src);
        let toks = lex_range(src, 0, src.len(), &map, false).unwrap();
        assert_eq!((toks[2].span.line, toks[2].span.col), (2, 1));
        assert_eq!((toks[3].span.line, toks[3].span.col), (2, 5));
    }
}
