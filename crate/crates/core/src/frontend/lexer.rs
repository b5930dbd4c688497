use super::ast::{Loc, Span};
use super::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Kw(Kw),
    /// A keyword of C that PerfC rejects.
    Unsupported(&'static str),
    Sym(&'static str),
    /// `#perf`, introducing a loop annotation line.
    Perf,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kw {
    Int,
    Double,
    Void,
    If,
    Else,
    For,
    While,
    Return,
    Sizeof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
    pub span: Span,
}

const UNSUPPORTED: &[&str] = &[
    "break", "continue", "goto", "switch", "case", "default", "do", "struct", "union", "enum",
    "typedef", "char", "float", "long", "short", "unsigned", "signed", "const", "static", "extern",
    "volatile",
];

// longest first so that greedy matching works
const SYMBOLS: &[&str] = &[
    "<<=", ">>=", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "++", "--",
    "->", "<<", ">>", "+", "-", "*", "/", "%", "<", ">", "=", "!", "&", "(", ")", "{", "}", "[",
    "]", ",", ";", "?", ":", "|", "^", "~", ".",
];

pub fn lex(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = source.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut line_start = 0usize;
    let loc_at = |pos: usize, line: u32, line_start: usize| Loc {
        line,
        col: (source[line_start..pos].chars().count() + 1) as u32,
    };

    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let loc = loc_at(start, line, line_start);
        if source[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if source[i..].starts_with("/*") {
            let Some(end) = source[i + 2..].find("*/") else {
                return Err(Diagnostic::error(loc, "unterminated block comment"));
            };
            let stop = i + 2 + end + 2;
            while i < stop {
                if bytes[i] == b'\n' {
                    line += 1;
                    line_start = i + 1;
                }
                i += 1;
            }
            continue;
        }
        if c == b'#' {
            let rest = &source[i + 1..];
            let word_len = rest
                .bytes()
                .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_')
                .count();
            if &rest[..word_len] == "perf" {
                i += 1 + word_len;
                toks.push(Token {
                    tok: Tok::Perf,
                    loc,
                    span: Span { start, end: i },
                });
                continue;
            }
            return Err(Diagnostic::error(
                loc,
                "unsupported construct: preprocessor directives are not supported",
            ));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &source[start..i];
            let tok = match word {
                "int" => Tok::Kw(Kw::Int),
                "double" => Tok::Kw(Kw::Double),
                "void" => Tok::Kw(Kw::Void),
                "if" => Tok::Kw(Kw::If),
                "else" => Tok::Kw(Kw::Else),
                "for" => Tok::Kw(Kw::For),
                "while" => Tok::Kw(Kw::While),
                "return" => Tok::Kw(Kw::Return),
                "sizeof" => Tok::Kw(Kw::Sizeof),
                w => match UNSUPPORTED.iter().find(|u| **u == w) {
                    Some(u) => Tok::Unsupported(u),
                    None => Tok::Ident(w.to_string()),
                },
            };
            toks.push(Token {
                tok,
                loc,
                span: Span { start, end: i },
            });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let mut is_float = false;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                is_float = true;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    is_float = true;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            if i < bytes.len() && (bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
                return Err(Diagnostic::error(loc, "malformed numeric literal"));
            }
            let text = &source[start..i];
            let tok = if is_float {
                Tok::Float(text.parse().map_err(|_| Diagnostic::error(loc, "malformed float literal"))?)
            } else {
                Tok::Int(text.parse().map_err(|_| {
                    Diagnostic::error(loc, format!("integer literal `{text}` does not fit in 64 bits"))
                })?)
            };
            toks.push(Token {
                tok,
                loc,
                span: Span { start, end: i },
            });
            continue;
        }
        match SYMBOLS.iter().find(|s| source[i..].starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                toks.push(Token {
                    tok: Tok::Sym(sym),
                    loc,
                    span: Span { start, end: i },
                });
            }
            None => {
                let ch = source[i..].chars().next().unwrap_or('?');
                return Err(Diagnostic::error(loc, format!("unexpected character `{ch}`")));
            }
        }
    }
    let loc = loc_at(bytes.len(), line, line_start);
    toks.push(Token {
        tok: Tok::Eof,
        loc,
        span: Span {
            start: bytes.len(),
            end: bytes.len(),
        },
    });
    Ok(toks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn tokens_and_positions() {
        let toks = lex("int x = 3;\n  x += 1.5e1;").unwrap();
        assert_eq!(toks[0].tok, Tok::Kw(Kw::Int));
        assert_eq!(toks[1].tok, Tok::Ident("x".into()));
        assert_eq!(toks[3].tok, Tok::Int(3));
        assert_eq!(toks[5].loc, Loc { line: 2, col: 3 });
        assert_eq!(toks[6].tok, Tok::Sym("+="));
        assert_eq!(toks[7].tok, Tok::Float(15.0));
        assert_eq!(toks.last().unwrap().tok, Tok::Eof);
    }

    #[test]
    fn comments_and_annotations() {
        let t = kinds("// hi\n/* a\nb */ #perf iterations(n)\nwhile");
        assert_eq!(t[0], Tok::Perf);
        assert_eq!(t[1], Tok::Ident("iterations".into()));
        assert_eq!(t[5], Tok::Kw(Kw::While));
        let toks = lex("/* a\nb */ x").unwrap();
        assert_eq!(toks[0].loc, Loc { line: 2, col: 6 });
    }

    #[test]
    fn rejects() {
        assert_eq!(kinds("break")[0], Tok::Unsupported("break"));
        assert!(lex("#include <x>").is_err());
        assert!(lex("int $").is_err());
        assert!(lex("99999999999999999999").is_err());
        assert!(lex("/* open").is_err());
        assert!(lex("12abc").is_err());
    }

    #[test]
    fn floats() {
        assert_eq!(kinds(".5")[0], Tok::Float(0.5));
        assert_eq!(kinds("2.")[0], Tok::Float(2.0));
        assert_eq!(kinds("1e3")[0], Tok::Float(1000.0));
    }
}
