//! Tokenizer for the concrete syntax. Whitespace is insignificant and
//! `//` comments run to end of line.

use super::{ParseError, SourceSpan, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Arrow,    // ->
    Bang,     // !
    Query,    // ?
    LBrace,   // {
    RBrace,   // }
    LParen,   // (
    RParen,   // )
    LBracket, // [
    RBracket, // ]
    Lt,       // <
    Gt,       // >
    EqEq,     // ==
    Colon,    // :
    Comma,    // ,
    Dot,      // .
    Pipe,     // |
    KwEnd,
    KwRec,
    KwInt,
    KwStr,
    KwBool,
    KwUnit,
    KwNew,
    KwIf,
    KwThen,
    KwElse,
    KwMu,
    KwTrue,
    KwFalse,
}

impl Tok {
    /// Short human description used in error messages.
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{}`", s),
            Tok::Int(n) => format!("integer `{}`", n),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Arrow => "`->`".to_string(),
            Tok::Bang => "`!`".to_string(),
            Tok::Query => "`?`".to_string(),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::LBracket => "`[`".to_string(),
            Tok::RBracket => "`]`".to_string(),
            Tok::Lt => "`<`".to_string(),
            Tok::Gt => "`>`".to_string(),
            Tok::EqEq => "`==`".to_string(),
            Tok::Colon => "`:`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Dot => "`.`".to_string(),
            Tok::Pipe => "`|`".to_string(),
            Tok::KwEnd => "`end`".to_string(),
            Tok::KwRec => "`rec`".to_string(),
            Tok::KwInt => "`int`".to_string(),
            Tok::KwStr => "`str`".to_string(),
            Tok::KwBool => "`bool`".to_string(),
            Tok::KwUnit => "`unit`".to_string(),
            Tok::KwNew => "`new`".to_string(),
            Tok::KwIf => "`if`".to_string(),
            Tok::KwThen => "`then`".to_string(),
            Tok::KwElse => "`else`".to_string(),
            Tok::KwMu => "`mu`".to_string(),
            Tok::KwTrue => "`true`".to_string(),
            Tok::KwFalse => "`false`".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpannedTok {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub fn tokenize(file: &str, src: &str) -> Result<Vec<SpannedTok>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == '/' && i + 1 < bytes.len() && bytes[i + 1] == b'/' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let span = |end: usize| SourceSpan {
            file: file.to_string(),
            start,
            end,
        };
        let tok = match c {
            '-' if i + 1 < bytes.len() && bytes[i + 1] == b'>' => {
                i += 2;
                Tok::Arrow
            }
            '=' if i + 1 < bytes.len() && bytes[i + 1] == b'=' => {
                i += 2;
                Tok::EqEq
            }
            '!' => {
                i += 1;
                Tok::Bang
            }
            '?' => {
                i += 1;
                Tok::Query
            }
            '{' => {
                i += 1;
                Tok::LBrace
            }
            '}' => {
                i += 1;
                Tok::RBrace
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '[' => {
                i += 1;
                Tok::LBracket
            }
            ']' => {
                i += 1;
                Tok::RBracket
            }
            '<' => {
                i += 1;
                Tok::Lt
            }
            '>' => {
                i += 1;
                Tok::Gt
            }
            ':' => {
                i += 1;
                Tok::Colon
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '.' => {
                i += 1;
                Tok::Dot
            }
            '|' => {
                i += 1;
                Tok::Pipe
            }
            '"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    if i >= bytes.len() {
                        return Err(SyntaxError::Parse(ParseError::new(
                            span(i),
                            vec!["closing `\"`".to_string()],
                            "end of input".to_string(),
                            src,
                        )));
                    }
                    match bytes[i] {
                        b'"' => {
                            i += 1;
                            break;
                        }
                        b'\\' if i + 1 < bytes.len() => {
                            let esc = bytes[i + 1];
                            s.push(match esc {
                                b'n' => '\n',
                                b't' => '\t',
                                b'\\' => '\\',
                                b'"' => '"',
                                other => {
                                    return Err(SyntaxError::Parse(ParseError::new(
                                        span(i + 2),
                                        vec!["escape sequence".to_string()],
                                        format!("`\\{}`", other as char),
                                        src,
                                    )))
                                }
                            });
                            i += 2;
                        }
                        b if b.is_ascii() => {
                            s.push(b as char);
                            i += 1;
                        }
                        _ => {
                            return Err(SyntaxError::Parse(ParseError::new(
                                span(i + 1),
                                vec!["ASCII string content".to_string()],
                                "non-ASCII byte".to_string(),
                                src,
                            )))
                        }
                    }
                }
                Tok::Str(s)
            }
            d if d.is_ascii_digit() => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text = &src[start..i];
                match text.parse::<i64>() {
                    Ok(n) => Tok::Int(n),
                    Err(_) => {
                        return Err(SyntaxError::Parse(ParseError::new(
                            span(i),
                            vec!["integer".to_string()],
                            format!("out-of-range literal `{}`", text),
                            src,
                        )))
                    }
                }
            }
            a if a.is_ascii_alphabetic() => {
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                match &src[start..i] {
                    "end" => Tok::KwEnd,
                    "rec" => Tok::KwRec,
                    "int" => Tok::KwInt,
                    "str" => Tok::KwStr,
                    "bool" => Tok::KwBool,
                    "unit" => Tok::KwUnit,
                    "new" => Tok::KwNew,
                    "if" => Tok::KwIf,
                    "then" => Tok::KwThen,
                    "else" => Tok::KwElse,
                    "mu" => Tok::KwMu,
                    "true" => Tok::KwTrue,
                    "false" => Tok::KwFalse,
                    ident => Tok::Ident(ident.to_string()),
                }
            }
            other => {
                return Err(SyntaxError::Parse(ParseError::new(
                    span(i + 1),
                    vec!["token".to_string()],
                    format!("unexpected character `{}`", other),
                    src,
                )))
            }
        };
        let end = i;
        toks.push(SpannedTok {
            tok,
            span: SourceSpan {
                file: file.to_string(),
                start,
                end,
            },
        });
    }
    Ok(toks)
}
