use super::{DiagnosticKind, ParseDiagnostic};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const PUNCT: [&str; 13] = [
    "->", ":=", "==", "{", "}", "(", ")", ";", ":", ",", ".", "+", "-",
];

/// Splits `text` into tokens; positions are 1-based.
pub(crate) fn lex(text: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
            }
            out.push(Token {
                tok: Tok::Ident(s),
                pos,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                {
                    let ch = chars[i];
                    advance(&mut i, &mut line, &mut col, ch);
                }
            }
            let n = s.parse().map_err(|_| {
                ParseDiagnostic::error(DiagnosticKind::SyntaxError, "integer out of range", pos)
            })?;
            out.push(Token {
                tok: Tok::Int(n),
                pos,
            });
            continue;
        }
        if c == '"' {
            advance(&mut i, &mut line, &mut col, c);
            let mut s = String::new();
            loop {
                let Some(&c) = chars.get(i) else {
                    return Err(ParseDiagnostic::error(
                        DiagnosticKind::SyntaxError,
                        "unterminated string",
                        pos,
                    ));
                };
                advance(&mut i, &mut line, &mut col, c);
                match c {
                    '"' => break,
                    '\\' => {
                        let Some(&e) = chars.get(i) else {
                            return Err(ParseDiagnostic::error(
                                DiagnosticKind::SyntaxError,
                                "unterminated string",
                                pos,
                            ));
                        };
                        advance(&mut i, &mut line, &mut col, e);
                        match e {
                            '"' | '\\' => s.push(e),
                            'n' => s.push('\n'),
                            _ => {
                                return Err(ParseDiagnostic::error(
                                    DiagnosticKind::SyntaxError,
                                    format!("unknown escape \\{e}"),
                                    pos,
                                ))
                            }
                        }
                    }
                    _ => s.push(c),
                }
            }
            out.push(Token {
                tok: Tok::Str(s),
                pos,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCT.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                for _ in 0..p.len() {
                    {
                        let ch = chars[i];
                        advance(&mut i, &mut line, &mut col, ch);
                    }
                }
                out.push(Token {
                    tok: Tok::Punct(p),
                    pos,
                });
            }
            None => {
                return Err(ParseDiagnostic::error(
                    DiagnosticKind::SyntaxError,
                    format!("unexpected character {c:?}"),
                    pos,
                ))
            }
        }
    }
    // end of input is reported at the last token so positions stay inside the text
    let pos = out
        .last()
        .map(|t: &Token| t.pos)
        .unwrap_or(Pos { line: 1, column: 1 });
    out.push(Token { tok: Tok::Eof, pos });
    Ok(out)
}
