use super::{ParseError, Span};

#[derive(Clone, PartialEq, Eq, Debug)]
pub(crate) enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    Comma,
    Slash,
    At,
    /// `--`
    Dash,
    /// `-->`
    LongArrow,
    /// `->`
    Arrow,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Slash => "`/`".into(),
            Tok::At => "`@`".into(),
            Tok::Dash => "`--`".into(),
            Tok::LongArrow => "`-->`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut column = 1;
    let mut chars = text.char_indices().peekable();
    while let Some(&(_, c)) = chars.peek() {
        let span = Span { line, column };
        let mut advance = |chars: &mut std::iter::Peekable<std::str::CharIndices>| {
            let (_, c) = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };
        if c.is_whitespace() {
            advance(&mut chars);
            continue;
        }
        if c == '#' {
            while chars.peek().is_some_and(|&(_, c)| c != '\n') {
                advance(&mut chars);
            }
            continue;
        }
        let tok = match c {
            '{' => {
                advance(&mut chars);
                Tok::LBrace
            }
            '}' => {
                advance(&mut chars);
                Tok::RBrace
            }
            ',' => {
                advance(&mut chars);
                Tok::Comma
            }
            '/' => {
                advance(&mut chars);
                Tok::Slash
            }
            '@' => {
                advance(&mut chars);
                Tok::At
            }
            '-' => {
                advance(&mut chars);
                match chars.peek().map(|&(_, c)| c) {
                    Some('>') => {
                        advance(&mut chars);
                        Tok::Arrow
                    }
                    Some('-') => {
                        advance(&mut chars);
                        if chars.peek().is_some_and(|&(_, c)| c == '>') {
                            advance(&mut chars);
                            Tok::LongArrow
                        } else {
                            Tok::Dash
                        }
                    }
                    _ => return Err(ParseError::at(span, "expected `--`, `-->` or `->`")),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(advance(&mut chars));
                    } else {
                        break;
                    }
                }
                Tok::Ident(ident)
            }
            other => return Err(ParseError::at(span, format!("unexpected character {other:?}"))),
        };
        out.push(Token { tok, span });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span { line, column },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<Tok> {
        tokenize(text).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrows_are_split_greedily() {
        assert_eq!(
            toks("a -- b / c --> d  A -> B"),
            vec![
                Tok::Ident("a".into()),
                Tok::Dash,
                Tok::Ident("b".into()),
                Tok::Slash,
                Tok::Ident("c".into()),
                Tok::LongArrow,
                Tok::Ident("d".into()),
                Tok::Ident("A".into()),
                Tok::Arrow,
                Tok::Ident("B".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("# note\n  x # trailing\ny").unwrap();
        assert_eq!(t[0].span, Span { line: 2, column: 3 });
        assert_eq!(t[1].span, Span { line: 3, column: 1 });
        assert_eq!(t[2].tok, Tok::Eof);
    }

    #[test]
    fn stray_characters_are_located() {
        let e = tokenize("ab\n  $").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        let e = tokenize("a - b").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));
    }
}
