use super::diagnostic::{Diagnostic, DiagnosticCode, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(String),
    Str(String),
    LBrace,
    RBrace,
    Colon,
    Dot,
    Equals,
    Arrow,
    Squiggle,
    Comment(String),
    Newline,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Int(s) => format!("integer `{s}`"),
            TokenKind::Str(_) => "string".into(),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Dot => "`.`".into(),
            TokenKind::Equals => "`=`".into(),
            TokenKind::Arrow => "`->`".into(),
            TokenKind::Squiggle => "`~>`".into(),
            TokenKind::Comment(_) => "comment".into(),
            TokenKind::Newline => "end of line".into(),
            TokenKind::Eof => "end of file".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

/// Tokenizes `text`. Never fails: bad input becomes diagnostics and the
/// offending characters are skipped. Comments and newlines are kept as
/// tokens so the formatter can preserve them.
pub fn lex(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |i: usize| bytes.get(i).map(|&(o, _)| o).unwrap_or(text.len());
    let mut i = 0;
    while i < bytes.len() {
        let (start, c) = bytes[i];
        let single = |kind| Token {
            kind,
            span: Span::new(start, start + c.len_utf8()),
        };
        match c {
            '\n' => {
                tokens.push(single(TokenKind::Newline));
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '#' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].1 != '\n' {
                    j += 1;
                }
                let end = end_of(j);
                tokens.push(Token {
                    kind: TokenKind::Comment(text[start + 1..end].trim_end().to_string()),
                    span: Span::new(start, end),
                });
                i = j;
            }
            '{' => {
                tokens.push(single(TokenKind::LBrace));
                i += 1;
            }
            '}' => {
                tokens.push(single(TokenKind::RBrace));
                i += 1;
            }
            ':' => {
                tokens.push(single(TokenKind::Colon));
                i += 1;
            }
            '.' => {
                tokens.push(single(TokenKind::Dot));
                i += 1;
            }
            '=' => {
                tokens.push(single(TokenKind::Equals));
                i += 1;
            }
            '-' | '~' if bytes.get(i + 1).map(|b| b.1) == Some('>') => {
                let kind = if c == '-' {
                    TokenKind::Arrow
                } else {
                    TokenKind::Squiggle
                };
                tokens.push(Token {
                    kind,
                    span: Span::new(start, start + 2),
                });
                i += 2;
            }
            '"' => {
                let mut j = i + 1;
                let mut value = String::new();
                let mut closed = false;
                while j < bytes.len() {
                    match bytes[j].1 {
                        '"' => {
                            closed = true;
                            j += 1;
                            break;
                        }
                        '\n' => break,
                        '\\' if j + 1 < bytes.len() && bytes[j + 1].1 != '\n' => {
                            let esc = bytes[j + 1].1;
                            match esc {
                                'n' => value.push('\n'),
                                't' => value.push('\t'),
                                '"' | '\\' => value.push(esc),
                                other => {
                                    let at = bytes[j].0;
                                    diags.push(Diagnostic::error(
                                        DiagnosticCode::InvalidEscape,
                                        format!("unknown escape `\\{other}`"),
                                        Span::new(at, at + 1 + other.len_utf8()),
                                    ));
                                    value.push(other);
                                }
                            }
                            j += 2;
                        }
                        ch => {
                            value.push(ch);
                            j += 1;
                        }
                    }
                }
                let end = end_of(j);
                if !closed {
                    diags.push(Diagnostic::error(
                        DiagnosticCode::UnterminatedString,
                        "string literal is not closed on this line",
                        Span::new(start, end),
                    ));
                }
                tokens.push(Token {
                    kind: TokenKind::Str(value),
                    span: Span::new(start, end),
                });
                i = j;
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < bytes.len() && bytes[j].1.is_ascii_digit() {
                    j += 1;
                }
                let end = end_of(j);
                tokens.push(Token {
                    kind: TokenKind::Int(text[start..end].to_string()),
                    span: Span::new(start, end),
                });
                i = j;
            }
            c if ident_start(c) => {
                let mut j = i;
                while j < bytes.len() && ident_continue(bytes[j].1) {
                    // `a->b` splits before the arrow
                    if bytes[j].1 == '-' && bytes.get(j + 1).map(|b| b.1) == Some('>') {
                        break;
                    }
                    j += 1;
                }
                let end = end_of(j);
                tokens.push(Token {
                    kind: TokenKind::Ident(text[start..end].to_string()),
                    span: Span::new(start, end),
                });
                i = j;
            }
            other => {
                diags.push(Diagnostic::error(
                    DiagnosticCode::InvalidCharacter,
                    format!("unexpected character {other:?}"),
                    Span::new(start, start + other.len_utf8()),
                ));
                i += 1;
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        span: Span::new(text.len(), text.len()),
    });
    (tokens, diags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        lex(text).0.into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn arrows_split_identifiers() {
        use TokenKind::*;
        assert_eq!(
            kinds("a-b->c~>d"),
            vec![
                Ident("a-b".into()),
                Arrow,
                Ident("c".into()),
                Squiggle,
                Ident("d".into()),
                Eof
            ]
        );
    }

    #[test]
    fn strings_and_comments() {
        use TokenKind::*;
        assert_eq!(
            kinds("meta k = \"a\\\"b\" # note \n"),
            vec![
                Ident("meta".into()),
                Ident("k".into()),
                Equals,
                Str("a\"b".into()),
                Comment(" note".into()),
                Newline,
                Eof
            ]
        );
    }

    #[test]
    fn bad_characters_are_reported_and_skipped() {
        let (toks, diags) = lex("kind @ x \"open");
        assert_eq!(diags.len(), 2);
        assert_eq!(diags[0].code, DiagnosticCode::InvalidCharacter);
        assert_eq!(diags[1].code, DiagnosticCode::UnterminatedString);
        assert_eq!(toks.len(), 4);
    }
}
