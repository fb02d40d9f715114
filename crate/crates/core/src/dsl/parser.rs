use std::collections::BTreeSet;

use super::diagnostic::{Diagnostic, DiagnosticCode, Span};
use super::lexer::{lex, Token, TokenKind};
use crate::model::{
    ArcClass, ArcDecl, Decl, EndpointRef, KindDecl, MetaDecl, SchemeDecl, SphereDecl, Stage,
};

/// One top-level declaration with its source span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub decl: Decl,
    pub span: Span,
    pub(crate) syntax: Syntax,
}

/// Layout information kept for the formatter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Syntax {
    Line,
    Block {
        open: Span,
        members: Vec<Member>,
        close: Span,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Member {
    pub item: MemberItem,
    pub span: Span,
    pub syntax: Syntax,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum MemberItem {
    Meta(MetaDecl),
    Scheme(SchemeDecl),
    Sphere(SphereDecl),
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutput {
    pub declarations: Vec<Declaration>,
    pub diagnostics: Vec<Diagnostic>,
    pub(crate) comments: Vec<Comment>,
}

impl ParseOutput {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }

    pub fn decls(&self) -> impl Iterator<Item = &Decl> {
        self.declarations.iter().map(|d| &d.decl)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Comment {
    pub text: String,
    pub span: Span,
    /// A code token precedes it on the same line.
    pub trailing: bool,
}

const TOP_KEYWORDS: [&str; 6] = ["kind", "sphere", "flow", "trigger", "gateway", "meta"];
const MEMBER_KEYWORDS: [&str; 3] = ["scheme", "sphere", "meta"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

type PResult<T> = Result<T, ()>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        self.peek().kind == TokenKind::Eof
    }

    fn peek_ident(&self) -> Option<&str> {
        match &self.peek().kind {
            TokenKind::Ident(s) => Some(s),
            _ => None,
        }
    }

    fn error(&mut self, code: DiagnosticCode, msg: impl Into<String>, span: Span) {
        self.diags.push(Diagnostic::error(code, msg, span));
    }

    fn unexpected(&mut self, expected: &str) {
        let tok = self.peek().clone();
        let code = if tok.kind == TokenKind::Eof {
            DiagnosticCode::UnterminatedBlock
        } else {
            DiagnosticCode::UnexpectedToken
        };
        self.error(
            code,
            format!("expected {expected}, found {}", tok.kind.describe()),
            tok.span,
        );
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> PResult<Token> {
        if self.peek().kind == kind {
            Ok(self.bump())
        } else {
            self.unexpected(expected);
            Err(())
        }
    }

    fn expect_ident(&mut self, expected: &str) -> PResult<(String, Span)> {
        match self.peek().kind.clone() {
            TokenKind::Ident(s) => {
                let t = self.bump();
                Ok((s, t.span))
            }
            _ => {
                self.unexpected(expected);
                Err(())
            }
        }
    }

    /// Skips to the next top-level keyword at brace depth zero.
    fn recover_top(&mut self, started_at: usize) {
        let mut depth = 0usize;
        if self.pos == started_at && !self.at_eof() {
            if self.peek().kind == TokenKind::LBrace {
                depth += 1;
            }
            self.bump();
        }
        while !self.at_eof() {
            match &self.peek().kind {
                TokenKind::LBrace => depth += 1,
                TokenKind::RBrace => depth = depth.saturating_sub(1),
                TokenKind::Ident(s) if depth == 0 && TOP_KEYWORDS.contains(&s.as_str()) => return,
                _ => {}
            }
            self.bump();
        }
    }

    /// Skips to the next member keyword or the closing brace of the block.
    fn recover_member(&mut self, started_at: usize) {
        let mut depth = 0usize;
        if self.pos == started_at && !self.at_eof() && self.peek().kind != TokenKind::RBrace {
            if self.peek().kind == TokenKind::LBrace {
                depth += 1;
            }
            self.bump();
        }
        while !self.at_eof() {
            match &self.peek().kind {
                TokenKind::LBrace => depth += 1,
                TokenKind::RBrace if depth == 0 => return,
                TokenKind::RBrace => depth -= 1,
                TokenKind::Ident(s) if depth == 0 && MEMBER_KEYWORDS.contains(&s.as_str()) => {
                    return
                }
                _ => {}
            }
            self.bump();
        }
    }

    fn parse_file(&mut self) -> Vec<Declaration> {
        let mut out = Vec::new();
        while !self.at_eof() {
            let started_at = self.pos;
            let start = self.peek().span;
            let result = match self.peek_ident() {
                Some("kind") => self.parse_kind().map(|(d, sp)| Declaration {
                    decl: Decl::Kind(d),
                    span: start.to(sp),
                    syntax: Syntax::Line,
                }),
                Some("meta") => self.parse_meta().map(|(d, sp)| Declaration {
                    decl: Decl::Meta(d),
                    span: start.to(sp),
                    syntax: Syntax::Line,
                }),
                Some("sphere") => self.parse_sphere().map(|(d, sp, syntax)| Declaration {
                    decl: Decl::Sphere(d),
                    span: start.to(sp),
                    syntax,
                }),
                Some("flow" | "trigger" | "gateway") => {
                    self.parse_arc().map(|(d, sp)| Declaration {
                        decl: Decl::Arc(d),
                        span: start.to(sp),
                        syntax: Syntax::Line,
                    })
                }
                Some(other) => {
                    let msg = format!("unknown keyword `{other}`");
                    self.error(DiagnosticCode::UnknownKeyword, msg, start);
                    Err(())
                }
                None => {
                    self.unexpected("a declaration keyword");
                    Err(())
                }
            };
            match result {
                Ok(d) => out.push(d),
                Err(()) => self.recover_top(started_at),
            }
        }
        out
    }

    fn parse_kind(&mut self) -> PResult<(KindDecl, Span)> {
        self.bump();
        let (name, span) = self.expect_ident("a kind name")?;
        Ok((KindDecl { name }, span))
    }

    fn parse_meta(&mut self) -> PResult<(MetaDecl, Span)> {
        self.bump();
        let (key, _) = self.expect_ident("a meta key")?;
        self.expect(TokenKind::Equals, "`=`")?;
        let tok = self.peek().clone();
        let value = match tok.kind {
            TokenKind::Str(s) | TokenKind::Ident(s) | TokenKind::Int(s) => s,
            _ => {
                self.unexpected("a string value");
                return Err(());
            }
        };
        self.bump();
        Ok((MetaDecl { key, value }, tok.span))
    }

    fn parse_sphere(&mut self) -> PResult<(SphereDecl, Span, Syntax)> {
        let kw = self.bump();
        let (name, _) = self.expect_ident("a sphere name")?;
        let open = self.expect(TokenKind::LBrace, "`{`")?.span;
        let mut decl = SphereDecl {
            name,
            ..Default::default()
        };
        let mut members = Vec::new();
        let mut failed = false;
        loop {
            let started_at = self.pos;
            let tok = self.peek().clone();
            match &tok.kind {
                TokenKind::RBrace => {
                    self.bump();
                    if failed {
                        return Err(());
                    }
                    let syntax = Syntax::Block {
                        open: kw.span.to(open),
                        members,
                        close: tok.span,
                    };
                    return Ok((decl, tok.span, syntax));
                }
                TokenKind::Eof => {
                    self.error(
                        DiagnosticCode::UnterminatedBlock,
                        format!("sphere `{}` is missing its closing `}}`", decl.name),
                        open,
                    );
                    return Err(());
                }
                TokenKind::Ident(k) if k == "scheme" => match self.parse_scheme() {
                    Ok((s, sp)) => {
                        decl.schemes.push(s.clone());
                        members.push(Member {
                            item: MemberItem::Scheme(s),
                            span: tok.span.to(sp),
                            syntax: Syntax::Line,
                        });
                    }
                    Err(()) => {
                        failed = true;
                        self.recover_member(started_at);
                    }
                },
                TokenKind::Ident(k) if k == "meta" => match self.parse_meta() {
                    Ok((m, sp)) => {
                        decl.meta.push(m.clone());
                        members.push(Member {
                            item: MemberItem::Meta(m),
                            span: tok.span.to(sp),
                            syntax: Syntax::Line,
                        });
                    }
                    Err(()) => {
                        failed = true;
                        self.recover_member(started_at);
                    }
                },
                TokenKind::Ident(k) if k == "sphere" => match self.parse_sphere() {
                    Ok((s, sp, syntax)) => {
                        decl.spheres.push(s.clone());
                        members.push(Member {
                            item: MemberItem::Sphere(s),
                            span: tok.span.to(sp),
                            syntax,
                        });
                    }
                    Err(()) => {
                        failed = true;
                        if self.at_eof() {
                            // the inner block already reported the missing brace
                            return Err(());
                        }
                        self.recover_member(started_at);
                    }
                },
                TokenKind::Ident(k) => {
                    let code = if TOP_KEYWORDS.contains(&k.as_str()) {
                        DiagnosticCode::UnexpectedToken
                    } else {
                        DiagnosticCode::UnknownKeyword
                    };
                    let msg = format!("`{k}` is not allowed inside a sphere");
                    self.error(code, msg, tok.span);
                    failed = true;
                    self.recover_member(started_at);
                }
                _ => {
                    self.unexpected("`scheme`, `sphere`, `meta` or `}`");
                    failed = true;
                    self.recover_member(started_at);
                }
            }
        }
    }

    fn parse_scheme(&mut self) -> PResult<(SchemeDecl, Span)> {
        self.bump();
        let (name, _) = self.expect_ident("a scheme name")?;
        self.expect(TokenKind::Colon, "`:`")?;
        let (kind, _) = self.expect_ident("a kind name")?;
        self.expect(TokenKind::LBrace, "`{`")?;
        match self.peek_ident() {
            Some("stages") => {
                self.bump();
            }
            _ => {
                self.unexpected("`stages`");
                return Err(());
            }
        }
        self.expect(TokenKind::Colon, "`:`")?;
        let mut stages = Vec::new();
        let mut seen = BTreeSet::new();
        let mut bad = false;
        while let Some(word) = self.peek_ident() {
            if word == "capacity" {
                break;
            }
            let word = word.to_string();
            let span = self.bump().span;
            match word.parse::<Stage>() {
                Ok(st) => {
                    if !seen.insert(st) {
                        self.error(
                            DiagnosticCode::DuplicateStage,
                            format!("stage `{st}` listed twice"),
                            span,
                        );
                        bad = true;
                    }
                    stages.push(st);
                }
                Err(_) => {
                    self.error(
                        DiagnosticCode::UnknownStageName,
                        format!("unknown stage name `{word}`"),
                        span,
                    );
                    bad = true;
                }
            }
        }
        if stages.is_empty() && !bad {
            self.unexpected("at least one stage name");
            return Err(());
        }
        let mut capacity = None;
        if self.peek_ident() == Some("capacity") {
            self.bump();
            self.expect(TokenKind::Colon, "`:`")?;
            let tok = self.peek().clone();
            match tok.kind {
                TokenKind::Int(digits) => {
                    self.bump();
                    match digits.parse::<u32>() {
                        Ok(n) if n > 0 => capacity = Some(n),
                        _ => {
                            self.error(
                                DiagnosticCode::InvalidInteger,
                                format!(
                                    "capacity must be a positive 32-bit integer, got `{digits}`"
                                ),
                                tok.span,
                            );
                            bad = true;
                        }
                    }
                }
                _ => {
                    self.unexpected("a capacity value");
                    return Err(());
                }
            }
        }
        let close = self.expect(TokenKind::RBrace, "`}`")?;
        if bad {
            return Err(());
        }
        Ok((
            SchemeDecl {
                name,
                kind,
                stages,
                capacity,
            },
            close.span,
        ))
    }

    fn parse_endpoint(&mut self) -> PResult<(EndpointRef, Span)> {
        let (first, start) = self.expect_ident("an endpoint `sphere.scheme.stage`")?;
        let mut parts = vec![(first, start)];
        while self.peek().kind == TokenKind::Dot {
            self.bump();
            parts.push(self.expect_ident("an identifier after `.`")?);
        }
        let end = parts.last().map(|p| p.1).unwrap_or(start);
        if parts.len() < 3 {
            self.error(
                DiagnosticCode::UnexpectedToken,
                "an endpoint needs the form sphere.scheme.stage",
                start.to(end),
            );
            return Err(());
        }
        let (stage_word, stage_span) = parts.pop().expect("len >= 3");
        let stage = match stage_word.parse::<Stage>() {
            Ok(s) => s,
            Err(_) => {
                self.error(
                    DiagnosticCode::UnknownStageName,
                    format!("unknown stage name `{stage_word}`"),
                    stage_span,
                );
                return Err(());
            }
        };
        let (scheme, _) = parts.pop().expect("len >= 2");
        Ok((
            EndpointRef {
                sphere: parts.into_iter().map(|p| p.0).collect(),
                scheme,
                stage,
            },
            start.to(end),
        ))
    }

    fn parse_arc(&mut self) -> PResult<(ArcDecl, Span)> {
        let kw = self.bump();
        let keyword = match &kw.kind {
            TokenKind::Ident(s) => s.clone(),
            _ => unreachable!("called on an arc keyword"),
        };
        let (source, _) = self.parse_endpoint()?;
        let arrow = self.peek().clone();
        let class = match arrow.kind {
            TokenKind::Arrow => ArcClass::Flow,
            TokenKind::Squiggle => ArcClass::Trigger,
            _ => {
                self.unexpected("`->` or `~>`");
                return Err(());
            }
        };
        self.bump();
        let (target, mut span) = self.parse_endpoint()?;
        let mismatch = match (keyword.as_str(), class) {
            ("flow", ArcClass::Trigger) => Some("`flow` takes `->`; use `trigger` for `~>`"),
            ("trigger", ArcClass::Flow) => Some("`trigger` takes `~>`; use `flow` for `->`"),
            _ => None,
        };
        if let Some(msg) = mismatch {
            self.error(DiagnosticCode::ArrowMismatch, msg, arrow.span);
            return Err(());
        }
        let mut label = None;
        if let TokenKind::Str(s) = &self.peek().kind {
            label = Some(s.clone());
            span = span.to(self.bump().span);
        }
        Ok((
            ArcDecl {
                class,
                gateway: keyword == "gateway",
                source,
                target,
                label,
            },
            span,
        ))
    }
}

/// Parses DSL text. Total: malformed input yields diagnostics, never a panic.
pub fn parse(text: &str) -> ParseOutput {
    let (all_tokens, mut diagnostics) = lex(text);
    let mut comments = Vec::new();
    let mut code_on_line = false;
    let mut tokens = Vec::with_capacity(all_tokens.len());
    for tok in all_tokens {
        match tok.kind {
            TokenKind::Newline => code_on_line = false,
            TokenKind::Comment(text) => comments.push(Comment {
                text,
                span: tok.span,
                trailing: code_on_line,
            }),
            _ => {
                code_on_line = true;
                tokens.push(tok);
            }
        }
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        diags: Vec::new(),
    };
    let declarations = parser.parse_file();
    diagnostics.extend(parser.diags);
    diagnostics.sort_by_key(|d| (d.span.start, d.span.end));
    ParseOutput {
        declarations,
        diagnostics,
        comments,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codes(text: &str) -> Vec<DiagnosticCode> {
        parse(text).diagnostics.iter().map(|d| d.code).collect()
    }

    #[test]
    fn minimal_file() {
        let out = parse(
            "kind information\nsphere Source { scheme info: information { stages: create process release transfer } }",
        );
        assert!(out.diagnostics.is_empty(), "{:?}", out.diagnostics);
        assert_eq!(out.declarations.len(), 2);
        let Decl::Sphere(s) = &out.declarations[1].decl else {
            panic!("expected a sphere");
        };
        assert_eq!(s.schemes[0].stages.len(), 4);
    }

    #[test]
    fn empty_file() {
        let out = parse("");
        assert!(out.declarations.is_empty());
        assert!(out.diagnostics.is_empty());
    }

    #[test]
    fn unknown_stage_in_endpoint() {
        let text = "flow Source.info.release -> Source.info.banana";
        let out = parse(text);
        assert_eq!(out.diagnostics.len(), 1);
        let d = &out.diagnostics[0];
        assert_eq!(d.code, DiagnosticCode::UnknownStageName);
        assert_eq!(&text[d.span.start..d.span.end], "banana");
    }

    #[test]
    fn recovers_after_bad_declaration() {
        let out = parse("kind a\nbogus x y\nkind b\nflow a.b -> c.d.receive\nkind c");
        assert_eq!(
            out.diagnostics.iter().map(|d| d.code).collect::<Vec<_>>(),
            vec![
                DiagnosticCode::UnknownKeyword,
                DiagnosticCode::UnexpectedToken
            ]
        );
        assert_eq!(out.declarations.len(), 3);
    }

    #[test]
    fn recovery_keeps_following_declaration() {
        let out = parse("sphere s { bogus }\nkind a");
        assert_eq!(out.diagnostics.len(), 1);
        assert_eq!(out.declarations.len(), 1);
        assert!(matches!(out.declarations[0].decl, Decl::Kind(_)));
    }

    #[test]
    fn unterminated_sphere() {
        assert_eq!(
            codes("sphere s { scheme x: k { stages: receive }"),
            vec![DiagnosticCode::UnterminatedBlock]
        );
        assert_eq!(
            codes("sphere s { sphere t {"),
            vec![DiagnosticCode::UnterminatedBlock]
        );
    }

    #[test]
    fn scheme_errors() {
        assert_eq!(
            codes("sphere s { scheme x: k { stages: receive receive } }"),
            vec![DiagnosticCode::DuplicateStage]
        );
        assert_eq!(
            codes("sphere s { scheme x: k { stages: receive capacity: 0 } }"),
            vec![DiagnosticCode::InvalidInteger]
        );
        assert_eq!(
            codes("sphere s { scheme x: k { stages: } }"),
            vec![DiagnosticCode::UnexpectedToken]
        );
        assert_eq!(
            codes("sphere s { flow a.b.receive -> a.b.process }"),
            vec![DiagnosticCode::UnexpectedToken]
        );
    }

    #[test]
    fn arrows_and_gateways() {
        assert_eq!(
            codes("flow a.b.release ~> c.d.receive"),
            vec![DiagnosticCode::ArrowMismatch]
        );
        assert_eq!(
            codes("trigger a.b.release -> c.d.receive"),
            vec![DiagnosticCode::ArrowMismatch]
        );
        let out = parse("gateway a.b.process -> a.b.release \"used\"");
        assert!(out.diagnostics.is_empty());
        let Decl::Arc(a) = &out.declarations[0].decl else {
            panic!()
        };
        assert!(a.gateway);
        assert_eq!(a.class, ArcClass::Flow);
        assert_eq!(a.label.as_deref(), Some("used"));
    }

    #[test]
    fn nested_paths() {
        let out = parse("flow company.dept1.info.transfer -> company.info.receive");
        let Decl::Arc(a) = &out.declarations[0].decl else {
            panic!()
        };
        assert_eq!(a.source.sphere, vec!["company", "dept1"]);
        assert_eq!(a.source.scheme, "info");
        assert_eq!(a.target.sphere, vec!["company"]);
    }

    #[test]
    fn trailing_comment_detection() {
        let out = parse("# lead\nkind a # tail\n");
        assert!(!out.comments[0].trailing);
        assert!(out.comments[1].trailing);
    }
}
