use thiserror::Error;

use super::diagnostic::Diagnostic;
use super::parser::{parse, Comment, Member, MemberItem, Syntax};
use crate::model::{ArcClass, ArcDecl, Decl, MetaDecl, SchemeDecl, SphereDecl, SystemModel};

pub const HEADER: &str = "# flowmodel canonical form";
const INDENT: &str = "  ";

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn meta_line(m: &MetaDecl) -> String {
    format!("meta {} = {}", m.key, quote(&m.value))
}

fn scheme_line(s: &SchemeDecl) -> String {
    let stages: Vec<&str> = s.stages.iter().map(|st| st.as_str()).collect();
    let mut line = format!(
        "scheme {}: {} {{ stages: {}",
        s.name,
        s.kind,
        stages.join(" ")
    );
    if let Some(c) = s.capacity {
        line.push_str(&format!(" capacity: {c}"));
    }
    line.push_str(" }");
    line
}

fn arc_line(a: &ArcDecl) -> String {
    let keyword = match (a.gateway, a.class) {
        (true, _) => "gateway",
        (false, ArcClass::Flow) => "flow",
        (false, ArcClass::Trigger) => "trigger",
    };
    let arrow = match a.class {
        ArcClass::Flow => "->",
        ArcClass::Trigger => "~>",
    };
    let mut line = format!("{keyword} {} {arrow} {}", a.source, a.target);
    if let Some(l) = &a.label {
        line.push(' ');
        line.push_str(&quote(l));
    }
    line
}

fn write_sphere(out: &mut String, s: &SphereDecl, depth: usize) {
    let pad = INDENT.repeat(depth);
    out.push_str(&format!("{pad}sphere {} {{\n", s.name));
    for m in &s.meta {
        out.push_str(&format!("{pad}{INDENT}{}\n", meta_line(m)));
    }
    for sch in &s.schemes {
        out.push_str(&format!("{pad}{INDENT}{}\n", scheme_line(sch)));
    }
    for child in &s.spheres {
        write_sphere(out, child, depth + 1);
    }
    out.push_str(&format!("{pad}}}\n"));
}

/// Canonical text for a model: header, metadata, kinds, spheres, arcs, each
/// section sorted and separated by one blank line.
pub fn serialize(model: &SystemModel) -> String {
    let decls = model.to_decls();
    let mut sections: Vec<String> = Vec::new();
    let mut metas = String::new();
    let mut kinds = String::new();
    let mut spheres = String::new();
    let mut arcs = String::new();
    for d in &decls {
        match d {
            Decl::Meta(m) => {
                metas.push_str(&meta_line(m));
                metas.push('\n');
            }
            Decl::Kind(k) => {
                kinds.push_str(&format!("kind {}\n", k.name));
            }
            Decl::Sphere(s) => {
                if !spheres.is_empty() {
                    spheres.push('\n');
                }
                write_sphere(&mut spheres, s, 0);
            }
            Decl::Arc(a) => {
                arcs.push_str(&arc_line(a));
                arcs.push('\n');
            }
        }
    }
    for s in [metas, kinds, spheres, arcs] {
        if !s.is_empty() {
            sections.push(s);
        }
    }
    let mut out = format!("{HEADER}\n");
    for s in sections {
        out.push('\n');
        out.push_str(&s);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("refusing to format input with {} error diagnostic(s)", .0.len())]
    RefusesMalformed(Vec<Diagnostic>),
}

struct Printer<'a> {
    text: &'a str,
    comments: &'a [Comment],
    next_comment: usize,
    out: String,
    last_end: usize,
    fresh: bool,
}

impl Printer<'_> {
    fn blank_between(&self, a: usize, b: usize) -> bool {
        a < b && self.text[a..b].matches('\n').count() >= 2
    }

    fn separate(&mut self, start: usize) {
        if !self.fresh && self.blank_between(self.last_end, start) {
            self.out.push('\n');
        }
        self.fresh = false;
    }

    /// Emits every pending comment that starts before `upto` on its own line.
    fn comments_before(&mut self, upto: usize, depth: usize) {
        while let Some(c) = self.comments.get(self.next_comment) {
            if c.span.start >= upto {
                break;
            }
            self.separate(c.span.start);
            self.out.push_str(&INDENT.repeat(depth));
            self.out.push('#');
            self.out.push_str(&c.text);
            self.out.push('\n');
            self.last_end = c.span.end;
            self.next_comment += 1;
        }
    }

    /// Writes one line anchored at source offset `anchor`, pulling in a
    /// trailing comment that sits on the same source line.
    fn line(&mut self, start: usize, anchor: usize, depth: usize, text: &str) {
        self.separate(start);
        self.out.push_str(&INDENT.repeat(depth));
        self.out.push_str(text);
        self.last_end = anchor;
        if let Some(c) = self.comments.get(self.next_comment) {
            if c.trailing
                && c.span.start >= anchor
                && !self.text[anchor..c.span.start].contains('\n')
            {
                self.out.push_str(" #");
                self.out.push_str(&c.text);
                self.last_end = c.span.end;
                self.next_comment += 1;
            }
        }
        self.out.push('\n');
    }

    fn item(
        &mut self,
        span_start: usize,
        span_end: usize,
        syntax: &Syntax,
        depth: usize,
        text: &str,
    ) {
        match syntax {
            Syntax::Line => {
                self.comments_before(span_end, depth);
                self.line(span_start, span_end, depth, text);
            }
            Syntax::Block {
                open,
                members,
                close,
            } => {
                self.comments_before(open.end, depth);
                self.line(span_start, open.end, depth, text);
                self.fresh = true;
                for member in members {
                    self.member(member, depth + 1);
                }
                self.comments_before(close.start, depth + 1);
                self.fresh = true;
                self.line(close.start, close.end, depth, "}");
            }
        }
    }

    fn member(&mut self, m: &Member, depth: usize) {
        let text = match &m.item {
            MemberItem::Meta(meta) => meta_line(meta),
            MemberItem::Scheme(s) => scheme_line(s),
            MemberItem::Sphere(s) => format!("sphere {} {{", s.name),
        };
        self.item(m.span.start, m.span.end, &m.syntax, depth, &text);
    }
}

/// Re-indents and normalizes spacing while keeping declaration order,
/// comments and single blank lines. Idempotent.
pub fn format(text: &str) -> Result<String, FormatError> {
    let parsed = parse(text);
    if parsed.has_errors() {
        return Err(FormatError::RefusesMalformed(
            parsed
                .diagnostics
                .into_iter()
                .filter(Diagnostic::is_error)
                .collect(),
        ));
    }
    let mut p = Printer {
        text,
        comments: &parsed.comments,
        next_comment: 0,
        out: String::new(),
        last_end: 0,
        fresh: true,
    };
    for d in &parsed.declarations {
        let text = match &d.decl {
            Decl::Kind(k) => format!("kind {}", k.name),
            Decl::Meta(m) => meta_line(m),
            Decl::Arc(a) => arc_line(a),
            Decl::Sphere(s) => format!("sphere {} {{", s.name),
        };
        p.item(d.span.start, d.span.end, &d.syntax, 0, &text);
    }
    p.comments_before(usize::MAX, 0);
    Ok(p.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::load;

    #[test]
    fn empty_model_is_header_only() {
        assert_eq!(serialize(&SystemModel::empty()), format!("{HEADER}\n"));
    }

    #[test]
    fn arcs_sorted_by_key() {
        let text = "kind k\nsphere s { scheme a: k { stages: receive process create release } }\n\
            flow s.a.release -> s.a.process\nflow s.a.create -> s.a.release\nflow s.a.receive -> s.a.process\n";
        let out = serialize(&load(text).unwrap());
        let arcs: Vec<&str> = out.lines().filter(|l| l.starts_with("flow")).collect();
        let mut sorted = arcs.clone();
        sorted.sort();
        assert_eq!(arcs, sorted);
        assert_eq!(arcs.len(), 3);
        assert_eq!(serialize(&load(&out).unwrap()), out);
    }

    #[test]
    fn format_normalizes_indentation() {
        let messy = "kind   k # the kind\n\n\n   sphere s {\n\t# inside\n        scheme a :k{stages:receive\n process}\n}\nflow s.a.receive->s.a.process   \"x\"\n";
        let want = "kind k # the kind\n\nsphere s {\n  # inside\n  scheme a: k { stages: receive process }\n}\nflow s.a.receive -> s.a.process \"x\"\n";
        let got = format(messy).unwrap();
        assert_eq!(got, want);
        assert_eq!(format(&got).unwrap(), got);
        let a: Vec<_> = parse(messy).decls().cloned().collect();
        let b: Vec<_> = parse(&got).decls().cloned().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn format_keeps_comments_at_block_end() {
        let src = "sphere s {\n  meta role = \"channel\" # c1\n  # c2\n} # c3\n# tail\n";
        assert_eq!(format(src).unwrap(), src);
    }

    #[test]
    fn format_refuses_malformed() {
        assert!(matches!(format("kind"), Err(FormatError::RefusesMalformed(d)) if !d.is_empty()));
    }
}
