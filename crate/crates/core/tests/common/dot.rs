//! Minimal DOT reader: enough of the grammar to check exporter output and
//! pull out nodes, edges and clusters for recounts.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Id(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Eq,
    Arrow,
}

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '{' => {
                out.push(Tok::LBrace);
                i += 1;
            }
            '}' => {
                out.push(Tok::RBrace);
                i += 1;
            }
            '[' => {
                out.push(Tok::LBracket);
                i += 1;
            }
            ']' => {
                out.push(Tok::RBracket);
                i += 1;
            }
            ';' => {
                out.push(Tok::Semi);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            '=' => {
                out.push(Tok::Eq);
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push(Tok::Arrow);
                i += 2;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err("unterminated string".into()),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            let n = *chars.get(i + 1).ok_or("dangling escape")?;
                            match n {
                                '"' => s.push('"'),
                                '\\' => s.push('\\'),
                                'n' => s.push('\n'),
                                other => {
                                    s.push('\\');
                                    s.push(other);
                                }
                            }
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push(Tok::Id(s));
            }
            c if c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric()
                        || chars[i] == '_'
                        || chars[i] == '.'
                        || (chars[i] == '-' && chars.get(i + 1) != Some(&'>')))
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let numeral = word
                    .chars()
                    .all(|c| c.is_ascii_digit() || c == '.' || c == '-');
                let ident = word
                    .chars()
                    .next()
                    .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                    && word.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                if !numeral && !ident {
                    return Err(format!("bad bare identifier `{word}`"));
                }
                out.push(Tok::Id(word));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

#[derive(Debug, Default, Clone)]
pub struct DotGraph {
    pub name: Option<String>,
    pub nodes: BTreeMap<String, BTreeMap<String, String>>,
    pub edges: Vec<(String, String, BTreeMap<String, String>)>,
    pub clusters: Vec<String>,
}

struct P {
    toks: Vec<Tok>,
    pos: usize,
    g: DotGraph,
}

impl P {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }
    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }
    fn expect(&mut self, t: Tok) -> Result<(), String> {
        match self.next() {
            Some(ref x) if *x == t => Ok(()),
            other => Err(format!("expected {t:?}, found {other:?}")),
        }
    }
    fn id(&mut self) -> Result<String, String> {
        match self.next() {
            Some(Tok::Id(s)) => Ok(s),
            other => Err(format!("expected identifier, found {other:?}")),
        }
    }
    fn attr_list(&mut self) -> Result<BTreeMap<String, String>, String> {
        let mut attrs = BTreeMap::new();
        while self.peek() == Some(&Tok::LBracket) {
            self.next();
            while self.peek() != Some(&Tok::RBracket) {
                let k = self.id()?;
                self.expect(Tok::Eq)?;
                let v = self.id()?;
                attrs.insert(k, v);
                if matches!(self.peek(), Some(Tok::Comma) | Some(Tok::Semi)) {
                    self.next();
                }
            }
            self.expect(Tok::RBracket)?;
        }
        Ok(attrs)
    }
    fn stmt_list(&mut self) -> Result<(), String> {
        while self.peek() != Some(&Tok::RBrace) {
            if self.peek().is_none() {
                return Err("unexpected end of input".into());
            }
            self.stmt()?;
            if self.peek() == Some(&Tok::Semi) {
                self.next();
            }
        }
        Ok(())
    }
    fn subgraph_body(&mut self) -> Result<(), String> {
        self.expect(Tok::LBrace)?;
        self.stmt_list()?;
        self.expect(Tok::RBrace)
    }
    fn stmt(&mut self) -> Result<(), String> {
        match self.peek() {
            Some(Tok::LBrace) => return self.subgraph_body(),
            Some(Tok::Id(k)) if k == "subgraph" => {
                self.next();
                if let Some(Tok::Id(_)) = self.peek() {
                    let name = self.id()?;
                    if name.starts_with("cluster") {
                        self.g.clusters.push(name);
                    }
                }
                return self.subgraph_body();
            }
            Some(Tok::Id(k)) if k == "graph" || k == "node" || k == "edge" => {
                self.next();
                self.attr_list()?;
                return Ok(());
            }
            _ => {}
        }
        let first = self.id()?;
        match self.peek() {
            Some(Tok::Eq) => {
                self.next();
                self.id()?;
            }
            Some(Tok::Arrow) => {
                let mut chain = vec![first];
                while self.peek() == Some(&Tok::Arrow) {
                    self.next();
                    chain.push(self.id()?);
                }
                let attrs = self.attr_list()?;
                for w in chain.windows(2) {
                    self.g
                        .edges
                        .push((w[0].clone(), w[1].clone(), attrs.clone()));
                }
            }
            _ => {
                let attrs = self.attr_list()?;
                self.g.nodes.entry(first).or_default().extend(attrs);
            }
        }
        Ok(())
    }
}

pub fn parse_dot(src: &str) -> Result<DotGraph, String> {
    let mut p = P {
        toks: lex(src)?,
        pos: 0,
        g: DotGraph::default(),
    };
    if let Some(Tok::Id(k)) = p.peek() {
        if k == "strict" {
            p.next();
        }
    }
    match p.id()?.as_str() {
        "digraph" => {}
        other => return Err(format!("expected digraph, found `{other}`")),
    }
    if let Some(Tok::Id(_)) = p.peek() {
        p.g.name = Some(p.id()?);
    }
    p.subgraph_body()?;
    if p.pos != p.toks.len() {
        return Err("trailing tokens after graph".into());
    }
    Ok(p.g)
}
