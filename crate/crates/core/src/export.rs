//! Graphviz DOT output.
//!
//! Spheres become nested clusters and every scheme gets its own cluster of
//! stage nodes labelled R/P/C/Rl/T. Flows are solid edges, triggers dashed;
//! schemes in channel spheres are filled dark.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{ArcClass, ArcId, Location, SphereId, SystemModel};
use crate::simulator::{model_hash, EventKind, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StyleProfile {
    /// Dark channel stages, dashed triggers.
    #[default]
    Figure,
    /// No fill colours; triggers still dashed.
    Plain,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExportError {
    #[error("trace was produced from a different model (expected {expected}, found {found})")]
    FingerprintMismatch { expected: String, found: String },
}

fn q(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Per-node and per-edge numbers drawn on top of the model graph.
struct Annotations {
    edges: BTreeMap<ArcId, u64>,
    peaks: BTreeMap<Location, u64>,
}

struct Writer<'a> {
    m: &'a SystemModel,
    style: StyleProfile,
    notes: Option<&'a Annotations>,
    out: String,
}

impl Writer<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn sphere(&mut self, id: SphereId, depth: usize) {
        let s = self.m.sphere(id);
        let path = s.dotted_path();
        self.line(
            depth,
            &format!("subgraph {} {{", q(&format!("cluster_{path}"))),
        );
        self.line(depth + 1, &format!("label={};", q(&s.name)));
        for &sid in &s.schemes {
            let sch = self.m.scheme(sid);
            let spath = self.m.scheme_path(sid).to_string();
            self.line(
                depth + 1,
                &format!("subgraph {} {{", q(&format!("cluster_{spath}"))),
            );
            let kind = &self.m.kind(sch.kind).name;
            self.line(
                depth + 2,
                &format!("label={};", q(&format!("{}: {kind}", sch.name))),
            );
            let dark = self.style == StyleProfile::Figure && self.m.is_channel(sid);
            for &stage in &sch.stages {
                let loc = Location::new(sid, stage);
                let mut attrs = vec![
                    format!("label={}", q(stage.short_label())),
                    format!("tooltip={}", q(&format!("{spath} {}", stage.title()))),
                ];
                if dark {
                    attrs.push("style=\"rounded,filled\"".into());
                    attrs.push("fillcolor=gray25".into());
                    attrs.push("fontcolor=white".into());
                }
                if let Some(n) = self.notes {
                    let peak = n.peaks.get(&loc).copied().unwrap_or(0);
                    attrs.push(format!("xlabel={}", q(&format!("peak={peak}"))));
                }
                self.line(
                    depth + 2,
                    &format!("{} [{}];", q(&self.m.location_path(loc)), attrs.join(", ")),
                );
            }
            self.line(depth + 1, "}");
        }
        for &child in &s.children {
            self.sphere(child, depth + 1);
        }
        self.line(depth, "}");
    }

    fn render(mut self) -> String {
        let name = self.m.name().unwrap_or("flow");
        self.line(0, &format!("digraph {} {{", q(name)));
        self.line(1, "rankdir=LR;");
        self.line(1, "compound=true;");
        self.line(
            1,
            "node [shape=box, style=rounded, fontname=\"Helvetica\"];",
        );
        self.line(1, "edge [fontname=\"Helvetica\"];");
        let roots: Vec<SphereId> = (0..self.m.spheres().len() as u32)
            .map(SphereId)
            .filter(|&id| self.m.sphere(id).parent.is_none())
            .collect();
        for id in roots {
            self.sphere(id, 1);
        }
        for id in self.m.arc_ids() {
            let a = self.m.arc(id);
            let mut attrs = vec![match a.class {
                ArcClass::Flow => "style=solid".to_string(),
                ArcClass::Trigger => "style=dashed".to_string(),
            }];
            if a.gateway {
                attrs.push("arrowhead=odot".into());
            }
            let mut label = a.label.clone();
            if let Some(n) = self.notes {
                let count = format!("n={}", n.edges.get(&id).copied().unwrap_or(0));
                label = Some(match label {
                    Some(l) => format!("{l}\n{count}"),
                    None => count,
                });
            }
            if let Some(l) = label {
                attrs.push(format!("label={}", q(&l)));
            }
            self.line(
                1,
                &format!(
                    "{} -> {} [{}];",
                    q(&self.m.location_path(a.source)),
                    q(&self.m.location_path(a.target)),
                    attrs.join(", ")
                ),
            );
        }
        self.line(0, "}");
        self.out
    }
}

pub fn export_model(model: &SystemModel, style: StyleProfile) -> String {
    Writer {
        m: model,
        style,
        notes: None,
        out: String::new(),
    }
    .render()
}

/// Traversal count per arc: moves for flows, firings for triggers.
pub fn edge_counts(trace: &Trace, model: &SystemModel) -> BTreeMap<ArcId, u64> {
    let mut flows: BTreeMap<(Location, Location), ArcId> = BTreeMap::new();
    for id in model.arc_ids() {
        let a = model.arc(id);
        if a.class == ArcClass::Flow {
            flows.insert((a.source, a.target), id);
        }
    }
    let mut counts: BTreeMap<ArcId, u64> = model.arc_ids().map(|id| (id, 0)).collect();
    for e in &trace.events {
        let arc = match e.kind {
            EventKind::Moved { from, to } => flows.get(&(from, to)).copied(),
            EventKind::Triggered { arc, .. } => Some(arc),
            _ => None,
        };
        if let Some(a) = arc {
            *counts.entry(a).or_insert(0) += 1;
        }
    }
    counts
}

/// Highest end-of-step token count seen at each location.
pub fn peak_occupancy(trace: &Trace) -> BTreeMap<Location, u64> {
    let mut position = BTreeMap::new();
    let mut count: BTreeMap<Location, u64> = BTreeMap::new();
    let mut peaks: BTreeMap<Location, u64> = BTreeMap::new();
    let mut touched = Vec::new();
    let mut events = trace.events.iter().peekable();
    while let Some(e) = events.next() {
        let leave = |loc: Location, count: &mut BTreeMap<Location, u64>| {
            if let Some(c) = count.get_mut(&loc) {
                *c = c.saturating_sub(1);
            }
        };
        match &e.kind {
            EventKind::Created { .. } => {
                position.insert(e.token, e.at);
                *count.entry(e.at).or_insert(0) += 1;
                touched.push(e.at);
            }
            EventKind::Moved { .. } | EventKind::ReturnedFromRelease { .. } => {
                if let Some(prev) = position.insert(e.token, e.at) {
                    leave(prev, &mut count);
                }
                *count.entry(e.at).or_insert(0) += 1;
                touched.push(e.at);
            }
            k if k.is_terminal() => {
                if let Some(prev) = position.remove(&e.token) {
                    leave(prev, &mut count);
                }
            }
            _ => {}
        }
        if events.peek().is_none_or(|n| n.time != e.time) {
            for loc in touched.drain(..) {
                let c = count.get(&loc).copied().unwrap_or(0);
                let p = peaks.entry(loc).or_insert(0);
                *p = (*p).max(c);
            }
        }
    }
    peaks
}

/// The model graph with edge traversal counts (`n=`) and node peak occupancy.
pub fn export_trace(
    trace: &Trace,
    model: &SystemModel,
    style: StyleProfile,
) -> Result<String, ExportError> {
    let expected = model_hash(model);
    if trace.fingerprint.model_hash != expected {
        return Err(ExportError::FingerprintMismatch {
            expected,
            found: trace.fingerprint.model_hash.clone(),
        });
    }
    let notes = Annotations {
        edges: edge_counts(trace, model),
        peaks: peak_occupancy(trace),
    };
    Ok(Writer {
        m: model,
        style,
        notes: Some(&notes),
        out: String::new(),
    }
    .render())
}
