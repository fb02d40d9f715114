use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::trace::{EventKind, TokenId, Trace};

/// Token accounting for a trace. Terminal counts come from the event list,
/// in-flight from the final occupancy, so the two sources check each other.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CensusReport {
    pub created: u64,
    pub delivered: u64,
    pub destroyed: u64,
    pub stored: u64,
    pub in_flight: u64,
    /// Tokens with more than one terminal event.
    pub duplicate_terminals: Vec<TokenId>,
    /// Tokens with events but no creation event.
    pub orphans: Vec<TokenId>,
}

impl CensusReport {
    pub fn balanced(&self) -> bool {
        self.created == self.delivered + self.destroyed + self.stored + self.in_flight
            && self.duplicate_terminals.is_empty()
            && self.orphans.is_empty()
    }
}

pub fn census(trace: &Trace) -> CensusReport {
    let mut r = CensusReport {
        in_flight: trace.in_flight(),
        ..CensusReport::default()
    };
    let mut created = BTreeSet::new();
    let mut terminals: BTreeMap<TokenId, u32> = BTreeMap::new();
    for e in &trace.events {
        match e.kind {
            EventKind::Created { .. } => {
                r.created += 1;
                created.insert(e.token);
            }
            EventKind::Delivered => r.delivered += 1,
            EventKind::Destroyed { .. } => r.destroyed += 1,
            EventKind::Stored { .. } => r.stored += 1,
            _ => {}
        }
        if e.kind.is_terminal() {
            *terminals.entry(e.token).or_insert(0) += 1;
        }
    }
    r.duplicate_terminals = terminals
        .iter()
        .filter(|(_, n)| **n > 1)
        .map(|(t, _)| *t)
        .collect();
    r.orphans = trace
        .tokens()
        .into_iter()
        .filter(|t| !created.contains(t))
        .collect();
    r
}
