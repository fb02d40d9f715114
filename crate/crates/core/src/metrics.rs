//! Information measures and trace-derived counts.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::simulator::{EventKind, Origin, TokenId, Trace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("sign count N must be at least 1, got {0}")]
    SignCount(u64),
    #[error("vocabulary size S must be at least 1, got {0}")]
    Vocabulary(u64),
    #[error("choice count C must be at least 1, got {0}")]
    Choices(u64),
    #[error("logarithm base must be a finite number above 1, got {0}")]
    Base(f64),
}

fn log(x: u64, base: f64) -> f64 {
    let x = x as f64;
    if base == 2.0 {
        x.log2()
    } else if base == 10.0 {
        x.log10()
    } else {
        x.ln() / base.ln()
    }
}

/// `I = N log_base S`: information carried by `n` signs over a vocabulary of `s`.
pub fn hartley(n: u64, s: u64, base: f64) -> Result<f64, DomainError> {
    if n < 1 {
        return Err(DomainError::SignCount(n));
    }
    if s < 1 {
        return Err(DomainError::Vocabulary(s));
    }
    if !(base.is_finite() && base > 1.0) {
        return Err(DomainError::Base(base));
    }
    Ok(n as f64 * log(s, base))
}

/// `I = log2 C` bits for `c` equally likely choices.
pub fn shannon_choices(c: u64) -> Result<f64, DomainError> {
    if c < 1 {
        return Err(DomainError::Choices(c));
    }
    Ok(log(c, 2.0))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TraceMetrics {
    pub created: u64,
    pub delivered: u64,
    pub destroyed: u64,
    pub stored: u64,
    pub in_flight: u64,
    pub corrupted_delivered: u64,
    /// Mean steps from the root token's creation to delivery; 0 without deliveries.
    pub mean_latency: f64,
    pub noise_created: u64,
}

/// Counts taken from the event list alone.
pub fn trace_metrics(trace: &Trace) -> TraceMetrics {
    let mut m = TraceMetrics::default();
    let mut corrupted: BTreeSet<TokenId> = BTreeSet::new();
    let mut noise: BTreeSet<TokenId> = BTreeSet::new();
    // token -> creation time of its root ancestor
    let mut root_time: BTreeMap<TokenId, u64> = BTreeMap::new();
    let mut latency_sum = 0u64;
    for e in &trace.events {
        match &e.kind {
            EventKind::Created { origin, .. } => {
                m.created += 1;
                match origin {
                    Origin::Injected => {
                        root_time.insert(e.token, e.time);
                    }
                    Origin::Noise => {
                        m.noise_created += 1;
                        noise.insert(e.token);
                        root_time.insert(e.token, e.time);
                    }
                    Origin::Triggered { parent, .. } => {
                        let root = root_time.get(parent).copied().unwrap_or(e.time);
                        root_time.insert(e.token, root);
                        if corrupted.contains(parent) || noise.contains(parent) {
                            corrupted.insert(e.token);
                        }
                    }
                }
            }
            EventKind::CorruptionApplied => {
                corrupted.insert(e.token);
            }
            EventKind::Delivered => {
                m.delivered += 1;
                if corrupted.contains(&e.token) {
                    m.corrupted_delivered += 1;
                }
                latency_sum += e.time - root_time.get(&e.token).copied().unwrap_or(e.time);
            }
            EventKind::Destroyed { .. } => m.destroyed += 1,
            EventKind::Stored { .. } => m.stored += 1,
            _ => {}
        }
    }
    m.in_flight = m
        .created
        .saturating_sub(m.delivered + m.destroyed + m.stored);
    if m.delivered > 0 {
        m.mean_latency = latency_sum as f64 / m.delivered as f64;
    }
    m
}
