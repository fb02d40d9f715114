//! Deterministic discrete-step execution of a flow system.
//!
//! Given the same model and [`Scenario`], [`run`] produces the same
//! [`Trace`] byte for byte; all randomness comes from one seeded
//! xorshift64* stream.

mod census;
mod engine;
mod rng;
mod scenario;
mod trace;

use thiserror::Error;

pub use census::{census, CensusReport};
pub use engine::{interfere, run, Position, Token};
pub use rng::XorShift64Star;
pub use scenario::{
    FmsSyntaxError, Injection, LinkState, NoiseSource, ReleasePolicy, Scenario, ScenarioSpec,
};
pub use trace::{
    model_hash, DestroyReason, Event, EventKind, EventRecord, Fingerprint, Origin, Record, Summary,
    TokenId, Trace, TraceReadError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),
    #[error("trace fingerprint does not match: expected model {expected}, found {found}")]
    FingerprintMismatch { expected: String, found: String },
}

/// Re-runs `scenario` and compares event lists. The trace must come from the
/// same model; a different seed or parameter set simply replays differently.
pub fn replay_check(scenario: &Scenario, trace: &Trace) -> Result<bool, SimError> {
    let expected = model_hash(&scenario.model);
    if trace.fingerprint.model_hash != expected {
        return Err(SimError::FingerprintMismatch {
            expected,
            found: trace.fingerprint.model_hash.clone(),
        });
    }
    Ok(run(scenario)?.events == trace.events)
}
