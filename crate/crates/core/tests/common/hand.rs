//! Runs traced by hand on the shannon-fm corpus entry.

use flowmodel::corpus::corpus_get;
use flowmodel::simulator::{EventKind, LinkState, ReleasePolicy, Scenario, Trace};

/// `time token event location` per line, the way the runs were traced by hand.
pub fn compact(trace: &Trace, scenario: &Scenario) -> Vec<String> {
    let m = &scenario.model;
    trace
        .events
        .iter()
        .map(|e| {
            let extra = match &e.kind {
                EventKind::Destroyed { reason } => format!(" {}", reason.as_str()),
                EventKind::Stored { substate } => format!(" {}", substate.as_str()),
                EventKind::ReturnedFromRelease { to } => format!(" {to}"),
                EventKind::Triggered { child, .. } => format!(" {child}"),
                _ => String::new(),
            };
            format!(
                "{} {} {}{} {}",
                e.time,
                e.token,
                e.kind.name(),
                extra,
                m.location_path(e.at)
            )
        })
        .collect()
}

pub const SHANNON_PREFIX: &[&str] = &[
    "0 #1 created source.info.create",
    "1 #1 moved source.info.process",
    "2 #1 moved source.info.release",
    "3 #1 moved source.info.transfer",
    "3 #1 triggered #2 source.info.transfer",
    "3 #2 created source.signal.create",
    "3 #1 destroyed transformed source.info.transfer",
    "5 #2 moved source.signal.process",
    "6 #2 moved source.signal.release",
    "7 #2 moved source.signal.transfer",
    "7 #2 triggered #3 source.signal.transfer",
    "7 #3 created channel.phys.receive",
    "7 #2 destroyed transformed source.signal.transfer",
    "9 #3 moved channel.phys.process",
    "10 #3 moved channel.phys.release",
];

pub const SHANNON_REST: &[&str] = &[
    "11 #3 moved channel.phys.transfer",
    "11 #3 triggered #4 channel.phys.transfer",
    "11 #4 created destination.signal.receive",
    "11 #3 destroyed transformed channel.phys.transfer",
    "13 #4 moved destination.signal.process",
    "14 #4 moved destination.signal.release",
    "15 #4 moved destination.signal.transfer",
    "15 #4 triggered #5 destination.signal.transfer",
    "15 #5 created destination.info.receive",
    "15 #4 destroyed transformed destination.signal.transfer",
    "17 #5 moved destination.info.process",
    "18 #5 moved destination.info.release",
    "19 #5 moved destination.info.transfer",
    "19 #5 delivered destination.info.transfer",
];

pub fn shannon() -> Scenario {
    corpus_get("shannon-fm").unwrap().1
}

/// shannon-fm with the channel-to-destination trigger broken.
pub fn broken(policy: ReleasePolicy) -> Scenario {
    let mut s = shannon();
    let arc = s
        .model
        .find_arc("channel.phys.transfer~>destination.signal.receive")
        .unwrap();
    s.links.insert(arc, LinkState::Broken);
    s.release_policy = policy;
    s
}

/// The full expected event list for each release policy on the broken run.
pub fn broken_expectations() -> Vec<(ReleasePolicy, Vec<String>, u64)> {
    [
        (
            ReleasePolicy::Return,
            "11 #3 returned-from-release process channel.phys.process",
            1,
        ),
        (
            ReleasePolicy::StoreIndefinitely,
            "11 #3 stored stored-at-process channel.phys.process",
            0,
        ),
        (
            ReleasePolicy::DestroyAfter(3),
            "13 #3 destroyed expired channel.phys.release",
            0,
        ),
    ]
    .into_iter()
    .map(|(p, last, in_flight)| {
        let mut v: Vec<String> = SHANNON_PREFIX.iter().map(|l| l.to_string()).collect();
        v.push(last.to_string());
        (p, v, in_flight)
    })
    .collect()
}

pub fn shannon_expected() -> Vec<String> {
    SHANNON_PREFIX
        .iter()
        .chain(SHANNON_REST)
        .map(|l| l.to_string())
        .collect()
}
