use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dsl::serialize;
use crate::model::{ArcId, Location, SchemeId, Stage, Substate, SystemModel};

use super::rng::XorShift64Star;
use super::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenId(pub u64);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    Injected,
    Noise,
    Triggered { parent: TokenId, arc: ArcId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DestroyReason {
    /// Held at release past the destroy-after deadline.
    Expired,
    /// Reached a dead end after triggering its successor.
    Transformed,
    /// A noise token leaving its channel.
    Noise,
    /// Consumed by a gateway.
    Used,
}

impl DestroyReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DestroyReason::Expired => "expired",
            DestroyReason::Transformed => "transformed",
            DestroyReason::Noise => "noise",
            DestroyReason::Used => "used",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            DestroyReason::Expired,
            DestroyReason::Transformed,
            DestroyReason::Noise,
            DestroyReason::Used,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Created { origin: Origin, payload: String },
    Moved { from: Location, to: Location },
    Triggered { arc: ArcId, child: TokenId },
    Stored { substate: Substate },
    Destroyed { reason: DestroyReason },
    Delivered,
    CorruptionApplied,
    ReturnedFromRelease { to: Stage },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Created { .. } => "created",
            EventKind::Moved { .. } => "moved",
            EventKind::Triggered { .. } => "triggered",
            EventKind::Stored { .. } => "stored",
            EventKind::Destroyed { .. } => "destroyed",
            EventKind::Delivered => "delivered",
            EventKind::CorruptionApplied => "corruption-applied",
            EventKind::ReturnedFromRelease { .. } => "returned-from-release",
        }
    }

    /// Stored, Destroyed and Delivered end a token's life.
    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            EventKind::Stored { .. } | EventKind::Destroyed { .. } | EventKind::Delivered
        )
    }
}

/// One trace entry. `at` is where the token is when the event happens; for
/// `Moved` that is the destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub time: u64,
    pub seq: u64,
    pub token: TokenId,
    pub at: Location,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub model_hash: String,
    pub seed: u64,
    pub params_hash: String,
    pub rng: String,
    pub horizon: u64,
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn model_hash(model: &SystemModel) -> String {
    sha256_hex(&serialize(model))
}

impl Fingerprint {
    pub fn of(scenario: &Scenario) -> Self {
        Self {
            model_hash: model_hash(&scenario.model),
            seed: scenario.seed,
            params_hash: sha256_hex(&scenario.to_fms()),
            rng: XorShift64Star::NAME.to_string(),
            horizon: scenario.horizon,
        }
    }
}

/// Complete record of a run: events plus where every live or stored token
/// ended up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub fingerprint: Fingerprint,
    pub events: Vec<Event>,
    /// Tokens still in flight at the horizon, per location.
    pub occupancy: BTreeMap<Location, u64>,
    /// Stored tokens per scheme and substate.
    pub stored: BTreeMap<(SchemeId, Substate), u64>,
}

impl Trace {
    pub fn in_flight(&self) -> u64 {
        self.occupancy.values().sum()
    }

    pub fn events_of(&self, token: TokenId) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.token == token)
    }

    pub fn tokens(&self) -> BTreeSet<TokenId> {
        self.events.iter().map(|e| e.token).collect()
    }

    /// Creation event of every token, keyed by id.
    pub fn origins(&self) -> BTreeMap<TokenId, (&Event, Origin)> {
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Created { origin, .. } => Some((e.token, (e, *origin))),
                _ => None,
            })
            .collect()
    }

    /// Chain of ancestors, nearest first, ending at a root (injected or noise) token.
    pub fn ancestors(&self, token: TokenId) -> Vec<TokenId> {
        let origins = self.origins();
        let mut out = Vec::new();
        let mut cur = token;
        while let Some((_, Origin::Triggered { parent, .. })) = origins.get(&cur) {
            if out.contains(parent) {
                break;
            }
            out.push(*parent);
            cur = *parent;
        }
        out
    }

    pub fn records(&self, model: &SystemModel) -> Vec<Record> {
        let mut out = vec![Record::Fingerprint(self.fingerprint.clone())];
        out.extend(
            self.events
                .iter()
                .map(|e| Record::Event(EventRecord::of(e, model))),
        );
        out.extend(self.occupancy.iter().map(|(loc, count)| Record::Occupancy {
            location: model.location_path(*loc),
            count: *count,
        }));
        out.extend(self.stored.iter().map(|((s, sub), count)| Record::Stored {
            scheme: model.scheme_path(*s).to_string(),
            substate: sub.as_str().to_string(),
            count: *count,
        }));
        out.push(Record::Summary(Summary::of(self)));
        out
    }

    /// Line-delimited JSON: one record per line.
    pub fn to_jsonl(&self, model: &SystemModel) -> String {
        let mut out = String::new();
        for r in self.records(model) {
            out.push_str(&serde_json::to_string(&r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    /// Reads a trace back. Paths are resolved against `model`, so a trace can
    /// only be read with the model it was produced from.
    pub fn from_jsonl(text: &str, model: &SystemModel) -> Result<Trace, TraceReadError> {
        let mut fingerprint = None;
        let mut events = Vec::new();
        let mut occupancy = BTreeMap::new();
        let mut stored = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| TraceReadError {
                line: line_no,
                message,
            };
            let rec: Record = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            match rec {
                Record::Fingerprint(f) => fingerprint = Some(f),
                Record::Event(e) => events.push(e.resolve(model).map_err(err)?),
                Record::Occupancy { location, count } => {
                    let loc = model
                        .find_location(&location)
                        .ok_or_else(|| err(format!("unknown location `{location}`")))?;
                    occupancy.insert(loc, count);
                }
                Record::Stored {
                    scheme,
                    substate,
                    count,
                } => {
                    let s = model
                        .find_scheme(&scheme)
                        .ok_or_else(|| err(format!("unknown scheme `{scheme}`")))?;
                    let sub = substate
                        .parse()
                        .map_err(|_| err(format!("unknown substate `{substate}`")))?;
                    stored.insert((s, sub), count);
                }
                Record::Summary(_) => {}
            }
        }
        Ok(Trace {
            fingerprint: fingerprint.ok_or(TraceReadError {
                line: 0,
                message: "no fingerprint record".into(),
            })?,
            events,
            occupancy,
            stored,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace line {line}: {message}")]
pub struct TraceReadError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub events: u64,
    pub tokens: u64,
    pub in_flight: u64,
    pub stored: u64,
}

impl Summary {
    fn of(t: &Trace) -> Self {
        Self {
            events: t.events.len() as u64,
            tokens: t.tokens().len() as u64,
            in_flight: t.in_flight(),
            stored: t.stored.values().sum(),
        }
    }
}

/// Serialized form of a trace line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
pub enum Record {
    Fingerprint(Fingerprint),
    Event(EventRecord),
    Occupancy {
        location: String,
        count: u64,
    },
    Stored {
        scheme: String,
        substate: String,
        count: u64,
    },
    Summary(Summary),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: u64,
    pub seq: u64,
    pub token: u64,
    pub kind: String,
    pub event: String,
    pub location: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arc: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
}

impl EventRecord {
    pub fn of(e: &Event, model: &SystemModel) -> Self {
        let mut r = EventRecord {
            time: e.time,
            seq: e.seq,
            token: e.token.0,
            kind: model.scheme_kind_name(e.at.scheme).to_string(),
            event: e.kind.name().to_string(),
            location: model.location_path(e.at),
            origin: None,
            parent: None,
            arc: None,
            payload: None,
            from: None,
            child: None,
            substate: None,
            reason: None,
            to: None,
        };
        match &e.kind {
            EventKind::Created { origin, payload } => {
                r.payload = Some(payload.clone());
                r.origin = Some(
                    match origin {
                        Origin::Injected => "injected",
                        Origin::Noise => "noise",
                        Origin::Triggered { parent, arc } => {
                            r.parent = Some(parent.0);
                            r.arc = Some(model.arc(*arc).key.clone());
                            "triggered"
                        }
                    }
                    .to_string(),
                );
            }
            EventKind::Moved { from, .. } => r.from = Some(model.location_path(*from)),
            EventKind::Triggered { arc, child } => {
                r.arc = Some(model.arc(*arc).key.clone());
                r.child = Some(child.0);
            }
            EventKind::Stored { substate } => r.substate = Some(substate.as_str().to_string()),
            EventKind::Destroyed { reason } => r.reason = Some(reason.as_str().to_string()),
            EventKind::ReturnedFromRelease { to } => r.to = Some(to.as_str().to_string()),
            EventKind::Delivered | EventKind::CorruptionApplied => {}
        }
        r
    }

    fn resolve(&self, model: &SystemModel) -> Result<Event, String> {
        let loc = |p: &str| {
            model
                .find_location(p)
                .ok_or_else(|| format!("unknown location `{p}`"))
        };
        let arc = |k: &Option<String>| {
            let k = k.as_deref().ok_or("missing `arc`")?;
            model
                .find_arc(k)
                .ok_or_else(|| format!("unknown arc `{k}`"))
        };
        fn need<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T, String> {
            v.as_ref().ok_or_else(|| format!("missing `{field}`"))
        }
        let at = loc(&self.location)?;
        let kind = match self.event.as_str() {
            "created" => {
                let origin = match need(&self.origin, "origin")?.as_str() {
                    "injected" => Origin::Injected,
                    "noise" => Origin::Noise,
                    "triggered" => Origin::Triggered {
                        parent: TokenId(*need(&self.parent, "parent")?),
                        arc: arc(&self.arc)?,
                    },
                    o => return Err(format!("unknown origin `{o}`")),
                };
                EventKind::Created {
                    origin,
                    payload: need(&self.payload, "payload")?.clone(),
                }
            }
            "moved" => EventKind::Moved {
                from: loc(need(&self.from, "from")?)?,
                to: at,
            },
            "triggered" => EventKind::Triggered {
                arc: arc(&self.arc)?,
                child: TokenId(*need(&self.child, "child")?),
            },
            "stored" => EventKind::Stored {
                substate: need(&self.substate, "substate")?
                    .parse()
                    .map_err(|_| "unknown substate".to_string())?,
            },
            "destroyed" => EventKind::Destroyed {
                reason: DestroyReason::parse(need(&self.reason, "reason")?)
                    .ok_or("unknown destroy reason")?,
            },
            "delivered" => EventKind::Delivered,
            "corruption-applied" => EventKind::CorruptionApplied,
            "returned-from-release" => EventKind::ReturnedFromRelease {
                to: need(&self.to, "to")?
                    .parse()
                    .map_err(|_| "unknown stage".to_string())?,
            },
            other => return Err(format!("unknown event `{other}`")),
        };
        Ok(Event {
            time: self.time,
            seq: self.seq,
            token: TokenId(self.token),
            at,
            kind,
        })
    }
}
