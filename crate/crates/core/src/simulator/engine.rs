//! Step loop.
//!
//! Each step `t` runs these phases in order; within a phase tokens are
//! visited by (scheme, stage, token id):
//!
//! 1. injections scheduled for `t`;
//! 2. one noise draw per noise source, creating a noise token at the
//!    scheme's create stage when `draw < rate`;
//! 3. advance: a token that has dwelt long enough takes the first usable arc
//!    of its route (or its only outgoing flow) if the target has room;
//! 4. release policy for tokens blocked at release;
//! 5. interference at the process stage of noise schemes;
//! 6. tokens that arrived this step fire their trigger arcs (the child
//!    appears at the trigger target and is handled from the next step);
//! 7. tokens that arrived this step at a stage without outgoing flows end:
//!    delivered at transfer, stored at receive/process/create, destroyed if
//!    they were transformed by a trigger or are channel noise.

use std::collections::BTreeMap;

use crate::model::{ArcId, KindId, Location, SchemeId, Stage, Substate, SystemModel};
use crate::validator::{validate, Severity};

use super::rng::XorShift64Star;
use super::scenario::{LinkState, ReleasePolicy, Scenario};
use super::trace::{DestroyReason, Event, EventKind, Fingerprint, Origin, TokenId, Trace};
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    At(Location),
    Stored(SchemeId, Substate),
}

/// A flowthing instance. Its kind is always the kind of the scheme it sits in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: TokenId,
    pub kind: KindId,
    pub position: Position,
    pub payload: String,
    pub corrupted: bool,
    pub lineage: Option<TokenId>,
}

/// Corrupts `token` when noise shares its process stage and the draw falls
/// under the threshold. Corruption is sticky and passes to every child.
pub fn interfere(mut token: Token, noise_present: bool, draw: f64, threshold: f64) -> Token {
    if noise_present && draw < threshold {
        token.corrupted = true;
    }
    token
}

#[derive(Debug)]
struct Live {
    token: Token,
    loc: Location,
    noise: bool,
    /// Step from which dwell time is counted.
    entered: u64,
    /// Step whose trigger and terminal phases handle this arrival.
    arrival: u64,
    arrival_done: bool,
    fired: bool,
    fired_gateway: bool,
    prev: Option<Stage>,
    blocked: bool,
    parked: bool,
    alive: bool,
}

struct Engine<'a> {
    s: &'a Scenario,
    m: &'a SystemModel,
    rng: XorShift64Star,
    tokens: Vec<Live>,
    events: Vec<Event>,
    occupancy: BTreeMap<Location, u64>,
    stored: BTreeMap<(SchemeId, Substate), u64>,
}

impl<'a> Engine<'a> {
    fn emit(&mut self, time: u64, token: TokenId, at: Location, kind: EventKind) {
        let seq = self.events.len() as u64;
        self.events.push(Event {
            time,
            seq,
            token,
            at,
            kind,
        });
    }

    fn live(&mut self, id: TokenId) -> &mut Live {
        &mut self.tokens[(id.0 - 1) as usize]
    }

    fn occupy(&mut self, loc: Location, delta: i64) {
        let e = self.occupancy.entry(loc).or_insert(0);
        *e = (*e as i64 + delta) as u64;
        if *e == 0 {
            self.occupancy.remove(&loc);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn create(
        &mut self,
        t: u64,
        at: Location,
        origin: Origin,
        payload: String,
        corrupted: bool,
        noise: bool,
        start: u64,
    ) -> TokenId {
        let id = TokenId(self.tokens.len() as u64 + 1);
        let lineage = match origin {
            Origin::Triggered { parent, .. } => Some(parent),
            _ => None,
        };
        self.tokens.push(Live {
            token: Token {
                id,
                kind: self.m.scheme(at.scheme).kind,
                position: Position::At(at),
                payload: payload.clone(),
                corrupted,
                lineage,
            },
            loc: at,
            noise,
            entered: start,
            arrival: start,
            arrival_done: false,
            fired: false,
            fired_gateway: false,
            prev: None,
            blocked: false,
            parked: false,
            alive: true,
        });
        self.occupy(at, 1);
        self.emit(t, id, at, EventKind::Created { origin, payload });
        id
    }

    fn sorted(&self, keep: impl Fn(&Live) -> bool) -> Vec<TokenId> {
        let mut ids: Vec<(Location, TokenId)> = self
            .tokens
            .iter()
            .filter(|l| l.alive && keep(l))
            .map(|l| (l.loc, l.token.id))
            .collect();
        ids.sort();
        ids.into_iter().map(|(_, id)| id).collect()
    }

    /// A dead end: transfer with triggers that are all broken.
    fn dead_transfer(&self, loc: Location) -> bool {
        loc.stage == Stage::Transfer && self.m.outgoing_flows(loc).next().is_none() && {
            let mut triggers = self.m.outgoing_triggers(loc).peekable();
            triggers.peek().is_some() && triggers.all(|a| self.s.link(a) == LinkState::Broken)
        }
    }

    fn usable(&self, arc: ArcId) -> bool {
        self.s.link(arc) == LinkState::Up && !self.dead_transfer(self.m.arc(arc).target)
    }

    fn has_room(&self, loc: Location) -> bool {
        match self.m.scheme(loc.scheme).capacity {
            Some(c) => self.occupancy.get(&loc).copied().unwrap_or(0) < c as u64,
            None => true,
        }
    }

    fn candidates(&self, loc: Location) -> Vec<ArcId> {
        match self.s.routing.get(&loc) {
            Some(route) => route.clone(),
            None => self.m.outgoing_flows(loc).collect(),
        }
    }

    fn advance(&mut self, t: u64) {
        let ids = self.sorted(|l| !l.parked && !l.blocked && l.arrival < t);
        for id in ids {
            let (loc, entered) = {
                let l = self.live(id);
                (l.loc, l.entered)
            };
            if t < entered + self.s.dwell_at(loc) {
                continue;
            }
            let arcs = self.candidates(loc);
            if arcs.is_empty() {
                continue;
            }
            let usable: Vec<ArcId> = arcs.iter().copied().filter(|&a| self.usable(a)).collect();
            if usable.is_empty() {
                if loc.stage == Stage::Release {
                    self.live(id).blocked = true;
                }
                continue;
            }
            let Some(arc) = usable
                .into_iter()
                .find(|&a| self.has_room(self.m.arc(a).target))
            else {
                continue;
            };
            let to = self.m.arc(arc).target;
            self.occupy(loc, -1);
            self.occupy(to, 1);
            let l = self.live(id);
            l.prev = (to.scheme == loc.scheme).then_some(loc.stage);
            l.loc = to;
            l.token.position = Position::At(to);
            l.entered = t;
            l.arrival = t;
            l.arrival_done = false;
            l.fired = false;
            l.fired_gateway = false;
            self.emit(t, id, to, EventKind::Moved { from: loc, to });
        }
    }

    /// Stage a blocked token falls back to: the one it was released from, or
    /// the first of receive/process/create its scheme has.
    fn prior_stage(&self, id: TokenId) -> Option<Stage> {
        let l = &self.tokens[(id.0 - 1) as usize];
        let scheme = self.m.scheme(l.loc.scheme);
        l.prev.filter(|p| p.storage().is_some()).or_else(|| {
            [Stage::Receive, Stage::Process, Stage::Create]
                .into_iter()
                .find(|s| scheme.has_stage(*s))
        })
    }

    fn release_policy(&mut self, t: u64) {
        for id in self.sorted(|l| l.blocked) {
            let (loc, entered) = {
                let l = self.live(id);
                (l.loc, l.entered)
            };
            match self.s.release_policy {
                ReleasePolicy::Return => {
                    let Some(prior) = self.prior_stage(id) else {
                        continue;
                    };
                    let to = Location::new(loc.scheme, prior);
                    self.occupy(loc, -1);
                    self.occupy(to, 1);
                    let l = self.live(id);
                    l.blocked = false;
                    l.parked = true;
                    l.loc = to;
                    l.token.position = Position::At(to);
                    self.emit(t, id, to, EventKind::ReturnedFromRelease { to: prior });
                }
                ReleasePolicy::StoreIndefinitely => {
                    let Some(prior) = self.prior_stage(id) else {
                        continue;
                    };
                    let substate = prior.storage().expect("prior stage has storage");
                    self.store(t, id, substate);
                }
                ReleasePolicy::DestroyAfter(k) => {
                    if t >= entered + k {
                        self.destroy(t, id, DestroyReason::Expired);
                    }
                }
            }
        }
    }

    fn retire(&mut self, id: TokenId) -> Location {
        let l = self.live(id);
        l.alive = false;
        l.blocked = false;
        let loc = l.loc;
        self.occupy(loc, -1);
        loc
    }

    fn store(&mut self, t: u64, id: TokenId, substate: Substate) {
        let loc = self.retire(id);
        let at = Location::new(loc.scheme, substate.stage());
        self.live(id).token.position = Position::Stored(loc.scheme, substate);
        *self.stored.entry((loc.scheme, substate)).or_insert(0) += 1;
        self.emit(t, id, at, EventKind::Stored { substate });
    }

    fn destroy(&mut self, t: u64, id: TokenId, reason: DestroyReason) {
        let loc = self.retire(id);
        self.emit(t, id, loc, EventKind::Destroyed { reason });
    }

    fn interference(&mut self, t: u64) {
        for n in &self.s.noise {
            let loc = Location::new(n.scheme, Stage::Process);
            if !self.m.scheme(n.scheme).has_stage(Stage::Process) {
                continue;
            }
            let noise_present = self
                .tokens
                .iter()
                .any(|l| l.alive && l.noise && l.loc == loc);
            if !noise_present {
                continue;
            }
            let victims =
                self.sorted(|l| l.loc == loc && l.arrival == t && !l.noise && !l.token.corrupted);
            for id in victims {
                let draw = self.rng.next_f64();
                let l = self.live(id);
                l.token = interfere(l.token.clone(), noise_present, draw, n.threshold);
                if l.token.corrupted {
                    self.emit(t, id, loc, EventKind::CorruptionApplied);
                }
            }
        }
    }

    fn arrivals(&mut self, t: u64) {
        let ids = self.sorted(|l| l.arrival == t && !l.arrival_done);
        for &id in &ids {
            let (loc, noise, corrupted, payload) = {
                let l = self.live(id);
                (l.loc, l.noise, l.token.corrupted, l.token.payload.clone())
            };
            if noise && !self.s.noise_delivery {
                continue;
            }
            let triggers: Vec<ArcId> = self
                .m
                .outgoing_triggers(loc)
                .filter(|&a| self.s.link(a) == LinkState::Up)
                .collect();
            for arc in triggers {
                let target = self.m.arc(arc).target;
                let child_id = TokenId(self.tokens.len() as u64 + 1);
                self.emit(
                    t,
                    id,
                    loc,
                    EventKind::Triggered {
                        arc,
                        child: child_id,
                    },
                );
                let origin = Origin::Triggered { parent: id, arc };
                self.create(
                    t,
                    target,
                    origin,
                    payload.clone(),
                    corrupted || noise,
                    false,
                    t + 1,
                );
                let gateway = self.m.arc(arc).gateway;
                let l = self.live(id);
                l.fired = true;
                l.fired_gateway |= gateway;
            }
        }
        for id in ids {
            let (loc, noise, fired, fired_gateway) = {
                let l = self.live(id);
                l.arrival_done = true;
                (l.loc, l.noise, l.fired, l.fired_gateway)
            };
            if fired_gateway && self.s.gateway_consumes {
                self.destroy(t, id, DestroyReason::Used);
                continue;
            }
            if self.m.outgoing_flows(loc).next().is_some() {
                continue;
            }
            if noise && !self.s.noise_delivery {
                self.destroy(t, id, DestroyReason::Noise);
            } else if fired {
                self.destroy(t, id, DestroyReason::Transformed);
            } else if self.m.outgoing_triggers(loc).next().is_some() {
                // Every trigger is broken: the token waits where it is.
            } else if let Some(substate) = loc.stage.storage() {
                self.store(t, id, substate);
            } else if loc.stage == Stage::Transfer {
                let loc = self.retire(id);
                self.emit(t, id, loc, EventKind::Delivered);
            } else {
                self.live(id).blocked = true;
            }
        }
    }

    fn step(&mut self, t: u64) {
        for inj in self.s.injections.iter().filter(|i| i.time == t) {
            self.create(
                t,
                inj.at,
                Origin::Injected,
                inj.payload.clone(),
                false,
                false,
                t,
            );
        }
        for n in &self.s.noise {
            if self.rng.next_f64() < n.rate {
                let at = Location::new(n.scheme, Stage::Create);
                self.create(t, at, Origin::Noise, "noise".into(), false, true, t);
            }
        }
        self.advance(t);
        self.release_policy(t);
        self.interference(t);
        self.arrivals(t);
    }
}

/// Runs a scenario to its horizon.
pub fn run(scenario: &Scenario) -> Result<Trace, SimError> {
    let m = &*scenario.model;
    let mut problems: Vec<String> = validate(m, scenario.profile)
        .iter()
        .filter(|v| v.severity == Severity::Error)
        .map(|v| v.render(m))
        .collect();
    problems.extend(scenario.check());
    if !problems.is_empty() {
        return Err(SimError::InvalidScenario(problems));
    }
    let mut engine = Engine {
        s: scenario,
        m,
        rng: XorShift64Star::new(scenario.seed),
        tokens: Vec::new(),
        events: Vec::new(),
        occupancy: BTreeMap::new(),
        stored: BTreeMap::new(),
    };
    for t in 0..scenario.horizon {
        engine.step(t);
    }
    Ok(Trace {
        fingerprint: Fingerprint::of(scenario),
        events: engine.events,
        occupancy: engine.occupancy,
        stored: engine.stored,
    })
}
