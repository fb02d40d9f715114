//! Scenario sidecar files (`.fms`).
//!
//! One `key: value` per line, `#` comments, blank lines ignored:
//!
//! ```text
//! seed: 42
//! horizon: 50
//! release_policy: destroy_after 3      # or: return | store
//! inject: 0 source.info.create "msg"   # time, location, payload
//! noise: channel.phys 0.05 0.5         # scheme, rate, optional threshold (default 1)
//! link: channel.phys.transfer~>destination.signal.receive broken
//! route: company.info.transfer company.info.transfer->dept2.info.receive
//! dwell: channel.phys.process 2
//! noise_delivery: false
//! gateway_consumes: false
//! profile: strict
//! ```
//!
//! Parsing yields an unresolved [`ScenarioSpec`]; [`ScenarioSpec::resolve`]
//! binds names against a model and checks the scenario invariants.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::dsl::quote;
use crate::model::{ArcClass, ArcId, Location, SchemeId, Stage, SystemModel};
use crate::validator::StrictnessProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReleasePolicy {
    /// Send the blocked token back to the stage it was released from.
    #[default]
    Return,
    StoreIndefinitely,
    /// Destroy the token `k` steps after it entered release.
    DestroyAfter(u64),
}

impl fmt::Display for ReleasePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReleasePolicy::Return => f.write_str("return"),
            ReleasePolicy::StoreIndefinitely => f.write_str("store"),
            ReleasePolicy::DestroyAfter(k) => write!(f, "destroy_after {k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub enum LinkState {
    #[default]
    Up,
    Broken,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub time: u64,
    pub at: Location,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSource {
    pub scheme: SchemeId,
    pub rate: f64,
    /// Interference threshold at the scheme's process stage.
    pub threshold: f64,
}

/// A runnable scenario bound to a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: Arc<SystemModel>,
    pub seed: u64,
    pub horizon: u64,
    pub injections: Vec<Injection>,
    pub noise: Vec<NoiseSource>,
    pub links: BTreeMap<ArcId, LinkState>,
    pub release_policy: ReleasePolicy,
    pub routing: BTreeMap<Location, Vec<ArcId>>,
    pub dwell: BTreeMap<Location, u64>,
    pub noise_delivery: bool,
    pub gateway_consumes: bool,
    pub profile: StrictnessProfile,
}

impl Scenario {
    pub fn new(model: Arc<SystemModel>) -> Self {
        Self {
            model,
            seed: 0,
            horizon: 0,
            injections: Vec::new(),
            noise: Vec::new(),
            links: BTreeMap::new(),
            release_policy: ReleasePolicy::default(),
            routing: BTreeMap::new(),
            dwell: BTreeMap::new(),
            noise_delivery: false,
            gateway_consumes: false,
            profile: StrictnessProfile::Strict,
        }
    }

    pub fn link(&self, arc: ArcId) -> LinkState {
        self.links.get(&arc).copied().unwrap_or_default()
    }

    pub fn dwell_at(&self, loc: Location) -> u64 {
        self.dwell.get(&loc).copied().unwrap_or(1)
    }

    pub fn noise_for(&self, scheme: SchemeId) -> Option<&NoiseSource> {
        self.noise.iter().find(|n| n.scheme == scheme)
    }

    /// Scenario invariants; every problem is reported, not just the first.
    pub fn check(&self) -> Vec<String> {
        let m = &*self.model;
        let mut problems = Vec::new();
        for inj in &self.injections {
            if inj.at.scheme.0 as usize >= m.schemes().len()
                || !m.scheme(inj.at.scheme).has_stage(inj.at.stage)
            {
                problems.push("injection target is not in the model".to_string());
            }
        }
        for n in &self.noise {
            let path = m.scheme_path(n.scheme);
            if !(0.0..=1.0).contains(&n.rate) {
                problems.push(format!(
                    "noise rate {} for `{path}` is outside [0, 1]",
                    n.rate
                ));
            }
            if !(0.0..=1.0).contains(&n.threshold) {
                problems.push(format!(
                    "noise threshold {} for `{path}` is outside [0, 1]",
                    n.threshold
                ));
            }
            if !m.scheme(n.scheme).has_stage(Stage::Create) {
                problems.push(format!("noise scheme `{path}` has no create stage"));
            }
        }
        if self
            .noise
            .iter()
            .enumerate()
            .any(|(i, n)| self.noise[..i].iter().any(|o| o.scheme == n.scheme))
        {
            problems.push("a scheme has more than one noise entry".to_string());
        }
        if let ReleasePolicy::DestroyAfter(0) = self.release_policy {
            problems.push("destroy_after needs at least 1 step".to_string());
        }
        for (loc, arcs) in &self.routing {
            for &a in arcs {
                let arc = m.arc(a);
                if arc.class != ArcClass::Flow || arc.source != *loc {
                    problems.push(format!(
                        "route for `{}` lists `{}`, which is not a flow leaving it",
                        m.location_path(*loc),
                        arc.key
                    ));
                }
            }
        }
        for (loc, d) in &self.dwell {
            if *d == 0 {
                problems.push(format!(
                    "dwell at `{}` must be at least 1",
                    m.location_path(*loc)
                ));
            }
        }
        for sid in m.scheme_ids() {
            for &stage in &m.scheme(sid).stages {
                let loc = Location::new(sid, stage);
                if m.outgoing_flows(loc).nth(1).is_some() && !self.routing.contains_key(&loc) {
                    problems.push(format!(
                        "`{}` has several outgoing flows and no route entry",
                        m.location_path(loc)
                    ));
                }
            }
        }
        problems
    }

    /// Canonical `.fms` text. Two scenarios with equal parameters give equal text.
    pub fn to_fms(&self) -> String {
        let m = &*self.model;
        let mut out = String::new();
        out.push_str(&format!("seed: {}\nhorizon: {}\n", self.seed, self.horizon));
        out.push_str(&format!("profile: {}\n", self.profile));
        out.push_str(&format!("release_policy: {}\n", self.release_policy));
        out.push_str(&format!("noise_delivery: {}\n", self.noise_delivery));
        out.push_str(&format!("gateway_consumes: {}\n", self.gateway_consumes));
        for i in &self.injections {
            out.push_str(&format!(
                "inject: {} {} {}\n",
                i.time,
                m.location_path(i.at),
                quote(&i.payload)
            ));
        }
        for n in &self.noise {
            out.push_str(&format!(
                "noise: {} {:?} {:?}\n",
                m.scheme_path(n.scheme),
                n.rate,
                n.threshold
            ));
        }
        for (a, state) in &self.links {
            let s = match state {
                LinkState::Up => "up",
                LinkState::Broken => "broken",
            };
            out.push_str(&format!("link: {} {s}\n", m.arc(*a).key));
        }
        for (loc, arcs) in &self.routing {
            let keys: Vec<&str> = arcs.iter().map(|a| m.arc(*a).key.as_str()).collect();
            out.push_str(&format!(
                "route: {} {}\n",
                m.location_path(*loc),
                keys.join(" ")
            ));
        }
        for (loc, d) in &self.dwell {
            out.push_str(&format!("dwell: {} {d}\n", m.location_path(*loc)));
        }
        out
    }
}

/// Syntax error in a `.fms` file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FmsSyntaxError {
    pub line: usize,
    pub message: String,
}

/// Name-level scenario, not yet bound to a model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioSpec {
    pub seed: Option<u64>,
    pub horizon: Option<u64>,
    pub release_policy: Option<ReleasePolicy>,
    pub injections: Vec<(u64, String, String)>,
    pub noise: Vec<(String, f64, f64)>,
    pub links: Vec<(String, LinkState)>,
    pub routes: Vec<(String, Vec<String>)>,
    pub dwell: Vec<(String, u64)>,
    pub noise_delivery: Option<bool>,
    pub gateway_consumes: Option<bool>,
    pub profile: Option<StrictnessProfile>,
}

fn split_words(line: &str) -> Result<Vec<String>, String> {
    let mut words = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        let Some(&c) = chars.peek() else { break };
        if c == '#' {
            break;
        }
        let mut w = String::new();
        if c == '"' {
            chars.next();
            loop {
                match chars.next() {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some('n') => w.push('\n'),
                        Some('t') => w.push('\t'),
                        Some('"') => w.push('"'),
                        Some('\\') => w.push('\\'),
                        _ => return Err("invalid escape in string".into()),
                    },
                    Some(c) => w.push(c),
                }
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || c == '#' {
                    break;
                }
                w.push(c);
                chars.next();
            }
        }
        words.push(w);
    }
    Ok(words)
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("invalid {what} `{s}`"))
}

fn boolean(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, found `{s}`")),
    }
}

fn arity(words: &[String], min: usize, max: usize, key: &str) -> Result<(), String> {
    if words.len() < min || words.len() > max {
        let want = if min == max {
            format!("{min}")
        } else {
            format!("{min} to {max}")
        };
        return Err(format!(
            "`{key}` takes {want} value(s), found {}",
            words.len()
        ));
    }
    Ok(())
}

impl ScenarioSpec {
    pub fn parse(text: &str) -> Result<Self, FmsSyntaxError> {
        let mut spec = ScenarioSpec::default();
        for (i, raw) in text.lines().enumerate() {
            spec.parse_line(raw).map_err(|message| FmsSyntaxError {
                line: i + 1,
                message,
            })?;
        }
        Ok(spec)
    }

    fn parse_line(&mut self, raw: &str) -> Result<(), String> {
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            return Ok(());
        }
        let (key, rest) = trimmed
            .split_once(':')
            .ok_or_else(|| "expected `key: value`".to_string())?;
        let key = key.trim();
        let w = split_words(rest)?;
        match key {
            "seed" => {
                arity(&w, 1, 1, key)?;
                self.seed = Some(num(&w[0], "seed")?);
            }
            "horizon" => {
                arity(&w, 1, 1, key)?;
                self.horizon = Some(num(&w[0], "horizon")?);
            }
            "release_policy" => {
                arity(&w, 1, 2, key)?;
                self.release_policy = Some(match (w[0].as_str(), w.get(1)) {
                    ("return", None) => ReleasePolicy::Return,
                    ("store", None) => ReleasePolicy::StoreIndefinitely,
                    ("destroy_after", Some(k)) => {
                        ReleasePolicy::DestroyAfter(num(k, "step count")?)
                    }
                    _ => {
                        return Err(
                            "release_policy is `return`, `store` or `destroy_after N`".into()
                        )
                    }
                });
            }
            "inject" => {
                arity(&w, 2, 3, key)?;
                let payload = w.get(2).cloned().unwrap_or_else(|| "msg".into());
                self.injections
                    .push((num(&w[0], "time")?, w[1].clone(), payload));
            }
            "noise" => {
                arity(&w, 2, 3, key)?;
                let threshold = match w.get(2) {
                    Some(t) => num(t, "threshold")?,
                    None => 1.0,
                };
                self.noise
                    .push((w[0].clone(), num(&w[1], "rate")?, threshold));
            }
            "link" => {
                arity(&w, 2, 2, key)?;
                let state = match w[1].as_str() {
                    "up" => LinkState::Up,
                    "broken" => LinkState::Broken,
                    other => {
                        return Err(format!("link state is `up` or `broken`, found `{other}`"))
                    }
                };
                self.links.push((w[0].clone(), state));
            }
            "route" => {
                arity(&w, 2, usize::MAX, key)?;
                self.routes.push((w[0].clone(), w[1..].to_vec()));
            }
            "dwell" => {
                arity(&w, 2, 2, key)?;
                self.dwell.push((w[0].clone(), num(&w[1], "dwell")?));
            }
            "noise_delivery" => {
                arity(&w, 1, 1, key)?;
                self.noise_delivery = Some(boolean(&w[0])?);
            }
            "gateway_consumes" => {
                arity(&w, 1, 1, key)?;
                self.gateway_consumes = Some(boolean(&w[0])?);
            }
            "profile" => {
                arity(&w, 1, 1, key)?;
                self.profile = Some(w[0].parse()?);
            }
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Binds names against `model` and checks scenario invariants.
    pub fn resolve(&self, model: Arc<SystemModel>) -> Result<Scenario, Vec<String>> {
        let m = &*model;
        let mut problems = Vec::new();
        let loc = |path: &str, problems: &mut Vec<String>| {
            let l = m.find_location(path);
            if l.is_none() {
                problems.push(format!("unknown location `{path}`"));
            }
            l
        };
        let mut injections = Vec::new();
        for (time, at, payload) in &self.injections {
            if let Some(at) = loc(at, &mut problems) {
                injections.push(Injection {
                    time: *time,
                    at,
                    payload: payload.clone(),
                });
            }
        }
        let mut routing = BTreeMap::new();
        for (at, arcs) in &self.routes {
            let at = loc(at, &mut problems);
            let mut ids = Vec::new();
            for key in arcs {
                match m.find_arc(key) {
                    Some(a) => ids.push(a),
                    None => problems.push(format!("unknown arc `{key}`")),
                }
            }
            if let Some(at) = at {
                if routing.insert(at, ids).is_some() {
                    problems.push(format!("duplicate route for `{}`", m.location_path(at)));
                }
            }
        }
        let mut dwell = BTreeMap::new();
        for (at, d) in &self.dwell {
            if let Some(at) = loc(at, &mut problems) {
                dwell.insert(at, *d);
            }
        }
        let mut noise = Vec::new();
        for (scheme, rate, threshold) in &self.noise {
            match m.find_scheme(scheme) {
                Some(s) => noise.push(NoiseSource {
                    scheme: s,
                    rate: *rate,
                    threshold: *threshold,
                }),
                None => problems.push(format!("unknown scheme `{scheme}`")),
            }
        }
        noise.sort_by_key(|n| n.scheme);
        let mut links = BTreeMap::new();
        for (key, state) in &self.links {
            match m.find_arc(key) {
                Some(a) => {
                    links.insert(a, *state);
                }
                None => problems.push(format!("unknown arc `{key}`")),
            }
        }
        let scenario = Scenario {
            seed: self.seed.unwrap_or(0),
            horizon: self.horizon.unwrap_or(100),
            injections,
            noise,
            links,
            release_policy: self.release_policy.unwrap_or_default(),
            routing,
            dwell,
            noise_delivery: self.noise_delivery.unwrap_or(false),
            gateway_consumes: self.gateway_consumes.unwrap_or(false),
            profile: self.profile.unwrap_or_default(),
            model: model.clone(),
        };
        problems.extend(scenario.check());
        if problems.is_empty() {
            Ok(scenario)
        } else {
            Err(problems)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::load;

    fn model() -> Arc<SystemModel> {
        Arc::new(
            load(
                "kind k\nsphere a { scheme x: k { stages: create process release transfer } }\n\
                 sphere b { scheme x: k { stages: receive } }\n\
                 sphere c { scheme x: k { stages: receive } }\n\
                 flow a.x.create -> a.x.process\nflow a.x.process -> a.x.release\n\
                 flow a.x.release -> a.x.transfer\nflow a.x.transfer -> b.x.receive\n\
                 flow a.x.transfer -> c.x.receive\n",
            )
            .unwrap(),
        )
    }

    const TEXT: &str = "# demo\nseed: 7\nhorizon: 20\nrelease_policy: destroy_after 3\n\
        inject: 0 a.x.create \"hello world\"\nnoise: a.x 0.25\n\
        link: a.x.transfer->c.x.receive broken\n\
        route: a.x.transfer a.x.transfer->c.x.receive a.x.transfer->b.x.receive\n\
        dwell: a.x.process 2\n";

    #[test]
    fn parse_resolve_and_canonical_roundtrip() {
        let s = ScenarioSpec::parse(TEXT).unwrap().resolve(model()).unwrap();
        assert_eq!(s.seed, 7);
        assert_eq!(s.release_policy, ReleasePolicy::DestroyAfter(3));
        assert_eq!(s.injections[0].payload, "hello world");
        assert_eq!(s.noise[0].threshold, 1.0);
        assert_eq!(s.routing.values().next().unwrap().len(), 2);
        let canon = s.to_fms();
        let again = ScenarioSpec::parse(&canon)
            .unwrap()
            .resolve(model())
            .unwrap();
        assert_eq!(again, s);
        assert_eq!(again.to_fms(), canon);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let e = ScenarioSpec::parse("seed: 1\nbogus: 2\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(ScenarioSpec::parse("seed: x").is_err());
        assert!(ScenarioSpec::parse("release_policy: destroy_after").is_err());
        assert!(ScenarioSpec::parse("inject: 0 \"open").is_err());
    }

    #[test]
    fn invalid_scenarios() {
        let bad = |extra: &str| {
            ScenarioSpec::parse(&format!(
                "route: a.x.transfer a.x.transfer->b.x.receive\n{extra}"
            ))
            .unwrap()
            .resolve(model())
            .unwrap_err()
        };
        assert!(!bad("noise: a.x 1.5").is_empty());
        assert!(!bad("noise: b.x 0.5").is_empty());
        assert!(!bad("inject: 0 a.x.receive").is_empty());
        assert!(!bad("release_policy: destroy_after 0").is_empty());
        assert!(!bad("dwell: a.x.create 0").is_empty());
        assert!(!bad("route: a.x.create a.x.transfer->b.x.receive").is_empty());
        let ambiguous = ScenarioSpec::default().resolve(model()).unwrap_err();
        assert!(ambiguous[0].contains("several outgoing flows"));
    }
}
