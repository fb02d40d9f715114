//! Flow-system ontology: kinds, spheres, schemes, stages and arcs.
//!
//! A [`SystemModel`] is built once from a set of [`Decl`]s and is immutable
//! afterwards. Construction only establishes referential integrity; the
//! well-formedness rules on arcs (same-kind flows, legal stage transitions,
//! trigger shapes) are the validator's job, so that ill-formed models can
//! still be represented, serialized and reported on.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The five lifecycle stages of a scheme, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Receive,
    Process,
    Create,
    Release,
    Transfer,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Receive,
        Stage::Process,
        Stage::Create,
        Stage::Release,
        Stage::Transfer,
    ];

    /// Lowercase DSL spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Receive => "receive",
            Stage::Process => "process",
            Stage::Create => "create",
            Stage::Release => "release",
            Stage::Transfer => "transfer",
        }
    }

    /// Compact label used in diagrams.
    pub fn short_label(self) -> &'static str {
        match self {
            Stage::Receive => "R",
            Stage::Process => "P",
            Stage::Create => "C",
            Stage::Release => "Rl",
            Stage::Transfer => "T",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Stage::Receive => "Receive",
            Stage::Process => "Process",
            Stage::Create => "Create",
            Stage::Release => "Release",
            Stage::Transfer => "Transfer",
        }
    }

    /// Storage substate reachable from this stage, if any.
    pub fn storage(self) -> Option<Substate> {
        match self {
            Stage::Receive => Some(Substate::StoredAtReceive),
            Stage::Process => Some(Substate::StoredAtProcess),
            Stage::Create => Some(Substate::StoredAtCreate),
            Stage::Release | Stage::Transfer => None,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown stage name `{0}`")]
pub struct UnknownStage(pub String);

impl FromStr for Stage {
    type Err = UnknownStage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| UnknownStage(s.to_string()))
    }
}

/// Where a stored token rests. Storage is not a stage of its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Substate {
    StoredAtReceive,
    StoredAtProcess,
    StoredAtCreate,
}

impl Substate {
    pub fn stage(self) -> Stage {
        match self {
            Substate::StoredAtReceive => Stage::Receive,
            Substate::StoredAtProcess => Stage::Process,
            Substate::StoredAtCreate => Stage::Create,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Substate::StoredAtReceive => "stored-at-receive",
            Substate::StoredAtProcess => "stored-at-process",
            Substate::StoredAtCreate => "stored-at-create",
        }
    }
}

impl FromStr for Substate {
    type Err = UnknownStage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Substate::StoredAtReceive,
            Substate::StoredAtProcess,
            Substate::StoredAtCreate,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
        .ok_or_else(|| UnknownStage(s.to_string()))
    }
}

/// The stage relation for flow arcs.
///
/// `Transfer -> Receive` is part of the relation but is only admissible
/// between two different schemes; see [`legal_intra_scheme`].
pub const LEGAL_TRANSITIONS: [(Stage, Stage); 11] = [
    (Stage::Receive, Stage::Process),
    (Stage::Receive, Stage::Release),
    (Stage::Process, Stage::Create),
    (Stage::Process, Stage::Release),
    (Stage::Create, Stage::Process),
    (Stage::Create, Stage::Release),
    (Stage::Release, Stage::Transfer),
    (Stage::Release, Stage::Receive),
    (Stage::Release, Stage::Process),
    (Stage::Release, Stage::Create),
    (Stage::Transfer, Stage::Receive),
];

pub fn legal_transition(from: Stage, to: Stage) -> bool {
    LEGAL_TRANSITIONS.contains(&(from, to))
}

/// Legal stage pair for a flow arc whose endpoints share one scheme.
pub fn legal_intra_scheme(from: Stage, to: Stage) -> bool {
    legal_transition(from, to) && (from, to) != (Stage::Transfer, Stage::Receive)
}

/// Legal stage pair for a flow arc joining two different schemes.
pub fn legal_inter_scheme(from: Stage, to: Stage) -> bool {
    (from, to) == (Stage::Transfer, Stage::Receive)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KindId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SphereId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SchemeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArcId(pub u32);

/// A (scheme, stage) position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub scheme: SchemeId,
    pub stage: Stage,
}

impl Location {
    pub fn new(scheme: SchemeId, stage: Stage) -> Self {
        Self { scheme, stage }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowthingKind {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sphere {
    pub name: String,
    pub path: Vec<String>,
    pub parent: Option<SphereId>,
    pub children: Vec<SphereId>,
    pub schemes: Vec<SchemeId>,
    pub metadata: BTreeMap<String, String>,
}

impl Sphere {
    pub fn dotted_path(&self) -> String {
        self.path.join(".")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    pub name: String,
    pub sphere: SphereId,
    pub kind: KindId,
    pub stages: BTreeSet<Stage>,
    pub capacity: Option<u32>,
}

impl Scheme {
    pub fn has_stage(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcClass {
    Flow,
    Trigger,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arc {
    /// Derived from the endpoints: `src->dst` for flows, `src~>dst` for triggers.
    pub key: String,
    pub class: ArcClass,
    pub gateway: bool,
    pub source: Location,
    pub target: Location,
    pub label: Option<String>,
}

impl Arc {
    pub fn is_intra_scheme(&self) -> bool {
        self.source.scheme == self.target.scheme
    }
}

// ---------------------------------------------------------------------------
// Declarations

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KindDecl {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaDecl {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeDecl {
    pub name: String,
    pub kind: String,
    pub stages: Vec<Stage>,
    pub capacity: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SphereDecl {
    pub name: String,
    pub meta: Vec<MetaDecl>,
    pub schemes: Vec<SchemeDecl>,
    pub spheres: Vec<SphereDecl>,
}

/// `sphere-path . scheme . stage`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EndpointRef {
    pub sphere: Vec<String>,
    pub scheme: String,
    pub stage: Stage,
}

impl fmt::Display for EndpointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.sphere {
            write!(f, "{s}.")?;
        }
        write!(f, "{}.{}", self.scheme, self.stage)
    }
}

impl FromStr for EndpointRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('.').collect();
        if parts.len() < 3 || parts.iter().any(|p| p.is_empty()) {
            return Err(format!("`{s}` is not of the form sphere.scheme.stage"));
        }
        let stage = parts[parts.len() - 1]
            .parse::<Stage>()
            .map_err(|e| e.to_string())?;
        Ok(EndpointRef {
            sphere: parts[..parts.len() - 2]
                .iter()
                .map(|p| p.to_string())
                .collect(),
            scheme: parts[parts.len() - 2].to_string(),
            stage,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcDecl {
    pub class: ArcClass,
    pub gateway: bool,
    pub source: EndpointRef,
    pub target: EndpointRef,
    pub label: Option<String>,
}

impl ArcDecl {
    pub fn key(&self) -> String {
        arc_key(self.class, &self.source, &self.target)
    }
}

pub(crate) fn arc_key(
    class: ArcClass,
    source: &impl fmt::Display,
    target: &impl fmt::Display,
) -> String {
    let arrow = match class {
        ArcClass::Flow => "->",
        ArcClass::Trigger => "~>",
    };
    format!("{source}{arrow}{target}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Kind(KindDecl),
    Sphere(SphereDecl),
    Arc(ArcDecl),
    Meta(MetaDecl),
}

// ---------------------------------------------------------------------------
// Build

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Error)]
pub enum BuildError {
    #[error("dangling reference: {what} `{name}` is not declared")]
    DanglingReference { what: &'static str, name: String },
    #[error("duplicate {what} `{name}`")]
    DuplicateName { what: &'static str, name: String },
    #[error("stage `{stage}` is not declared in scheme `{scheme}`")]
    StageNotInScheme { scheme: String, stage: Stage },
    #[error("sphere `{sphere}` already has a scheme of kind `{kind}`")]
    DuplicateSchemeKind { sphere: String, kind: String },
    #[error("scheme `{scheme}`: {reason}")]
    InvalidScheme { scheme: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemModel {
    kinds: Vec<FlowthingKind>,
    spheres: Vec<Sphere>,
    schemes: Vec<Scheme>,
    arcs: Vec<Arc>,
    metadata: BTreeMap<String, String>,
    scheme_paths: Vec<String>,
}

/// Builds a model from declarations. Declaration order does not matter: the
/// result is sorted canonically, so any permutation yields an equal model.
pub fn build_system<'a, I>(decls: I) -> Result<SystemModel, Vec<BuildError>>
where
    I: IntoIterator<Item = &'a Decl>,
{
    let mut errors = BTreeSet::new();
    let mut kind_names = BTreeSet::new();
    let mut metadata = BTreeMap::new();
    let mut top_spheres = Vec::new();
    let mut arc_decls = Vec::new();

    for decl in decls {
        match decl {
            Decl::Kind(k) => {
                if !kind_names.insert(k.name.clone()) {
                    errors.insert(BuildError::DuplicateName {
                        what: "kind",
                        name: k.name.clone(),
                    });
                }
            }
            Decl::Meta(m) => {
                if metadata.insert(m.key.clone(), m.value.clone()).is_some() {
                    errors.insert(BuildError::DuplicateName {
                        what: "meta key",
                        name: m.key.clone(),
                    });
                }
            }
            Decl::Sphere(s) => top_spheres.push(s),
            Decl::Arc(a) => arc_decls.push(a),
        }
    }

    let kinds: Vec<FlowthingKind> = kind_names
        .iter()
        .map(|n| FlowthingKind {
            name: n.clone(),
            description: String::new(),
        })
        .collect();
    let kind_index: BTreeMap<&str, KindId> = kinds
        .iter()
        .enumerate()
        .map(|(i, k)| (k.name.as_str(), KindId(i as u32)))
        .collect();

    // Flatten the sphere tree, keyed by path so that the sorted order is a
    // pre-order walk with siblings in name order.
    let mut flat: BTreeMap<Vec<String>, &SphereDecl> = BTreeMap::new();
    let mut stack: Vec<(Vec<String>, &SphereDecl)> = top_spheres
        .iter()
        .map(|s| (vec![s.name.clone()], *s))
        .collect();
    while let Some((path, decl)) = stack.pop() {
        for child in &decl.spheres {
            let mut p = path.clone();
            p.push(child.name.clone());
            stack.push((p, child));
        }
        if flat.insert(path.clone(), decl).is_some() {
            errors.insert(BuildError::DuplicateName {
                what: "sphere",
                name: path.join("."),
            });
        }
    }

    let sphere_ids: BTreeMap<Vec<String>, SphereId> = flat
        .keys()
        .enumerate()
        .map(|(i, p)| (p.clone(), SphereId(i as u32)))
        .collect();

    let mut spheres: Vec<Sphere> = Vec::with_capacity(flat.len());
    let mut scheme_entries: Vec<(Vec<String>, String, SchemeDecl)> = Vec::new();
    for (path, decl) in &flat {
        let parent = if path.len() > 1 {
            sphere_ids.get(&path[..path.len() - 1]).copied()
        } else {
            None
        };
        let mut meta = BTreeMap::new();
        for m in &decl.meta {
            if meta.insert(m.key.clone(), m.value.clone()).is_some() {
                errors.insert(BuildError::DuplicateName {
                    what: "meta key",
                    name: format!("{}.{}", path.join("."), m.key),
                });
            }
        }
        let mut seen_schemes = BTreeSet::new();
        let mut seen_kinds = BTreeSet::new();
        for sch in &decl.schemes {
            let qualified = format!("{}.{}", path.join("."), sch.name);
            if !seen_schemes.insert(sch.name.clone()) {
                errors.insert(BuildError::DuplicateName {
                    what: "scheme",
                    name: qualified,
                });
                continue;
            }
            if !kind_index.contains_key(sch.kind.as_str()) {
                errors.insert(BuildError::DanglingReference {
                    what: "kind",
                    name: sch.kind.clone(),
                });
            } else if !seen_kinds.insert(sch.kind.clone()) {
                errors.insert(BuildError::DuplicateSchemeKind {
                    sphere: path.join("."),
                    kind: sch.kind.clone(),
                });
            }
            if sch.stages.is_empty() {
                errors.insert(BuildError::InvalidScheme {
                    scheme: qualified.clone(),
                    reason: "no stages declared".into(),
                });
            }
            if sch.capacity == Some(0) {
                errors.insert(BuildError::InvalidScheme {
                    scheme: qualified.clone(),
                    reason: "capacity must be positive".into(),
                });
            }
            scheme_entries.push((path.clone(), sch.name.clone(), sch.clone()));
        }
        spheres.push(Sphere {
            name: path.last().cloned().unwrap_or_default(),
            path: path.clone(),
            parent,
            children: Vec::new(),
            schemes: Vec::new(),
            metadata: meta,
        });
    }
    for i in 0..spheres.len() {
        if let Some(p) = spheres[i].parent {
            spheres[p.0 as usize].children.push(SphereId(i as u32));
        }
    }

    scheme_entries.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    let mut schemes = Vec::with_capacity(scheme_entries.len());
    let mut scheme_paths = Vec::with_capacity(scheme_entries.len());
    let mut scheme_index: BTreeMap<(Vec<String>, String), SchemeId> = BTreeMap::new();
    for (path, name, decl) in scheme_entries {
        let id = SchemeId(schemes.len() as u32);
        let sphere = sphere_ids[&path];
        spheres[sphere.0 as usize].schemes.push(id);
        scheme_paths.push(format!("{}.{}", path.join("."), name));
        scheme_index.insert((path, name.clone()), id);
        schemes.push(Scheme {
            name,
            sphere,
            kind: kind_index
                .get(decl.kind.as_str())
                .copied()
                .unwrap_or(KindId(0)),
            stages: decl.stages.iter().copied().collect(),
            capacity: decl.capacity,
        });
    }

    let resolve = |e: &EndpointRef, errors: &mut BTreeSet<BuildError>| -> Option<Location> {
        if !sphere_ids.contains_key(&e.sphere) {
            errors.insert(BuildError::DanglingReference {
                what: "sphere",
                name: e.sphere.join("."),
            });
            return None;
        }
        let Some(&id) = scheme_index.get(&(e.sphere.clone(), e.scheme.clone())) else {
            errors.insert(BuildError::DanglingReference {
                what: "scheme",
                name: format!("{}.{}", e.sphere.join("."), e.scheme),
            });
            return None;
        };
        if !schemes[id.0 as usize].has_stage(e.stage) {
            errors.insert(BuildError::StageNotInScheme {
                scheme: scheme_paths[id.0 as usize].clone(),
                stage: e.stage,
            });
            return None;
        }
        Some(Location::new(id, e.stage))
    };

    let mut arcs_by_key: BTreeMap<String, Arc> = BTreeMap::new();
    for a in arc_decls {
        let src = resolve(&a.source, &mut errors);
        let dst = resolve(&a.target, &mut errors);
        let (Some(source), Some(target)) = (src, dst) else {
            continue;
        };
        let key = a.key();
        if arcs_by_key.contains_key(&key) {
            errors.insert(BuildError::DuplicateName {
                what: "arc",
                name: key,
            });
            continue;
        }
        arcs_by_key.insert(
            key.clone(),
            Arc {
                key,
                class: a.class,
                gateway: a.gateway,
                source,
                target,
                label: a.label.clone(),
            },
        );
    }

    if !errors.is_empty() {
        return Err(errors.into_iter().collect());
    }

    Ok(SystemModel {
        kinds,
        spheres,
        schemes,
        arcs: arcs_by_key.into_values().collect(),
        metadata,
        scheme_paths,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown scheme {0:?}")]
pub struct UnknownScheme(pub SchemeId);

impl SystemModel {
    pub fn empty() -> Self {
        build_system(std::iter::empty()).expect("empty declaration set is valid")
    }

    /// Model name from the `name` metadata entry, if any.
    pub fn name(&self) -> Option<&str> {
        self.metadata.get("name").map(String::as_str)
    }

    pub fn kinds(&self) -> &[FlowthingKind] {
        &self.kinds
    }

    pub fn spheres(&self) -> &[Sphere] {
        &self.spheres
    }

    pub fn schemes(&self) -> &[Scheme] {
        &self.schemes
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn kind(&self, id: KindId) -> &FlowthingKind {
        &self.kinds[id.0 as usize]
    }

    pub fn sphere(&self, id: SphereId) -> &Sphere {
        &self.spheres[id.0 as usize]
    }

    pub fn scheme(&self, id: SchemeId) -> &Scheme {
        &self.schemes[id.0 as usize]
    }

    pub fn arc(&self, id: ArcId) -> &Arc {
        &self.arcs[id.0 as usize]
    }

    pub fn scheme_ids(&self) -> impl Iterator<Item = SchemeId> + '_ {
        (0..self.schemes.len() as u32).map(SchemeId)
    }

    pub fn arc_ids(&self) -> impl Iterator<Item = ArcId> + '_ {
        (0..self.arcs.len() as u32).map(ArcId)
    }

    /// Dotted `sphere.path.scheme` name.
    pub fn scheme_path(&self, id: SchemeId) -> &str {
        &self.scheme_paths[id.0 as usize]
    }

    pub fn location_path(&self, loc: Location) -> String {
        format!("{}.{}", self.scheme_path(loc.scheme), loc.stage)
    }

    pub fn scheme_kind_name(&self, id: SchemeId) -> &str {
        &self.kind(self.scheme(id).kind).name
    }

    pub fn find_scheme(&self, dotted: &str) -> Option<SchemeId> {
        self.scheme_paths
            .iter()
            .position(|p| p == dotted)
            .map(|i| SchemeId(i as u32))
    }

    pub fn find_location(&self, dotted: &str) -> Option<Location> {
        let (scheme, stage) = dotted.rsplit_once('.')?;
        let stage = stage.parse().ok()?;
        let id = self.find_scheme(scheme)?;
        self.scheme(id)
            .has_stage(stage)
            .then_some(Location::new(id, stage))
    }

    pub fn find_arc(&self, key: &str) -> Option<ArcId> {
        self.arcs
            .binary_search_by(|a| a.key.as_str().cmp(key))
            .ok()
            .map(|i| ArcId(i as u32))
    }

    pub fn find_kind(&self, name: &str) -> Option<KindId> {
        self.kinds
            .iter()
            .position(|k| k.name == name)
            .map(|i| KindId(i as u32))
    }

    /// Schemes whose sphere carries `role = "channel"`.
    pub fn is_channel(&self, id: SchemeId) -> bool {
        let sphere = self.sphere(self.scheme(id).sphere);
        sphere.metadata.get("role").map(String::as_str) == Some("channel")
    }

    /// Flow arcs leaving `loc`, in arc-key order.
    pub fn outgoing_flows(&self, loc: Location) -> impl Iterator<Item = ArcId> + '_ {
        self.arc_ids().filter(move |&id| {
            let a = self.arc(id);
            a.class == ArcClass::Flow && a.source == loc
        })
    }

    /// Trigger arcs leaving `loc`, in arc-key order.
    pub fn outgoing_triggers(&self, loc: Location) -> impl Iterator<Item = ArcId> + '_ {
        self.arc_ids().filter(move |&id| {
            let a = self.arc(id);
            a.class == ArcClass::Trigger && a.source == loc
        })
    }

    /// Schemes reachable from `origin` along arcs of either class, origin included.
    pub fn reachable_schemes(&self, origin: SchemeId) -> Result<BTreeSet<SchemeId>, UnknownScheme> {
        if origin.0 as usize >= self.schemes.len() {
            return Err(UnknownScheme(origin));
        }
        let mut adjacency: BTreeMap<SchemeId, BTreeSet<SchemeId>> = BTreeMap::new();
        for a in &self.arcs {
            adjacency
                .entry(a.source.scheme)
                .or_default()
                .insert(a.target.scheme);
        }
        let mut seen = BTreeSet::from([origin]);
        let mut queue = VecDeque::from([origin]);
        while let Some(s) = queue.pop_front() {
            for &next in adjacency.get(&s).into_iter().flatten() {
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        Ok(seen)
    }

    /// Reconstructs a declaration set that builds back into this model.
    pub fn to_decls(&self) -> Vec<Decl> {
        let mut out = Vec::new();
        for (k, v) in &self.metadata {
            out.push(Decl::Meta(MetaDecl {
                key: k.clone(),
                value: v.clone(),
            }));
        }
        for k in &self.kinds {
            out.push(Decl::Kind(KindDecl {
                name: k.name.clone(),
            }));
        }
        for (i, s) in self.spheres.iter().enumerate() {
            if s.parent.is_none() {
                out.push(Decl::Sphere(self.sphere_decl(SphereId(i as u32))));
            }
        }
        for a in &self.arcs {
            out.push(Decl::Arc(ArcDecl {
                class: a.class,
                gateway: a.gateway,
                source: self.endpoint_ref(a.source),
                target: self.endpoint_ref(a.target),
                label: a.label.clone(),
            }));
        }
        out
    }

    pub(crate) fn sphere_decl(&self, id: SphereId) -> SphereDecl {
        let s = self.sphere(id);
        SphereDecl {
            name: s.name.clone(),
            meta: s
                .metadata
                .iter()
                .map(|(k, v)| MetaDecl {
                    key: k.clone(),
                    value: v.clone(),
                })
                .collect(),
            schemes: s
                .schemes
                .iter()
                .map(|&sid| {
                    let sch = self.scheme(sid);
                    SchemeDecl {
                        name: sch.name.clone(),
                        kind: self.kind(sch.kind).name.clone(),
                        stages: sch.stages.iter().copied().collect(),
                        capacity: sch.capacity,
                    }
                })
                .collect(),
            spheres: s.children.iter().map(|&c| self.sphere_decl(c)).collect(),
        }
    }

    pub fn endpoint_ref(&self, loc: Location) -> EndpointRef {
        let sch = self.scheme(loc.scheme);
        EndpointRef {
            sphere: self.sphere(sch.sphere).path.clone(),
            scheme: sch.name.clone(),
            stage: loc.stage,
        }
    }
}
