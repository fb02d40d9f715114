//! Seeded random models and scenarios.

use std::collections::BTreeSet;
use std::sync::Arc;

use flowmodel::model::{
    build_system, legal_intra_scheme, ArcClass, ArcDecl, Decl, EndpointRef, KindDecl, MetaDecl,
    SchemeDecl, SphereDecl, Stage, SystemModel,
};
use flowmodel::simulator::{Injection, LinkState, NoiseSource, ReleasePolicy, Scenario};
use flowmodel::validator::StrictnessProfile;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type Rand = ChaCha8Rng;

pub fn rng(seed: u64) -> Rand {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A scheme as seen by the generator: where it is and what it holds.
#[derive(Debug, Clone)]
struct Slot {
    sphere: Vec<String>,
    scheme: String,
    kind: usize,
    stages: Vec<Stage>,
}

impl Slot {
    fn at(&self, stage: Stage) -> EndpointRef {
        EndpointRef {
            sphere: self.sphere.clone(),
            scheme: self.scheme.clone(),
            stage,
        }
    }
}

/// How arcs are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcMix {
    /// Only arcs that pass every error-level rule.
    Legal,
    /// Any endpoints, any class.
    Arbitrary,
}

pub struct GenModel {
    pub decls: Vec<Decl>,
    slots: Vec<Slot>,
}

impl GenModel {
    pub fn build(&self) -> SystemModel {
        build_system(&self.decls).expect("generated declarations build")
    }

    /// A flow between schemes of different kinds, if the model has two kinds.
    pub fn cross_kind_flow(&self, rng: &mut Rand) -> Option<ArcDecl> {
        let keys: BTreeSet<String> = self
            .decls
            .iter()
            .filter_map(|d| match d {
                Decl::Arc(a) => Some(a.key()),
                _ => None,
            })
            .collect();
        let mut pairs = Vec::new();
        for a in &self.slots {
            for b in &self.slots {
                if a.kind != b.kind {
                    for &sa in &a.stages {
                        for &sb in &b.stages {
                            pairs.push((a.at(sa), b.at(sb)));
                        }
                    }
                }
            }
        }
        pairs.shuffle(rng);
        pairs.into_iter().find_map(|(source, target)| {
            let arc = ArcDecl {
                class: ArcClass::Flow,
                gateway: false,
                source,
                target,
                label: None,
            };
            (!keys.contains(&arc.key())).then_some(arc)
        })
    }
}

const STAGES: [Stage; 5] = Stage::ALL;

fn stages(rng: &mut Rand) -> Vec<Stage> {
    loop {
        let s: Vec<Stage> = STAGES
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(0.7))
            .collect();
        if !s.is_empty() {
            return s;
        }
    }
}

fn ident(rng: &mut Rand, prefix: &str, i: usize) -> String {
    // Mix in hyphens and underscores so the lexer sees them too.
    match rng.gen_range(0..3) {
        0 => format!("{prefix}{i}"),
        1 => format!("{prefix}-{i}"),
        _ => format!("{prefix}_{i}"),
    }
}

pub fn model(rng: &mut Rand, mix: ArcMix) -> GenModel {
    let n_kinds = rng.gen_range(1..=4);
    let kinds: Vec<String> = (0..n_kinds).map(|i| ident(rng, "k", i)).collect();
    let mut decls: Vec<Decl> = kinds
        .iter()
        .map(|k| Decl::Kind(KindDecl { name: k.clone() }))
        .collect();
    if rng.gen_bool(0.3) {
        decls.push(Decl::Meta(MetaDecl {
            key: "name".into(),
            value: format!("model \"{}\"", rng.gen::<u16>()),
        }));
    }
    let mut slots = Vec::new();
    let n_spheres = rng.gen_range(1..=4);
    for i in 0..n_spheres {
        let name = ident(rng, "s", i);
        let mut top = sphere_decl(rng, vec![name], &kinds, &mut slots);
        if rng.gen_bool(0.3) {
            let child_name = ident(rng, "c", i);
            let child = sphere_decl(rng, vec![top.name.clone(), child_name], &kinds, &mut slots);
            top.spheres.push(child);
        }
        decls.push(Decl::Sphere(top));
    }

    let mut keys = BTreeSet::new();
    let n_arcs = rng.gen_range(0..=slots.len() * 3);
    let mut attempts = 0;
    while keys.len() < n_arcs && attempts < n_arcs * 20 {
        attempts += 1;
        let a = slots.choose(rng).unwrap().clone();
        let b = slots.choose(rng).unwrap().clone();
        let sa = *a.stages.choose(rng).unwrap();
        let sb = *b.stages.choose(rng).unwrap();
        let same_scheme = a.sphere == b.sphere && a.scheme == b.scheme;
        let (class, gateway) = match mix {
            ArcMix::Arbitrary => (
                if rng.gen_bool(0.5) {
                    ArcClass::Flow
                } else {
                    ArcClass::Trigger
                },
                rng.gen_bool(0.1),
            ),
            ArcMix::Legal => {
                let flow_ok = a.kind == b.kind
                    && if same_scheme {
                        legal_intra_scheme(sa, sb)
                    } else {
                        (sa, sb) == (Stage::Transfer, Stage::Receive)
                    };
                if flow_ok && rng.gen_bool(0.7) {
                    (ArcClass::Flow, false)
                } else if !same_scheme {
                    (ArcClass::Trigger, rng.gen_bool(0.2))
                } else {
                    continue;
                }
            }
        };
        let arc = ArcDecl {
            class,
            gateway,
            source: a.at(sa),
            target: b.at(sb),
            label: rng.gen_bool(0.1).then(|| format!("l{}", rng.gen::<u8>())),
        };
        if keys.insert(arc.key()) {
            decls.push(Decl::Arc(arc));
        }
    }
    decls.shuffle(rng);
    GenModel { decls, slots }
}

fn sphere_decl(
    rng: &mut Rand,
    path: Vec<String>,
    kinds: &[String],
    slots: &mut Vec<Slot>,
) -> SphereDecl {
    let mut kind_ids: Vec<usize> = (0..kinds.len()).collect();
    kind_ids.shuffle(rng);
    kind_ids.truncate(rng.gen_range(1..=kinds.len().min(3)));
    let mut schemes = Vec::new();
    for (j, &k) in kind_ids.iter().enumerate() {
        let name = ident(rng, "x", j);
        let st = stages(rng);
        slots.push(Slot {
            sphere: path.clone(),
            scheme: name.clone(),
            kind: k,
            stages: st.clone(),
        });
        schemes.push(SchemeDecl {
            name,
            kind: kinds[k].clone(),
            stages: st,
            capacity: rng.gen_bool(0.15).then(|| rng.gen_range(1..=3)),
        });
    }
    let mut meta = Vec::new();
    if rng.gen_bool(0.25) {
        meta.push(MetaDecl {
            key: "role".into(),
            value: "channel".into(),
        });
    }
    SphereDecl {
        name: path.last().unwrap().clone(),
        meta,
        schemes,
        spheres: Vec::new(),
    }
}

/// A runnable scenario for a model with no error-level violations.
pub fn scenario(rng: &mut Rand, model: Arc<SystemModel>) -> Scenario {
    let m = &*model;
    let mut s = Scenario::new(model.clone());
    s.seed = rng.gen();
    s.horizon = rng.gen_range(0..=60);
    s.profile = StrictnessProfile::Strict;
    let locations: Vec<_> = m
        .scheme_ids()
        .flat_map(|sid| {
            m.scheme(sid)
                .stages
                .iter()
                .map(move |&st| flowmodel::model::Location::new(sid, st))
        })
        .collect();
    for _ in 0..rng.gen_range(0..=5) {
        s.injections.push(Injection {
            time: rng.gen_range(0..=s.horizon.max(1)),
            at: *locations.choose(rng).unwrap(),
            payload: format!("p{}", rng.gen::<u8>()),
        });
    }
    for sid in m.scheme_ids() {
        if m.scheme(sid).has_stage(Stage::Create) && rng.gen_bool(0.3) {
            s.noise.push(NoiseSource {
                scheme: sid,
                rate: rng.gen_range(0.0..=1.0),
                threshold: rng.gen_range(0.0..=1.0),
            });
        }
    }
    for id in m.arc_ids() {
        if rng.gen_bool(0.15) {
            s.links.insert(id, LinkState::Broken);
        }
    }
    s.release_policy = match rng.gen_range(0..3) {
        0 => ReleasePolicy::Return,
        1 => ReleasePolicy::StoreIndefinitely,
        _ => ReleasePolicy::DestroyAfter(rng.gen_range(1..=5)),
    };
    for &loc in &locations {
        let mut flows: Vec<_> = m.outgoing_flows(loc).collect();
        if flows.len() > 1 || (!flows.is_empty() && rng.gen_bool(0.1)) {
            flows.shuffle(rng);
            flows.truncate(rng.gen_range(1..=flows.len()));
            s.routing.insert(loc, flows);
        }
        if rng.gen_bool(0.1) {
            s.dwell.insert(loc, rng.gen_range(1..=3));
        }
    }
    s.noise_delivery = rng.gen_bool(0.2);
    s.gateway_consumes = rng.gen_bool(0.3);
    s
}

pub fn bytes(rng: &mut Rand) -> Vec<u8> {
    const ALPHABET: &[u8] = b"kind sphere scheme flow trigger gateway meta stages capacity {}:.=->~>\"#\n\\ receive process create release transfer abc 123";
    let len = rng.gen_range(0..200);
    (0..len)
        .map(|_| {
            if rng.gen_bool(0.8) {
                *ALPHABET.choose(rng).unwrap()
            } else {
                rng.gen()
            }
        })
        .collect()
}
