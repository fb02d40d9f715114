//! Bundled example systems with default scenarios.
//!
//! The `.fm` and `.fms` sources live in the repository's `corpus/` directory
//! and are compiled in. Each model validates cleanly under the strict profile;
//! each mutation differs from its base by one edit that trips exactly one rule.

use std::sync::Arc;

use thiserror::Error;

use crate::dsl::load;
use crate::model::SystemModel;
use crate::simulator::{Scenario, ScenarioSpec};
use crate::validator::RuleId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusEntry {
    pub slug: &'static str,
    pub title: &'static str,
    pub model_src: &'static str,
    pub scenario_src: &'static str,
    pub commentary: &'static str,
}

/// A one-edit variant of a corpus model that breaks a single rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mutation {
    pub base: &'static str,
    pub rule: RuleId,
    pub file_name: &'static str,
    pub src: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("unknown corpus entry `{0}`")]
    UnknownSlug(String),
}

macro_rules! entry {
    ($slug:literal, $title:literal, $commentary:literal) => {
        CorpusEntry {
            slug: $slug,
            title: $title,
            model_src: include_str!(concat!("../../../corpus/", $slug, ".fm")),
            scenario_src: include_str!(concat!("../../../corpus/", $slug, ".fms")),
            commentary: $commentary,
        }
    };
}

macro_rules! mutation {
    ($base:literal, $code:literal, $rule:ident) => {
        Mutation {
            base: $base,
            rule: RuleId::$rule,
            file_name: concat!($base, ".", $code, ".fm"),
            src: include_str!(concat!(
                "../../../corpus/mutations/",
                $base,
                ".",
                $code,
                ".fm"
            )),
        }
    };
}

static ENTRIES: [CorpusEntry; 7] = [
    entry!(
        "org-departments",
        "Information flow within a company and its two departments",
        "A report is created in dept1, released and transferred up to the company sphere, processed there, and sent on to dept2, which processes and keeps it. The company transfer stage can reach either department; the scenario routes to dept2. No token is delivered: the run shows flow inside one organization only."
    ),
    entry!(
        "shannon-fm",
        "Source, channel and destination as five-stage flow systems",
        "Information at the source triggers signals, signals trigger physical signals in the channel, and the chain reverses at the destination. Every cross-kind step is a trigger; the channel is a full participant whose create stage is where noise originates."
    ),
    entry!(
        "channelless",
        "Two spheres exchanging the same kind of flowthing",
        "When both sides handle the same kind of thing, a flow can go straight from one transfer stage to the other receive stage: no channel and no triggers are needed."
    ),
    entry!(
        "two-person",
        "Spoken communication between two people",
        "Person A's information triggers physiological signals, which trigger sound waves in the environment, which trigger physiological signals and then information in person B. Stage sets are inferred: person A only creates information, person B only receives it."
    ),
    entry!(
        "osi-fm",
        "Layered communication collapsed into sender, channel and receiver",
        "Layer names are carried as arc labels instead of separate schemes. The channel medium holds at most one signal per stage, so back-to-back messages queue."
    ),
    entry!(
        "hci-extension",
        "Needs, thought, nerve signals and actions driving a computer",
        "A need triggers information in the mind; a gateway turns that information into nerve signals, which trigger hand actions. Actions flow into the keyboard, whose keys trigger an electrical signal that flows to the computer. Stage sets per scheme are inferred."
    ),
    entry!(
        "tcpip-fm",
        "Four-layer communication over a noisy channel",
        "Same shape as osi-fm with four layer labels. The channel creates noise at rate 0.3, and each message crossing a noisy process stage is corrupted with probability 0.5."
    ),
];

static MUTATIONS: [Mutation; 14] = [
    mutation!("shannon-fm", "r1", R1CrossKindFlow),
    mutation!("shannon-fm", "r5", R5ChannelCompleteness),
    mutation!("org-departments", "r2", R2IllegalStageTransition),
    mutation!("org-departments", "r6", R6OrphanScheme),
    mutation!("channelless", "r3", R3InterSchemeFlowShape),
    mutation!("channelless", "r4", R4TriggerSelfScheme),
    mutation!("two-person", "r8", R8GatewayNotTrigger),
    mutation!("two-person", "r7", R7MissingReleaseBeforeTransfer),
    mutation!("osi-fm", "r1", R1CrossKindFlow),
    mutation!("osi-fm", "r5", R5ChannelCompleteness),
    mutation!("hci-extension", "r4", R4TriggerSelfScheme),
    mutation!("hci-extension", "r8", R8GatewayNotTrigger),
    mutation!("tcpip-fm", "r2", R2IllegalStageTransition),
    mutation!("tcpip-fm", "r3", R3InterSchemeFlowShape),
];

pub fn corpus_list() -> &'static [CorpusEntry] {
    &ENTRIES
}

pub fn mutations() -> &'static [Mutation] {
    &MUTATIONS
}

pub fn entry(slug: &str) -> Result<&'static CorpusEntry, CorpusError> {
    ENTRIES
        .iter()
        .find(|e| e.slug == slug)
        .ok_or_else(|| CorpusError::UnknownSlug(slug.to_string()))
}

impl CorpusEntry {
    pub fn model(&self) -> SystemModel {
        load(self.model_src).expect("bundled corpus model loads")
    }

    pub fn scenario_spec(&self) -> ScenarioSpec {
        ScenarioSpec::parse(self.scenario_src).expect("bundled corpus scenario parses")
    }
}

/// Built model plus its resolved default scenario.
pub fn corpus_get(slug: &str) -> Result<(Arc<SystemModel>, Scenario), CorpusError> {
    let e = entry(slug)?;
    let model = Arc::new(e.model());
    let scenario = e
        .scenario_spec()
        .resolve(model.clone())
        .expect("bundled corpus scenario resolves");
    Ok((model, scenario))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_stable() {
        let slugs: Vec<_> = corpus_list().iter().map(|e| e.slug).collect();
        assert_eq!(
            slugs,
            [
                "org-departments",
                "shannon-fm",
                "channelless",
                "two-person",
                "osi-fm",
                "hci-extension",
                "tcpip-fm"
            ]
        );
        assert!(matches!(
            corpus_get("missing"),
            Err(CorpusError::UnknownSlug(_))
        ));
    }

    #[test]
    fn every_entry_loads_and_resolves() {
        for e in corpus_list() {
            let (m, s) = corpus_get(e.slug).unwrap();
            assert!(!m.schemes().is_empty());
            assert!(s.horizon > 0);
        }
    }
}
