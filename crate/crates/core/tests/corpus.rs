use std::collections::BTreeSet;

use flowmodel::corpus::{corpus_get, corpus_list, entry, mutations, CorpusError};
use flowmodel::dsl::serialize;
use flowmodel::model::ArcClass;
use flowmodel::simulator::{run, EventKind};
use flowmodel::validator::{validate, StrictnessProfile};

fn kinds(slug: &str) -> BTreeSet<String> {
    let (m, _) = corpus_get(slug).unwrap();
    m.kinds().iter().map(|k| k.name.clone()).collect()
}

#[test]
fn seven_entries() {
    assert_eq!(corpus_list().len(), 7);
    assert_eq!(mutations().len(), 14);
}

#[test]
fn shannon_kinds() {
    let want: BTreeSet<String> = ["information", "signal", "physical-signal"]
        .map(String::from)
        .into();
    assert_eq!(kinds("shannon-fm"), want);
}

#[test]
fn channelless_shape() {
    let (m, _) = corpus_get("channelless").unwrap();
    assert_eq!(m.schemes().len(), 2);
    assert_eq!(m.schemes()[0].kind, m.schemes()[1].kind);
    assert!(m.arcs().iter().all(|a| a.class == ArcClass::Flow));
    let direct: Vec<_> = m.arcs().iter().filter(|a| !a.is_intra_scheme()).collect();
    assert_eq!(direct.len(), 1);
    assert_eq!(m.location_path(direct[0].source), "left.current.transfer");
    assert_eq!(m.location_path(direct[0].target), "right.current.receive");
}

#[test]
fn two_person_schemes() {
    let (m, _) = corpus_get("two-person").unwrap();
    let got: Vec<(String, String)> = m
        .scheme_ids()
        .map(|s| {
            (
                m.scheme_path(s).to_string(),
                m.scheme_kind_name(s).to_string(),
            )
        })
        .collect();
    let want = [
        ("environment.sound", "sound-wave"),
        ("person-a.info", "information"),
        ("person-a.physio", "physiological-signal"),
        ("person-b.info", "information"),
        ("person-b.physio", "physiological-signal"),
    ];
    assert_eq!(
        got,
        want.map(|(a, b)| (a.to_string(), b.to_string())).to_vec()
    );
}

#[test]
fn hci_kinds() {
    let k = kinds("hci-extension");
    for want in ["needs", "information", "signal", "action"] {
        assert!(k.contains(want), "{want}");
    }
    let (m, _) = corpus_get("hci-extension").unwrap();
    assert_eq!(m.arcs().iter().filter(|a| a.gateway).count(), 1);
}

#[test]
fn unknown_slug() {
    assert_eq!(
        corpus_get("missing").unwrap_err(),
        CorpusError::UnknownSlug("missing".into())
    );
    assert!(entry("missing").is_err());
}

#[test]
fn models_are_canonical_and_clean() {
    for e in corpus_list() {
        let m = e.model();
        assert_eq!(serialize(&m), e.model_src, "{}", e.slug);
        assert!(
            validate(&m, StrictnessProfile::Strict).is_empty(),
            "{}",
            e.slug
        );
    }
}

#[test]
fn default_scenarios_deliver() {
    for e in corpus_list() {
        let (_, s) = corpus_get(e.slug).unwrap();
        let trace = run(&s).unwrap();
        let delivered = trace
            .events
            .iter()
            .filter(|ev| ev.kind == EventKind::Delivered)
            .count();
        if e.slug == "org-departments" {
            assert_eq!(delivered, 0);
            assert_eq!(trace.stored.values().sum::<u64>(), 1);
        } else {
            assert!(delivered >= 1, "{} delivered nothing", e.slug);
        }
        assert!(trace.in_flight() == 0 || e.slug == "tcpip-fm", "{}", e.slug);
    }
}

#[test]
fn mutations_fail_with_their_rule_only() {
    for mu in mutations() {
        let m = flowmodel::dsl::load(mu.src).unwrap();
        let v = validate(&m, StrictnessProfile::Strict);
        assert_eq!(v.len(), 1, "{}", mu.file_name);
        assert_eq!(v[0].rule, mu.rule, "{}", mu.file_name);
        assert!(mu.file_name.starts_with(mu.base));
    }
}
