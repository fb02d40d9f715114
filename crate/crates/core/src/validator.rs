//! Well-formedness rules for flow systems.
//!
//! Rules R1–R4 and R8 are errors; R5–R7 are warnings and never block. The
//! `legacy` profile drops R5 and R7 so flat, pre-flow models can still be
//! written down for comparison.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::model::{
    legal_inter_scheme, legal_intra_scheme, ArcClass, ArcId, SchemeId, Stage, SystemModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    R1CrossKindFlow,
    R2IllegalStageTransition,
    R3InterSchemeFlowShape,
    R4TriggerSelfScheme,
    R5ChannelCompleteness,
    R6OrphanScheme,
    R7MissingReleaseBeforeTransfer,
    R8GatewayNotTrigger,
}

impl RuleId {
    pub const ALL: [RuleId; 8] = [
        RuleId::R1CrossKindFlow,
        RuleId::R2IllegalStageTransition,
        RuleId::R3InterSchemeFlowShape,
        RuleId::R4TriggerSelfScheme,
        RuleId::R5ChannelCompleteness,
        RuleId::R6OrphanScheme,
        RuleId::R7MissingReleaseBeforeTransfer,
        RuleId::R8GatewayNotTrigger,
    ];

    /// Short code, `R1`..`R8`.
    pub fn code(self) -> &'static str {
        match self {
            RuleId::R1CrossKindFlow => "R1",
            RuleId::R2IllegalStageTransition => "R2",
            RuleId::R3InterSchemeFlowShape => "R3",
            RuleId::R4TriggerSelfScheme => "R4",
            RuleId::R5ChannelCompleteness => "R5",
            RuleId::R6OrphanScheme => "R6",
            RuleId::R7MissingReleaseBeforeTransfer => "R7",
            RuleId::R8GatewayNotTrigger => "R8",
        }
    }

    /// Stable identifier, e.g. `R1_CrossKindFlow`.
    pub fn id(self) -> &'static str {
        match self {
            RuleId::R1CrossKindFlow => "R1_CrossKindFlow",
            RuleId::R2IllegalStageTransition => "R2_IllegalStageTransition",
            RuleId::R3InterSchemeFlowShape => "R3_InterSchemeFlowShape",
            RuleId::R4TriggerSelfScheme => "R4_TriggerSelfScheme",
            RuleId::R5ChannelCompleteness => "R5_ChannelCompleteness",
            RuleId::R6OrphanScheme => "R6_OrphanScheme",
            RuleId::R7MissingReleaseBeforeTransfer => "R7_MissingReleaseBeforeTransfer",
            RuleId::R8GatewayNotTrigger => "R8_GatewayNotTrigger",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            RuleId::R5ChannelCompleteness
            | RuleId::R6OrphanScheme
            | RuleId::R7MissingReleaseBeforeTransfer => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for RuleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.code().eq_ignore_ascii_case(s) || r.id() == s)
            .ok_or_else(|| format!("unknown rule `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StrictnessProfile {
    #[default]
    Strict,
    Legacy,
}

impl StrictnessProfile {
    pub fn includes(self, rule: RuleId) -> bool {
        match self {
            StrictnessProfile::Strict => true,
            StrictnessProfile::Legacy => !matches!(
                rule,
                RuleId::R5ChannelCompleteness | RuleId::R7MissingReleaseBeforeTransfer
            ),
        }
    }
}

impl FromStr for StrictnessProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(StrictnessProfile::Strict),
            "legacy" => Ok(StrictnessProfile::Legacy),
            other => Err(format!(
                "unknown profile `{other}` (expected strict or legacy)"
            )),
        }
    }
}

impl fmt::Display for StrictnessProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrictnessProfile::Strict => "strict",
            StrictnessProfile::Legacy => "legacy",
        })
    }
}

/// The model element a violation points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    Arc(ArcId),
    Scheme(SchemeId),
    Stage(SchemeId, Stage),
}

impl Subject {
    pub fn path(self, model: &SystemModel) -> String {
        match self {
            Subject::Arc(a) => model.arc(a).key.clone(),
            Subject::Scheme(s) => model.scheme_path(s).to_string(),
            Subject::Stage(s, st) => format!("{}.{st}", model.scheme_path(s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: RuleId,
    pub severity: Severity,
    pub subject: Subject,
    pub explanation: String,
}

/// One line-oriented record per violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolationRecord {
    pub rule: &'static str,
    pub severity: Severity,
    pub subject: String,
    pub message: String,
}

impl Violation {
    pub fn record(&self, model: &SystemModel) -> ViolationRecord {
        ViolationRecord {
            rule: self.rule.id(),
            severity: self.severity,
            subject: self.subject.path(model),
            message: self.explanation.clone(),
        }
    }

    pub fn render(&self, model: &SystemModel) -> String {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        format!(
            "{sev}[{}] {}: {}",
            self.rule.code(),
            self.subject.path(model),
            self.explanation
        )
    }
}

pub fn has_errors(violations: &[Violation]) -> bool {
    violations.iter().any(|v| v.severity == Severity::Error)
}

/// Checks every rule in `profile`. Output is sorted by (rule, subject).
pub fn validate(model: &SystemModel, profile: StrictnessProfile) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |rule: RuleId, subject: Subject, explanation: String| {
        if profile.includes(rule) {
            out.push(Violation {
                rule,
                severity: rule.severity(),
                subject,
                explanation,
            });
        }
    };

    for id in model.arc_ids() {
        let arc = model.arc(id);
        let src = model.scheme(arc.source.scheme);
        let dst = model.scheme(arc.target.scheme);
        match arc.class {
            ArcClass::Flow => {
                if src.kind != dst.kind {
                    push(
                        RuleId::R1CrossKindFlow,
                        Subject::Arc(id),
                        format!(
                            "flow joins `{}` and `{}`; only a trigger may cross kinds",
                            model.kind(src.kind).name,
                            model.kind(dst.kind).name
                        ),
                    );
                }
                if arc.is_intra_scheme() {
                    if !legal_intra_scheme(arc.source.stage, arc.target.stage) {
                        push(
                            RuleId::R2IllegalStageTransition,
                            Subject::Arc(id),
                            format!(
                                "{} -> {} is not a legal transition inside a scheme",
                                arc.source.stage, arc.target.stage
                            ),
                        );
                    }
                } else if !legal_inter_scheme(arc.source.stage, arc.target.stage) {
                    push(
                        RuleId::R3InterSchemeFlowShape,
                        Subject::Arc(id),
                        format!(
                            "flow between schemes goes {} -> {}; it must leave from transfer and arrive at receive",
                            arc.source.stage, arc.target.stage
                        ),
                    );
                }
                if arc.gateway {
                    push(
                        RuleId::R8GatewayNotTrigger,
                        Subject::Arc(id),
                        "gateway flag on a flow arc; a gateway diverts into another flow and must be a trigger".into(),
                    );
                }
            }
            ArcClass::Trigger => {
                if arc.is_intra_scheme() {
                    push(
                        RuleId::R4TriggerSelfScheme,
                        Subject::Arc(id),
                        "trigger starts and ends in the same scheme; use a flow arc instead".into(),
                    );
                }
            }
        }
    }

    for sid in model.scheme_ids() {
        let scheme = model.scheme(sid);
        if model.is_channel(sid) {
            let missing: Vec<&str> = Stage::ALL
                .into_iter()
                .filter(|s| !scheme.has_stage(*s))
                .map(Stage::as_str)
                .collect();
            if !missing.is_empty() {
                push(
                    RuleId::R5ChannelCompleteness,
                    Subject::Scheme(sid),
                    format!("channel scheme lacks stage(s): {}", missing.join(", ")),
                );
            }
        }

        let incident = model
            .arcs()
            .iter()
            .any(|a| a.source.scheme == sid || a.target.scheme == sid);
        if !incident {
            push(
                RuleId::R6OrphanScheme,
                Subject::Scheme(sid),
                "scheme has no incident arcs".into(),
            );
        }

        if scheme.has_stage(Stage::Transfer) {
            let transfer_used = model.arcs().iter().any(|a| {
                (a.source.scheme == sid && a.source.stage == Stage::Transfer)
                    || (a.target.scheme == sid && a.target.stage == Stage::Transfer)
            });
            let fed = model.arcs().iter().any(|a| {
                a.class == ArcClass::Flow
                    && a.source.scheme == sid
                    && a.target.scheme == sid
                    && a.source.stage == Stage::Release
                    && a.target.stage == Stage::Transfer
            });
            if transfer_used && !fed {
                push(
                    RuleId::R7MissingReleaseBeforeTransfer,
                    Subject::Stage(sid, Stage::Transfer),
                    "transfer stage is in use but nothing flows into it from release".into(),
                );
            }
        }
    }

    out.sort_by_key(|v| (v.rule, v.subject));
    out
}

/// Rationale for a rule.
pub fn explain(rule: RuleId) -> &'static str {
    match rule {
        RuleId::R1CrossKindFlow => {
            "R1 cross-kind flow: information flow is ontologically distinct from physical \
             signal flow. Flow is only possible between things of the same kind; an abstract \
             message never moves into a channel of signals, it triggers events there. Crossing \
             kinds therefore requires a trigger (dotted) arc, never a flow (solid) arc."
        }
        RuleId::R2IllegalStageTransition => {
            "R2 illegal stage transition: inside a scheme a flowthing moves receive -> process, \
             process <-> create, receive/process/create -> release (with the return arrows \
             release -> receive/process/create for a blocked release) and release -> transfer. \
             Any other pair, such as transfer -> create, is not a possible state change."
        }
        RuleId::R3InterSchemeFlowShape => {
            "R3 inter-scheme flow shape: a flowthing leaves a scheme from its transfer stage and \
             enters the next one at its receive stage, like passengers departing one airport and \
             being received at the next travel station."
        }
        RuleId::R4TriggerSelfScheme => {
            "R4 self-scheme trigger: a trigger transforms one flow into another flow. Within a \
             single scheme, generating new things is the process -> create flow, not a trigger."
        }
        RuleId::R5ChannelCompleteness => {
            "R5 channel completeness: a channel is a full participant. It receives, communicates, \
             releases, processes, and creates physical signals (noise is what it creates), so a \
             channel scheme should declare all five stages instead of acting as a flat pipe."
        }
        RuleId::R6OrphanScheme => {
            "R6 orphan scheme: the scheme has no incident flow or trigger arcs, so nothing can \
             ever enter or leave it."
        }
        RuleId::R7MissingReleaseBeforeTransfer => {
            "R7 missing release before transfer: a flowthing is released (ready to depart) \
             before it is transferred; a transfer stage in use with no release -> transfer \
             flow skips that step."
        }
        RuleId::R8GatewayNotTrigger => {
            "R8 gateway on a flow: a gateway is the point where a flowthing is used, diverting \
             its flow into another type of flow such as actions. That is a trigger; a gateway \
             flag on a flow arc has no meaning."
        }
    }
}
