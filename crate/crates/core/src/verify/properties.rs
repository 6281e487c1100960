//! Property oracles over a recorded trace.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::scenario::ProtocolKind;
use crate::trace::{EventKind, RunInfo, Trace};
use crate::types::{Log, MessageKind, Tick, ValidatorId};
use crate::verify::leader::good_leader;
use crate::verify::schedule::Schedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    Aborted,
    Synchrony,
    Authenticity,
    Consistency,
    Uniqueness,
    GradedDelivery,
    Validity,
    Integrity,
    Safety,
    Reorg,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tick: Option<Tick>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validator: Option<ValidatorId>,
    pub detail: String,
}

impl Violation {
    fn new(kind: ViolationKind, tick: Option<Tick>, validator: Option<ValidatorId>, detail: String) -> Self {
        Self { kind, tick, validator, detail }
    }
}

/// One validator's participation in one output phase.
#[derive(Clone, Debug, Default)]
struct Phase {
    tick: Tick,
    logs: BTreeSet<Log>,
}

#[derive(Clone, Debug)]
struct Decision {
    tick: Tick,
    validator: ValidatorId,
    view: u64,
    log: Log,
}

/// Trace events grouped for the oracles.
#[derive(Clone, Debug, Default)]
pub(crate) struct Index {
    phases: BTreeMap<(u64, u8), BTreeMap<ValidatorId, Phase>>,
    /// Earliest honest send of each `(origin, kind, instance, log)`.
    sends: BTreeMap<(ValidatorId, MessageKind, u64, Log), Tick>,
    inputs: Vec<(Tick, ValidatorId, u64, Log)>,
    proposals: BTreeMap<(u64, ValidatorId), (Tick, Log)>,
    decisions: Vec<Decision>,
}

impl Index {
    pub(crate) fn build(trace: &Trace) -> Self {
        let mut ix = Index::default();
        for e in &trace.events {
            let Some(v) = e.validator else { continue };
            match &e.kind {
                EventKind::OutputPhase { instance, grade } => {
                    ix.phases.entry((*instance, *grade)).or_default().insert(v, Phase { tick: e.tick, logs: BTreeSet::new() });
                }
                EventKind::GaOutput { instance, log, grade } => {
                    let phase = ix.phases.entry((*instance, *grade)).or_default().entry(v).or_default();
                    phase.tick = e.tick;
                    phase.logs.insert(log.clone());
                }
                EventKind::InputSent { instance, log } => {
                    ix.sends.entry((v, MessageKind::GaInput, *instance, log.clone())).or_insert(e.tick);
                    ix.inputs.push((e.tick, v, *instance, log.clone()));
                }
                EventKind::ProposalSent { view, log, .. } => {
                    ix.sends.entry((v, MessageKind::Proposal, *view, log.clone())).or_insert(e.tick);
                    ix.proposals.entry((*view, v)).or_insert((e.tick, log.clone()));
                }
                EventKind::Decided { view, log } => {
                    ix.decisions.push(Decision { tick: e.tick, validator: v, view: *view, log: log.clone() });
                }
                _ => {}
            }
        }
        ix
    }
}

pub(crate) fn check_aborted(trace: &Trace, out: &mut Vec<Violation>) {
    for e in &trace.events {
        if let EventKind::Aborted { reason } = &e.kind {
            out.push(Violation::new(ViolationKind::Aborted, Some(e.tick), e.validator, reason.clone()));
        }
    }
}

/// Honest messages arrive within Δ outside the asynchronous period, and
/// every delivered message was sent by its origin or the origin was corrupt.
pub(crate) fn check_network(trace: &Trace, info: &RunInfo, schedule: &Schedule, ix: &Index, out: &mut Vec<Violation>) {
    let exempt = match (info.asynchrony, info.view_ticks()) {
        (Some(w), Some(vt)) => Some(w.ticks(vt)),
        _ => None,
    };
    for e in &trace.events {
        let EventKind::Delivered { origin, relay, msg, instance, log, sent_at, due_at } = &e.kind else { continue };
        let in_async = exempt.is_some_and(|(a, b)| (a..b).contains(sent_at));
        if !in_async && due_at.saturating_sub(*sent_at) > info.delta {
            out.push(Violation::new(
                ViolationKind::Synchrony,
                Some(e.tick),
                e.validator,
                format!("message from {relay} sent at {sent_at} due at {due_at}"),
            ));
        }
        let sent = ix.sends.get(&(*origin, *msg, *instance, log.clone())).is_some_and(|&t| t <= *sent_at);
        if !sent && !schedule.is_corrupt(*origin, *sent_at) {
            out.push(Violation::new(
                ViolationKind::Authenticity,
                Some(e.tick),
                e.validator,
                format!("{msg:?} {log} for {instance} attributed to honest {origin}, never sent"),
            ));
        }
    }
}

/// Consistency, uniqueness and graded delivery for every GA instance in the trace.
pub(crate) fn check_ga_outputs(ix: &Index, out: &mut Vec<Violation>) {
    for (&(instance, grade), by_validator) in &ix.phases {
        for (&v, phase) in by_validator {
            if let Some((a, b)) = first_conflict(phase.logs.iter()) {
                out.push(Violation::new(
                    ViolationKind::Uniqueness,
                    Some(phase.tick),
                    Some(v),
                    format!("instance {instance} grade {grade}: {a} and {b}"),
                ));
            }
        }
        let all: BTreeSet<&Log> = by_validator.values().flat_map(|p| p.logs.iter()).collect();
        if grade == 0 {
            continue;
        }
        if let Some((a, b)) = first_conflict(all.iter().copied()) {
            out.push(Violation::new(
                ViolationKind::Consistency,
                None,
                None,
                format!("instance {instance} grade {grade}: {a} and {b}"),
            ));
        }
        let Some(lower) = ix.phases.get(&(instance, grade - 1)) else { continue };
        for (&v, phase) in lower {
            if let Some(missing) = all.iter().find(|l| !phase.logs.contains(**l)) {
                out.push(Violation::new(
                    ViolationKind::GradedDelivery,
                    Some(phase.tick),
                    Some(v),
                    format!("instance {instance}: {missing} output with grade {grade} but not with {}", grade - 1),
                ));
            }
        }
    }
}

fn first_conflict<'a>(logs: impl Iterator<Item = &'a Log>) -> Option<(&'a Log, &'a Log)> {
    let logs: Vec<&Log> = logs.collect();
    for (i, a) in logs.iter().enumerate() {
        if let Some(b) = logs[i + 1..].iter().find(|b| a.conflicts(b)) {
            return Some((a, b));
        }
    }
    None
}

/// Validity and integrity of a standalone GA.
pub(crate) fn check_ga_inputs(ix: &Index, out: &mut Vec<Violation>) {
    let initial: Vec<&Log> = ix.inputs.iter().filter(|i| i.0 == 0).map(|i| &i.3).collect();
    if let Some((first, rest)) = initial.split_first() {
        let common = rest.iter().fold((*first).clone(), |acc, l| acc.common_prefix(l));
        for (&(_, grade), by_validator) in &ix.phases {
            for (&v, phase) in by_validator {
                if !phase.logs.contains(&common) {
                    out.push(Violation::new(
                        ViolationKind::Validity,
                        Some(phase.tick),
                        Some(v),
                        format!("common input prefix {common} missing at grade {grade}"),
                    ));
                }
            }
        }
    }
    for (&(_, grade), by_validator) in &ix.phases {
        for (&v, phase) in by_validator {
            for log in &phase.logs {
                if !ix.inputs.iter().any(|i| log.is_prefix_of(&i.3)) {
                    out.push(Violation::new(
                        ViolationKind::Integrity,
                        Some(phase.tick),
                        Some(v),
                        format!("{log} output with grade {grade} extends no honest input"),
                    ));
                }
            }
        }
    }
}

/// Pairwise compatibility of decisions in views accepted by `counts`.
pub(crate) fn check_safety(ix: &Index, counts: impl Fn(u64) -> bool, out: &mut Vec<Violation>) {
    let mut seen: Vec<&Decision> = Vec::new();
    for d in ix.decisions.iter().filter(|d| counts(d.view)) {
        if seen.iter().any(|s| s.log == d.log) {
            continue;
        }
        if let Some(other) = seen.iter().find(|s| s.log.conflicts(&d.log)) {
            out.push(Violation::new(
                ViolationKind::Safety,
                Some(d.tick),
                Some(d.validator),
                format!(
                    "decided {} in view {} conflicting with {} decided by {} in view {}",
                    d.log, d.view, other.log, other.validator, other.view
                ),
            ));
        }
        seen.push(d);
    }
}

/// Window within which a validator that stays honest and awake must decide
/// a good leader's proposal.
pub fn reorg_window(delta: u64) -> u64 {
    8 * delta
}

/// First view whose decisions must all extend a proposal of view `v`.
fn first_binding_view(protocol: ProtocolKind, v: u64) -> u64 {
    match protocol {
        ProtocolKind::Tob2 => v,
        _ => v + 1,
    }
}

/// Good leaders' proposals are extended by every later decision and decided
/// by every validator honest and awake for a full window after the proposal.
pub(crate) fn check_reorg(info: &RunInfo, schedule: &Schedule, ix: &Index, out: &mut Vec<Violation>) {
    let Some(vt) = info.view_ticks() else { return };
    let window = reorg_window(info.delta);
    let runs: Vec<(ValidatorId, Vec<(Tick, Tick)>)> = schedule.validators().map(|v| (v, schedule.honest_runs(v))).collect();
    let mut by_validator: BTreeMap<ValidatorId, Vec<&Decision>> = BTreeMap::new();
    for d in &ix.decisions {
        by_validator.entry(d.validator).or_default().push(d);
    }
    for view in 0.. {
        let t_v = view * vt;
        if t_v >= info.horizon {
            break;
        }
        let Some(leader) = good_leader(schedule, info.seed, view, t_v) else { continue };
        let Some((_, proposal)) = ix.proposals.get(&(view, leader)) else {
            out.push(Violation::new(
                ViolationKind::Reorg,
                Some(t_v),
                Some(leader),
                format!("good leader of view {view} made no proposal"),
            ));
            continue;
        };
        let binding = first_binding_view(info.protocol, view);
        if let Some(d) = ix.decisions.iter().find(|d| d.view >= binding && !proposal.is_prefix_of(&d.log)) {
            out.push(Violation::new(
                ViolationKind::Reorg,
                Some(d.tick),
                Some(d.validator),
                format!("decided {} in view {} without good proposal {proposal} of view {view}", d.log, d.view),
            ));
        }
        for (v, rs) in &runs {
            for &(run_start, run_end) in rs {
                let start = run_start.max(t_v);
                let end = start + window;
                if run_end <= end || end >= info.horizon {
                    continue;
                }
                let decided = by_validator
                    .get(v)
                    .is_some_and(|ds| ds.iter().any(|d| (start..=end).contains(&d.tick) && proposal.is_prefix_of(&d.log)));
                if !decided {
                    out.push(Violation::new(
                        ViolationKind::Reorg,
                        Some(start),
                        Some(*v),
                        format!("awake over [{start}, {end}] without deciding good proposal {proposal} of view {view}"),
                    ));
                }
            }
        }
    }
}
