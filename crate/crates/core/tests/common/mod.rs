//! Reference evaluator for a standalone two-grade GA, computed directly from
//! the deliveries recorded in a trace, plus the small-instance enumeration.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use tob_core::scenario::{AdversaryStrategy, DelayPolicy, GaInput, ProtocolKind, Scenario, ScriptedSend, SleepInterval};
use tob_core::{EventKind, Log, MessageKind, Tick, Trace, ValidatorId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Property {
    Consistency,
    Uniqueness,
    GradedDelivery,
    Validity,
    Integrity,
}

#[derive(Debug, Default)]
pub struct Reference {
    /// Output sets of the validators taking part in each output phase.
    pub outputs: BTreeMap<(ValidatorId, u8), BTreeSet<Log>>,
    pub violated: BTreeSet<Property>,
}

struct Receipt {
    tick: Tick,
    sent_at: Tick,
    origin: ValidatorId,
    log: Log,
}

/// What `i` had received when acting at tick `t`: everything from earlier
/// ticks plus the deliveries of tick `t` that were sent before `t`.
fn seen_at(r: &Receipt, t: Tick) -> bool {
    r.tick < t || (r.tick == t && r.sent_at < t)
}

fn prefixes(log: &Log) -> impl Iterator<Item = Log> + '_ {
    (1..=log.len()).map(|k| log.prefix(k))
}

/// Senders of `rs` and the single log of each sender that sent only one.
fn tally<'a>(rs: impl Iterator<Item = &'a Receipt>) -> (BTreeSet<ValidatorId>, BTreeMap<ValidatorId, Log>) {
    let mut logs: BTreeMap<ValidatorId, BTreeSet<Log>> = BTreeMap::new();
    for r in rs {
        logs.entry(r.origin).or_default().insert(r.log.clone());
    }
    let senders = logs.keys().copied().collect();
    let single = logs.into_iter().filter(|(_, l)| l.len() == 1).map(|(o, l)| (o, l.into_iter().next().unwrap())).collect();
    (senders, single)
}

fn majority(support: &BTreeMap<ValidatorId, Log>, senders: usize, candidates: &BTreeSet<Log>) -> BTreeSet<Log> {
    candidates.iter().filter(|c| 2 * support.values().filter(|l| c.is_prefix_of(l)).count() > senders).cloned().collect()
}

pub fn reference_ga2(trace: &Trace) -> Reference {
    let info = trace.header().unwrap();
    let d = info.delta;
    let n = info.n as usize;
    let mut receipts: Vec<Vec<Receipt>> = (0..n).map(|_| Vec::new()).collect();
    let mut flips: Vec<Vec<(Tick, bool)>> = vec![Vec::new(); n];
    let mut corrupted: Vec<Option<Tick>> = vec![None; n];
    let mut honest_inputs: Vec<(Tick, Log)> = Vec::new();
    for e in &trace.events {
        let Some(v) = e.validator else { continue };
        match &e.kind {
            EventKind::Wake => flips[v.index()].push((e.tick, true)),
            EventKind::Sleep => flips[v.index()].push((e.tick, false)),
            EventKind::Corrupted => corrupted[v.index()] = Some(e.tick),
            EventKind::InputSent { log, .. } => {
                honest_inputs.push((e.tick, log.clone()));
                receipts[v.index()].push(Receipt { tick: e.tick, sent_at: e.tick, origin: v, log: log.clone() });
            }
            EventKind::Delivered { origin, msg: MessageKind::GaInput, log, sent_at, .. } => {
                receipts[v.index()].push(Receipt { tick: e.tick, sent_at: *sent_at, origin: *origin, log: log.clone() });
            }
            _ => {}
        }
    }
    let awake =
        |v: usize, t: Tick| flips[v].iter().rev().find(|f| f.0 <= t).is_some_and(|f| f.1) && corrupted[v].is_none_or(|c| c > t);

    let mut out = Reference::default();
    for (i, rs) in receipts.iter().enumerate() {
        let candidates: BTreeSet<Log> = rs.iter().flat_map(|r| prefixes(&r.log).collect::<Vec<_>>()).collect();
        if awake(i, 2 * d) {
            let (senders, v2) = tally(rs.iter().filter(|r| seen_at(r, 2 * d)));
            out.outputs.insert((ValidatorId(i as u32), 0), majority(&v2, senders.len(), &candidates));
        }
        if awake(i, d) && awake(i, 3 * d) {
            let (senders, v3) = tally(rs.iter().filter(|r| seen_at(r, 3 * d)));
            let early: BTreeSet<ValidatorId> = rs.iter().filter(|r| r.tick <= d).map(|r| r.origin).collect();
            let both: BTreeMap<ValidatorId, Log> = v3.into_iter().filter(|(o, _)| early.contains(o)).collect();
            out.outputs.insert((ValidatorId(i as u32), 1), majority(&both, senders.len(), &candidates));
        }
    }

    for set in out.outputs.values() {
        if set.iter().any(|a| set.iter().any(|b| a.conflicts(b))) {
            out.violated.insert(Property::Uniqueness);
        }
        if set.iter().any(|l| !honest_inputs.iter().any(|(_, h)| l.is_prefix_of(h))) {
            out.violated.insert(Property::Integrity);
        }
    }
    let grade1: BTreeSet<&Log> = out.outputs.iter().filter(|((_, g), _)| *g == 1).flat_map(|(_, s)| s.iter()).collect();
    if grade1.iter().any(|a| grade1.iter().any(|b| a.conflicts(b))) {
        out.violated.insert(Property::Consistency);
    }
    for ((_, g), set) in &out.outputs {
        if *g == 0 && grade1.iter().any(|l| !set.contains(*l)) {
            out.violated.insert(Property::GradedDelivery);
        }
    }
    let initial: Vec<&Log> = honest_inputs.iter().filter(|(t, _)| *t == 0).map(|(_, l)| l).collect();
    if let Some(first) = initial.first() {
        let common = initial.iter().fold((*first).clone(), |acc, l| acc.common_prefix(l));
        if out.outputs.values().any(|set| !set.contains(&common)) {
            out.violated.insert(Property::Validity);
        }
    }
    out
}

/// Outputs as recorded by the implementation.
pub fn recorded_outputs(trace: &Trace) -> BTreeMap<(ValidatorId, u8), BTreeSet<Log>> {
    let mut out: BTreeMap<(ValidatorId, u8), BTreeSet<Log>> = BTreeMap::new();
    for e in &trace.events {
        let Some(v) = e.validator else { continue };
        match &e.kind {
            EventKind::OutputPhase { grade, .. } => {
                out.entry((v, *grade)).or_default();
            }
            EventKind::GaOutput { grade, log, .. } => {
                out.entry((v, *grade)).or_default().insert(log.clone());
            }
            _ => {}
        }
    }
    out
}

/// When an adversarial message reaches its recipient, relative to the
/// recipient's own step in that tick: `(send_tick, delay)`.
pub const SLOTS: [(Tick, Tick); 5] = [(0, 0), (0, 1), (1, 1), (2, 0), (2, 1)];

/// What the byzantine validator sends to one recipient.
#[derive(Clone, Copy, Debug)]
pub enum Choice {
    Nothing,
    One(&'static str, usize),
    Both(usize, usize),
}

pub fn choices() -> Vec<Choice> {
    let mut out = vec![Choice::Nothing];
    for path in ["a", "b"] {
        for s in 0..SLOTS.len() {
            out.push(Choice::One(path, s));
        }
    }
    for sa in 0..SLOTS.len() {
        for sb in 0..SLOTS.len() {
            out.push(Choice::Both(sa, sb));
        }
    }
    out
}

pub const BYZANTINE: ValidatorId = ValidatorId(3);
pub const LATE: ValidatorId = ValidatorId(4);

/// n = 5, Δ = 1: validators 0, 1 and 2 honest and awake with inputs from `inputs`,
/// validator 3 byzantine and scripted by `per_recipient`, validator 4
/// honest but asleep until 2Δ.
pub fn small_instance(inputs: [&str; 3], per_recipient: [Choice; 3]) -> Scenario {
    let mut s = Scenario::new(5, 1, ProtocolKind::Ga2, 4);
    s.byzantine = vec![BYZANTINE];
    s.adversary = AdversaryStrategy::Scripted;
    s.delay = DelayPolicy::Max;
    s.sleep = vec![SleepInterval { validator: LATE, from: 0, until: 2 }];
    s.input = inputs.iter().enumerate().map(|(i, p)| GaInput { validator: ValidatorId(i as u32), path: (*p).into() }).collect();
    s.input.push(GaInput { validator: LATE, path: "a".into() });
    for (r, c) in per_recipient.iter().enumerate() {
        let row = |path: &str, slot: usize| ScriptedSend {
            kind: MessageKind::GaInput,
            sender: BYZANTINE,
            recipient: ValidatorId(r as u32),
            view: 0,
            path: path.into(),
            send_tick: SLOTS[slot].0,
            delay: SLOTS[slot].1,
        };
        match *c {
            Choice::Nothing => {}
            Choice::One(p, slot) => s.script.push(row(p, slot)),
            Choice::Both(sa, sb) => {
                s.script.push(row("a", sa));
                s.script.push(row("b", sb));
            }
        }
    }
    s
}

/// Honest input patterns up to swapping the two candidate blocks.
pub const INPUT_PATTERNS: [[&str; 3]; 4] = [["a", "a", "a"], ["a", "a", "b"], ["a", "b", "a"], ["a", "b", "b"]];

/// Every case of the enumeration.
pub fn all_cases() -> impl Iterator<Item = Scenario> {
    let cs = choices();
    INPUT_PATTERNS.into_iter().flat_map(move |inputs| {
        let cs = cs.clone();
        let k = cs.len();
        (0..k * k * k).map(move |idx| small_instance(inputs, [cs[idx % k], cs[idx / k % k], cs[idx / (k * k)]]))
    })
}
