//! Total-order broadcast with one vote per decision.
//!
//! Views last 4Δ. In view `v` (starting at `t_v = 4Δ·v`):
//!
//! * `t_v`: propose the highest grade-0 output of `GA_{v-1}` plus a fresh block;
//! * `t_v + Δ`: take the highest grade-1 output of `GA_{v-1}` as lock and input
//!   to `GA_v` the max-VRF non-equivocating proposal extending it, or the lock;
//! * `t_v + 2Δ`: decide the highest grade-2 output of `GA_{v-1}`.
//!
//! `GA_v` is a three-grade instance starting at `t_v + Δ`, so its outputs land
//! on the next view's propose, vote and decide ticks. `GA_{-1}` outputs the
//! genesis log at every grade.

use std::collections::BTreeMap;

use crate::error::ProtocolError;
use crate::ga::{GaKind, GaState};
use crate::lmd::VoteBook;
use crate::protocol::{Ctx, InstanceTally, Replica, VoteTally};
use crate::scenario::Eta;
use crate::trace::EventKind;
use crate::types::{highest, vrf, vrf_priority, Log, Message, MessageKind, Tick, ValidatorId, VrfValue};

/// Proposals seen per view, at most two distinct logs per sender.
#[derive(Clone, Debug, Default)]
pub struct ProposalBook {
    views: BTreeMap<u64, BTreeMap<ValidatorId, (VrfValue, Vec<Log>)>>,
}

impl ProposalBook {
    /// Stores a proposal; returns whether it should be forwarded.
    pub fn handle(&mut self, seed: u64, msg: &Message) -> bool {
        if msg.kind != MessageKind::Proposal || !msg.is_well_formed() {
            return false;
        }
        let expected = vrf(seed, msg.sender, msg.view);
        if msg.vrf != Some(expected) {
            return false;
        }
        let entry = self.views.entry(msg.view).or_default().entry(msg.sender).or_insert((expected, Vec::new()));
        if entry.1.len() >= 2 || entry.1.contains(&msg.log) {
            return false;
        }
        entry.1.push(msg.log.clone());
        true
    }

    /// Max-VRF proposal of `view` extending `lock` from a sender that did not
    /// equivocate, or `lock` itself.
    pub fn select_vote(&self, view: u64, lock: &Log) -> Log {
        self.views
            .get(&view)
            .into_iter()
            .flatten()
            .filter(|(_, (_, logs))| logs.len() == 1 && lock.is_prefix_of(&logs[0]))
            .max_by(|a, b| vrf_priority((a.1 .0, *a.0), (b.1 .0, *b.0)))
            .map(|(_, (_, logs))| logs[0].clone())
            .unwrap_or_else(|| lock.clone())
    }

    pub fn forget_before(&mut self, view: u64) {
        self.views = self.views.split_off(&view);
    }
}

/// Graded outputs this validator produced, keyed by `(instance, grade)`.
#[derive(Clone, Debug, Default)]
pub struct OutputLog {
    outputs: BTreeMap<(u64, u8), Vec<Log>>,
}

impl OutputLog {
    /// Highest log of a non-empty output set.
    pub fn highest(&self, instance: u64, grade: u8) -> Result<Option<Log>, ProtocolError> {
        match self.outputs.get(&(instance, grade)) {
            Some(set) if !set.is_empty() => Ok(Some(highest(set)?)),
            _ => Ok(None),
        }
    }

    pub fn insert(&mut self, instance: u64, grade: u8, logs: Vec<Log>) {
        self.outputs.insert((instance, grade), logs);
    }
}

/// Marks the owner awake in every instance covering `now` and runs their
/// output phases, recording the outputs.
pub(crate) fn advance_instances<T: VoteTally>(
    ctx: &mut Ctx<'_>,
    tally: &mut T,
    outputs: &mut OutputLog,
    active: &[(u64, Tick, GaKind)],
) -> Result<(), ProtocolError> {
    for &(instance, start, kind) in active {
        ensure_open(ctx, tally, instance, start, kind);
        let state = tally.instance_mut(instance).expect("just opened");
        if let Some(offset) = state.mark_awake(ctx.now) {
            ctx.emit(EventKind::SnapshotTaken { instance, offset });
        }
        let Some(grade) = state.marks.grade_due(ctx.now) else { continue };
        if let Some(set) = tally.outputs(instance, grade)? {
            ctx.emit(EventKind::OutputPhase { instance, grade });
            for log in &set {
                ctx.emit(EventKind::GaOutput { instance, log: log.clone(), grade });
            }
            outputs.insert(instance, grade, set);
        }
    }
    Ok(())
}

pub(crate) fn ensure_open<T: VoteTally>(ctx: &mut Ctx<'_>, tally: &mut T, instance: u64, start: Tick, kind: GaKind) {
    if tally.instance(instance).is_none() {
        tally.open(ctx, GaState::new(ctx.me, instance, kind, start, ctx.delta));
    }
}

/// Records a received vote and forwards it when new.
pub(crate) fn receive_vote<T: VoteTally>(ctx: &mut Ctx<'_>, tally: &mut T, msg: &Message, start: Tick, kind: GaKind) {
    ensure_open(ctx, tally, msg.view, start, kind);
    if tally.record(ctx, msg.view, msg.sender, &msg.log).forward() {
        ctx.broadcast(msg.clone());
    }
}

/// Casts the owner's own vote into `instance`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn cast_vote<T: VoteTally>(
    ctx: &mut Ctx<'_>,
    tally: &mut T,
    instance: u64,
    start: Tick,
    kind: GaKind,
    view: u64,
    round: u8,
    log: Log,
) {
    ensure_open(ctx, tally, instance, start, kind);
    ctx.emit(EventKind::InputSent { instance, log: log.clone() });
    ctx.emit(EventKind::VoteCast { view, round, log: log.clone() });
    let me = ctx.me;
    tally.record(ctx, instance, me, &log);
    ctx.broadcast(Message::input(me, instance, log));
}

pub(crate) fn propose(ctx: &mut Ctx<'_>, book: &mut ProposalBook, view: u64, candidate: &Log) {
    let log = ctx.extend_with_fresh(candidate, view);
    let value = vrf(ctx.seed, ctx.me, view);
    let msg = Message::proposal(ctx.me, view, log.clone(), value);
    book.handle(ctx.seed, &msg);
    ctx.emit(EventKind::ProposalSent { view, log, vrf: value });
    ctx.broadcast(msg);
}

/// Emits a decision, keeping the longest decided log.
pub(crate) fn decide(ctx: &mut Ctx<'_>, decided: &mut Log, view: u64, log: Log) -> Result<(), ProtocolError> {
    if decided.conflicts(&log) {
        return Err(ProtocolError::SafetyViolation { validator: ctx.me, old: decided.clone(), new: log });
    }
    ctx.emit(EventKind::Decided { view, log: log.clone() });
    if log.len() > decided.len() {
        *decided = log;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct TobSingle<T: VoteTally> {
    tally: T,
    outputs: OutputLog,
    proposals: ProposalBook,
    decided: Log,
}

/// The plain protocol: each `GA_v` tallies only view-`v` votes.
pub type Tob1 = TobSingle<InstanceTally>;

/// The variant counting latest unexpired votes.
pub type TobLmd = TobSingle<VoteBook>;

impl Tob1 {
    pub fn new() -> Self {
        TobSingle::with_tally(InstanceTally::default())
    }
}

impl Default for Tob1 {
    fn default() -> Self {
        Self::new()
    }
}

impl TobLmd {
    pub fn with_eta(eta: Eta) -> Self {
        TobSingle::with_tally(VoteBook::new(eta))
    }
}

const KIND: GaKind = GaKind::ThreeGrade;

impl<T: VoteTally> TobSingle<T> {
    pub fn with_tally(tally: T) -> Self {
        Self { tally, outputs: OutputLog::default(), proposals: ProposalBook::default(), decided: Log::genesis() }
    }

    pub fn decided(&self) -> &Log {
        &self.decided
    }

    pub fn tally(&self) -> &T {
        &self.tally
    }

    fn view_ticks(delta: u64) -> u64 {
        4 * delta
    }

    /// Start tick of `GA_v`.
    pub fn instance_start(view: u64, delta: u64) -> Tick {
        view * Self::view_ticks(delta) + delta
    }

    /// Instances whose lifetime covers `now`.
    fn active(now: Tick, delta: u64) -> Vec<(u64, Tick, GaKind)> {
        let vt = Self::view_ticks(delta);
        if now < delta {
            return Vec::new();
        }
        let last = (now - delta) / vt;
        let first = now.saturating_sub(delta + KIND.duration() * delta).div_ceil(vt);
        (first..=last).map(|v| (v, Self::instance_start(v, delta), KIND)).collect()
    }

    /// Highest output of `GA_{view-1}` at `grade`.
    fn previous(&self, view: u64, grade: u8) -> Result<Option<Log>, ProtocolError> {
        match view.checked_sub(1) {
            None => Ok(Some(Log::genesis())),
            Some(prev) => self.outputs.highest(prev, grade),
        }
    }
}

impl<T: VoteTally> Replica for TobSingle<T> {
    fn on_message(&mut self, ctx: &mut Ctx<'_>, msg: &Message) -> Result<(), ProtocolError> {
        match msg.kind {
            MessageKind::GaInput => {
                if msg.is_well_formed() {
                    let start = Self::instance_start(msg.view, ctx.delta);
                    receive_vote(ctx, &mut self.tally, msg, start, KIND);
                }
            }
            MessageKind::Proposal => {
                let vote_tick = msg.view * Self::view_ticks(ctx.delta) + ctx.delta;
                if ctx.now <= vote_tick && self.proposals.handle(ctx.seed, msg) {
                    ctx.broadcast(msg.clone());
                }
            }
        }
        Ok(())
    }

    fn on_tick(&mut self, ctx: &mut Ctx<'_>) -> Result<(), ProtocolError> {
        let delta = ctx.delta;
        let vt = Self::view_ticks(delta);
        advance_instances(ctx, &mut self.tally, &mut self.outputs, &Self::active(ctx.now, delta))?;

        let view = ctx.now / vt;
        let phase = ctx.now % vt;
        if phase == 0 {
            if let Some(candidate) = self.previous(view, 0)? {
                propose(ctx, &mut self.proposals, view, &candidate);
            }
        } else if phase == delta {
            if let Some(lock) = self.previous(view, 1)? {
                let vote = self.proposals.select_vote(view, &lock);
                let start = Self::instance_start(view, delta);
                cast_vote(ctx, &mut self.tally, view, start, KIND, view, 1, vote);
            }
            self.proposals.forget_before(view + 1);
        } else if phase == 2 * delta {
            if let Some(log) = self.previous(view, 2)? {
                decide(ctx, &mut self.decided, view, log)?;
            }
        }
        Ok(())
    }
}
