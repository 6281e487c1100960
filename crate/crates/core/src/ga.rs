//! Graded Agreement engines with two grades (0, 1) and three grades (0, 1, 2).
//!
//! One [`GaState`] holds one validator's view of one instance. Inputs are
//! tracked per sender as either a unique record `V(i) = (log, received_at)`
//! or equivocation evidence `E(i)`. Snapshots are tick markers: since a
//! record never changes its log (it can only be dropped when its sender
//! equivocates), `V^a ∩ V` is the set of current records received by `a`.
//!
//! Timeline relative to the instance start, in multiples of Δ:
//!
//! | kind  | input | snapshots | grade 0 | grade 1 | grade 2 |
//! |-------|-------|-----------|---------|---------|---------|
//! | two   | 0     | 1         | 2       | 3 (needs awake at 1) | |
//! | three | 0     | 1, 2      | 3       | 4 (needs awake at 2) | 5 (needs awake at 1) |

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::GaError;
use crate::types::{Log, Message, Tick, ValidatorId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GaKind {
    TwoGrade,
    ThreeGrade,
}

impl GaKind {
    pub fn max_grade(self) -> u8 {
        match self {
            GaKind::TwoGrade => 1,
            GaKind::ThreeGrade => 2,
        }
    }

    /// Output phase offset (in Δ) for a grade.
    pub fn output_offset(self, grade: u8) -> Option<u64> {
        match (self, grade) {
            (GaKind::TwoGrade, 0) => Some(2),
            (GaKind::TwoGrade, 1) => Some(3),
            (GaKind::ThreeGrade, 0) => Some(3),
            (GaKind::ThreeGrade, 1) => Some(4),
            (GaKind::ThreeGrade, 2) => Some(5),
            _ => None,
        }
    }

    /// Snapshot offset (in Δ) whose records support a grade, if any.
    pub fn snapshot_for_grade(self, grade: u8) -> Option<u64> {
        match (self, grade) {
            (GaKind::TwoGrade, 1) => Some(1),
            (GaKind::ThreeGrade, 1) => Some(2),
            (GaKind::ThreeGrade, 2) => Some(1),
            _ => None,
        }
    }

    pub fn snapshot_offsets(self) -> &'static [u64] {
        match self {
            GaKind::TwoGrade => &[1],
            GaKind::ThreeGrade => &[1, 2],
        }
    }

    /// Total duration in Δ.
    pub fn duration(self) -> u64 {
        match self {
            GaKind::TwoGrade => 3,
            GaKind::ThreeGrade => 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub log: Log,
    pub received_at: Tick,
}

/// What happened to a delivered input. Anything but `Ignored` is forwarded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputOutcome {
    Recorded,
    EquivocationRecorded,
    Ignored,
}

impl InputOutcome {
    pub fn forward(self) -> bool {
        !matches!(self, InputOutcome::Ignored)
    }
}

/// A log output with a grade.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedOutput {
    pub log: Log,
    pub grade: u8,
}

/// Phase ticks at which the owner was awake, plus the snapshots taken.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseMarks {
    pub kind: GaKind,
    pub started_at: Tick,
    pub delta: u64,
    awake: BTreeSet<u64>,
    snapshots: BTreeSet<u64>,
}

impl PhaseMarks {
    pub fn new(kind: GaKind, started_at: Tick, delta: u64) -> Self {
        assert!(delta > 0, "delta must be positive");
        Self { kind, started_at, delta, awake: BTreeSet::new(), snapshots: BTreeSet::new() }
    }

    pub fn phase_tick(&self, offset: u64) -> Tick {
        self.started_at + offset * self.delta
    }

    pub fn end(&self) -> Tick {
        self.phase_tick(self.kind.duration())
    }

    fn offset_of(&self, now: Tick) -> Option<u64> {
        if now < self.started_at || !(now - self.started_at).is_multiple_of(self.delta) {
            return None;
        }
        let k = (now - self.started_at) / self.delta;
        (k <= self.kind.duration()).then_some(k)
    }

    /// Records that the owner is awake at `now`; takes the snapshot due at
    /// this tick, if any, and returns its offset.
    pub fn mark_awake(&mut self, now: Tick) -> Option<u64> {
        let k = self.offset_of(now)?;
        self.awake.insert(k);
        if self.kind.snapshot_offsets().contains(&k) && self.snapshots.insert(k) {
            Some(k)
        } else {
            None
        }
    }

    pub fn take_snapshot(&mut self, now: Tick) -> Result<(), GaError> {
        match self.offset_of(now) {
            Some(k) if self.kind.snapshot_offsets().contains(&k) => {
                self.awake.insert(k);
                self.snapshots.insert(k);
                Ok(())
            }
            _ => Err(GaError::NotSnapshotTick(now)),
        }
    }

    pub fn has_snapshot(&self, tick: Tick) -> bool {
        self.offset_of(tick).is_some_and(|k| self.snapshots.contains(&k))
    }

    pub fn was_awake_at(&self, offset: u64) -> bool {
        self.awake.contains(&offset)
    }

    /// Grade 0 only needs the owner awake at the output phase itself.
    pub fn participation_allowed(&self, grade: u8) -> bool {
        if grade > self.kind.max_grade() {
            return false;
        }
        match self.kind.snapshot_for_grade(grade) {
            None => true,
            Some(k) => self.snapshots.contains(&k),
        }
    }

    /// The snapshot tick gating `grade`, or `None` for grade 0.
    pub fn required_snapshot(&self, grade: u8) -> Option<Tick> {
        self.kind.snapshot_for_grade(grade).map(|k| self.phase_tick(k))
    }

    pub fn output_tick(&self, grade: u8) -> Option<Tick> {
        self.kind.output_offset(grade).map(|k| self.phase_tick(k))
    }

    /// Grade whose output phase falls on `now`, if any.
    pub fn grade_due(&self, now: Tick) -> Option<u8> {
        (0..=self.kind.max_grade()).find(|&g| self.output_tick(g) == Some(now))
    }
}

/// One validator's state for one GA instance.
#[derive(Clone, Debug)]
pub struct GaState {
    pub owner: ValidatorId,
    pub instance: u64,
    pub marks: PhaseMarks,
    records: BTreeMap<ValidatorId, InputRecord>,
    evidence: BTreeMap<ValidatorId, (Log, Log)>,
}

/// Creates the state for a new instance and the broadcast of the owner's
/// input, if it has one.
pub fn start_instance(
    owner: ValidatorId,
    instance: u64,
    kind: GaKind,
    input: Option<Log>,
    now: Tick,
    delta: u64,
) -> (GaState, Option<Message>) {
    let state = GaState::new(owner, instance, kind, now, delta);
    let msg = input.map(|log| Message::input(owner, instance, log));
    (state, msg)
}

impl GaState {
    pub fn new(owner: ValidatorId, instance: u64, kind: GaKind, started_at: Tick, delta: u64) -> Self {
        Self {
            owner,
            instance,
            marks: PhaseMarks::new(kind, started_at, delta),
            records: BTreeMap::new(),
            evidence: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> GaKind {
        self.marks.kind
    }

    pub fn handle_input(&mut self, sender: ValidatorId, log: Log, now: Tick) -> InputOutcome {
        if self.evidence.contains_key(&sender) {
            return InputOutcome::Ignored;
        }
        match self.records.get(&sender) {
            None => {
                self.records.insert(sender, InputRecord { log, received_at: now });
                InputOutcome::Recorded
            }
            Some(rec) if rec.log == log => InputOutcome::Ignored,
            Some(_) => {
                let old = self.records.remove(&sender).expect("present").log;
                self.evidence.insert(sender, (old, log));
                InputOutcome::EquivocationRecorded
            }
        }
    }

    pub fn record(&self, sender: ValidatorId) -> Option<&InputRecord> {
        self.records.get(&sender)
    }

    pub fn evidence(&self, sender: ValidatorId) -> Option<&(Log, Log)> {
        self.evidence.get(&sender)
    }

    pub fn records(&self) -> impl Iterator<Item = (ValidatorId, &InputRecord)> {
        self.records.iter().map(|(k, v)| (*k, v))
    }

    pub fn equivocators(&self) -> impl Iterator<Item = ValidatorId> + '_ {
        self.evidence.keys().copied()
    }

    /// `|S| = |dom(V) ∪ dom(E)|`.
    pub fn sender_count(&self) -> usize {
        self.records.len() + self.evidence.len()
    }

    pub fn senders(&self) -> BTreeSet<ValidatorId> {
        self.records.keys().chain(self.evidence.keys()).copied().collect()
    }

    pub fn mark_awake(&mut self, now: Tick) -> Option<u64> {
        self.marks.mark_awake(now)
    }

    pub fn take_snapshot(&mut self, now: Tick) -> Result<(), GaError> {
        self.marks.take_snapshot(now)
    }

    pub fn participation_allowed(&self, grade: u8) -> bool {
        self.marks.participation_allowed(grade)
    }

    /// Records in `V^snap ∩ V` (or all of `V` without a snapshot).
    pub fn supporting_records(&self, snap: Option<Tick>) -> Result<Vec<&InputRecord>, GaError> {
        if let Some(a) = snap {
            if !self.marks.has_snapshot(a) {
                return Err(GaError::MissingSnapshot(a));
            }
        }
        Ok(self.records.values().filter(|r| snap.is_none_or(|a| r.received_at <= a)).collect())
    }

    /// `|V^snap_Λ ∩ V_Λ|`.
    pub fn support(&self, log: &Log, snap: Option<Tick>) -> Result<usize, GaError> {
        Ok(self.supporting_records(snap)?.into_iter().filter(|r| log.is_prefix_of(&r.log)).count())
    }

    /// Every log whose support clears the strict majority of senders, as an
    /// ascending chain. `Ok(None)` when the owner may not participate.
    pub fn outputs_for_grade(&self, grade: u8, _now: Tick) -> Result<Option<Vec<Log>>, GaError> {
        if grade > self.kind().max_grade() {
            return Err(GaError::BadGrade(grade));
        }
        if !self.participation_allowed(grade) {
            return Ok(None);
        }
        let snap = self.marks.required_snapshot(grade);
        let support = self.supporting_records(snap)?;
        majority_chain(support.iter().map(|r| &r.log), self.sender_count()).map(Some)
    }
}

/// All logs `Λ` with `2·|{e : Λ ⪯ e}| > senders`, ascending.
///
/// Walks down from genesis keeping only entries that match the current
/// prefix. Two siblings can only both clear the threshold if the entries
/// outnumber the senders, which is reported as an incompatible output.
pub fn majority_chain<'a, I>(entries: I, senders: usize) -> Result<Vec<Log>, GaError>
where
    I: IntoIterator<Item = &'a Log>,
{
    let mut live: Vec<&Log> = entries.into_iter().collect();
    let mut out = Vec::new();
    let passes = |count: usize| 2 * count > senders;
    if !passes(live.len()) {
        return Ok(out);
    }
    out.push(Log::genesis());
    let mut depth = 1;
    loop {
        let mut groups: Vec<(crate::types::BlockId, Vec<&Log>)> = Vec::new();
        for e in live.iter().filter(|e| e.len() > depth) {
            let b = e.blocks()[depth];
            match groups.iter_mut().find(|(id, _)| *id == b) {
                Some((_, v)) => v.push(e),
                None => groups.push((b, vec![e])),
            }
        }
        let mut winners = groups.into_iter().filter(|(_, v)| passes(v.len()));
        let Some((_, next)) = winners.next() else { break };
        if let Some((_, other)) = winners.next() {
            return Err(GaError::IncompatibleOutput { a: next[0].prefix(depth + 1), b: other[0].prefix(depth + 1) });
        }
        out.push(next[0].prefix(depth + 1));
        live = next;
        depth += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{BlockId, GENESIS};

    fn log(ids: &[u64]) -> Log {
        let mut v = vec![GENESIS];
        v.extend(ids.iter().map(|&i| BlockId(i)));
        Log::from_blocks(v).unwrap()
    }

    fn vid(i: u32) -> ValidatorId {
        ValidatorId(i)
    }

    #[test]
    fn start_instance_broadcasts_only_with_input() {
        let (_, msg) = start_instance(vid(0), 3, GaKind::TwoGrade, Some(log(&[1])), 0, 1);
        let msg = msg.unwrap();
        assert_eq!(msg.log, log(&[1]));
        assert_eq!(msg.view, 3);
        let (state, msg) = start_instance(vid(0), 3, GaKind::TwoGrade, None, 0, 1);
        assert!(msg.is_none());
        assert_eq!(state.sender_count(), 0);
    }

    #[test]
    fn conflicting_inputs_from_distinct_senders_are_not_equivocation() {
        let mut s = GaState::new(vid(0), 0, GaKind::TwoGrade, 0, 1);
        assert_eq!(s.handle_input(vid(1), log(&[1]), 0), InputOutcome::Recorded);
        assert_eq!(s.handle_input(vid(2), log(&[2]), 0), InputOutcome::Recorded);
        assert_eq!(s.equivocators().count(), 0);
    }

    #[test]
    fn handle_input_transitions() {
        let mut s = GaState::new(vid(0), 0, GaKind::TwoGrade, 0, 2);
        assert_eq!(s.handle_input(vid(1), log(&[1]), 1), InputOutcome::Recorded);
        assert_eq!(s.record(vid(1)).unwrap().received_at, 1);
        assert_eq!(s.handle_input(vid(1), log(&[1]), 2), InputOutcome::Ignored);
        assert_eq!(s.record(vid(1)).unwrap().received_at, 1);
        assert_eq!(s.sender_count(), 1);
        assert_eq!(s.handle_input(vid(1), log(&[2]), 3), InputOutcome::EquivocationRecorded);
        assert!(s.record(vid(1)).is_none());
        assert_eq!(s.evidence(vid(1)).unwrap(), &(log(&[1]), log(&[2])));
        assert_eq!(s.sender_count(), 1);
        assert_eq!(s.handle_input(vid(1), log(&[3]), 4), InputOutcome::Ignored);
        assert_eq!(s.evidence(vid(1)).unwrap(), &(log(&[1]), log(&[2])));
    }

    #[test]
    fn snapshots_follow_wake_marks() {
        let mut s = GaState::new(vid(0), 0, GaKind::TwoGrade, 0, 4);
        assert_eq!(s.mark_awake(4), Some(1));
        assert!(s.participation_allowed(1));

        let asleep = GaState::new(vid(0), 0, GaKind::TwoGrade, 0, 4);
        assert!(!asleep.participation_allowed(1));
        assert_eq!(asleep.outputs_for_grade(1, 12).unwrap(), None);

        let mut three = GaState::new(vid(0), 0, GaKind::ThreeGrade, 10, 1);
        three.mark_awake(11);
        three.mark_awake(12);
        assert!(three.marks.has_snapshot(11) && three.marks.has_snapshot(12));
        assert!(three.take_snapshot(13).is_err());
    }

    #[test]
    fn participation_by_wake_history() {
        let mut s = GaState::new(vid(0), 0, GaKind::ThreeGrade, 0, 1);
        s.mark_awake(1);
        s.mark_awake(5);
        assert!(s.participation_allowed(2));
        assert!(!s.participation_allowed(1));
        assert!(s.participation_allowed(0));

        let mut late = GaState::new(vid(0), 0, GaKind::ThreeGrade, 0, 1);
        late.mark_awake(5);
        assert!(!late.participation_allowed(2));
        assert!(late.participation_allowed(0));
    }

    #[test]
    fn support_counts_and_snapshot_filter() {
        let mut s = GaState::new(vid(0), 0, GaKind::TwoGrade, 0, 1);
        s.mark_awake(1);
        s.handle_input(vid(1), log(&[1]), 0);
        s.handle_input(vid(2), log(&[1, 2]), 1);
        s.handle_input(vid(3), log(&[1, 3]), 2);
        s.handle_input(vid(4), log(&[5]), 0);
        assert_eq!(s.support(&log(&[1]), None).unwrap(), 3);
        assert_eq!(s.support(&log(&[1]), Some(1)).unwrap(), 2);
        assert_eq!(s.support(&log(&[1]), Some(0)), Err(GaError::MissingSnapshot(0)));
        s.handle_input(vid(2), log(&[7]), 2);
        assert_eq!(s.support(&log(&[1]), None).unwrap(), 2);
        assert_eq!(s.support(&log(&[1]), Some(1)).unwrap(), 1);
    }

    #[test]
    fn sender_count_examples() {
        let mut s = GaState::new(vid(0), 0, GaKind::TwoGrade, 0, 1);
        assert_eq!(s.sender_count(), 0);
        for i in 1..=4 {
            s.handle_input(vid(i), log(&[1]), 0);
        }
        s.handle_input(vid(5), log(&[1]), 0);
        s.handle_input(vid(5), log(&[2]), 0);
        assert_eq!(s.sender_count(), 5);
    }

    #[test]
    fn strict_majority_threshold() {
        let mut s = GaState::new(vid(0), 0, GaKind::TwoGrade, 0, 1);
        for i in 0..3 {
            s.handle_input(vid(i), log(&[1]), 0);
        }
        s.handle_input(vid(3), log(&[2]), 0);
        s.handle_input(vid(4), log(&[3]), 0);
        let out = s.outputs_for_grade(0, 2).unwrap().unwrap();
        assert_eq!(out, vec![log(&[]), log(&[1])]);

        let mut t = GaState::new(vid(0), 0, GaKind::TwoGrade, 0, 1);
        t.handle_input(vid(0), log(&[1]), 0);
        t.handle_input(vid(1), log(&[1]), 0);
        t.handle_input(vid(2), log(&[2]), 0);
        t.handle_input(vid(3), log(&[3]), 0);
        let out = t.outputs_for_grade(0, 2).unwrap().unwrap();
        assert_eq!(out, vec![log(&[])]);
    }

    #[test]
    fn unanimous_honest_inputs_output_every_grade() {
        // 4 always-awake honest validators input extensions of [G,1]; 3 silent.
        let mut s = GaState::new(vid(0), 0, GaKind::ThreeGrade, 0, 1);
        for t in 0..=5 {
            s.mark_awake(t);
        }
        for i in 0..4 {
            s.handle_input(vid(i), log(&[1, 10 + i as u64]), 0);
        }
        for g in 0..=2 {
            let out = s.outputs_for_grade(g, 3 + g as u64).unwrap().unwrap();
            assert!(out.contains(&log(&[1])), "grade {g}: {out:?}");
        }
    }

    #[test]
    fn majority_chain_flags_impossible_split() {
        let a = log(&[1]);
        let b = log(&[2]);
        let entries = [a.clone(), a, b.clone(), b];
        assert!(matches!(majority_chain(entries.iter(), 3), Err(GaError::IncompatibleOutput { .. })));
    }

    #[test]
    fn majority_chain_matches_direct_support() {
        let entries = [log(&[1, 2, 3]), log(&[1, 2]), log(&[1, 4]), log(&[5])];
        let chain = majority_chain(entries.iter(), 4).unwrap();
        assert_eq!(chain, vec![log(&[]), log(&[1])]);
        let chain = majority_chain(entries.iter(), 2).unwrap();
        assert_eq!(chain, vec![log(&[]), log(&[1]), log(&[1, 2])]);
    }
}
