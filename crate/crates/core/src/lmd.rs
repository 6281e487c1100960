//! Latest-unexpired-vote tallies with an expiration period η.
//!
//! Votes are kept per `(sender, view)` slot with the same record and
//! evidence rules as a single GA instance. The tallies of `GA_v` look at
//! views `[v - η, v]`: a sender with evidence in any of them is excluded,
//! every other sender contributes only its vote of highest view. With
//! `η = 0` this reduces to the per-instance tally.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::GaError;
use crate::ga::{majority_chain, GaState, InputOutcome, InputRecord};
use crate::protocol::{record_input, Ctx, VoteTally};
use crate::scenario::Eta;
use crate::trace::EventKind;
use crate::types::{Log, Tick, ValidatorId};

#[derive(Clone, Debug)]
pub struct VoteBook {
    pub eta: Eta,
    views: BTreeMap<u64, GaState>,
}

impl VoteBook {
    pub fn new(eta: Eta) -> Self {
        Self { eta, views: BTreeMap::new() }
    }

    fn window(&self, v: u64) -> impl DoubleEndedIterator<Item = (&u64, &GaState)> {
        self.views.range(self.eta.window_start(v)..=v)
    }

    /// Slot-level handling; the caller must have opened view `view`.
    pub fn handle_vote(&mut self, sender: ValidatorId, view: u64, log: Log, now: Tick) -> InputOutcome {
        self.views.get_mut(&view).expect("view opened before voting").handle_input(sender, log, now)
    }

    /// Whether `sender` has equivocation evidence in some view of the window of `v`.
    pub fn is_equivocator(&self, sender: ValidatorId, v: u64) -> bool {
        self.window(v).any(|(_, s)| s.evidence(sender).is_some())
    }

    /// Senders with any record or evidence in the window of `v`.
    pub fn senders(&self, v: u64) -> BTreeSet<ValidatorId> {
        self.window(v).flat_map(|(_, s)| s.senders()).collect()
    }

    /// The vote of highest view within the window of `v`, unless the sender
    /// is a known equivocator there.
    pub fn latest_unexpired(&self, sender: ValidatorId, v: u64) -> Option<(&InputRecord, u64)> {
        if self.is_equivocator(sender, v) {
            return None;
        }
        self.window(v).rev().find_map(|(w, s)| s.record(sender).map(|r| (r, *w)))
    }

    fn latest_votes(&self, v: u64, snap: Option<Tick>) -> Vec<&InputRecord> {
        self.senders(v)
            .into_iter()
            .filter_map(|i| self.latest_unexpired(i, v))
            .map(|(r, _)| r)
            .filter(|r| snap.is_none_or(|a| r.received_at <= a))
            .collect()
    }

    /// Latest votes extending `log` that were received by `snap`.
    pub fn support_lmd(&self, log: &Log, snap: Option<Tick>, v: u64) -> Result<usize, GaError> {
        if let Some(a) = snap {
            let marked = self.views.get(&v).is_some_and(|s| s.marks.has_snapshot(a));
            if !marked {
                return Err(GaError::MissingSnapshot(a));
            }
        }
        Ok(self.latest_votes(v, snap).into_iter().filter(|r| log.is_prefix_of(&r.log)).count())
    }
}

impl VoteTally for VoteBook {
    fn instance(&self, instance: u64) -> Option<&GaState> {
        self.views.get(&instance)
    }

    fn instance_mut(&mut self, instance: u64) -> Option<&mut GaState> {
        self.views.get_mut(&instance)
    }

    fn open(&mut self, ctx: &mut Ctx<'_>, state: GaState) {
        let v = state.instance;
        if self.views.contains_key(&v) {
            return;
        }
        self.views.insert(v, state);
        if let Eta::Finite(eta) = self.eta {
            if eta >= 1 && v > eta {
                let dropped = v - eta - 1;
                let senders: BTreeSet<ValidatorId> =
                    self.views.get(&dropped).map(|s| s.records().map(|(i, _)| i).collect()).unwrap_or_default();
                for sender in senders {
                    let newer = self.views.range(dropped + 1..v).any(|(_, s)| s.record(sender).is_some());
                    if !newer {
                        ctx.emit(EventKind::VoteExpired { sender, view: dropped });
                    }
                }
            }
        }
    }

    fn record(&mut self, ctx: &mut Ctx<'_>, instance: u64, sender: ValidatorId, log: &Log) -> InputOutcome {
        let state = self.views.get_mut(&instance).expect("view opened before voting");
        let outcome = record_input(ctx, state, sender, log);
        if outcome == InputOutcome::Recorded {
            let start = self.eta.window_start(instance);
            let older = self.views.range(start..instance).rev().find(|(_, s)| s.record(sender).is_some());
            let newer = self.views.range(instance + 1..).any(|(_, s)| s.record(sender).is_some());
            if let (Some((&old_view, _)), false) = (older, newer) {
                ctx.emit(EventKind::VoteSuperseded { sender, old_view, new_view: instance });
            }
        }
        outcome
    }

    fn outputs(&self, instance: u64, grade: u8) -> Result<Option<Vec<Log>>, GaError> {
        let Some(state) = self.views.get(&instance) else { return Ok(None) };
        if grade > state.kind().max_grade() {
            return Err(GaError::BadGrade(grade));
        }
        if !state.participation_allowed(grade) {
            return Ok(None);
        }
        let snap = state.marks.required_snapshot(grade);
        let votes = self.latest_votes(instance, snap);
        majority_chain(votes.iter().map(|r| &r.log), self.senders(instance).len()).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ga::GaKind;
    use crate::types::BlockId;

    fn log(ids: &[u64]) -> Log {
        let mut l = Log::genesis();
        for &i in ids {
            l = l.extend(BlockId(i));
        }
        l
    }

    fn book(eta: Eta, views: &[u64]) -> VoteBook {
        let mut b = VoteBook::new(eta);
        for &v in views {
            b.views.insert(v, GaState::new(ValidatorId(0), v, GaKind::ThreeGrade, 4 * v + 1, 1));
        }
        b
    }

    const A: ValidatorId = ValidatorId(1);

    #[test]
    fn votes_in_different_views_are_not_equivocation() {
        let mut b = book(Eta::Finite(2), &[3, 4]);
        assert_eq!(b.handle_vote(A, 3, log(&[1]), 13), InputOutcome::Recorded);
        assert_eq!(b.handle_vote(A, 4, log(&[2]), 17), InputOutcome::Recorded);
        assert_eq!(b.handle_vote(A, 4, log(&[3]), 18), InputOutcome::EquivocationRecorded);
        assert!(b.is_equivocator(A, 4));
        assert_eq!(b.latest_unexpired(A, 4), None);
    }

    #[test]
    fn latest_unexpired_picks_highest_view_in_window() {
        let mut b = book(Eta::Finite(2), &[1, 3, 4]);
        b.handle_vote(A, 1, log(&[1]), 5);
        b.handle_vote(A, 3, log(&[1, 2]), 13);
        assert_eq!(b.latest_unexpired(A, 4).map(|(r, w)| (r.log.clone(), w)), Some((log(&[1, 2]), 3)));

        let mut b = book(Eta::Finite(2), &[1, 4]);
        b.handle_vote(A, 1, log(&[1]), 5);
        assert_eq!(b.latest_unexpired(A, 4), None);
        assert!(b.senders(4).is_empty());
    }

    #[test]
    fn equivocation_in_window_hides_other_votes() {
        let mut b = book(Eta::Finite(2), &[3, 4]);
        b.handle_vote(A, 3, log(&[1]), 13);
        b.handle_vote(A, 3, log(&[2]), 13);
        b.handle_vote(A, 4, log(&[1, 5]), 17);
        assert_eq!(b.latest_unexpired(A, 4), None);
        assert_eq!(b.senders(4).len(), 1);
        // Evidence ages out with the window.
        let mut b = book(Eta::Finite(0), &[3, 4]);
        b.handle_vote(A, 3, log(&[1]), 13);
        b.handle_vote(A, 3, log(&[2]), 13);
        b.handle_vote(A, 4, log(&[1, 5]), 17);
        assert!(b.latest_unexpired(A, 4).is_some());
    }

    #[test]
    fn superseded_vote_leaves_snapshot_intersection() {
        let mut b = book(Eta::Finite(2), &[3, 4]);
        let marks = &mut b.views.get_mut(&4).unwrap().marks;
        marks.take_snapshot(19).unwrap();
        b.handle_vote(A, 3, log(&[1]), 12);
        assert_eq!(b.support_lmd(&log(&[1]), Some(19), 4), Ok(1));
        b.handle_vote(A, 4, log(&[2]), 20);
        assert_eq!(b.support_lmd(&log(&[1]), Some(19), 4), Ok(0));
        assert_eq!(b.support_lmd(&log(&[2]), Some(19), 4), Ok(0));
        assert_eq!(b.support_lmd(&log(&[2]), None, 4), Ok(1));
        assert_eq!(b.support_lmd(&log(&[2]), Some(18), 4), Err(GaError::MissingSnapshot(18)));
    }

    #[test]
    fn eta_zero_support_equals_instance_support() {
        let mut b = book(Eta::Finite(0), &[3, 4]);
        b.views.get_mut(&4).unwrap().marks.take_snapshot(19).unwrap();
        b.handle_vote(A, 3, log(&[1]), 13);
        b.handle_vote(ValidatorId(2), 4, log(&[1, 2]), 18);
        b.handle_vote(ValidatorId(3), 4, log(&[1]), 20);
        let single = b.views[&4].clone();
        for l in [log(&[]), log(&[1]), log(&[1, 2])] {
            for snap in [None, Some(19)] {
                assert_eq!(b.support_lmd(&l, snap, 4), single.support(&l, snap));
            }
        }
    }

    #[test]
    fn infinite_eta_never_expires() {
        let mut b = book(Eta::Infinite, &[0, 50]);
        b.handle_vote(A, 0, log(&[1]), 1);
        assert!(b.latest_unexpired(A, 50).is_some());
    }
}
