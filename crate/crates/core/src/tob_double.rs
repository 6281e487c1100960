//! Total-order broadcast with two votes per decision over two-grade GA.
//!
//! Views last 5Δ. View `v` runs `GA_{v,1}` from `t_v + Δ` and `GA_{v,2}` from
//! `t_v + 3Δ`, tagged as instances `2v` and `2v + 1`:
//!
//! * `t_v`: propose on the highest grade-0 output of `GA_{v-1,2}`;
//! * `t_v + Δ`: lock is the highest grade-1 output of `GA_{v-1,2}`, vote into `GA_{v,1}`;
//! * `t_v + 3Δ`: input the highest grade-0 output of `GA_{v,1}` into `GA_{v,2}`;
//! * `t_v + 4Δ`: decide the highest grade-1 output of `GA_{v,1}`.

use crate::error::ProtocolError;
use crate::ga::GaKind;
use crate::protocol::{Ctx, InstanceTally, Replica};
use crate::tob_single::{advance_instances, cast_vote, decide, propose, receive_vote, OutputLog, ProposalBook};
use crate::types::{Log, Message, MessageKind, Tick};

const KIND: GaKind = GaKind::TwoGrade;

#[derive(Clone, Debug)]
pub struct Tob2 {
    tally: InstanceTally,
    outputs: OutputLog,
    proposals: ProposalBook,
    decided: Log,
}

impl Default for Tob2 {
    fn default() -> Self {
        Self::new()
    }
}

/// Instance tag of `GA_{v,round}`.
pub fn instance_tag(view: u64, round: u8) -> u64 {
    2 * view + u64::from(round - 1)
}

impl Tob2 {
    pub fn new() -> Self {
        Self {
            tally: InstanceTally::default(),
            outputs: OutputLog::default(),
            proposals: ProposalBook::default(),
            decided: Log::genesis(),
        }
    }

    pub fn decided(&self) -> &Log {
        &self.decided
    }

    fn view_ticks(delta: u64) -> u64 {
        5 * delta
    }

    pub fn instance_start(instance: u64, delta: u64) -> Tick {
        let t_v = (instance / 2) * Self::view_ticks(delta);
        if instance.is_multiple_of(2) {
            t_v + delta
        } else {
            t_v + 3 * delta
        }
    }

    fn active(now: Tick, delta: u64) -> Vec<(u64, Tick, GaKind)> {
        let vt = Self::view_ticks(delta);
        let first_view = now.saturating_sub(vt).saturating_sub(delta) / vt;
        (instance_tag(first_view, 1)..=instance_tag(now / vt, 2))
            .map(|i| (i, Self::instance_start(i, delta)))
            .filter(|&(_, start)| start <= now && now <= start + KIND.duration() * delta)
            .map(|(i, start)| (i, start, KIND))
            .collect()
    }

    /// Highest output of `GA_{view-1,2}` at `grade`.
    fn previous(&self, view: u64, grade: u8) -> Result<Option<Log>, ProtocolError> {
        match view.checked_sub(1) {
            None => Ok(Some(Log::genesis())),
            Some(prev) => self.outputs.highest(instance_tag(prev, 2), grade),
        }
    }
}

impl Replica for Tob2 {
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
                let tag = instance_tag(view, 1);
                cast_vote(ctx, &mut self.tally, tag, Self::instance_start(tag, delta), KIND, view, 1, vote);
            }
            self.proposals.forget_before(view + 1);
        } else if phase == 3 * delta {
            if let Some(log) = self.outputs.highest(instance_tag(view, 1), 0)? {
                let tag = instance_tag(view, 2);
                cast_vote(ctx, &mut self.tally, tag, Self::instance_start(tag, delta), KIND, view, 2, log);
            }
        } else if phase == 4 * delta {
            if let Some(log) = self.outputs.highest(instance_tag(view, 1), 1)? {
                decide(ctx, &mut self.decided, view, log)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_schedule() {
        let d = 3;
        assert_eq!(Tob2::instance_start(instance_tag(0, 1), d), 3);
        assert_eq!(Tob2::instance_start(instance_tag(0, 2), d), 9);
        assert_eq!(Tob2::instance_start(instance_tag(2, 1), d), 33);
        // GA_{0,2} runs [9, 18] and overlaps GA_{1,1} from 18.
        let at = |t| Tob2::active(t, d).iter().map(|a| a.0).collect::<Vec<_>>();
        assert_eq!(at(0), Vec::<u64>::new());
        assert_eq!(at(9), vec![0, 1]);
        assert_eq!(at(18), vec![1, 2]);
        assert_eq!(at(19), vec![2]);
    }
}
