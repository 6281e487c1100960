//! The interface between the simulator and a validator's protocol code.

use std::collections::BTreeMap;

use crate::error::{GaError, ProtocolError};
use crate::ga::{GaState, InputOutcome};
use crate::trace::{EventKind, Trace};
use crate::types::{BlockAllocator, Log, Message, Tick, ValidatorId};

/// Per-call handle through which a replica reads the clock, broadcasts and
/// appends trace events.
pub struct Ctx<'a> {
    pub now: Tick,
    pub me: ValidatorId,
    pub delta: u64,
    pub seed: u64,
    blocks: &'a mut BlockAllocator,
    sends: &'a mut Vec<(ValidatorId, Message)>,
    trace: &'a mut Trace,
}

impl<'a> Ctx<'a> {
    pub fn new(
        now: Tick,
        me: ValidatorId,
        delta: u64,
        seed: u64,
        blocks: &'a mut BlockAllocator,
        sends: &'a mut Vec<(ValidatorId, Message)>,
        trace: &'a mut Trace,
    ) -> Self {
        Self { now, me, delta, seed, blocks, sends, trace }
    }

    /// Sends `msg` to every other validator, relayed by `me`.
    pub fn broadcast(&mut self, msg: Message) {
        self.sends.push((self.me, msg));
    }

    pub fn emit(&mut self, kind: EventKind) {
        self.trace.push(self.now, Some(self.me), kind);
    }

    /// `parent` extended by one fresh block.
    pub fn extend_with_fresh(&mut self, parent: &Log, view: u64) -> Log {
        let payload = (view << 32) | u64::from(self.me.0);
        let block = self.blocks.fresh(parent, payload);
        parent.extend(block.id)
    }
}

pub trait Replica {
    fn on_message(&mut self, ctx: &mut Ctx<'_>, msg: &Message) -> Result<(), ProtocolError>;

    /// Called once per tick while the validator is awake and honest, after
    /// that tick's deliveries.
    fn on_tick(&mut self, ctx: &mut Ctx<'_>) -> Result<(), ProtocolError>;
}

/// Records an input into `state`, emitting the matching trace event.
pub fn record_input(ctx: &mut Ctx<'_>, state: &mut GaState, sender: ValidatorId, log: &Log) -> InputOutcome {
    let before = state.record(sender).map(|r| r.log.clone());
    let outcome = state.handle_input(sender, log.clone(), ctx.now);
    match outcome {
        InputOutcome::Recorded => ctx.emit(EventKind::InputRecorded { instance: state.instance, sender, log: log.clone() }),
        InputOutcome::EquivocationRecorded => ctx.emit(EventKind::EquivocationDetected {
            instance: state.instance,
            sender,
            first: before.expect("equivocation replaces a record"),
            second: log.clone(),
        }),
        InputOutcome::Ignored => {}
    }
    outcome
}

/// Storage of GA instances plus the rule for turning their inputs into
/// graded outputs.
pub trait VoteTally {
    fn instance(&self, instance: u64) -> Option<&GaState>;

    fn instance_mut(&mut self, instance: u64) -> Option<&mut GaState>;

    /// Inserts `state` unless the instance is already open.
    fn open(&mut self, ctx: &mut Ctx<'_>, state: GaState);

    /// Handles an input for an open instance.
    fn record(&mut self, ctx: &mut Ctx<'_>, instance: u64, sender: ValidatorId, log: &Log) -> InputOutcome;

    /// Output set for `grade`, `Ok(None)` when not participating.
    fn outputs(&self, instance: u64, grade: u8) -> Result<Option<Vec<Log>>, GaError>;
}

/// Each instance tallies only its own inputs.
#[derive(Clone, Debug, Default)]
pub struct InstanceTally {
    instances: BTreeMap<u64, GaState>,
}

impl VoteTally for InstanceTally {
    fn instance(&self, instance: u64) -> Option<&GaState> {
        self.instances.get(&instance)
    }

    fn instance_mut(&mut self, instance: u64) -> Option<&mut GaState> {
        self.instances.get_mut(&instance)
    }

    fn open(&mut self, _ctx: &mut Ctx<'_>, state: GaState) {
        self.instances.entry(state.instance).or_insert(state);
    }

    fn record(&mut self, ctx: &mut Ctx<'_>, instance: u64, sender: ValidatorId, log: &Log) -> InputOutcome {
        let state = self.instances.get_mut(&instance).expect("instance opened before recording");
        record_input(ctx, state, sender, log)
    }

    fn outputs(&self, instance: u64, grade: u8) -> Result<Option<Vec<Log>>, GaError> {
        match self.instances.get(&instance) {
            Some(s) => s.outputs_for_grade(grade, 0),
            None => Ok(None),
        }
    }
}
