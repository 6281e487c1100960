//! A validator running one standalone GA instance started at tick 0.

use crate::error::ProtocolError;
use crate::ga::{GaKind, GaState};
use crate::protocol::{record_input, Ctx, Replica};
use crate::trace::EventKind;
use crate::types::{Log, Message, MessageKind};

pub const INSTANCE: u64 = 0;

#[derive(Clone, Debug)]
pub struct GaNode {
    kind: GaKind,
    input: Log,
    state: Option<GaState>,
    outputs: Vec<(u8, Vec<Log>)>,
}

impl GaNode {
    pub fn new(kind: GaKind, input: Log) -> Self {
        Self { kind, input, state: None, outputs: Vec::new() }
    }

    pub fn state(&self) -> Option<&GaState> {
        self.state.as_ref()
    }

    /// Output sets by grade, for the phases this validator participated in.
    pub fn outputs(&self) -> &[(u8, Vec<Log>)] {
        &self.outputs
    }

    fn state_mut(&mut self, ctx: &Ctx<'_>) -> &mut GaState {
        let kind = self.kind;
        self.state.get_or_insert_with(|| GaState::new(ctx.me, INSTANCE, kind, 0, ctx.delta))
    }
}

impl Replica for GaNode {
    fn on_message(&mut self, ctx: &mut Ctx<'_>, msg: &Message) -> Result<(), ProtocolError> {
        if msg.kind != MessageKind::GaInput || msg.view != INSTANCE || !msg.is_well_formed() {
            return Ok(());
        }
        let state = self.state_mut(ctx);
        if record_input(ctx, state, msg.sender, &msg.log).forward() {
            ctx.broadcast(msg.clone());
        }
        Ok(())
    }

    fn on_tick(&mut self, ctx: &mut Ctx<'_>) -> Result<(), ProtocolError> {
        if ctx.now > self.kind.duration() * ctx.delta {
            return Ok(());
        }
        if ctx.now == 0 {
            let input = self.input.clone();
            ctx.emit(EventKind::InputSent { instance: INSTANCE, log: input.clone() });
            let me = ctx.me;
            let state = self.state_mut(ctx);
            record_input(ctx, state, me, &input);
            ctx.broadcast(Message::input(me, INSTANCE, input));
        }
        let now = ctx.now;
        let state = self.state_mut(ctx);
        let snapshot = state.mark_awake(now);
        let due = state.marks.grade_due(now);
        let set = match due {
            Some(g) => state.outputs_for_grade(g, now)?,
            None => None,
        };
        if let Some(offset) = snapshot {
            ctx.emit(EventKind::SnapshotTaken { instance: INSTANCE, offset });
        }
        if let (Some(grade), Some(set)) = (due, set) {
            ctx.emit(EventKind::OutputPhase { instance: INSTANCE, grade });
            for log in &set {
                ctx.emit(EventKind::GaOutput { instance: INSTANCE, log: log.clone(), grade });
            }
            self.outputs.push((grade, set));
        }
        Ok(())
    }
}
