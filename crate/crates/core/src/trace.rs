//! Run traces: a totally ordered event log, serialized as JSON lines with
//! fields `tick`, `validator`, `kind` and `payload`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::VerifyError;
use crate::scenario::{AdversaryStrategy, AsynchronyWindow, Eta, ProtocolKind, Scenario};
use crate::types::{Log, MessageKind, Tick, ValidatorId, VrfValue};

/// Everything an offline checker needs to know about the run's setup.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunInfo {
    pub protocol: ProtocolKind,
    pub n: u32,
    pub delta: u64,
    pub horizon: Tick,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Eta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asynchrony: Option<AsynchronyWindow>,
    pub adversary: AdversaryStrategy,
}

impl RunInfo {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            protocol: s.protocol,
            n: s.n,
            delta: s.delta,
            horizon: s.horizon,
            seed: s.seed,
            eta: s.eta,
            asynchrony: s.asynchrony,
            adversary: s.adversary,
        }
    }

    pub fn view_ticks(&self) -> Option<u64> {
        self.protocol.view_length().map(|k| k * self.delta)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    RunStarted(RunInfo),
    Wake,
    Sleep,
    Corrupted,
    InputSent {
        instance: u64,
        log: Log,
    },
    /// A message handed to an awake honest validator at the event tick.
    /// `due_at` is the adversary-chosen delivery tick; the event tick is
    /// later when the recipient was asleep.
    Delivered {
        origin: ValidatorId,
        relay: ValidatorId,
        msg: MessageKind,
        instance: u64,
        log: Log,
        sent_at: Tick,
        due_at: Tick,
    },
    InputRecorded {
        instance: u64,
        sender: ValidatorId,
        log: Log,
    },
    EquivocationDetected {
        instance: u64,
        sender: ValidatorId,
        first: Log,
        second: Log,
    },
    SnapshotTaken {
        instance: u64,
        offset: u64,
    },
    /// The validator participates in the output phase for `grade`.
    OutputPhase {
        instance: u64,
        grade: u8,
    },
    GaOutput {
        instance: u64,
        log: Log,
        grade: u8,
    },
    ProposalSent {
        view: u64,
        log: Log,
        vrf: VrfValue,
    },
    VoteCast {
        view: u64,
        round: u8,
        log: Log,
    },
    Decided {
        view: u64,
        log: Log,
    },
    VoteSuperseded {
        sender: ValidatorId,
        old_view: u64,
        new_view: u64,
    },
    VoteExpired {
        sender: ValidatorId,
        view: u64,
    },
    Aborted {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub tick: Tick,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validator: Option<ValidatorId>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<Event>,
}

impl Trace {
    pub fn push(&mut self, tick: Tick, validator: Option<ValidatorId>, kind: EventKind) {
        self.events.push(Event { tick, validator, kind });
    }

    pub fn header(&self) -> Result<&RunInfo, VerifyError> {
        match self.events.first() {
            Some(Event { kind: EventKind::RunStarted(info), .. }) => Ok(info),
            _ => Err(VerifyError::MissingHeader),
        }
    }

    pub fn aborted(&self) -> Option<&str> {
        self.events.iter().find_map(|e| match &e.kind {
            EventKind::Aborted { reason } => Some(reason.as_str()),
            _ => None,
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let line = serde_json::to_string(e).expect("events always serialize");
            let _ = writeln!(out, "{line}");
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, VerifyError> {
        let mut events = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: Event =
                serde_json::from_str(line).map_err(|err| VerifyError::BadTrace { line: i + 1, message: err.to_string() })?;
            events.push(e);
        }
        let trace = Trace { events };
        trace.header()?;
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip_keeps_every_field() {
        let s = Scenario::new(3, 2, ProtocolKind::Tob1, 24);
        let mut t = Trace::default();
        t.push(0, None, EventKind::RunStarted(RunInfo::from_scenario(&s)));
        t.push(0, Some(ValidatorId(1)), EventKind::Wake);
        t.push(3, Some(ValidatorId(2)), EventKind::Decided { view: 0, log: Log::genesis().extend(crate::types::BlockId(4)) });
        let text = t.to_jsonl();
        assert!(text.lines().nth(1).unwrap().contains("\"kind\":\"WAKE\""));
        assert!(text.lines().nth(2).unwrap().contains("\"payload\""));
        assert_eq!(Trace::from_jsonl(&text).unwrap(), t);
    }

    #[test]
    fn missing_header_is_rejected() {
        let line = r#"{"tick":0,"validator":0,"kind":"WAKE"}"#;
        assert_eq!(Trace::from_jsonl(line), Err(VerifyError::MissingHeader));
        assert!(matches!(Trace::from_jsonl("{"), Err(VerifyError::BadTrace { line: 1, .. })));
    }
}
