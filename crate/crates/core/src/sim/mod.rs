//! Deterministic tick-driven world.
//!
//! Each tick runs, in order: wake/sleep changes, flushing of queued messages
//! to awake validators, deliveries due now, corruption activations, honest
//! protocol steps (validators in id order), the adversary, and routing of
//! the tick's sends. Sends with zero delay are delivered in a follow-up
//! phase of the same tick.

pub mod adversary;
pub mod timing;

use std::collections::{BTreeMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::ScenarioError;
use crate::ga_node::GaNode;
use crate::protocol::{Ctx, Replica};
use crate::scenario::{ProtocolKind, Scenario, DEFAULT_INPUT_PATH};
use crate::tob_double::Tob2;
use crate::tob_single::{Tob1, TobLmd};
use crate::trace::{EventKind, RunInfo, Trace};
use crate::types::{derive_seed, BlockAllocator, BlockId, Log, Message, Tick, ValidatorId};

use adversary::{Adversary, AdversaryView};

#[derive(Clone, Debug)]
struct Envelope {
    msg: Message,
    relay: ValidatorId,
    recipient: ValidatorId,
    sent_at: Tick,
    due_at: Tick,
}

pub struct World {
    scenario: Scenario,
    labels: BTreeMap<String, Log>,
    replicas: Vec<Box<dyn Replica>>,
    awake: Vec<bool>,
    corrupted: Vec<bool>,
    pending: Vec<Vec<Envelope>>,
    in_flight: BTreeMap<(Tick, u64), Envelope>,
    seq: u64,
    adversary: Adversary,
    blocks: BlockAllocator,
    trace: Trace,
    aborted: bool,
}

/// Builds the protocol code a validator runs while honest.
fn make_replica(s: &Scenario, labels: &BTreeMap<String, Log>, v: ValidatorId) -> Box<dyn Replica> {
    match s.protocol {
        ProtocolKind::Ga2 | ProtocolKind::Ga3 => {
            let path = s.input.iter().find(|i| i.validator == v).map_or(DEFAULT_INPUT_PATH, |i| i.path.as_str());
            Box::new(GaNode::new(timing::ga_kind(s.protocol), labels[path].clone()))
        }
        ProtocolKind::Tob1 => Box::new(Tob1::new()),
        ProtocolKind::Tob1Lmd => Box::new(TobLmd::with_eta(s.eta_or_zero())),
        ProtocolKind::Tob2 => Box::new(Tob2::new()),
    }
}

impl World {
    pub fn new(scenario: &Scenario) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let s = scenario.clone();
        let labels = s.labelled_logs();
        let max_label = labels.values().map(|l| l.tip().0).max().unwrap_or(0);
        let n = s.n as usize;
        let replicas = s.validators().map(|v| make_replica(&s, &labels, v)).collect();
        let adversary = Adversary::new(&s, ChaCha8Rng::seed_from_u64(derive_seed(s.seed, "adversary")));
        let mut trace = Trace::default();
        trace.push(0, None, EventKind::RunStarted(RunInfo::from_scenario(&s)));
        Ok(Self {
            labels,
            replicas,
            awake: vec![false; n],
            corrupted: vec![false; n],
            pending: vec![Vec::new(); n],
            in_flight: BTreeMap::new(),
            seq: 0,
            adversary,
            blocks: BlockAllocator::starting_after(BlockId(max_label)),
            trace,
            aborted: false,
            scenario: s,
        })
    }

    pub fn run(mut self) -> Trace {
        for t in 0..self.scenario.horizon {
            self.step(t);
            if self.aborted {
                break;
            }
        }
        self.trace
    }

    fn step(&mut self, now: Tick) {
        let s = &self.scenario;
        let mut sends: Vec<(ValidatorId, Message)> = Vec::new();

        for v in s.validators() {
            let awake = s.is_awake(v, now);
            if now == 0 || awake != self.awake[v.index()] {
                let kind = if awake { EventKind::Wake } else { EventKind::Sleep };
                self.trace.push(now, Some(v), kind);
            }
            self.awake[v.index()] = awake;
        }

        for i in 0..self.replicas.len() {
            if self.awake[i] && !self.corrupted[i] && !self.pending[i].is_empty() {
                for env in std::mem::take(&mut self.pending[i]) {
                    self.deliver(now, env, &mut sends);
                }
            }
        }

        while let Some(entry) = self.in_flight.first_entry() {
            if entry.key().0 > now {
                break;
            }
            let env = entry.remove();
            self.deliver(now, env, &mut sends);
        }

        let mut newly = Vec::new();
        for v in self.scenario.validators() {
            if !self.corrupted[v.index()] && self.scenario.corrupted_at(v) == Some(now) {
                self.corrupted[v.index()] = true;
                self.pending[v.index()].clear();
                self.trace.push(now, Some(v), EventKind::Corrupted);
                newly.push(v);
            }
        }

        for i in 0..self.replicas.len() {
            if self.awake[i] && !self.corrupted[i] && !self.aborted {
                let (s, r) = (&self.scenario, &mut self.replicas[i]);
                let mut ctx =
                    Ctx::new(now, ValidatorId(i as u32), s.delta, s.seed, &mut self.blocks, &mut sends, &mut self.trace);
                if let Err(e) = r.on_tick(&mut ctx) {
                    ctx.emit(EventKind::Aborted { reason: e.to_string() });
                    self.aborted = true;
                }
            }
        }

        let injected = self.adversary.act(AdversaryView {
            now,
            corrupted: &self.corrupted,
            newly_corrupted: &newly,
            honest_sends: &sends,
            blocks: &mut self.blocks,
            labels: &self.labels,
        });

        let mut same_tick = VecDeque::new();
        self.route(now, std::mem::take(&mut sends), &mut same_tick);
        for a in injected {
            let env = Envelope { relay: a.msg.sender, msg: a.msg, recipient: a.recipient, sent_at: now, due_at: now + a.delay };
            self.enqueue(env, &mut same_tick);
        }
        while let Some(env) = same_tick.pop_front() {
            self.deliver(now, env, &mut sends);
            self.route(now, std::mem::take(&mut sends), &mut same_tick);
        }
    }

    fn route(&mut self, now: Tick, sends: Vec<(ValidatorId, Message)>, same_tick: &mut VecDeque<Envelope>) {
        for (relay, msg) in sends {
            for recipient in self.scenario.validators().filter(|&r| r != relay) {
                let due_at = self.adversary.honest_due(now, self.corrupted[recipient.index()]);
                let env = Envelope { msg: msg.clone(), relay, recipient, sent_at: now, due_at };
                self.enqueue(env, same_tick);
            }
        }
    }

    fn enqueue(&mut self, env: Envelope, same_tick: &mut VecDeque<Envelope>) {
        if env.due_at == env.sent_at {
            same_tick.push_back(env);
        } else {
            self.seq += 1;
            self.in_flight.insert((env.due_at, self.seq), env);
        }
    }

    fn deliver(&mut self, now: Tick, env: Envelope, sends: &mut Vec<(ValidatorId, Message)>) {
        let r = env.recipient.index();
        if self.corrupted[r] || self.aborted {
            return;
        }
        if !self.awake[r] {
            self.pending[r].push(env);
            return;
        }
        self.trace.push(
            now,
            Some(env.recipient),
            EventKind::Delivered {
                origin: env.msg.sender,
                relay: env.relay,
                msg: env.msg.kind,
                instance: env.msg.view,
                log: env.msg.log.clone(),
                sent_at: env.sent_at,
                due_at: env.due_at,
            },
        );
        let s = &self.scenario;
        let mut ctx = Ctx::new(now, env.recipient, s.delta, s.seed, &mut self.blocks, sends, &mut self.trace);
        if let Err(e) = self.replicas[r].on_message(&mut ctx, &env.msg) {
            ctx.emit(EventKind::Aborted { reason: e.to_string() });
            self.aborted = true;
        }
    }
}

/// Runs a scenario to its horizon.
pub fn run(scenario: &Scenario) -> Result<Trace, ScenarioError> {
    Ok(World::new(scenario)?.run())
}
