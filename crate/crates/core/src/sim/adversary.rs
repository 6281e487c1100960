//! Adversary strategies: network scheduling plus the behaviour of corrupted
//! validators. The adversary is rushing: it sees every honest send of the
//! current tick before choosing its own.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::scenario::{AdversaryStrategy, DelayPolicy, Scenario, DEFAULT_INPUT_PATH};
use crate::sim::timing;
use crate::types::{vrf, BlockAllocator, Log, Message, MessageKind, Tick, ValidatorId};

/// A message injected under a corrupted validator's key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdvSend {
    pub msg: Message,
    pub recipient: ValidatorId,
    pub delay: Tick,
}

/// What the adversary can see when it acts.
pub struct AdversaryView<'a> {
    pub now: Tick,
    pub corrupted: &'a [bool],
    pub newly_corrupted: &'a [ValidatorId],
    pub honest_sends: &'a [(ValidatorId, Message)],
    pub blocks: &'a mut BlockAllocator,
    pub labels: &'a BTreeMap<String, Log>,
}

pub struct Adversary {
    scenario: Scenario,
    rng: ChaCha8Rng,
    /// Inputs each validator sent while honest, by instance.
    own_votes: BTreeMap<ValidatorId, BTreeMap<u64, Log>>,
}

impl Adversary {
    pub fn new(scenario: &Scenario, rng: ChaCha8Rng) -> Self {
        Self { scenario: scenario.clone(), rng, own_votes: BTreeMap::new() }
    }

    fn policy(&self) -> DelayPolicy {
        if self.scenario.adversary == AdversaryStrategy::WithholdMaxDelay {
            DelayPolicy::Max
        } else {
            self.scenario.delay
        }
    }

    fn in_sync_delay(&mut self) -> Tick {
        match self.policy() {
            DelayPolicy::Random => self.rng.gen_range(0..=self.scenario.delta),
            DelayPolicy::Max => self.scenario.delta,
            DelayPolicy::Zero => 0,
        }
    }

    /// Delivery tick for an honest send from `relay` to `recipient`.
    pub fn honest_due(&mut self, now: Tick, recipient_corrupted: bool) -> Tick {
        if self.scenario.adversary == AdversaryStrategy::AsyncPartition && !recipient_corrupted {
            if let (Some(w), Some(vt)) = (self.scenario.asynchrony, self.scenario.view_ticks()) {
                let (start, end) = w.ticks(vt);
                if (start..end).contains(&now) {
                    return end + self.rng.gen_range(0..=self.scenario.delta);
                }
            }
        }
        now + self.in_sync_delay()
    }

    pub fn act(&mut self, view: AdversaryView<'_>) -> Vec<AdvSend> {
        for (relay, msg) in view.honest_sends {
            if msg.kind == MessageKind::GaInput && *relay == msg.sender {
                self.own_votes.entry(msg.sender).or_default().insert(msg.view, msg.log.clone());
            }
        }
        match self.scenario.adversary {
            AdversaryStrategy::Silent | AdversaryStrategy::WithholdMaxDelay => Vec::new(),
            AdversaryStrategy::EquivocateSplit | AdversaryStrategy::AsyncPartition => self.equivocate(view),
            AdversaryStrategy::Scripted => self.scripted(view),
        }
    }

    fn fresh(blocks: &mut BlockAllocator, parent: &Log, tag: u64) -> Log {
        parent.extend(blocks.fresh(parent, tag).id)
    }

    fn equivocate(&mut self, view: AdversaryView<'_>) -> Vec<AdvSend> {
        let AdversaryView { now, corrupted, newly_corrupted, honest_sends, blocks, labels } = view;
        let s = &self.scenario;
        let (protocol, delta, seed) = (s.protocol, s.delta, s.seed);
        let byz: Vec<ValidatorId> = s.validators().filter(|v| corrupted[v.index()]).collect();
        let targets: Vec<ValidatorId> = s.validators().filter(|v| !corrupted[v.index()]).collect();
        let mut out = Vec::new();
        let tag = u64::MAX >> 1;
        let rng = &mut self.rng;

        for instance in timing::instances_starting(protocol, delta, now) {
            let observed: Vec<Log> = honest_sends
                .iter()
                .filter(|(_, m)| m.kind == MessageKind::GaInput && m.view == instance)
                .map(|(_, m)| m.log.clone())
                .collect();
            for &b in &byz {
                let x = match observed.choose(rng) {
                    Some(l) => l.clone(),
                    None if protocol.is_ga() => {
                        let honest: Vec<&Log> = s
                            .validators()
                            .filter(|v| !corrupted[v.index()])
                            .filter_map(|v| {
                                let path = s.input.iter().find(|i| i.validator == v).map(|i| i.path.as_str());
                                labels.get(path.unwrap_or(DEFAULT_INPUT_PATH))
                            })
                            .collect();
                        honest.choose(rng).map(|l| (*l).clone()).unwrap_or_else(Log::genesis)
                    }
                    None => Self::fresh(blocks, &Log::genesis(), tag),
                };
                let base = x.parent().unwrap_or_else(Log::genesis);
                let y = Self::fresh(blocks, &base, tag);
                split(rng, &targets, delta, Message::input(b, instance, x), Message::input(b, instance, y), &mut out);
            }
        }

        if let Some(vt) = s.view_ticks() {
            if now % vt == 0 {
                let v = now / vt;
                let bases: Vec<Log> = honest_sends
                    .iter()
                    .filter(|(_, m)| m.kind == MessageKind::Proposal && m.view == v)
                    .filter_map(|(_, m)| m.log.parent())
                    .collect();
                for &b in &byz {
                    let base = bases.choose(rng).cloned().unwrap_or_else(Log::genesis);
                    let value = vrf(seed, b, v);
                    let p1 = Message::proposal(b, v, Self::fresh(blocks, &base, tag), value);
                    let p2 = Message::proposal(b, v, Self::fresh(blocks, &base, tag), value);
                    split(rng, &targets, delta, p1, p2, &mut out);
                }
            }
        }

        for &b in newly_corrupted {
            let votes: Vec<(u64, Log)> =
                self.own_votes.get(&b).map(|m| m.iter().map(|(i, l)| (*i, l.clone())).collect()).unwrap_or_default();
            for (instance, cast) in votes {
                let (_, end) = timing::instance_span(protocol, delta, instance);
                if now > end {
                    continue;
                }
                let base = cast.parent().unwrap_or_else(Log::genesis);
                let other = Self::fresh(blocks, &base, tag);
                let again = Message::input(b, instance, cast);
                split(rng, &targets, delta, again, Message::input(b, instance, other), &mut out);
            }
        }
        out
    }

    fn scripted(&mut self, view: AdversaryView<'_>) -> Vec<AdvSend> {
        let s = &self.scenario;
        s.script
            .iter()
            .filter(|row| row.send_tick == view.now && view.corrupted[row.sender.index()])
            .filter_map(|row| {
                let log = view.labels.get(&row.path)?.clone();
                let msg = match row.kind {
                    MessageKind::GaInput => Message::input(row.sender, row.view, log),
                    MessageKind::Proposal => Message::proposal(row.sender, row.view, log, vrf(s.seed, row.sender, row.view)),
                };
                Some(AdvSend { msg, recipient: row.recipient, delay: row.delay })
            })
            .collect()
    }
}

/// Sends `a` to a random half of `targets` and `b` to the rest.
fn split(rng: &mut ChaCha8Rng, targets: &[ValidatorId], delta: Tick, a: Message, b: Message, out: &mut Vec<AdvSend>) {
    let mut targets = targets.to_vec();
    targets.shuffle(rng);
    let half = targets.len().div_ceil(2);
    for (i, recipient) in targets.into_iter().enumerate() {
        let msg = if i < half { a.clone() } else { b.clone() };
        let delay = rng.gen_range(0..=delta);
        out.push(AdvSend { msg, recipient, delay });
    }
}
