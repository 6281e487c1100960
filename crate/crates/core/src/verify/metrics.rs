//! Latency and throughput measured on a trace.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::VerifyError;
use crate::trace::{EventKind, Trace};
use crate::types::{derive_seed, BlockId, Log, Tick};
use crate::verify::leader::good_leader_rate;
use crate::verify::schedule::Schedule;

pub const DEFAULT_SAMPLES: usize = 10_000;

/// Durations are in ticks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub delta: u64,
    pub blocks: usize,
    pub best_case_latency: f64,
    pub avg_case_latency: f64,
    pub block_time: f64,
    /// Distinct voting rounds spent on the view of each decided block.
    pub votes_per_decision: f64,
    pub good_leader_rate: f64,
}

impl Metrics {
    pub fn in_deltas(&self, ticks: f64) -> f64 {
        ticks / self.delta as f64
    }
}

/// A decided block with its proposal and first decision.
#[derive(Clone, Copy, Debug)]
struct Confirmed {
    view: u64,
    proposed: Tick,
    decided: Tick,
}

fn confirmed_blocks(trace: &Trace) -> Vec<Confirmed> {
    let mut chain = Log::genesis();
    let mut proposed: BTreeMap<BlockId, (u64, Tick)> = BTreeMap::new();
    let mut decided: BTreeMap<BlockId, Tick> = BTreeMap::new();
    for e in &trace.events {
        match &e.kind {
            EventKind::ProposalSent { view, log, .. } => {
                proposed.entry(log.tip()).or_insert((*view, e.tick));
            }
            EventKind::Decided { log, .. } => {
                for &b in log.blocks() {
                    decided.entry(b).or_insert(e.tick);
                }
                if log.len() > chain.len() {
                    chain = log.clone();
                }
            }
            _ => {}
        }
    }
    chain.blocks()[1..]
        .iter()
        .filter_map(|b| {
            let (view, p) = *proposed.get(b)?;
            Some(Confirmed { view, proposed: p, decided: decided[b] })
        })
        .collect()
}

pub fn metrics(trace: &Trace) -> Result<Metrics, VerifyError> {
    metrics_with_samples(trace, DEFAULT_SAMPLES)
}

/// Average-case latency is estimated from `samples` transactions submitted
/// at uniformly random instants between the first and last proposal; each
/// rides in the next proposal.
pub fn metrics_with_samples(trace: &Trace, samples: usize) -> Result<Metrics, VerifyError> {
    let info = trace.header()?;
    let blocks = confirmed_blocks(trace);
    if blocks.len() < 2 {
        return Err(VerifyError::InsufficientTrace);
    }
    let (first, last) = (blocks[0].proposed, blocks[blocks.len() - 1].proposed);
    let best = blocks.iter().map(|b| b.decided - b.proposed).min().expect("non-empty") as f64;
    let block_time = (last - first) as f64 / (blocks.len() - 1) as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(info.seed, "metrics"));
    let mut total = 0.0;
    for _ in 0..samples {
        let s: f64 = rng.gen_range(first as f64..last as f64);
        let next = blocks.partition_point(|b| (b.proposed as f64) < s);
        total += blocks[next].decided as f64 - s;
    }
    let avg = total / samples.max(1) as f64;

    let mut rounds: BTreeMap<u64, Vec<u8>> = BTreeMap::new();
    for e in &trace.events {
        if let EventKind::VoteCast { view, round, .. } = e.kind {
            let r = rounds.entry(view).or_default();
            if !r.contains(&round) {
                r.push(round);
            }
        }
    }
    let votes = blocks.iter().map(|b| rounds.get(&b.view).map_or(0, Vec::len)).sum::<usize>() as f64 / blocks.len() as f64;

    let rate = match info.view_ticks() {
        Some(vt) => good_leader_rate(&Schedule::from_trace(trace)?, info.seed, vt, info.horizon.div_ceil(vt)),
        None => 0.0,
    };
    Ok(Metrics {
        delta: info.delta,
        blocks: blocks.len(),
        best_case_latency: best,
        avg_case_latency: avg,
        block_time,
        votes_per_decision: votes,
        good_leader_rate: rate,
    })
}
