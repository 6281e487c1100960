//! Which views have a good leader.

use crate::types::{vrf_leader, Tick, ValidatorId};
use crate::verify::schedule::Schedule;

/// The view's leader if it is good: the max-VRF validator among
/// `H_{t_v} ∪ B_{t_v+Δ}` is honest and awake at `t_v` and still honest at `t_v + Δ`.
pub fn good_leader(schedule: &Schedule, seed: u64, view: u64, t_v: Tick) -> Option<ValidatorId> {
    let late = t_v + schedule.delta;
    let candidates = schedule.validators().filter(|&v| schedule.is_honest_awake(v, t_v) || schedule.is_corrupt(v, late));
    vrf_leader(seed, view, candidates).filter(|&l| schedule.is_honest_awake(l, t_v) && !schedule.is_corrupt(l, late))
}

/// Fraction of views `0..views` whose leader is good.
pub fn good_leader_rate(schedule: &Schedule, seed: u64, view_ticks: u64, views: u64) -> f64 {
    if views == 0 {
        return 0.0;
    }
    let good = (0..views).filter(|&v| good_leader(schedule, seed, v, v * view_ticks).is_some()).count();
    good as f64 / views as f64
}
