//! Who is awake and who is corrupted at each tick, with the set algebra of
//! the participation assumptions.

use crate::error::VerifyError;
use crate::scenario::Scenario;
use crate::trace::{EventKind, Trace};
use crate::types::{Tick, ValidatorId};

/// How to answer queries past the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TailMode {
    /// Conditions looking past the horizon are not evaluated.
    #[default]
    Unevaluated,
    /// The state at the last tick persists forever.
    Frozen,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub n: u32,
    pub delta: u64,
    pub horizon: Tick,
    awake: Vec<Vec<bool>>,
    corrupted_at: Vec<Option<Tick>>,
    /// `run_start[v][t]`: first tick of the honest-awake run containing `t`.
    run_start: Vec<Vec<Option<Tick>>>,
}

impl Schedule {
    pub fn new(n: u32, delta: u64, horizon: Tick, awake: Vec<Vec<bool>>, corrupted_at: Vec<Option<Tick>>) -> Self {
        assert!(horizon > 0 && awake.len() == n as usize && corrupted_at.len() == n as usize);
        let run_start = (0..n as usize)
            .map(|v| {
                let mut out = Vec::with_capacity(horizon as usize);
                let mut start = None;
                for t in 0..horizon {
                    let ok = awake[v][t as usize] && corrupted_at[v].is_none_or(|c| t < c);
                    start = if ok { start.or(Some(t)) } else { None };
                    out.push(start);
                }
                out
            })
            .collect();
        Self { n, delta, horizon, awake, corrupted_at, run_start }
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let awake = s.validators().map(|v| (0..s.horizon).map(|t| s.is_awake(v, t)).collect()).collect();
        let corrupted = s.validators().map(|v| s.corrupted_at(v).filter(|&c| c < s.horizon)).collect();
        Self::new(s.n, s.delta, s.horizon, awake, corrupted)
    }

    /// Rebuilds the schedule from WAKE, SLEEP and CORRUPTED events.
    pub fn from_trace(trace: &Trace) -> Result<Self, VerifyError> {
        let info = trace.header()?;
        let n = info.n as usize;
        let mut changes: Vec<Vec<(Tick, bool)>> = vec![Vec::new(); n];
        let mut corrupted = vec![None; n];
        for (i, e) in trace.events.iter().enumerate() {
            let bad = |m: &str| VerifyError::BadTrace { line: i + 1, message: m.to_string() };
            let Some(v) = e.validator else { continue };
            if v.index() >= n {
                return Err(bad("validator id out of range"));
            }
            match e.kind {
                EventKind::Wake => changes[v.index()].push((e.tick, true)),
                EventKind::Sleep => changes[v.index()].push((e.tick, false)),
                EventKind::Corrupted => {
                    corrupted[v.index()].get_or_insert(e.tick);
                }
                _ => {}
            }
        }
        let horizon = info.horizon.max(1);
        let awake = changes
            .into_iter()
            .map(|ch| {
                let mut row = vec![false; horizon as usize];
                let mut state = false;
                let mut k = 0;
                for t in 0..horizon {
                    while k < ch.len() && ch[k].0 <= t {
                        state = ch[k].1;
                        k += 1;
                    }
                    row[t as usize] = state;
                }
                row
            })
            .collect();
        Ok(Self::new(info.n, info.delta, horizon, awake, corrupted))
    }

    pub fn validators(&self) -> impl Iterator<Item = ValidatorId> {
        (0..self.n).map(ValidatorId)
    }

    fn clamp(&self, t: Tick) -> usize {
        t.min(self.horizon - 1) as usize
    }

    pub fn is_awake(&self, v: ValidatorId, t: Tick) -> bool {
        self.awake[v.index()][self.clamp(t)]
    }

    pub fn corrupted_at(&self, v: ValidatorId) -> Option<Tick> {
        self.corrupted_at[v.index()]
    }

    /// `v ∈ B_t`.
    pub fn is_corrupt(&self, v: ValidatorId, t: Tick) -> bool {
        self.corrupted_at[v.index()].is_some_and(|c| c <= t)
    }

    /// `v ∈ H_t`.
    pub fn is_honest_awake(&self, v: ValidatorId, t: Tick) -> bool {
        self.is_awake(v, t) && !self.is_corrupt(v, t)
    }

    /// `v ∈ H_{t1,t2}`: honest and awake throughout `[t1, t2]`.
    pub fn in_h_range(&self, v: ValidatorId, t1: Tick, t2: Tick) -> bool {
        if t2 >= self.horizon && !self.is_honest_awake(v, t2) {
            return false;
        }
        self.run_start[v.index()][self.clamp(t2)].is_some_and(|s| s <= t1)
    }

    /// `H_{t1,t2}`.
    pub fn h_range(&self, t1: Tick, t2: Tick) -> Vec<ValidatorId> {
        self.validators().filter(|&v| self.in_h_range(v, t1, t2)).collect()
    }

    /// `H_{t1,t2,t3} = H_{t1,t2} ∖ B_{t3}`.
    pub fn h_set(&self, t1: Tick, t2: Tick, t3: Tick) -> Vec<ValidatorId> {
        self.validators().filter(|&v| self.in_h_range(v, t1, t2) && !self.is_corrupt(v, t3)).collect()
    }

    /// `h_{t1,t2,t3}`.
    pub fn h_count(&self, t1: Tick, t2: Tick, t3: Tick) -> usize {
        self.h_set(t1, t2, t3).len()
    }

    /// `B_t`.
    pub fn b_set(&self, t: Tick) -> Vec<ValidatorId> {
        self.validators().filter(|&v| self.is_corrupt(v, t)).collect()
    }

    /// `f_t`.
    pub fn f_count(&self, t: Tick) -> usize {
        self.b_set(t).len()
    }

    /// Honest-awake runs `[start, end)` of `v`, clipped to the horizon.
    pub fn honest_runs(&self, v: ValidatorId) -> Vec<(Tick, Tick)> {
        let mut runs = Vec::new();
        let mut open: Option<Tick> = None;
        for t in 0..self.horizon {
            match (self.is_honest_awake(v, t), open) {
                (true, None) => open = Some(t),
                (false, Some(s)) => {
                    runs.push((s, t));
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(s) = open {
            runs.push((s, self.horizon));
        }
        runs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Corruption, ProtocolKind, SleepInterval};

    fn sched() -> Schedule {
        let mut s = Scenario::new(4, 1, ProtocolKind::Tob1, 20);
        s.sleep = vec![SleepInterval { validator: ValidatorId(1), from: 5, until: 6 }];
        s.corrupt = vec![Corruption { validator: ValidatorId(2), scheduled_at: 9 }];
        s.byzantine = vec![ValidatorId(3)];
        Schedule::from_scenario(&s)
    }

    #[test]
    fn h_count_examples() {
        let s = sched();
        assert_eq!(s.h_count(0, 3, 3), 3);
        // One tick asleep inside the interval excludes the validator.
        assert_eq!(s.h_set(4, 6, 6), vec![ValidatorId(0), ValidatorId(2)]);
        // Corruption effective at 10 excludes it from t3 = 10 on.
        assert_eq!(s.h_set(0, 3, 9), vec![ValidatorId(0), ValidatorId(1), ValidatorId(2)]);
        assert_eq!(s.h_set(0, 3, 10), vec![ValidatorId(0), ValidatorId(1)]);
        assert_eq!(s.f_count(0), 1);
        assert_eq!(s.f_count(10), 2);
    }

    #[test]
    fn runs_and_frozen_tail() {
        let s = sched();
        assert_eq!(s.honest_runs(ValidatorId(1)), vec![(0, 5), (6, 20)]);
        assert_eq!(s.honest_runs(ValidatorId(2)), vec![(0, 10)]);
        assert!(s.in_h_range(ValidatorId(0), 18, 30));
        assert!(!s.in_h_range(ValidatorId(2), 18, 30));
    }
}
