//! Participation-assumption checks over a schedule.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::VerifyError;
use crate::ga::GaKind;
use crate::scenario::{AsynchronyWindow, Eta, ProtocolKind};
use crate::types::{Tick, ValidatorId};
use crate::verify::schedule::{Schedule, TailMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Holds,
    Fails,
    Unevaluated,
}

/// `(T_f = ∞, T_b, T_s, T_c, ρ)` with durations in ticks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SleepyParams {
    pub tb: Tick,
    pub ts: Tick,
    pub tc: Tick,
    pub rho: Ratio<u64>,
}

impl SleepyParams {
    pub fn new(tb: Tick, ts: Tick, tc: Tick, rho: Ratio<u64>) -> Self {
        assert!(rho >= Ratio::from_integer(1), "rho must be at least 1");
        Self { tb, ts, tc, rho }
    }

    /// The model a total-order protocol is proven under, if it uses one.
    pub fn for_protocol(protocol: ProtocolKind, delta: u64) -> Option<Self> {
        let one = Ratio::from_integer(1);
        match protocol {
            ProtocolKind::Tob1 => Some(Self::new(5 * delta, 2 * delta, 5 * delta, one)),
            ProtocolKind::Tob2 => Some(Self::new(3 * delta, 2 * delta, 3 * delta, one)),
            _ => None,
        }
    }
}

/// One evaluation of an inequality `lhs > ρ · rhs` with its witnesses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TickRecord {
    pub t: Tick,
    pub h: usize,
    pub f: usize,
    pub verdict: Verdict,
    pub honest: Vec<ValidatorId>,
    pub adversary: Vec<ValidatorId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComplianceReport {
    pub records: Vec<TickRecord>,
    pub compliant: bool,
}

impl ComplianceReport {
    fn from_records(records: Vec<TickRecord>) -> Self {
        let compliant = records.iter().all(|r| r.verdict != Verdict::Fails);
        Self { records, compliant }
    }

    pub fn first_failure(&self) -> Option<&TickRecord> {
        self.records.iter().find(|r| r.verdict == Verdict::Fails)
    }
}

fn strictly_greater(h: usize, rho: Ratio<u64>, f: usize) -> bool {
    (h as u128) * u128::from(*rho.denom()) > u128::from(*rho.numer()) * (f as u128)
}

fn evaluated(schedule: &Schedule, tail: TailMode, latest: Tick) -> bool {
    tail == TailMode::Frozen || latest < schedule.horizon
}

/// `h_{t-T_s, t, t+T_c} > ρ · f_{t+T_b}` at every tick.
pub fn check_sleepy(schedule: &Schedule, params: &SleepyParams, tail: TailMode) -> ComplianceReport {
    let records = (0..schedule.horizon)
        .map(|t| {
            let honest = schedule.h_set(t.saturating_sub(params.ts), t, t + params.tc);
            let adversary = schedule.b_set(t + params.tb);
            let (h, f) = (honest.len(), adversary.len());
            let verdict = if !evaluated(schedule, tail, t + params.tc.max(params.tb)) {
                Verdict::Unevaluated
            } else if strictly_greater(h, params.rho, f) {
                Verdict::Holds
            } else {
                Verdict::Fails
            };
            TickRecord { t, h, f, verdict, honest, adversary }
        })
        .collect();
    ComplianceReport::from_records(records)
}

/// `h_{0,0,TΔ} > f_{TΔ}` for a standalone GA of duration `TΔ`.
pub fn check_ga(schedule: &Schedule, kind: GaKind, tail: TailMode) -> ComplianceReport {
    let end = kind.duration() * schedule.delta;
    let honest = schedule.h_set(0, 0, end);
    let adversary = schedule.b_set(end);
    let verdict = if !evaluated(schedule, tail, end) {
        Verdict::Unevaluated
    } else if honest.len() > adversary.len() {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    let record = TickRecord { t: 0, h: honest.len(), f: adversary.len(), verdict, honest, adversary };
    ComplianceReport::from_records(vec![record])
}

/// One evaluation of the asynchrony condition for a view `v'`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ViewRecord {
    pub view: u64,
    pub lhs: usize,
    pub rhs: usize,
    pub verdict: Verdict,
    pub survivors: Vec<ValidatorId>,
    pub others: Vec<ValidatorId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AsyncReport {
    /// Synchronous condition at every tick.
    pub eq_sync: ComplianceReport,
    /// Per-view condition across the asynchronous period, empty without one.
    pub eq_async: Vec<ViewRecord>,
    /// Validators of the pre-asynchrony quorum that are asleep at `t_{v_a} + 2Δ`.
    pub asleep_at_cutoff: Vec<ValidatorId>,
    pub compliant: bool,
}

impl AsyncReport {
    pub fn first_async_failure(&self) -> Option<&ViewRecord> {
        self.eq_async.iter().find(|r| r.verdict == Verdict::Fails)
    }
}

fn union_of_windows(schedule: &Schedule, from: Tick, to: Tick, width: Tick) -> Vec<bool> {
    let mut seen = vec![false; schedule.n as usize];
    for s in from..=to {
        for v in schedule.h_range(s.saturating_sub(width), s) {
            seen[v.index()] = true;
        }
    }
    seen
}

/// Latest-vote participation conditions for the expiring-vote protocol:
/// the synchronous inequality at every tick and, with a window, the
/// per-view condition for `v' ∈ {v_a, …, v_a + π + 1}` plus wakefulness
/// of the pre-asynchrony quorum at `t_{v_a} + 2Δ`.
pub fn check_async(
    schedule: &Schedule,
    eta: Eta,
    window: Option<AsynchronyWindow>,
    tail: TailMode,
) -> Result<AsyncReport, VerifyError> {
    if let Some(w) = window {
        if !eta.exceeds(w.pi) {
            return Err(VerifyError::PiGeEta { pi: w.pi, eta: eta.to_string() });
        }
    }
    let d = schedule.delta;
    let vt = 4 * d;
    let look_back = match eta {
        Eta::Finite(e) => Some(4 * e * d),
        Eta::Infinite => None,
    };

    let sync_records = (0..schedule.horizon)
        .map(|t| {
            let current: Vec<bool> = {
                let mut m = vec![false; schedule.n as usize];
                for v in schedule.h_range(t.saturating_sub(2 * d), t) {
                    m[v.index()] = true;
                }
                m
            };
            let from = look_back.map_or(0, |lb| t.saturating_sub(lb));
            let stale = union_of_windows(schedule, from, t, 2 * d);
            let honest = schedule.h_set(t.saturating_sub(2 * d), t, t + 5 * d);
            let adversary: Vec<ValidatorId> = schedule
                .validators()
                .filter(|v| (stale[v.index()] && !current[v.index()]) || schedule.is_corrupt(*v, t + 5 * d))
                .collect();
            let (h, f) = (honest.len(), adversary.len());
            let verdict = if !evaluated(schedule, tail, t + 5 * d) {
                Verdict::Unevaluated
            } else if h > f {
                Verdict::Holds
            } else {
                Verdict::Fails
            };
            TickRecord { t, h, f, verdict, honest, adversary }
        })
        .collect();
    let eq_sync = ComplianceReport::from_records(sync_records);

    let mut eq_async = Vec::new();
    let mut asleep_at_cutoff = Vec::new();
    if let Some(w) = window {
        let t_va = w.last_sync_view * vt;
        let quorum = schedule.h_range(t_va.saturating_sub(d), t_va + d);
        let in_quorum = |v: ValidatorId| quorum.contains(&v);
        for vp in w.last_sync_view..=w.last_sync_view + w.pi + 1 {
            let t_vp = vp * vt;
            let cut = t_vp + 6 * d;
            let survivors: Vec<ValidatorId> = quorum.iter().copied().filter(|&v| !schedule.is_corrupt(v, cut)).collect();
            let oldest = match eta {
                Eta::Finite(e) => vp.saturating_sub(e),
                Eta::Infinite => 0,
            };
            let stale = union_of_windows(schedule, oldest * vt + d, t_vp + d, 2 * d);
            let others: Vec<ValidatorId> =
                schedule.validators().filter(|&v| (stale[v.index()] && !in_quorum(v)) || schedule.is_corrupt(v, cut)).collect();
            let (lhs, rhs) = (survivors.len(), others.len());
            let verdict = if !evaluated(schedule, tail, cut) {
                Verdict::Unevaluated
            } else if lhs > rhs {
                Verdict::Holds
            } else {
                Verdict::Fails
            };
            eq_async.push(ViewRecord { view: vp, lhs, rhs, verdict, survivors, others });
        }
        asleep_at_cutoff = quorum.into_iter().filter(|&v| !schedule.is_awake(v, t_va + 2 * d)).collect();
    }
    let compliant = eq_sync.compliant && eq_async.iter().all(|r| r.verdict != Verdict::Fails) && asleep_at_cutoff.is_empty();
    Ok(AsyncReport { eq_sync, eq_async, asleep_at_cutoff, compliant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Corruption, Scenario, SleepInterval};

    fn base(n: u32, byz: &[u32]) -> Scenario {
        let mut s = Scenario::new(n, 1, ProtocolKind::Tob1, 40);
        s.byzantine = byz.iter().map(|&i| ValidatorId(i)).collect();
        s
    }

    fn unit() -> SleepyParams {
        SleepyParams::new(5, 2, 5, Ratio::from_integer(1))
    }

    #[test]
    fn four_against_three_is_compliant() {
        let s = Schedule::from_scenario(&base(7, &[4, 5, 6]));
        let r = check_sleepy(&s, &unit(), TailMode::Unevaluated);
        assert!(r.compliant);
        assert_eq!((r.records[0].h, r.records[0].f), (4, 3));
        assert_eq!(r.records[39].verdict, Verdict::Unevaluated);
    }

    #[test]
    fn strict_inequality_rejects_tie() {
        let s = Schedule::from_scenario(&base(6, &[3, 4, 5]));
        let r = check_sleepy(&s, &unit(), TailMode::Frozen);
        assert!(!r.compliant);
        assert!(r.records.iter().all(|x| x.verdict == Verdict::Fails));
    }

    #[test]
    fn rho_scales_adversary() {
        let s = Schedule::from_scenario(&base(5, &[3, 4]));
        let p = SleepyParams::new(5, 2, 5, Ratio::new(3, 2));
        assert!(!check_sleepy(&s, &p, TailMode::Frozen).compliant);
        let p = SleepyParams::new(5, 2, 5, Ratio::new(5, 4));
        assert!(check_sleepy(&s, &p, TailMode::Frozen).compliant);
    }

    #[test]
    fn pi_must_be_below_eta() {
        let s = Schedule::from_scenario(&base(4, &[]));
        let w = AsynchronyWindow { last_sync_view: 2, pi: 2 };
        assert_eq!(
            check_async(&s, Eta::Finite(2), Some(w), TailMode::Frozen),
            Err(VerifyError::PiGeEta { pi: 2, eta: "2".into() })
        );
        let ok = check_async(&s, Eta::Finite(3), Some(w), TailMode::Frozen).unwrap();
        assert!(ok.compliant);
        assert_eq!(ok.eq_async.len(), 4);
    }

    #[test]
    fn ga_condition_counts_end_of_instance_corruptions() {
        let mut sc = base(5, &[4]);
        sc.corrupt = vec![Corruption { validator: ValidatorId(3), scheduled_at: 1 }];
        sc.sleep = vec![SleepInterval { validator: ValidatorId(2), from: 0, until: 1 }];
        let s = Schedule::from_scenario(&sc);
        let r = check_ga(&s, GaKind::TwoGrade, TailMode::Unevaluated);
        assert_eq!((r.records[0].h, r.records[0].f), (2, 2));
        assert!(!r.compliant);
    }
}
