//! Batches of runs: randomized scenarios, metric tables and parameter sweeps.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{ScenarioError, VerifyError};
use crate::scenario::{
    AdversaryStrategy, Corruption, DelayPolicy, Eta, GaInput, ProtocolKind, Scenario, ScriptedSend, SleepInterval,
};
use crate::sim::run;
use crate::trace::Trace;
use crate::types::{MessageKind, ValidatorId};
use crate::verify::{metrics, protocol_compliance, verify_trace, Schedule};

/// Knobs for [`random_scenario`].
#[derive(Clone, Debug)]
pub struct RandomSpec {
    pub protocol: ProtocolKind,
    pub n: std::ops::RangeInclusive<u32>,
    pub delta: u64,
    pub horizon: u64,
    /// Per-validator chance of each sleep interval.
    pub sleep_chance: f64,
    pub max_sleeps: usize,
    /// Upper bound on byzantine plus scheduled corruptions, as a fraction of `n`.
    pub max_faulty: f64,
    pub strategies: Vec<AdversaryStrategy>,
}

impl RandomSpec {
    pub fn new(protocol: ProtocolKind, delta: u64, horizon: u64) -> Self {
        Self {
            protocol,
            n: 4..=9,
            delta,
            horizon,
            sleep_chance: 0.3,
            max_sleeps: 2,
            max_faulty: 0.5,
            strategies: vec![
                AdversaryStrategy::Silent,
                AdversaryStrategy::EquivocateSplit,
                AdversaryStrategy::WithholdMaxDelay,
                AdversaryStrategy::Scripted,
            ],
        }
    }
}

const GA_PATHS: [&str; 5] = ["a", "a/b", "a/c", "b", "genesis"];

/// Draws sleep intervals, byzantine validators, corruptions, adversary,
/// delay policy and (for GA) inputs. The result is valid but not
/// necessarily compliant.
pub fn random_scenario<R: Rng>(rng: &mut R, spec: &RandomSpec) -> Scenario {
    let n = rng.gen_range(spec.n.clone());
    let mut s = Scenario::new(n, spec.delta, spec.protocol, spec.horizon);
    s.seed = rng.gen();
    s.adversary = *spec.strategies.choose(rng).unwrap_or(&AdversaryStrategy::Silent);
    s.delay = *[DelayPolicy::Random, DelayPolicy::Max, DelayPolicy::Zero].choose(rng).expect("non-empty");

    let mut ids: Vec<ValidatorId> = s.validators().collect();
    ids.shuffle(rng);
    let faulty = rng.gen_range(0..=((n as f64 * spec.max_faulty) as usize).min(n as usize));
    for &v in &ids[..faulty] {
        if rng.gen_bool(0.5) {
            s.byzantine.push(v);
        } else {
            s.corrupt.push(Corruption { validator: v, scheduled_at: rng.gen_range(0..spec.horizon) });
        }
    }
    s.byzantine.sort();

    for v in s.validators().collect::<Vec<_>>() {
        let mut from = 0;
        for _ in 0..spec.max_sleeps {
            if from + 1 >= spec.horizon || !rng.gen_bool(spec.sleep_chance) {
                break;
            }
            let a = rng.gen_range(from..spec.horizon - 1);
            let b = rng.gen_range(a + 1..=spec.horizon.min(a + 1 + 6 * spec.delta));
            s.sleep.push(SleepInterval { validator: v, from: a, until: b });
            from = b + 1;
        }
    }

    if spec.protocol.is_ga() {
        for v in s.validators().collect::<Vec<_>>() {
            let path = GA_PATHS.choose(rng).expect("non-empty");
            s.input.push(GaInput { validator: v, path: (*path).to_string() });
        }
    }
    if s.adversary == AdversaryStrategy::Scripted {
        let senders: Vec<ValidatorId> = s.byzantine.iter().copied().chain(s.corrupt.iter().map(|c| c.validator)).collect();
        let views = s.view_ticks().map_or(1, |vt| spec.horizon.div_ceil(vt));
        for &sender in &senders {
            for _ in 0..rng.gen_range(0..=6) {
                let kind = if spec.protocol.is_tob() && rng.gen_bool(0.3) { MessageKind::Proposal } else { MessageKind::GaInput };
                let view = match (spec.protocol, kind) {
                    (_, MessageKind::Proposal) => rng.gen_range(0..views),
                    (p, _) if p.is_ga() => 0,
                    (ProtocolKind::Tob2, _) => rng.gen_range(0..2 * views),
                    _ => rng.gen_range(0..views),
                };
                s.script.push(ScriptedSend {
                    kind,
                    sender,
                    recipient: ValidatorId(rng.gen_range(0..n)),
                    view,
                    path: (*GA_PATHS.choose(rng).expect("non-empty")).to_string(),
                    send_tick: rng.gen_range(0..spec.horizon),
                    delay: rng.gen_range(0..=spec.delta),
                });
            }
        }
    }
    s
}

/// Whether the scenario meets its protocol's participation assumption.
pub fn is_compliant(s: &Scenario) -> bool {
    protocol_compliance(&Schedule::from_scenario(s), s.protocol, s.eta, s.asynchrony).unwrap_or(false)
}

/// Rejection-samples `count` compliant scenarios.
pub fn compliant_scenarios<R: Rng>(rng: &mut R, spec: &RandomSpec, count: usize) -> Vec<Scenario> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let s = random_scenario(rng, spec);
        if is_compliant(&s) {
            out.push(s);
        }
    }
    out
}

/// Runs `base` once per seed.
pub fn run_batch(base: &Scenario, seeds: impl IntoIterator<Item = u64>) -> Result<Vec<(u64, Trace)>, ScenarioError> {
    seeds
        .into_iter()
        .map(|seed| {
            let mut s = base.clone();
            s.seed = seed;
            run(&s).map(|t| (seed, t))
        })
        .collect()
}

/// One protocol's averaged metrics, durations in Δ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub protocol: ProtocolKind,
    /// Declared adversarial resilience.
    pub resilience: &'static str,
    pub runs: usize,
    pub best_case_latency: f64,
    pub avg_case_latency: f64,
    pub block_time: f64,
    pub votes_per_block: f64,
}

/// Averages trace metrics per protocol, in first-appearance order.
pub fn table(traces: &[Trace]) -> Result<Vec<TableRow>, VerifyError> {
    if traces.is_empty() {
        return Err(VerifyError::InsufficientTrace);
    }
    let mut rows: Vec<TableRow> = Vec::new();
    for t in traces {
        let protocol = t.header()?.protocol;
        let m = metrics(t)?;
        let row = match rows.iter_mut().find(|r| r.protocol == protocol) {
            Some(r) => r,
            None => {
                rows.push(TableRow {
                    protocol,
                    resilience: "1/2",
                    runs: 0,
                    best_case_latency: 0.0,
                    avg_case_latency: 0.0,
                    block_time: 0.0,
                    votes_per_block: 0.0,
                });
                rows.last_mut().expect("just pushed")
            }
        };
        row.runs += 1;
        row.best_case_latency += m.in_deltas(m.best_case_latency);
        row.avg_case_latency += m.in_deltas(m.avg_case_latency);
        row.block_time += m.in_deltas(m.block_time);
        row.votes_per_block += m.votes_per_decision;
    }
    for r in &mut rows {
        let k = r.runs as f64;
        r.best_case_latency /= k;
        r.avg_case_latency /= k;
        r.block_time /= k;
        r.votes_per_block /= k;
    }
    Ok(rows)
}

pub fn format_table(rows: &[TableRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>10} {:>8} {:>8} {:>10} {:>11}",
        "protocol", "resilience", "best", "avg", "block_time", "votes/block"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:>7.2}Δ {:>7.2}Δ {:>9.2}Δ {:>11.2}",
            r.protocol.name(),
            r.resilience,
            r.best_case_latency,
            r.avg_case_latency,
            r.block_time,
            r.votes_per_block
        );
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Fraction of honest validators awake; the rest sleep for the whole run.
    Participation,
    /// Fraction of validators byzantine from the start, taken from the highest ids.
    Corruption,
    Eta,
    Pi,
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "participation" => Ok(Axis::Participation),
            "corruption" => Ok(Axis::Corruption),
            "eta" => Ok(Axis::Eta),
            "pi" => Ok(Axis::Pi),
            _ => Err(format!("unknown axis {s:?}; expected participation, corruption, eta or pi")),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Participation => "participation",
            Axis::Corruption => "corruption",
            Axis::Eta => "eta",
            Axis::Pi => "pi",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub axis: Axis,
    pub value: String,
    pub seed: u64,
    /// `OK`, `PI_GE_ETA`, or the scenario error.
    pub status: String,
    pub compliant: Option<bool>,
    pub violations: Option<usize>,
}

fn fraction_count(fraction: f64, total: usize) -> usize {
    ((fraction * total as f64) + 1e-9).floor().max(0.0).min(total as f64) as usize
}

/// Applies one axis value to a copy of `base`.
pub fn apply_axis(base: &Scenario, axis: Axis, value: &str) -> Result<Scenario, String> {
    let mut s = base.clone();
    let number = || value.parse::<f64>().map_err(|_| format!("bad {axis} value {value:?}"));
    match axis {
        Axis::Participation => {
            let honest: Vec<ValidatorId> = s.validators().filter(|v| !s.byzantine.contains(v)).collect();
            let asleep = honest.len() - fraction_count(number()?, honest.len());
            s.sleep.retain(|i| !honest[..asleep].contains(&i.validator));
            for &v in &honest[..asleep] {
                s.sleep.push(SleepInterval { validator: v, from: 0, until: s.horizon });
            }
        }
        Axis::Corruption => {
            let k = fraction_count(number()?, s.n as usize) as u32;
            s.byzantine = (s.n - k..s.n).map(ValidatorId).collect();
            s.corrupt.retain(|c| c.validator.0 < s.n - k);
        }
        Axis::Eta => s.eta = Some(value.parse::<Eta>().map_err(|e| e.to_string())?),
        Axis::Pi => {
            let pi = value.parse::<u64>().map_err(|_| format!("bad pi value {value:?}"))?;
            let w = s.asynchrony.as_mut().ok_or("pi sweep needs an asynchrony window in the base scenario")?;
            w.pi = pi;
        }
    }
    Ok(s)
}

/// Runs every `(value, seed)` cell and attaches compliance and violation counts.
pub fn sweep(base: &Scenario, axis: Axis, values: &[String], seeds: &[u64]) -> Vec<SweepCell> {
    let mut cells = Vec::new();
    for value in values {
        for &seed in seeds {
            let mut cell = SweepCell { axis, value: value.clone(), seed, status: "OK".into(), compliant: None, violations: None };
            match apply_axis(base, axis, value) {
                Err(e) => cell.status = e,
                Ok(mut s) => {
                    s.seed = seed;
                    if let (Some(w), Some(eta)) = (s.asynchrony, s.eta) {
                        if !eta.exceeds(w.pi) {
                            cell.status = "PI_GE_ETA".into();
                            cells.push(cell);
                            continue;
                        }
                    }
                    match run(&s) {
                        Err(e) => cell.status = e.to_string(),
                        Ok(trace) => match verify_trace(&trace) {
                            Ok(report) => {
                                cell.compliant = Some(report.compliant);
                                cell.violations = Some(report.violations.len());
                            }
                            Err(e) => cell.status = e.to_string(),
                        },
                    }
                }
            }
            cells.push(cell);
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::AsynchronyWindow;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_scenarios_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in ProtocolKind::ALL {
            let spec = RandomSpec::new(p, 2, 80);
            for _ in 0..50 {
                random_scenario(&mut rng, &spec).validate().unwrap();
            }
        }
    }

    #[test]
    fn corruption_axis_floors_and_uses_top_ids() {
        let base = Scenario::new(10, 1, ProtocolKind::Tob1, 40);
        let s = apply_axis(&base, Axis::Corruption, "0.45").unwrap();
        assert_eq!(s.byzantine, (6..10).map(ValidatorId).collect::<Vec<_>>());
        assert!(is_compliant(&s));
        assert!(!is_compliant(&apply_axis(&base, Axis::Corruption, "0.5").unwrap()));
    }

    #[test]
    fn participation_axis_puts_honest_to_sleep() {
        let mut base = Scenario::new(6, 1, ProtocolKind::Tob2, 30);
        base.byzantine = vec![ValidatorId(5)];
        let s = apply_axis(&base, Axis::Participation, "0.6").unwrap();
        assert_eq!(s.sleep.len(), 2);
        assert!(s.sleep.iter().all(|i| i.from == 0 && i.until == 30 && i.validator.0 < 2));
    }

    #[test]
    fn eta_sweep_flags_pi_ge_eta() {
        let mut base = Scenario::new(4, 1, ProtocolKind::Tob1Lmd, 60);
        base.eta = Some(Eta::Finite(4));
        base.asynchrony = Some(AsynchronyWindow { last_sync_view: 3, pi: 2 });
        base.adversary = AdversaryStrategy::AsyncPartition;
        let cells = sweep(&base, Axis::Eta, &["2".into(), "3".into()], &[0]);
        assert_eq!(cells[0].status, "PI_GE_ETA");
        assert_eq!((cells[1].status.as_str(), cells[1].violations), ("OK", Some(0)));
    }

    #[test]
    fn table_needs_runs() {
        assert_eq!(table(&[]), Err(VerifyError::InsufficientTrace));
    }
}
