use tob_core::scenario::{AdversaryStrategy, AsynchronyWindow, Corruption, ProtocolKind, Scenario, SleepInterval};
use tob_core::sim::run;
use tob_core::verify::{verify_trace, ViolationKind};
use tob_core::{Eta, Event, EventKind, Log, Trace, ValidatorId};

fn clean(s: &Scenario) {
    let trace = run(s).unwrap();
    let report = verify_trace(&trace).unwrap();
    assert!(report.compliant, "{} not compliant", s.protocol);
    assert!(report.violations.is_empty(), "{}: {:#?}", s.protocol, &report.violations[..report.violations.len().min(5)]);
}

#[test]
fn honest_runs_are_clean() {
    for p in ProtocolKind::ALL {
        let mut s = Scenario::new(5, 2, p, 120);
        if p == ProtocolKind::Tob1Lmd {
            s.eta = Some(Eta::Finite(3));
        }
        clean(&s);
    }
}

#[test]
fn equivocating_minority_with_sleepers_is_clean() {
    for p in [ProtocolKind::Tob1, ProtocolKind::Tob2, ProtocolKind::Ga2, ProtocolKind::Ga3] {
        let mut s = Scenario::new(7, 2, p, 200);
        s.seed = 5;
        s.adversary = AdversaryStrategy::EquivocateSplit;
        s.byzantine = vec![ValidatorId(6)];
        s.corrupt = vec![Corruption { validator: ValidatorId(5), scheduled_at: 30 }];
        if p.is_tob() {
            s.sleep = vec![SleepInterval { validator: ValidatorId(0), from: 40, until: 90 }];
        }
        clean(&s);
    }
}

#[test]
fn async_partition_below_eta_is_clean() {
    let mut s = Scenario::new(7, 2, ProtocolKind::Tob1Lmd, 200);
    s.eta = Some(Eta::Finite(4));
    s.asynchrony = Some(AsynchronyWindow { last_sync_view: 5, pi: 2 });
    s.adversary = AdversaryStrategy::AsyncPartition;
    s.byzantine = vec![ValidatorId(6)];
    clean(&s);
}

#[test]
fn injected_conflicting_decision_is_flagged() {
    let s = Scenario::new(4, 1, ProtocolKind::Tob1, 40);
    let mut trace = run(&s).unwrap();
    let (tick, view) = trace
        .events
        .iter()
        .find_map(|e| match &e.kind {
            EventKind::Decided { view, log } if log.len() > 1 => Some((e.tick, *view)),
            _ => None,
        })
        .unwrap();
    let forged = Log::genesis().extend(tob_core::BlockId(999_999));
    trace.events.push(Event { tick, validator: Some(ValidatorId(3)), kind: EventKind::Decided { view, log: forged } });
    let report = verify_trace(&trace).unwrap();
    assert!(report.has(ViolationKind::Safety));
}

#[test]
fn validator_missing_decisions_is_a_reorg() {
    let s = Scenario::new(4, 1, ProtocolKind::Tob2, 60);
    let trace = run(&s).unwrap();
    let events = trace
        .events
        .into_iter()
        .filter(|e| !(e.validator == Some(ValidatorId(2)) && e.tick >= 20 && matches!(e.kind, EventKind::Decided { .. })))
        .collect();
    let report = verify_trace(&Trace { events }).unwrap();
    assert!(report.has(ViolationKind::Reorg));
    assert!(!report.has(ViolationKind::Safety));
}

#[test]
fn forged_delivery_breaks_authenticity() {
    let s = Scenario::new(4, 1, ProtocolKind::Ga2, 4);
    let mut trace = run(&s).unwrap();
    let pos = trace.events.iter().position(|e| matches!(e.kind, EventKind::Delivered { .. })).unwrap();
    if let EventKind::Delivered { log, .. } = &mut trace.events[pos].kind {
        *log = Log::genesis().extend(tob_core::BlockId(77));
    }
    assert!(verify_trace(&trace).unwrap().has(ViolationKind::Authenticity));
}
