mod common;

use std::collections::BTreeSet;

use common::{all_cases, choices, recorded_outputs, reference_ga2, small_instance, Choice, Property};
use tob_core::sim::run;
use tob_core::verify::{verify_trace, ViolationKind};
use tob_core::ValidatorId;

fn as_property(k: ViolationKind) -> Option<Property> {
    match k {
        ViolationKind::Consistency => Some(Property::Consistency),
        ViolationKind::Uniqueness => Some(Property::Uniqueness),
        ViolationKind::GradedDelivery => Some(Property::GradedDelivery),
        ViolationKind::Validity => Some(Property::Validity),
        ViolationKind::Integrity => Some(Property::Integrity),
        _ => None,
    }
}

#[test]
fn enumeration_size() {
    assert_eq!(choices().len(), 36);
    assert_eq!(all_cases().count(), 4 * 36 * 36 * 36);
}

#[test]
fn reference_matches_on_equivocation_cases() {
    let c = choices();
    let both: Vec<Choice> = c.iter().copied().filter(|x| matches!(x, Choice::Both(..))).collect();
    for inputs in common::INPUT_PATTERNS {
        for (k, &x) in both.iter().enumerate() {
            let s = small_instance(inputs, [x, both[(k * 7) % both.len()], c[k % c.len()]]);
            let trace = run(&s).unwrap();
            let reference = reference_ga2(&trace);
            assert_eq!(reference.outputs, recorded_outputs(&trace), "{}", s.to_text());
            let report = verify_trace(&trace).unwrap();
            let flagged: BTreeSet<Property> = report.violations.iter().filter_map(|v| as_property(v.kind)).collect();
            assert_eq!(flagged, reference.violated);
            assert!(flagged.is_empty());
        }
    }
}

#[test]
fn late_waker_takes_part_only_in_grade_zero() {
    let s = small_instance(["a", "a", "b"], [Choice::Nothing; 3]);
    let outputs = recorded_outputs(&run(&s).unwrap());
    assert!(outputs.contains_key(&(ValidatorId(4), 0)));
    assert!(!outputs.contains_key(&(ValidatorId(4), 1)));
}
