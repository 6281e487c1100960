//! Where each protocol's GA instances sit on the tick axis.

use crate::ga::GaKind;
use crate::scenario::ProtocolKind;
use crate::tob_double::Tob2;
use crate::tob_single::Tob1;
use crate::types::Tick;

pub fn ga_kind(protocol: ProtocolKind) -> GaKind {
    match protocol {
        ProtocolKind::Ga2 | ProtocolKind::Tob2 => GaKind::TwoGrade,
        ProtocolKind::Ga3 | ProtocolKind::Tob1 | ProtocolKind::Tob1Lmd => GaKind::ThreeGrade,
    }
}

pub fn instance_start(protocol: ProtocolKind, delta: u64, instance: u64) -> Tick {
    match protocol {
        ProtocolKind::Ga2 | ProtocolKind::Ga3 => 0,
        ProtocolKind::Tob1 | ProtocolKind::Tob1Lmd => Tob1::instance_start(instance, delta),
        ProtocolKind::Tob2 => Tob2::instance_start(instance, delta),
    }
}

/// First and last tick of an instance.
pub fn instance_span(protocol: ProtocolKind, delta: u64, instance: u64) -> (Tick, Tick) {
    let start = instance_start(protocol, delta, instance);
    (start, start + ga_kind(protocol).duration() * delta)
}

/// Instances whose input phase is `now`.
pub fn instances_starting(protocol: ProtocolKind, delta: u64, now: Tick) -> Vec<u64> {
    match protocol {
        ProtocolKind::Ga2 | ProtocolKind::Ga3 => {
            if now == 0 {
                vec![0]
            } else {
                Vec::new()
            }
        }
        ProtocolKind::Tob1 | ProtocolKind::Tob1Lmd => {
            let vt = 4 * delta;
            if now >= delta && (now - delta).is_multiple_of(vt) {
                vec![(now - delta) / vt]
            } else {
                Vec::new()
            }
        }
        ProtocolKind::Tob2 => {
            let vt = 5 * delta;
            let v = now / vt;
            match now % vt {
                p if p == delta => vec![2 * v],
                p if p == 3 * delta => vec![2 * v + 1],
                _ => Vec::new(),
            }
        }
    }
}

/// The view an instance belongs to.
pub fn instance_view(protocol: ProtocolKind, instance: u64) -> u64 {
    match protocol {
        ProtocolKind::Tob2 => instance / 2,
        _ => instance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starting_instances_match_spans() {
        for p in ProtocolKind::ALL {
            for now in 0..200 {
                for i in instances_starting(p, 3, now) {
                    assert_eq!(instance_span(p, 3, i).0, now, "{p} instance {i}");
                }
            }
        }
        assert_eq!(instance_span(ProtocolKind::Tob1, 2, 1), (10, 20));
        assert_eq!(instance_span(ProtocolKind::Tob2, 2, 3), (16, 22));
    }
}
