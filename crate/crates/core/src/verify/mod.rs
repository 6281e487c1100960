//! Offline checkers for traces and schedules.

pub mod leader;
pub mod metrics;
pub mod model;
pub mod properties;
pub mod schedule;

use serde::Serialize;

use crate::error::VerifyError;
use crate::scenario::{Eta, ProtocolKind};
use crate::sim::timing::ga_kind;
use crate::trace::Trace;

pub use leader::{good_leader, good_leader_rate};
pub use metrics::{metrics, Metrics};
pub use model::{
    check_async, check_ga, check_sleepy, AsyncReport, ComplianceReport, SleepyParams, TickRecord, Verdict, ViewRecord,
};
pub use properties::{reorg_window, Violation, ViolationKind};
pub use schedule::{Schedule, TailMode};

use properties::Index;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub violations: Vec<Violation>,
    /// Whether the run's schedule meets the participation assumption of its protocol.
    pub compliant: bool,
}

impl VerifyReport {
    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

/// Whether the schedule satisfies the protocol's participation assumption,
/// with the state at the horizon assumed to persist.
pub fn protocol_compliance(
    schedule: &Schedule,
    protocol: ProtocolKind,
    eta: Option<Eta>,
    window: Option<crate::scenario::AsynchronyWindow>,
) -> Result<bool, VerifyError> {
    Ok(match protocol {
        ProtocolKind::Ga2 | ProtocolKind::Ga3 => check_ga(schedule, ga_kind(protocol), TailMode::Frozen).compliant,
        ProtocolKind::Tob1 | ProtocolKind::Tob2 => {
            let params = SleepyParams::for_protocol(protocol, schedule.delta).expect("total-order protocol");
            check_sleepy(schedule, &params, TailMode::Frozen).compliant
        }
        ProtocolKind::Tob1Lmd => check_async(schedule, eta.unwrap_or(Eta::Finite(0)), window, TailMode::Frozen)?.compliant,
    })
}

/// Runs every oracle that applies to the trace's protocol.
pub fn verify_trace(trace: &Trace) -> Result<VerifyReport, VerifyError> {
    let info = trace.header()?.clone();
    let schedule = Schedule::from_trace(trace)?;
    let ix = Index::build(trace);
    let mut violations = Vec::new();
    properties::check_aborted(trace, &mut violations);
    properties::check_network(trace, &info, &schedule, &ix, &mut violations);
    match info.protocol {
        ProtocolKind::Ga2 | ProtocolKind::Ga3 => {
            properties::check_ga_outputs(&ix, &mut violations);
            properties::check_ga_inputs(&ix, &mut violations);
        }
        ProtocolKind::Tob1 | ProtocolKind::Tob2 => {
            properties::check_ga_outputs(&ix, &mut violations);
            properties::check_safety(&ix, |_| true, &mut violations);
            properties::check_reorg(&info, &schedule, &ix, &mut violations);
        }
        ProtocolKind::Tob1Lmd => match info.asynchrony {
            Some(w) => {
                let (last, resumed) = (w.last_sync_view, w.last_sync_view + w.pi + 2);
                properties::check_safety(&ix, |v| v <= last || v >= resumed, &mut violations);
            }
            None => {
                properties::check_safety(&ix, |_| true, &mut violations);
                properties::check_reorg(&info, &schedule, &ix, &mut violations);
            }
        },
    }
    let compliant = protocol_compliance(&schedule, info.protocol, info.eta, info.asynchrony)?;
    Ok(VerifyReport { violations, compliant })
}
