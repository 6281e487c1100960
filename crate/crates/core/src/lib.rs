//! Graded Agreement and Total-Order Broadcast protocols for dynamically
//! available validators, a deterministic sleepy-model simulator and the
//! offline checkers used to test them.

pub mod error;
pub mod experiment;
pub mod ga;
pub mod ga_node;
pub mod lmd;
pub mod protocol;
pub mod scenario;
pub mod sim;
pub mod tob_double;
pub mod tob_single;
pub mod trace;
pub mod types;
pub mod verify;

pub use error::{CoreError, GaError, ProtocolError, ScenarioError, VerifyError};
pub use scenario::{Eta, ProtocolKind, Scenario};
pub use trace::{Event, EventKind, RunInfo, Trace};
pub use types::{compatible, highest, is_prefix, BlockId, Log, Message, MessageKind, Tick, ValidatorId, VrfValue, GENESIS};
