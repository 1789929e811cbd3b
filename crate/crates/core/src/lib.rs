//! Core library for `rescuemesh`: a protocol suite and deterministic
//! discrete-event simulator for ad-hoc smartphone networks that must operate
//! when infrastructure is partially or wholly down.
//!
//! Two subsystems share one simulated world:
//!
//! * **Self-rescue** — nodes in a trapped group discover each other, agree on
//!   a clique-based duty-cycle schedule so that at least one radio per
//!   maximal clique is awake in every slot, build a GPS-free relative
//!   coordinate map from pairwise distance estimates, and compose an
//!   emergency message carrying both absolute hints and the relative map.
//! * **Messaging** — a reactive mesh routing layer with gateway nodes that
//!   bridge ad-hoc islands into the cellular network, a command-center
//!   store-and-forward mailbox, and opportunistic fallbacks (static handoff
//!   and replication/flooding) for partitioned or fully infrastructure-less
//!   cases.
//!
//! Everything is deterministic: simulations order events by integer
//! microsecond timestamp with a monotone sequence tiebreak, all protocol
//! state iterates in `BTree*` order, and every random draw comes from a
//! seeded stream. Two runs of the same scenario and seed produce
//! byte-identical event logs.

pub mod geometry;
pub mod graph;
pub mod log;
pub mod positioning;
pub mod report;
pub mod rescue;
pub mod routing;
pub mod scenario;
pub mod sim;
pub mod units;

pub use graph::{Graph, NodeId};
pub use report::MetricsReport;
pub use scenario::{load_scenario, Scenario, ScenarioError};
pub use sim::{run_scenario, RunOutput, RunOverrides};
