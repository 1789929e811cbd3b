//! The metrics report a run produces, and structural comparison between two
//! reports.
//!
//! Everything a test or an operator would grep for lives here in one JSON
//! document: per-message outcomes, transmission counts by label, per-node
//! energy on the slot grid, and — when the scenario has a trapped group —
//! schedules, wake-up comparisons, message-overhead expectations and the
//! reconstructed relative positions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::graph::NodeId;
use crate::routing::RouteKind;
use crate::scenario::{MessageClass, RoutingPolicy, SchedulePolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageOutcome {
    /// Display form of the message id (`origin#seq`).
    pub id: String,
    pub src: NodeId,
    pub dst: NodeId,
    pub class: MessageClass,
    pub sent_at_us: u64,
    pub delivered: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delivered_at_us: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay_us: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hops: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route: Option<RouteKind>,
}

/// Transmission counts by message label. Self-rescue protocol traffic is
/// tallied separately from messaging-layer radio traffic so the closed-form
/// overhead prediction can be checked against it directly.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Overhead {
    pub rescue_tx: BTreeMap<String, u64>,
    pub radio_tx: BTreeMap<String, u64>,
    pub cell_tx: BTreeMap<String, u64>,
}

impl Overhead {
    pub fn rescue_total(&self) -> u64 {
        self.rescue_tx.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEnergy {
    pub node: NodeId,
    pub awake_us: u64,
    pub energy_mj: f64,
    /// Awake slots after the setup phase — the quantity the wake-up
    /// comparisons count. Absent for always-on (non-trapped) nodes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheduled_wakeups: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSchedule {
    pub node: NodeId,
    pub slots: Vec<u64>,
    /// Wake frequency γ as an exact rational, e.g. `"1/3"`.
    pub gamma: String,
    /// Scheduling priority θ as an exact rational, e.g. `"13/12"`.
    pub theta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VacancyReport {
    pub clique: Vec<NodeId>,
    /// Fraction of slots in which no clique member is awake.
    pub vacancy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WakeupComparison {
    pub clique: u64,
    /// May be fractional when the rotation length does not divide the
    /// hyperperiod; kept exact as a rational string.
    pub mis_rotation: String,
    pub always_awake: u64,
    pub savings_vs_always: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultReport {
    pub node: NodeId,
    pub needed: u64,
    pub free: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePosition {
    pub node: NodeId,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositioningReport {
    /// Whose frame the coordinates are in (the group initiator).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<NodeId>,
    /// Every member converged on an identical map.
    pub agreed: bool,
    pub positions: Vec<NodePosition>,
    pub unpositioned: Vec<NodeId>,
    /// Measured edges whose endpoints could not all be placed.
    pub pending_edges: Vec<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub members: Vec<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hyperperiod: Option<u64>,
    pub schedules: Vec<NodeSchedule>,
    pub vacancies: Vec<VacancyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wakeups_per_hyperperiod: Option<WakeupComparison>,
    /// Closed-form protocol message count for this group.
    pub overhead_expected: u64,
    pub faults: Vec<FaultReport>,
    pub positioning: PositioningReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescueReport {
    pub slot_awake_mj: f64,
    pub slot_sleep_mj: f64,
    pub setup_slots: u64,
    pub total_slots: u64,
    pub groups: Vec<GroupReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub horizon_us: u64,
    pub routing_policy: RoutingPolicy,
    pub schedule_policy: SchedulePolicy,
    pub messages: Vec<MessageOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delivery_ratio: Option<f64>,
    pub overhead: Overhead,
    pub energy: Vec<NodeEnergy>,
    /// Group energy relative to everyone staying awake, over the whole
    /// horizon including the setup phase. Absent without a trapped group.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_vs_always_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rescue: Option<RescueReport>,
}

impl MetricsReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<MetricsReport, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn outcome(&self, id: &str) -> Option<&MessageOutcome> {
        self.messages.iter().find(|m| m.id == id)
    }
}

/// Structural comparison of two reports: one line per differing JSON leaf,
/// `path: left != right`. Identical reports yield an empty list.
pub fn compare_runs(a: &MetricsReport, b: &MetricsReport) -> Vec<String> {
    let va = serde_json::to_value(a).expect("reports serialize");
    let vb = serde_json::to_value(b).expect("reports serialize");
    let mut diffs = Vec::new();
    diff_value("$", &va, &vb, &mut diffs);
    diffs
}

fn diff_value(path: &str, a: &Value, b: &Value, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Object(ma), Value::Object(mb)) => {
            for k in ma.keys().chain(mb.keys().filter(|k| !ma.contains_key(*k))) {
                let sub = format!("{path}.{k}");
                match (ma.get(k), mb.get(k)) {
                    (Some(x), Some(y)) => diff_value(&sub, x, y, out),
                    (Some(x), None) => out.push(format!("{sub}: {x} != (absent)")),
                    (None, Some(y)) => out.push(format!("{sub}: (absent) != {y}")),
                    (None, None) => unreachable!(),
                }
            }
        }
        (Value::Array(xa), Value::Array(xb)) => {
            for i in 0..xa.len().max(xb.len()) {
                let sub = format!("{path}[{i}]");
                match (xa.get(i), xb.get(i)) {
                    (Some(x), Some(y)) => diff_value(&sub, x, y, out),
                    (Some(x), None) => out.push(format!("{sub}: {x} != (absent)")),
                    (None, Some(y)) => out.push(format!("{sub}: (absent) != {y}")),
                    (None, None) => unreachable!(),
                }
            }
        }
        _ => {
            if a != b {
                out.push(format!("{path}: {a} != {b}"));
            }
        }
    }
}
