//! Event-log records and the JSONL encoding.
//!
//! A run produces one record per observable event, in event order. The
//! encoding is one JSON object per line with a `kind` discriminator, and is
//! byte-identical across runs of the same scenario and seed — determinism
//! tests diff the raw bytes.

use serde::{Deserialize, Serialize};

use crate::graph::NodeId;
use crate::routing::RouteKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    /// Local ad-hoc radio.
    Radio,
    /// Cellular infrastructure segment.
    Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LogEvent {
    /// A transmission left `node`. `to` is set for unicasts and cellular
    /// sends, absent for broadcasts.
    Tx {
        channel: Channel,
        msg: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        to: Option<NodeId>,
    },
    /// A transmission arrived at `node`.
    Rx {
        channel: Channel,
        msg: String,
        from: NodeId,
    },
    /// A message was originated (entered the network) at `node`.
    Sent {
        id: String,
        dst: NodeId,
    },
    /// A message addressed to `node` was consumed there.
    Delivered {
        id: String,
        src: NodeId,
        hops: u32,
        route: RouteKind,
        delay_us: u64,
    },
    /// A copy was discarded with no way forward.
    Dropped {
        id: String,
        reason: String,
    },
    /// `node` entered or left cellular coverage.
    Coverage {
        covered: bool,
    },
    /// Periodic coverage sample (only with sampling enabled).
    CoverageSample {
        covered: bool,
    },
    /// `node` claimed its wake slots.
    Scheduled {
        slots: Vec<u64>,
        hyperperiod: u64,
        gamma: String,
        theta: String,
    },
    /// `node` could not claim enough slots.
    Fault {
        needed: u64,
        free: u64,
    },
    /// Wake-slot attribution on the nominal grid (trapped nodes only).
    Slot {
        index: u64,
        awake: bool,
    },
    /// A trapped node handed its emergency report to a passing phone.
    EmergencyHandoff {
        to: NodeId,
        members: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub t_us: u64,
    pub node: NodeId,
    #[serde(flatten)]
    pub event: LogEvent,
}

/// Encode records as JSON Lines (one object per line, trailing newline).
pub fn to_jsonl(records: &[LogRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("log records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> Result<Vec<LogRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Transmission counts per message label, recomputed from a log. Used to
/// reconcile the metrics report against the event log.
pub fn tx_counts(records: &[LogRecord], channel: Channel) -> std::collections::BTreeMap<String, u64> {
    let mut out = std::collections::BTreeMap::new();
    for r in records {
        if let LogEvent::Tx { channel: c, msg, .. } = &r.event {
            if *c == channel {
                *out.entry(msg.clone()).or_default() += 1;
            }
        }
    }
    out
}
