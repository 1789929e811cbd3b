//! Messaging subsystem: link management, reactive mesh routing with gateway
//! bridging, command-center store-and-forward, and opportunistic fallbacks.
//!
//! The per-node state machine lives in [`mesh`]; the pure route-table and
//! custody bookkeeping live in [`aodv`] and [`opportunistic`].

pub mod aodv;
pub mod mesh;
pub mod opportunistic;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::NodeId;
use crate::scenario::MessageClass;
use crate::units::Micros;

pub use mesh::{MeshAction, MeshConfig, MeshMsg, MeshNode, MeshTimer};

/// Globally unique message identifier: origin plus a per-origin sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MessageId {
    pub origin: NodeId,
    pub seq: u32,
}

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.origin, self.seq)
    }
}

/// How a message finally reached its destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteKind {
    /// Pure infrastructure: sender and receiver both on cellular.
    Cellular,
    /// Multi-hop ad-hoc route.
    Adhoc,
    /// Ad-hoc to a gateway, then infrastructure.
    Gateway,
    /// Carried via stationary relays.
    Static,
    /// Carried via replication to every contact.
    Flood,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub id: MessageId,
    pub src: NodeId,
    pub dst: NodeId,
    pub class: MessageClass,
    pub sent_at: Micros,
    pub hops: u32,
    pub route: RouteKind,
    pub note: Option<String>,
}
