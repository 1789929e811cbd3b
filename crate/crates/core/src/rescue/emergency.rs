//! Emergency-report composition.
//!
//! Once a trapped group has finished scheduling and positioning, every
//! member holds the same consolidated picture. The report bundles it for
//! transmission the moment any member makes outside contact: how many people
//! are trapped, their relative coordinate map, any last known absolute
//! fixes, and which members could not be positioned.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::graph::NodeId;
use crate::units::Micros;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergencyReport {
    /// Number of people in the group (one phone each).
    pub group_size: usize,
    pub members: Vec<NodeId>,
    /// Last absolute fixes taken before connectivity was lost, where known.
    pub last_known: BTreeMap<NodeId, Point>,
    /// Relative coordinates in the group frame.
    pub relative_positions: BTreeMap<NodeId, Point>,
    /// Members without coordinates (too few measured links).
    pub unpositioned: Vec<NodeId>,
    pub composed_at: Micros,
}

impl EmergencyReport {
    pub fn compose(
        members: impl IntoIterator<Item = NodeId>,
        last_known: BTreeMap<NodeId, Point>,
        relative_positions: BTreeMap<NodeId, Point>,
        composed_at: Micros,
    ) -> EmergencyReport {
        let mut members: Vec<NodeId> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        let unpositioned = members
            .iter()
            .copied()
            .filter(|m| !relative_positions.contains_key(m))
            .collect();
        EmergencyReport {
            group_size: members.len(),
            members,
            last_known,
            relative_positions,
            unpositioned,
            composed_at,
        }
    }
}
