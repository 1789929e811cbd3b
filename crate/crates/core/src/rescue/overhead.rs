//! Message accounting for the group-formation protocol.
//!
//! Setup runs in three broadcast rounds (hello, neighbor set, priority
//! flood) followed by the slot-claim cascade. The message count is a pure
//! function of the topology, so the simulator's observed counts can be
//! checked against the closed form below.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{Graph, NodeId};

use super::schedule::{precedes, WakeStats};

/// Nodes preceded by none of their neighbors in the claim order. They cannot
/// be triggered by an earlier claim, so they fire on a timer. Always an
/// independent set, and always contains each component's initiator.
pub fn sources(g: &Graph, stats: &BTreeMap<NodeId, WakeStats>) -> BTreeSet<NodeId> {
    g.nodes()
        .filter(|&u| g.neighbors(u).all(|v| precedes(u, v, stats)))
        .collect()
}

/// Per-component initiator: the first node of the component in claim order.
/// It seeds the component's relative coordinate frame.
pub fn initiators(g: &Graph, stats: &BTreeMap<NodeId, WakeStats>) -> BTreeSet<NodeId> {
    g.connected_components()
        .into_iter()
        .map(|comp| {
            comp.into_iter()
                .reduce(|best, u| if precedes(u, best, stats) { u } else { best })
                .expect("components are non-empty")
        })
        .collect()
}

/// Non-initiator nodes that claim after every one of their neighbors. When
/// such a node claims, every schedule in its closed neighborhood is final,
/// so it floods the consolidated schedule and position fragment to the whole
/// component. Initiators are excluded even when isolated.
pub fn completers(g: &Graph, stats: &BTreeMap<NodeId, WakeStats>) -> BTreeSet<NodeId> {
    let init = initiators(g, stats);
    g.nodes()
        .filter(|&u| !init.contains(&u) && g.neighbors(u).all(|v| precedes(v, u, stats)))
        .collect()
}

/// Closed-form message count for one component of `n` nodes with `n_f`
/// completers: `3n` single-hop broadcasts (hello, neighbor set, slot claim),
/// `n²` transmissions to flood the `n` priority packets (each node forwards
/// each packet exactly once), and `n` more per completer flood.
pub fn component_message_count(n: u64, n_f: u64) -> u64 {
    3 * n + n * n + n_f * n
}

/// Expected total message count over all components of `g`.
pub fn expected_message_count(g: &Graph, stats: &BTreeMap<NodeId, WakeStats>) -> u64 {
    let compl = completers(g, stats);
    g.connected_components()
        .into_iter()
        .map(|comp| {
            let n = comp.len() as u64;
            let n_f = comp.iter().filter(|u| compl.contains(u)).count() as u64;
            component_message_count(n, n_f)
        })
        .sum()
}
