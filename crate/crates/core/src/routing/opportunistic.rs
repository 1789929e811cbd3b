//! Custody bookkeeping for store-carry-forward delivery: which packets a
//! node holds, who already has a copy, and which are known delivered.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::NodeId;

use super::{DataPacket, MessageId};

#[derive(Debug, Clone, Default)]
pub struct Custody {
    held: BTreeMap<MessageId, DataPacket>,
    given: BTreeMap<MessageId, BTreeSet<NodeId>>,
    done: BTreeSet<MessageId>,
}

impl Custody {
    /// Take custody of a packet. Returns false if it is already held or
    /// known delivered.
    pub fn hold(&mut self, packet: DataPacket) -> bool {
        if self.done.contains(&packet.id) || self.held.contains_key(&packet.id) {
            return false;
        }
        self.held.insert(packet.id, packet);
        true
    }

    /// Packets worth offering to `contact`, marking them as given.
    /// `eligible` filters on the packet (e.g. static-relay rules).
    pub fn handoffs_for(
        &mut self,
        contact: NodeId,
        mut eligible: impl FnMut(&DataPacket) -> bool,
    ) -> Vec<DataPacket> {
        let mut out = Vec::new();
        for (id, p) in &self.held {
            if contact == p.src || !eligible(p) {
                continue;
            }
            let given = self.given.entry(*id).or_default();
            if given.insert(contact) {
                out.push(p.clone());
            }
        }
        out
    }

    /// Note that a packet reached its destination; drops our copy.
    pub fn delivered(&mut self, id: MessageId) -> bool {
        self.given.remove(&id);
        let held = self.held.remove(&id).is_some();
        self.done.insert(id);
        held
    }

    pub fn is_done(&self, id: MessageId) -> bool {
        self.done.contains(&id)
    }

    pub fn held(&self) -> impl Iterator<Item = &DataPacket> {
        self.held.values()
    }

    pub fn holds(&self, id: MessageId) -> bool {
        self.held.contains_key(&id)
    }

    pub fn held_count(&self) -> usize {
        self.held.len()
    }
}
