//! Reactive route-table bookkeeping: installed routes with lifetimes, and
//! discovery state for collecting replies until the decision deadline.

use std::collections::BTreeMap;

use crate::graph::NodeId;
use crate::units::Micros;

use super::DataPacket;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Route {
    pub next_hop: NodeId,
    pub hops: u32,
    pub expires: Micros,
    /// The path ends at a gateway that relays into the infrastructure.
    pub via_gateway: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RouteTable {
    routes: BTreeMap<NodeId, Route>,
}

impl RouteTable {
    /// A still-live route to `dest`, if any.
    pub fn fresh(&self, dest: NodeId, now: Micros) -> Option<Route> {
        self.routes.get(&dest).copied().filter(|r| r.expires > now)
    }

    pub fn install(&mut self, dest: NodeId, route: Route) {
        self.routes.insert(dest, route);
    }

    /// Push a route's expiry out to `now + lifetime` (active-route refresh).
    pub fn refresh(&mut self, dest: NodeId, now: Micros, lifetime: Micros) {
        if let Some(r) = self.routes.get_mut(&dest) {
            r.expires = now + lifetime;
        }
    }

    pub fn remove(&mut self, dest: NodeId) {
        self.routes.remove(&dest);
    }

    /// Drop every route through `next_hop`; returns the destinations lost.
    pub fn invalidate_via(&mut self, next_hop: NodeId) -> Vec<NodeId> {
        let broken: Vec<NodeId> = self
            .routes
            .iter()
            .filter(|(_, r)| r.next_hop == next_hop)
            .map(|(d, _)| *d)
            .collect();
        for d in &broken {
            self.routes.remove(d);
        }
        broken
    }

    /// Drop routes to `dest` that go through `next_hop` (route-error input).
    pub fn invalidate_reported(&mut self, dest: NodeId, next_hop: NodeId) -> bool {
        if self.routes.get(&dest).is_some_and(|r| r.next_hop == next_hop) {
            self.routes.remove(&dest);
            true
        } else {
            false
        }
    }
}

/// One reply received during discovery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplyInfo {
    pub next_hop: NodeId,
    pub hops: u32,
    pub via_gateway: bool,
}

/// In-flight discovery for one destination.
#[derive(Debug, Clone)]
pub struct Discovery {
    pub rreq_id: u32,
    pub attempt: u32,
    pub replies: Vec<ReplyInfo>,
    pub queued: Vec<DataPacket>,
}

/// Pick the route at the decision deadline: direct replies win outright;
/// gateway-flagged replies are used only when nothing else answered, and
/// then the nearest gateway wins. Ties break on hop count, then next hop id.
pub fn choose_route(replies: &[ReplyInfo]) -> Option<ReplyInfo> {
    let best = |gateway: bool| {
        replies
            .iter()
            .filter(|r| r.via_gateway == gateway)
            .min_by_key(|r| (r.hops, r.next_hop))
            .copied()
    };
    best(false).or_else(|| best(true))
}
