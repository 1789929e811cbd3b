//! Distributed group-formation protocol.
//!
//! Timeline, in node-local time (each node's clock carries a bounded skew):
//!
//! * round 0 — every node broadcasts a hello; receivers estimate link
//!   distances from it.
//! * round 1 — every node broadcasts its neighbor set with the measured
//!   distances attached; afterwards everyone knows its one-hop network.
//! * round 2 — every node broadcasts its priority packet (θ, γ denominator,
//!   last absolute fix), which is flooded component-wide.
//! * round 3 — nodes preceded by no neighbor claim their wake slots on a
//!   timer; every other node claims as soon as the last preceding neighbor's
//!   claim arrives. Claims carry position-map fragments, so coordinates
//!   cascade along with the schedule. A node that claims after its entire
//!   neighborhood floods the consolidated result; the frame-seeding
//!   initiator never does.
//!
//! Everyone starts sleeping by schedule at `start_epoch + 5·round`,
//! regardless of when its own claim settled.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::lcm;
use num_rational::Ratio;

use crate::geometry::Point;
use crate::graph::{build_one_hop_network, NodeId, OneHopNetwork};
use crate::positioning::{build_map, extend_map, merge_maps, PositionContext, PositionMap};
use crate::units::Micros;

use super::emergency::EmergencyReport;
use super::schedule::{choose_slots, ScheduleError};

/// Rounds between the trigger epoch and the first scheduled slot.
pub const ROUNDS_BEFORE_START: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    /// Trigger epoch `t0`: the moment the group starts forming.
    pub start_epoch: Micros,
    /// Protocol round length `R`.
    pub round: Micros,
    /// Radio range in meters (used for mirror plausibility checks).
    pub range: f64,
}

impl ProtocolConfig {
    pub fn schedule_start(&self) -> Micros {
        self.start_epoch + self.round * ROUNDS_BEFORE_START
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TimerKind {
    Hello,
    NeighborSet,
    Priority,
    SourceClaim,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorityPacket {
    pub origin: NodeId,
    pub theta: Ratio<u64>,
    pub gamma_denominator: u64,
    pub last_known: Option<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimPacket {
    pub origin: NodeId,
    pub slots: BTreeSet<u64>,
    pub hyperperiod: u64,
    pub start: Micros,
    pub frame: NodeId,
    pub positions: BTreeMap<NodeId, Point>,
    pub pending: BTreeMap<(NodeId, NodeId), f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionPacket {
    pub origin: NodeId,
    pub schedules: BTreeMap<NodeId, BTreeSet<u64>>,
    pub hyperperiod: u64,
    pub frame: NodeId,
    pub positions: BTreeMap<NodeId, Point>,
    pub pending: BTreeMap<(NodeId, NodeId), f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RescueMsg {
    Hello,
    NeighborSet(BTreeMap<NodeId, f64>),
    Priority(PriorityPacket),
    Claim(ClaimPacket),
    Completion(CompletionPacket),
}

impl RescueMsg {
    /// Short label used in event logs and overhead accounting.
    pub fn kind(&self) -> &'static str {
        match self {
            RescueMsg::Hello => "hello",
            RescueMsg::NeighborSet(_) => "neighbor-set",
            RescueMsg::Priority(_) => "priority",
            RescueMsg::Claim(_) => "claim",
            RescueMsg::Completion(_) => "completion",
        }
    }
}

/// What the node wants the environment to do.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Broadcast(RescueMsg),
    SetTimer(Micros, TimerKind),
    Fault(ScheduleError),
}

/// Per-node protocol state machine. Pure: all radio and clock effects are
/// expressed through [`Action`]s and the caller-supplied `now`.
#[derive(Debug, Clone)]
pub struct RescueNode {
    pub id: NodeId,
    cfg: ProtocolConfig,
    skew_us: i64,
    last_known: Option<Point>,
    heard: BTreeMap<NodeId, f64>,
    neighbor_sets: BTreeMap<NodeId, BTreeMap<NodeId, f64>>,
    one_hop: Option<OneHopNetwork>,
    theta: Option<Ratio<u64>>,
    gamma_denominator: Option<u64>,
    priorities: BTreeMap<NodeId, PriorityPacket>,
    forwarded_priorities: BTreeSet<NodeId>,
    schedules: BTreeMap<NodeId, BTreeSet<u64>>,
    my_slots: Option<BTreeSet<u64>>,
    hyperperiod: Option<u64>,
    map: PositionMap,
    forwarded_completions: BTreeSet<NodeId>,
    fault: Option<ScheduleError>,
}

impl RescueNode {
    pub fn new(
        id: NodeId,
        cfg: ProtocolConfig,
        skew_us: i64,
        last_known: Option<Point>,
    ) -> RescueNode {
        RescueNode {
            id,
            cfg,
            skew_us,
            last_known,
            heard: BTreeMap::new(),
            neighbor_sets: BTreeMap::new(),
            one_hop: None,
            theta: None,
            gamma_denominator: None,
            priorities: BTreeMap::new(),
            forwarded_priorities: BTreeSet::new(),
            schedules: BTreeMap::new(),
            my_slots: None,
            hyperperiod: None,
            map: PositionMap {
                frame_owner: id,
                positions: BTreeMap::new(),
                pending: BTreeMap::new(),
            },
            forwarded_completions: BTreeSet::new(),
            fault: None,
        }
    }

    /// Nominal instant shifted by this node's clock skew.
    fn local(&self, nominal: Micros) -> Micros {
        let t = nominal.0 as i64 + self.skew_us;
        Micros(t.max(0) as u64)
    }

    /// Timers to arm when the run starts.
    pub fn start_actions(&self) -> Vec<Action> {
        let t0 = self.cfg.start_epoch;
        let r = self.cfg.round;
        vec![
            Action::SetTimer(self.local(t0), TimerKind::Hello),
            Action::SetTimer(self.local(t0 + r), TimerKind::NeighborSet),
            Action::SetTimer(self.local(t0 + r * 2), TimerKind::Priority),
            Action::SetTimer(self.local(t0 + r * 3), TimerKind::SourceClaim),
        ]
    }

    pub fn on_timer(&mut self, kind: TimerKind, _now: Micros) -> Vec<Action> {
        match kind {
            TimerKind::Hello => vec![Action::Broadcast(RescueMsg::Hello)],
            TimerKind::NeighborSet => {
                vec![Action::Broadcast(RescueMsg::NeighborSet(self.heard.clone()))]
            }
            TimerKind::Priority => {
                self.compute_one_hop();
                let packet = PriorityPacket {
                    origin: self.id,
                    theta: self.theta.expect("one-hop known"),
                    gamma_denominator: self.gamma_denominator.expect("one-hop known"),
                    last_known: self.last_known,
                };
                self.priorities.insert(self.id, packet.clone());
                self.forwarded_priorities.insert(self.id);
                vec![Action::Broadcast(RescueMsg::Priority(packet))]
            }
            TimerKind::SourceClaim => {
                if self.neighbors().iter().any(|v| self.precedes_me(*v)) {
                    Vec::new() // not a source; an incoming claim will trigger us
                } else {
                    self.try_claim()
                }
            }
        }
    }

    pub fn on_message(
        &mut self,
        from: NodeId,
        measured_distance: Option<f64>,
        msg: &RescueMsg,
        _now: Micros,
    ) -> Vec<Action> {
        match msg {
            RescueMsg::Hello => {
                if let Some(d) = measured_distance {
                    self.heard.insert(from, d);
                }
                Vec::new()
            }
            RescueMsg::NeighborSet(set) => {
                self.neighbor_sets.insert(from, set.clone());
                Vec::new()
            }
            RescueMsg::Priority(p) => {
                if self.forwarded_priorities.insert(p.origin) {
                    self.priorities.insert(p.origin, p.clone());
                    vec![Action::Broadcast(RescueMsg::Priority(p.clone()))]
                } else {
                    Vec::new()
                }
            }
            RescueMsg::Claim(c) => {
                self.schedules.entry(c.origin).or_insert_with(|| c.slots.clone());
                self.absorb_fragment(c.frame, &c.positions, &c.pending);
                if self.my_slots.is_none()
                    && self
                        .neighbors()
                        .iter()
                        .all(|v| !self.precedes_me(*v) || self.schedules.contains_key(v))
                {
                    self.try_claim()
                } else {
                    Vec::new()
                }
            }
            RescueMsg::Completion(c) => {
                if self.forwarded_completions.insert(c.origin) {
                    for (n, slots) in &c.schedules {
                        self.schedules.entry(*n).or_insert_with(|| slots.clone());
                    }
                    self.absorb_fragment(c.frame, &c.positions, &c.pending);
                    vec![Action::Broadcast(RescueMsg::Completion(c.clone()))]
                } else {
                    Vec::new()
                }
            }
        }
    }

    fn compute_one_hop(&mut self) {
        let mut claims: BTreeMap<NodeId, BTreeMap<NodeId, Option<f64>>> = BTreeMap::new();
        claims.insert(
            self.id,
            self.heard.iter().map(|(n, d)| (*n, Some(*d))).collect(),
        );
        for (n, set) in &self.neighbor_sets {
            claims.insert(*n, set.iter().map(|(m, d)| (*m, Some(*d))).collect());
        }
        let net = build_one_hop_network(self.id, &claims).expect("own claim present");
        let cliques = net.cliques_of_owner();
        let largest = cliques.iter().map(|c| c.len()).max().unwrap_or(1) as u64;
        self.theta = Some(
            cliques
                .iter()
                .map(|c| Ratio::new(1, c.len() as u64))
                .sum::<Ratio<u64>>(),
        );
        self.gamma_denominator = Some(largest);
        self.one_hop = Some(net);
    }

    fn neighbors(&self) -> Vec<NodeId> {
        self.one_hop
            .as_ref()
            .map(|net| {
                net.graph
                    .nodes()
                    .filter(|n| *n != self.id)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Does `v` claim before this node? Higher θ first, lower id on ties.
    fn precedes_me(&self, v: NodeId) -> bool {
        let (Some(mine), Some(theirs)) = (self.theta, self.priorities.get(&v)) else {
            // Unknown priority: be conservative and wait for it.
            return true;
        };
        theirs.theta > mine || (theirs.theta == mine && v < self.id)
    }

    /// First in claim order across every priority packet seen (that is,
    /// across the whole component once the flood settles).
    fn is_initiator(&self) -> bool {
        let Some(mine) = self.theta else {
            return false;
        };
        self.priorities.values().all(|p| {
            p.origin == self.id
                || p.theta < mine
                || (p.theta == mine && self.id < p.origin)
        })
    }

    fn is_completer(&self) -> bool {
        !self.is_initiator() && self.neighbors().iter().all(|v| self.precedes_me(*v))
    }

    fn absorb_fragment(
        &mut self,
        frame: NodeId,
        positions: &BTreeMap<NodeId, Point>,
        pending: &BTreeMap<(NodeId, NodeId), f64>,
    ) {
        if self.map.positions.is_empty() && !positions.is_empty() {
            self.map.frame_owner = frame;
        }
        let Some(net) = &self.one_hop else { return };
        let fragment = PositionMap {
            frame_owner: frame,
            positions: positions.clone(),
            pending: pending.clone(),
        };
        let ctx = PositionContext {
            graph: &net.graph,
            distances: &net.distances,
            range: self.cfg.range,
        };
        merge_maps(&mut self.map, &fragment, &ctx);
    }

    fn try_claim(&mut self) -> Vec<Action> {
        if self.my_slots.is_some() || self.fault.is_some() {
            return Vec::new();
        }
        let net = self.one_hop.as_ref().expect("claiming after round 2");
        let h = self
            .priorities
            .values()
            .fold(1u64, |acc, p| lcm(acc, p.gamma_denominator));
        let gamma = Ratio::new(1, self.gamma_denominator.expect("round 2 done"));
        let forbidden: BTreeSet<u64> = self
            .neighbors()
            .iter()
            .filter_map(|v| self.schedules.get(v))
            .flatten()
            .copied()
            .collect();
        let slots = match choose_slots(h, gamma, &forbidden) {
            Ok(slots) => slots,
            Err((needed, free)) => {
                let fault = ScheduleError::SchedulingConflict {
                    node: self.id,
                    needed,
                    free,
                };
                self.fault = Some(fault.clone());
                return vec![Action::Fault(fault)];
            }
        };
        let ctx = PositionContext {
            graph: &net.graph,
            distances: &net.distances,
            range: self.cfg.range,
        };
        if self.is_initiator() {
            self.map = build_map(self.id, &ctx);
        } else {
            extend_map(&mut self.map, &ctx);
        }
        self.my_slots = Some(slots.clone());
        self.hyperperiod = Some(h);
        self.schedules.insert(self.id, slots.clone());

        let claim = ClaimPacket {
            origin: self.id,
            slots,
            hyperperiod: h,
            start: self.cfg.schedule_start(),
            frame: self.map.frame_owner,
            positions: self.map.positions.clone(),
            pending: self.map.pending.clone(),
        };
        let mut actions = vec![Action::Broadcast(RescueMsg::Claim(claim))];
        if self.is_completer() {
            let completion = CompletionPacket {
                origin: self.id,
                schedules: self.schedules.clone(),
                hyperperiod: h,
                frame: self.map.frame_owner,
                positions: self.map.positions.clone(),
                pending: self.map.pending.clone(),
            };
            self.forwarded_completions.insert(self.id);
            actions.push(Action::Broadcast(RescueMsg::Completion(completion)));
        }
        actions
    }

    // --- read-side accessors used by the simulator and reports ---

    pub fn slots(&self) -> Option<&BTreeSet<u64>> {
        self.my_slots.as_ref()
    }

    pub fn hyperperiod(&self) -> Option<u64> {
        self.hyperperiod
    }

    pub fn schedule_start(&self) -> Micros {
        self.cfg.schedule_start()
    }

    pub fn position_map(&self) -> &PositionMap {
        &self.map
    }

    pub fn fault(&self) -> Option<&ScheduleError> {
        self.fault.as_ref()
    }

    pub fn theta(&self) -> Option<Ratio<u64>> {
        self.theta
    }

    pub fn one_hop(&self) -> Option<&OneHopNetwork> {
        self.one_hop.as_ref()
    }

    pub fn members_seen(&self) -> Vec<NodeId> {
        self.priorities.keys().copied().collect()
    }

    /// Consolidated emergency report from this node's current knowledge.
    pub fn report(&self, now: Micros) -> EmergencyReport {
        let last_known = self
            .priorities
            .values()
            .filter_map(|p| p.last_known.map(|pt| (p.origin, pt)))
            .collect();
        EmergencyReport::compose(
            self.priorities.keys().copied(),
            last_known,
            self.map.positions.clone(),
            now,
        )
    }
}
