//! Deterministic discrete-event execution of a scenario.
//!
//! The engine owns the clock, the radio medium, the cellular segment and the
//! node state machines; all protocol logic lives in the pure per-node types
//! ([`RescueNode`], [`MeshNode`]) and everything environmental happens here:
//! geometry and obstacles decide who hears a broadcast, coverage discs decide
//! who is attached, the wake-up schedule gates trapped nodes' radios, and a
//! seeded generator supplies clock skews, hello phases and measurement noise.
//!
//! Events are ordered by `(timestamp, insertion sequence)`; there is no
//! randomness in delivery, so a `(scenario, seed)` pair reproduces the event
//! log byte for byte.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{Point, Segment};
use crate::graph::{Graph, NodeId};
use crate::log::{Channel, LogEvent, LogRecord};
use crate::positioning::DistanceEstimator;
use crate::report::{
    FaultReport, GroupReport, MessageOutcome, MetricsReport, NodeEnergy, NodePosition,
    NodeSchedule, Overhead, PositioningReport, RescueReport, VacancyReport, WakeupComparison,
};
use crate::rescue::overhead::expected_message_count;
use crate::rescue::protocol::{Action as RescueAction, ProtocolConfig, TimerKind};
use crate::rescue::schedule::{
    assign_schedule, compare_schedules, mis_rotation_patterns, wake_stats, ScheduleError,
    SlotPattern,
};
use crate::rescue::{EnergyModel, RescueMsg, RescueNode};
use crate::routing::{
    DataPacket, MeshAction, MeshConfig, MeshMsg, MeshNode, MeshTimer, MessageId, RouteKind,
};
use crate::scenario::{MessageClass, NodeKind, RoutingPolicy, Scenario, SchedulePolicy};
use crate::sim::mobility::Mobility;
use crate::units::Micros;

/// How often node positions are checked against the coverage discs.
const COVERAGE_TICK: Micros = Micros(100_000);

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario has trapped nodes but no [rescue] section")]
    MissingRescue,
    #[error("horizon {horizon} is not a multiple of the wake slot {tau}")]
    MisalignedHorizon { horizon: Micros, tau: Micros },
    #[error("emergency traffic under the full policy needs a command-center node")]
    MissingCommandCenter,
}

/// Command-line / API overrides applied on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub horizon: Option<Micros>,
    pub routing_policy: Option<RoutingPolicy>,
    /// Emit one coverage sample per node every N seconds into the event log.
    pub coverage_samples: Option<u64>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub log: Vec<LogRecord>,
    pub metrics: MetricsReport,
}

pub fn run_scenario(sc: &Scenario, overrides: &RunOverrides) -> Result<RunOutput, SimError> {
    let mut world = World::new(sc, overrides)?;
    world.init();
    world.run();
    Ok(world.finalize())
}

// --- internal machinery ------------------------------------------------------

/// Slot-grid bookkeeping for the trapped group.
struct RescueGrid {
    start: Micros,
    tau: Micros,
    setup_slots: u64,
    total_slots: u64,
}

/// An emergency message waiting inside a trapped node for outside contact.
struct Armed {
    id: MessageId,
    to: NodeId,
    class: MessageClass,
    note: Option<String>,
    at: Micros,
    given: BTreeSet<NodeId>,
}

enum Payload {
    Rescue(RescueMsg),
    Mesh(MeshMsg),
}

impl Payload {
    fn label(&self) -> String {
        match self {
            Payload::Rescue(m) => format!("rescue-{}", m.kind()),
            Payload::Mesh(m) => m.kind().to_string(),
        }
    }
}

enum Ev {
    RescueTimer(NodeId, TimerKind),
    MeshTimer(NodeId, MeshTimer),
    Radio { to: NodeId, from: NodeId, payload: Payload },
    Cell { to: NodeId, from: NodeId, msg: MeshMsg },
    Traffic(usize),
    CoverageTick(u64),
    SlotBoundary(u64),
}

struct World<'a> {
    sc: &'a Scenario,
    seed: u64,
    horizon: Micros,
    policy: RoutingPolicy,
    coverage_samples: Option<u64>,
    hop: Micros,
    range: f64,

    kinds: BTreeMap<NodeId, NodeKind>,
    trapped: BTreeSet<NodeId>,
    mobility: BTreeMap<NodeId, Mobility>,
    cc: Option<NodeId>,

    rescue_nodes: BTreeMap<NodeId, RescueNode>,
    mesh_nodes: BTreeMap<NodeId, MeshNode>,

    estimator: DistanceEstimator,
    meas_rng: ChaCha8Rng,

    grid: Option<RescueGrid>,
    model: EnergyModel,
    group_graph: Graph,
    mis_patterns: BTreeMap<NodeId, SlotPattern>,
    claimed: BTreeMap<NodeId, (BTreeSet<u64>, u64)>,
    faults: BTreeMap<NodeId, (u64, u64)>,

    armed: BTreeMap<NodeId, Vec<Armed>>,
    covered: BTreeSet<NodeId>,

    outcomes: BTreeMap<MessageId, MessageOutcome>,
    send_seq: BTreeMap<NodeId, u32>,
    counts_rescue: BTreeMap<String, u64>,
    counts_radio: BTreeMap<String, u64>,
    counts_cell: BTreeMap<String, u64>,

    log: Vec<LogRecord>,

    heap: BinaryHeap<(Reverse<(u64, u64)>, usize)>,
    events: Vec<Option<Ev>>,
    seq: u64,
}

impl<'a> World<'a> {
    fn new(sc: &'a Scenario, ov: &RunOverrides) -> Result<World<'a>, SimError> {
        let seed = ov.seed.unwrap_or(sc.seed);
        let horizon = ov.horizon.unwrap_or(sc.experiment.horizon);
        let policy = ov.routing_policy.unwrap_or(sc.experiment.routing_policy);

        let trapped: BTreeSet<NodeId> = sc.trapped().into_iter().collect();
        if !trapped.is_empty() && sc.rescue.is_none() {
            return Err(SimError::MissingRescue);
        }
        if let Some(rc) = &sc.rescue {
            if !trapped.is_empty() && horizon.0 % rc.tau.0 != 0 {
                return Err(SimError::MisalignedHorizon {
                    horizon,
                    tau: rc.tau,
                });
            }
        }
        let cc = sc
            .nodes
            .iter()
            .find(|n| n.kind == NodeKind::CommandCenter)
            .map(|n| n.id);
        if policy == RoutingPolicy::Full
            && cc.is_none()
            && sc.traffic.iter().any(|t| {
                t.class == MessageClass::Emergency && !trapped.contains(&t.from)
            })
        {
            return Err(SimError::MissingCommandCenter);
        }

        let mut kinds = BTreeMap::new();
        let mut mobility = BTreeMap::new();
        for spec in &sc.nodes {
            kinds.insert(spec.id, spec.kind);
            let m = match (spec.waypoints.is_empty(), spec.speed) {
                (false, Some(speed)) => Mobility::route(spec.position, &spec.waypoints, speed),
                _ => Mobility::stationary(spec.position),
            };
            mobility.insert(spec.id, m);
        }

        // Seeded draws in a fixed order: skews for trapped nodes, then hello
        // phases for messaging nodes (both in id order).
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut skews = BTreeMap::new();
        if let Some(rc) = &sc.rescue {
            let bound = rc.max_skew.0 as i64;
            for n in &trapped {
                let skew = if bound == 0 {
                    0
                } else {
                    rng.gen_range(-bound..=bound)
                };
                skews.insert(*n, skew);
            }
        }
        let hello_interval = MeshConfig::default().hello_interval.0;
        let mut offsets = BTreeMap::new();
        for spec in &sc.nodes {
            if !trapped.contains(&spec.id) {
                offsets.insert(spec.id, Micros(rng.gen_range(0..hello_interval)));
            }
        }

        let mut rescue_nodes = BTreeMap::new();
        let mut grid = None;
        let mut model = EnergyModel::default();
        let mut estimator = DistanceEstimator::Exact;
        if let Some(rc) = &sc.rescue {
            estimator = rc.distance_source.estimator();
            model = EnergyModel {
                awake_mw: rc.awake_power_mw,
                sleep_mw: rc.sleep_power_mw,
                slot: rc.tau,
            };
            let cfg = ProtocolConfig {
                start_epoch: rc.trigger,
                round: rc.round,
                range: sc.radio.range,
            };
            for n in &trapped {
                let spec = sc.node(*n).expect("trapped ids are validated");
                rescue_nodes.insert(
                    *n,
                    RescueNode::new(*n, cfg, skews[n], spec.last_known),
                );
            }
            if !trapped.is_empty() {
                let start = cfg.schedule_start();
                grid = Some(RescueGrid {
                    start,
                    tau: rc.tau,
                    setup_slots: start.0 / rc.tau.0,
                    total_slots: horizon.0 / rc.tau.0,
                });
            }
        }

        let mut mesh_nodes = BTreeMap::new();
        for spec in &sc.nodes {
            if trapped.contains(&spec.id) {
                continue;
            }
            let cfg = MeshConfig {
                policy,
                delivered_notice: sc.experiment.delivered_notice,
                is_static: spec.kind == NodeKind::Phone && spec.waypoints.is_empty(),
                command_center: cc,
                is_command_center: spec.kind == NodeKind::CommandCenter,
                ..MeshConfig::default()
            };
            mesh_nodes.insert(
                spec.id,
                MeshNode::new(spec.id, cfg, offsets[&spec.id], false),
            );
        }

        // Trapped-group connectivity at the trigger instant.
        let mut group_graph = Graph::new();
        let trigger = sc.rescue.as_ref().map(|rc| rc.trigger).unwrap_or(Micros(0));
        let positions: BTreeMap<NodeId, Point> = trapped
            .iter()
            .map(|n| (*n, mobility[n].position(trigger)))
            .collect();
        for n in &trapped {
            group_graph.add_node(*n);
        }
        let obstacles = &sc.obstacles;
        let clear_at = |a: Point, b: Point| {
            let path = Segment::new(a, b);
            !obstacles.iter().any(|o| {
                let active = match o.active {
                    None => true,
                    Some((lo, hi)) => trigger >= lo && trigger < hi,
                };
                active && o.segment.crosses(&path)
            })
        };
        for a in &trapped {
            for b in &trapped {
                if a < b
                    && positions[a].dist(positions[b]) <= sc.radio.range
                    && clear_at(positions[a], positions[b])
                {
                    group_graph.add_edge(*a, *b);
                }
            }
        }
        let mis_patterns = mis_rotation_patterns(&group_graph);

        Ok(World {
            sc,
            seed,
            horizon,
            policy,
            coverage_samples: ov.coverage_samples,
            hop: sc.radio.hop_delay,
            range: sc.radio.range,
            kinds,
            trapped,
            mobility,
            cc,
            rescue_nodes,
            mesh_nodes,
            estimator,
            meas_rng: ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9)),
            grid,
            model,
            group_graph,
            mis_patterns,
            claimed: BTreeMap::new(),
            faults: BTreeMap::new(),
            armed: BTreeMap::new(),
            covered: BTreeSet::new(),
            outcomes: BTreeMap::new(),
            send_seq: BTreeMap::new(),
            counts_rescue: BTreeMap::new(),
            counts_radio: BTreeMap::new(),
            counts_cell: BTreeMap::new(),
            log: Vec::new(),
            heap: BinaryHeap::new(),
            events: Vec::new(),
            seq: 0,
        })
    }

    fn push(&mut self, t: Micros, ev: Ev) {
        self.events.push(Some(ev));
        self.heap.push((Reverse((t.0, self.seq)), self.events.len() - 1));
        self.seq += 1;
    }

    fn log(&mut self, t: Micros, node: NodeId, event: LogEvent) {
        self.log.push(LogRecord {
            t_us: t.0,
            node,
            event,
        });
    }

    fn init(&mut self) {
        if let Some(grid) = &self.grid {
            let (total, tau) = (grid.total_slots, grid.tau.0);
            for k in 0..total {
                self.push(Micros(k * tau), Ev::SlotBoundary(k));
            }
        }
        if !self.sc.cells.is_empty() {
            let mut k = 0;
            while k * COVERAGE_TICK.0 <= self.horizon.0 {
                self.push(Micros(k * COVERAGE_TICK.0), Ev::CoverageTick(k));
                k += 1;
            }
        }
        for (i, tr) in self.sc.traffic.iter().enumerate() {
            self.push(tr.at, Ev::Traffic(i));
        }
        let rescue_ids: Vec<NodeId> = self.rescue_nodes.keys().copied().collect();
        for n in rescue_ids {
            let actions = self.rescue_nodes[&n].start_actions();
            self.apply_rescue(n, actions, Micros(0));
        }
        let mesh_ids: Vec<NodeId> = self.mesh_nodes.keys().copied().collect();
        for n in mesh_ids {
            let actions = self.mesh_nodes[&n].start_actions();
            self.apply_mesh(n, actions, Micros(0));
        }
    }

    fn run(&mut self) {
        while let Some((Reverse((t, _)), idx)) = self.heap.pop() {
            let now = Micros(t);
            if now > self.horizon {
                break;
            }
            let ev = self.events[idx].take().expect("events are single-use");
            match ev {
                Ev::RescueTimer(n, kind) => {
                    if let Some(rn) = self.rescue_nodes.get_mut(&n) {
                        let actions = rn.on_timer(kind, now);
                        self.apply_rescue(n, actions, now);
                    }
                }
                Ev::MeshTimer(n, kind) => {
                    if let Some(mn) = self.mesh_nodes.get_mut(&n) {
                        let actions = mn.on_timer(kind, now);
                        self.apply_mesh(n, actions, now);
                    }
                }
                Ev::Radio { to, from, payload } => self.deliver_radio(to, from, payload, now),
                Ev::Cell { to, from, msg } => self.deliver_cell(to, from, msg, now),
                Ev::Traffic(i) => self.originate(i, now),
                Ev::CoverageTick(k) => self.coverage_tick(k, now),
                Ev::SlotBoundary(k) => self.slot_boundary(k, now),
            }
        }
    }

    // --- geometry and gating -------------------------------------------------

    fn pos(&self, n: NodeId, t: Micros) -> Point {
        self.mobility[&n].position(t)
    }

    fn clear(&self, a: Point, b: Point, t: Micros) -> bool {
        let path = Segment::new(a, b);
        !self.sc.obstacles.iter().any(|o| {
            let active = match o.active {
                None => true,
                Some((lo, hi)) => t >= lo && t < hi,
            };
            active && o.segment.crosses(&path)
        })
    }

    /// Whether `n`'s radio is on at `t`. Messaging nodes are always on;
    /// trapped nodes follow the wake-up schedule after it starts, and any
    /// trapped node without a schedule (fault, or still negotiating) stays
    /// awake as a fail-safe.
    fn awake_at(&self, n: NodeId, t: Micros) -> bool {
        if !self.trapped.contains(&n) {
            return true;
        }
        let Some(grid) = &self.grid else {
            return true;
        };
        if t < grid.start {
            return true;
        }
        let rel = (t.0 - grid.start.0) / grid.tau.0;
        match self.sc.experiment.schedule_policy {
            SchedulePolicy::AlwaysAwake => true,
            SchedulePolicy::MisRotation => self
                .mis_patterns
                .get(&n)
                .map(|p| p.is_awake(rel))
                .unwrap_or(true),
            SchedulePolicy::Clique => match self.claimed.get(&n) {
                Some((slots, h)) => slots.contains(&(rel % h)),
                None => true,
            },
        }
    }

    // --- transmission --------------------------------------------------------

    fn count_radio(&mut self, payload: &Payload) {
        let label = payload.label();
        let counts = match payload {
            Payload::Rescue(_) => &mut self.counts_rescue,
            Payload::Mesh(_) => &mut self.counts_radio,
        };
        *counts.entry(label).or_default() += 1;
    }

    fn radio_broadcast(&mut self, from: NodeId, payload: Payload, now: Micros) {
        if self.kinds[&from] == NodeKind::CommandCenter || !self.awake_at(from, now) {
            return;
        }
        self.count_radio(&payload);
        self.log(
            now,
            from,
            LogEvent::Tx {
                channel: Channel::Radio,
                msg: payload.label(),
                to: None,
            },
        );
        let pf = self.pos(from, now);
        let targets: Vec<NodeId> = self.kinds.keys().copied().collect();
        let arrival = now + self.hop;
        for v in targets {
            if v == from || self.kinds[&v] == NodeKind::CommandCenter {
                continue;
            }
            let pv = self.pos(v, now);
            if pf.dist(pv) <= self.range
                && self.clear(pf, pv, now)
                && self.awake_at(v, arrival)
            {
                let copy = match &payload {
                    Payload::Rescue(m) => Payload::Rescue(m.clone()),
                    Payload::Mesh(m) => Payload::Mesh(m.clone()),
                };
                self.push(arrival, Ev::Radio { to: v, from, payload: copy });
            }
        }
    }

    fn radio_unicast(&mut self, from: NodeId, to: NodeId, msg: MeshMsg, now: Micros) {
        if self.kinds[&from] == NodeKind::CommandCenter || !self.awake_at(from, now) {
            return;
        }
        let payload = Payload::Mesh(msg);
        self.count_radio(&payload);
        self.log(
            now,
            from,
            LogEvent::Tx {
                channel: Channel::Radio,
                msg: payload.label(),
                to: Some(to),
            },
        );
        if self.kinds.get(&to).copied() == Some(NodeKind::CommandCenter) {
            return;
        }
        let arrival = now + self.hop;
        let (pf, pv) = (self.pos(from, now), self.pos(to, now));
        if pf.dist(pv) <= self.range && self.clear(pf, pv, now) && self.awake_at(to, arrival) {
            self.push(arrival, Ev::Radio { to, from, payload });
        }
    }

    fn cell_send(&mut self, from: NodeId, to: NodeId, msg: MeshMsg, now: Micros) {
        *self.counts_cell.entry(msg.kind().to_string()).or_default() += 1;
        self.log(
            now,
            from,
            LogEvent::Tx {
                channel: Channel::Cell,
                msg: msg.kind().to_string(),
                to: Some(to),
            },
        );
        let attached = |n: NodeId| self.covered.contains(&n) || Some(n) == self.cc;
        if attached(from) && attached(to) {
            self.push(now + self.hop, Ev::Cell { to, from, msg });
        }
    }

    // --- delivery --------------------------------------------------------------

    fn deliver_radio(&mut self, to: NodeId, from: NodeId, payload: Payload, now: Micros) {
        self.log(
            now,
            to,
            LogEvent::Rx {
                channel: Channel::Radio,
                msg: payload.label(),
                from,
            },
        );
        match payload {
            Payload::Rescue(msg) => {
                let measured = if matches!(msg, RescueMsg::Hello) {
                    let d = self.pos(from, now).dist(self.pos(to, now));
                    self.estimator.measure(from, to, d, &mut self.meas_rng)
                } else {
                    None
                };
                if let Some(rn) = self.rescue_nodes.get_mut(&to) {
                    let actions = rn.on_message(from, measured, &msg, now);
                    self.apply_rescue(to, actions, now);
                }
            }
            Payload::Mesh(msg) => {
                if let Some(mn) = self.mesh_nodes.get_mut(&to) {
                    let actions = mn.on_message(from, &msg, now);
                    self.apply_mesh(to, actions, now);
                } else if matches!(msg, MeshMsg::Hello { .. }) && self.trapped.contains(&to) {
                    // A trapped phone heard an outside radio while awake.
                    self.emergency_handoff(to, from, now);
                }
            }
        }
    }

    fn deliver_cell(&mut self, to: NodeId, from: NodeId, msg: MeshMsg, now: Micros) {
        self.log(
            now,
            to,
            LogEvent::Rx {
                channel: Channel::Cell,
                msg: msg.kind().to_string(),
                from,
            },
        );
        if let Some(mn) = self.mesh_nodes.get_mut(&to) {
            let actions = mn.on_message(from, &msg, now);
            self.apply_mesh(to, actions, now);
        }
    }

    // --- action application ------------------------------------------------------

    fn apply_rescue(&mut self, n: NodeId, actions: Vec<RescueAction>, now: Micros) {
        for action in actions {
            match action {
                RescueAction::Broadcast(msg) => {
                    if let RescueMsg::Claim(cp) = &msg {
                        if cp.origin == n {
                            self.claimed.insert(n, (cp.slots.clone(), cp.hyperperiod));
                            let gamma =
                                Ratio::new(cp.slots.len() as u64, cp.hyperperiod).to_string();
                            let theta = self.rescue_nodes[&n]
                                .theta()
                                .map(|t| t.to_string())
                                .unwrap_or_default();
                            self.log(
                                now,
                                n,
                                LogEvent::Scheduled {
                                    slots: cp.slots.iter().copied().collect(),
                                    hyperperiod: cp.hyperperiod,
                                    gamma,
                                    theta,
                                },
                            );
                        }
                    }
                    self.radio_broadcast(n, Payload::Rescue(msg), now);
                }
                RescueAction::SetTimer(at, kind) => self.push(at, Ev::RescueTimer(n, kind)),
                RescueAction::Fault(err) => {
                    if let ScheduleError::SchedulingConflict { node, needed, free } = err {
                        self.faults.insert(node, (needed, free));
                        self.log(now, node, LogEvent::Fault { needed, free });
                    }
                }
            }
        }
    }

    fn apply_mesh(&mut self, n: NodeId, actions: Vec<MeshAction>, now: Micros) {
        for action in actions {
            match action {
                MeshAction::Broadcast(msg) => self.radio_broadcast(n, Payload::Mesh(msg), now),
                MeshAction::Unicast(to, msg) => self.radio_unicast(n, to, msg, now),
                MeshAction::Cellular(to, msg) => self.cell_send(n, to, msg, now),
                MeshAction::SetTimer(at, kind) => self.push(at, Ev::MeshTimer(n, kind)),
                MeshAction::Delivered(p) => {
                    let delay = now.saturating_sub(p.sent_at);
                    self.log(
                        now,
                        n,
                        LogEvent::Delivered {
                            id: p.id.to_string(),
                            src: p.src,
                            hops: p.hops,
                            route: p.route,
                            delay_us: delay.0,
                        },
                    );
                    if let Some(o) = self.outcomes.get_mut(&p.id) {
                        if !o.delivered {
                            o.delivered = true;
                            o.delivered_at_us = Some(now.0);
                            o.delay_us = Some(delay.0);
                            o.hops = Some(p.hops);
                            o.route = Some(p.route);
                        }
                    }
                }
                MeshAction::Dropped { id, reason } => {
                    self.log(
                        now,
                        n,
                        LogEvent::Dropped {
                            id: id.to_string(),
                            reason: reason.to_string(),
                        },
                    );
                }
            }
        }
    }

    // --- scripted events -----------------------------------------------------------

    fn originate(&mut self, index: usize, now: Micros) {
        let tr = self.sc.traffic[index].clone();
        let seq = {
            let c = self.send_seq.entry(tr.from).or_insert(0);
            *c += 1;
            *c
        };
        let id = MessageId {
            origin: tr.from,
            seq,
        };
        self.outcomes.insert(
            id,
            MessageOutcome {
                id: id.to_string(),
                src: tr.from,
                dst: tr.to,
                class: tr.class,
                sent_at_us: now.0,
                delivered: false,
                delivered_at_us: None,
                delay_us: None,
                hops: None,
                route: None,
            },
        );
        self.log(
            now,
            tr.from,
            LogEvent::Sent {
                id: id.to_string(),
                dst: tr.to,
            },
        );
        if self.trapped.contains(&tr.from) {
            // Trapped phones cannot route; the message waits for the first
            // outside hello heard while awake.
            self.armed.entry(tr.from).or_default().push(Armed {
                id,
                to: tr.to,
                class: tr.class,
                note: tr.note,
                at: now,
                given: BTreeSet::new(),
            });
        } else if let Some(mn) = self.mesh_nodes.get_mut(&tr.from) {
            let actions = mn.send(tr.to, tr.class, tr.note, now);
            self.apply_mesh(tr.from, actions, now);
        }
    }

    fn emergency_handoff(&mut self, n: NodeId, via: NodeId, now: Micros) {
        let report = match self.rescue_nodes.get(&n) {
            Some(rn) => rn.report(now),
            None => return,
        };
        let Some(list) = self.armed.get_mut(&n) else {
            return;
        };
        let mut packets = Vec::new();
        for e in list.iter_mut() {
            if e.at <= now && e.given.insert(via) {
                let note = match &e.note {
                    Some(n) => Some(n.clone()),
                    None => Some(
                        serde_json::to_string(&report).expect("reports serialize"),
                    ),
                };
                packets.push(DataPacket {
                    id: e.id,
                    src: n,
                    dst: e.to,
                    class: e.class,
                    sent_at: e.at,
                    hops: 1, // this handoff transmission
                    route: RouteKind::Flood,
                    note,
                });
            }
        }
        for p in packets {
            self.log(
                now,
                n,
                LogEvent::EmergencyHandoff {
                    to: via,
                    members: report.members.len(),
                },
            );
            self.radio_unicast(n, via, MeshMsg::Data(p), now);
        }
    }

    fn coverage_tick(&mut self, k: u64, now: Micros) {
        let ids: Vec<NodeId> = self.kinds.keys().copied().collect();
        let mut changes = Vec::new();
        for id in ids {
            if self.kinds[&id] == NodeKind::CommandCenter {
                continue;
            }
            let pos = self.pos(id, now);
            let covered = self
                .sc
                .cells
                .iter()
                .any(|c| c.center.dist(pos) <= c.radius);
            if covered != self.covered.contains(&id) {
                changes.push((id, covered));
            }
            if let Some(every_s) = self.coverage_samples {
                if k % (10 * every_s.max(1)) == 0 {
                    self.log(now, id, LogEvent::CoverageSample { covered });
                }
            }
        }
        for (id, covered) in changes {
            if covered {
                self.covered.insert(id);
            } else {
                self.covered.remove(&id);
            }
            self.log(now, id, LogEvent::Coverage { covered });
            if let Some(cc) = self.cc {
                if let Some(ccn) = self.mesh_nodes.get_mut(&cc) {
                    ccn.on_peer_coverage(id, covered);
                }
            }
            if let Some(mn) = self.mesh_nodes.get_mut(&id) {
                let actions = mn.on_coverage(covered, now);
                self.apply_mesh(id, actions, now);
            }
        }
    }

    fn slot_boundary(&mut self, k: u64, now: Micros) {
        let trapped: Vec<NodeId> = self.trapped.iter().copied().collect();
        for n in trapped {
            let awake = self.awake_at(n, now);
            self.log(now, n, LogEvent::Slot { index: k, awake });
        }
    }

    // --- metrics ----------------------------------------------------------------

    fn finalize(mut self) -> RunOutput {
        let messages: Vec<MessageOutcome> = self.outcomes.values().cloned().collect();
        let delivery_ratio = if messages.is_empty() {
            None
        } else {
            Some(messages.iter().filter(|m| m.delivered).count() as f64 / messages.len() as f64)
        };

        let mut energy = Vec::new();
        let mut trapped_energy = 0.0;
        for (&n, &kind) in &self.kinds {
            if kind == NodeKind::CommandCenter {
                continue; // mains-powered
            }
            let e = match &self.grid {
                Some(grid) => {
                    let mut awake_slots = 0;
                    let mut scheduled = 0;
                    for k in 0..grid.total_slots {
                        if self.awake_at(n, Micros(k * grid.tau.0)) {
                            awake_slots += 1;
                            if k >= grid.setup_slots {
                                scheduled += 1;
                            }
                        }
                    }
                    let energy_mj = awake_slots as f64 * self.model.slot_mj(true)
                        + (grid.total_slots - awake_slots) as f64 * self.model.slot_mj(false);
                    NodeEnergy {
                        node: n,
                        awake_us: awake_slots * grid.tau.0,
                        energy_mj,
                        scheduled_wakeups: self.trapped.contains(&n).then_some(scheduled),
                    }
                }
                None => NodeEnergy {
                    node: n,
                    awake_us: self.horizon.0,
                    energy_mj: self.model.awake_mw * self.horizon.as_secs_f64(),
                    scheduled_wakeups: None,
                },
            };
            if self.trapped.contains(&n) {
                trapped_energy += e.energy_mj;
            }
            energy.push(e);
        }

        let energy_vs_always_ratio = match (&self.grid, self.trapped.len()) {
            (Some(grid), count) if count > 0 => {
                let always =
                    count as f64 * grid.total_slots as f64 * self.model.slot_mj(true);
                Some(trapped_energy / always)
            }
            _ => None,
        };

        let rescue = self.grid.as_ref().map(|grid| RescueReport {
            slot_awake_mj: self.model.slot_mj(true),
            slot_sleep_mj: self.model.slot_mj(false),
            setup_slots: grid.setup_slots,
            total_slots: grid.total_slots,
            groups: self.group_reports(),
        });

        let metrics = MetricsReport {
            scenario: self.sc.name.clone(),
            seed: self.seed,
            horizon_us: self.horizon.0,
            routing_policy: self.policy,
            schedule_policy: self.sc.experiment.schedule_policy,
            messages,
            delivery_ratio,
            overhead: Overhead {
                rescue_tx: self.counts_rescue.clone(),
                radio_tx: self.counts_radio.clone(),
                cell_tx: self.counts_cell.clone(),
            },
            energy,
            energy_vs_always_ratio,
            rescue,
        };
        RunOutput {
            log: std::mem::take(&mut self.log),
            metrics,
        }
    }

    fn group_reports(&self) -> Vec<GroupReport> {
        let mut components = self.group_graph.connected_components();
        components.sort_by_key(|c| c.iter().next().copied());
        let mut out = Vec::new();
        for comp in components {
            let sub = self.group_graph.induced(&comp);
            let stats = wake_stats(&sub);
            let central = assign_schedule(&sub);
            let members: Vec<NodeId> = comp.iter().copied().collect();

            let schedules = members
                .iter()
                .map(|n| NodeSchedule {
                    node: *n,
                    slots: self
                        .claimed
                        .get(n)
                        .map(|(s, _)| s.iter().copied().collect())
                        .unwrap_or_default(),
                    gamma: stats[n].gamma.to_string(),
                    theta: stats[n].theta.to_string(),
                })
                .collect();

            let (hyperperiod, vacancies, wakeups) = match &central {
                Ok(gs) => {
                    let cmp = compare_schedules(&sub, gs);
                    (
                        Some(gs.hyperperiod),
                        gs.vacancies
                            .iter()
                            .map(|(clique, v)| VacancyReport {
                                clique: clique.members().to_vec(),
                                vacancy: v.to_string(),
                            })
                            .collect(),
                        Some(WakeupComparison {
                            clique: cmp.clique_wakeups,
                            mis_rotation: cmp.mis_rotation_wakeups.to_string(),
                            always_awake: cmp.always_awake_wakeups,
                            savings_vs_always: cmp.savings_vs_always_awake,
                        }),
                    )
                }
                Err(_) => (None, Vec::new(), None),
            };

            let faults = members
                .iter()
                .filter_map(|n| {
                    self.faults.get(n).map(|&(needed, free)| FaultReport {
                        node: *n,
                        needed,
                        free,
                    })
                })
                .collect();

            let maps: Vec<_> = members
                .iter()
                .filter_map(|n| self.rescue_nodes.get(n).map(|r| r.position_map()))
                .collect();
            let positioning = match maps.first() {
                Some(base) => {
                    let agreed = maps.iter().all(|m| *m == *base);
                    let positions: Vec<NodePosition> = base
                        .positions
                        .iter()
                        .map(|(n, p)| NodePosition {
                            node: *n,
                            x: p.x,
                            y: p.y,
                        })
                        .collect();
                    let unpositioned = members
                        .iter()
                        .copied()
                        .filter(|n| !base.positions.contains_key(n))
                        .collect();
                    PositioningReport {
                        frame: (!base.positions.is_empty()).then_some(base.frame_owner),
                        agreed,
                        positions,
                        unpositioned,
                        pending_edges: base.pending.keys().copied().collect(),
                    }
                }
                None => PositioningReport {
                    frame: None,
                    agreed: true,
                    positions: Vec::new(),
                    unpositioned: members.clone(),
                    pending_edges: Vec::new(),
                },
            };

            out.push(GroupReport {
                members,
                hyperperiod,
                schedules,
                vacancies,
                wakeups_per_hyperperiod: wakeups,
                overhead_expected: expected_message_count(&sub, &stats),
                faults,
                positioning,
            });
        }
        out
    }
}
