//! Scenario files: the TOML format describing a world to simulate.
//!
//! Every physical quantity is written as a string with an explicit unit
//! (`"100 m"`, `"20 ms"`, `"202.30 mW"`, `"1.5 m/s"`); bare numbers are
//! reserved for dimensionless values such as ids, seeds and exponents.
//! Files are validated strictly: unknown keys, malformed units and
//! inconsistent cross-references are all rejected with errors naming the
//! offending field.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Segment};
use crate::graph::NodeId;
use crate::positioning::{canonical, DistanceEstimator};
use crate::units::{self, Micros, UnitError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {source}")]
    Unit {
        field: String,
        #[source]
        source: UnitError,
    },
    #[error("{field}: {reason}")]
    Schema { field: String, reason: String },
}

fn schema(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Phone,
    CommandCenter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulePolicy {
    Clique,
    MisRotation,
    AlwaysAwake,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoutingPolicy {
    /// Cellular, then ad-hoc with gateways, then opportunistic fallback.
    Full,
    /// Ad-hoc routing only; no cellular shortcut, no opportunistic fallback.
    AdhocOnly,
    /// Opportunistic static handoff only.
    Static,
    /// Opportunistic flooding only.
    Flood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageClass {
    General,
    Emergency,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistanceSource {
    Exact,
    SignalStrength { exponent: f64, sigma_db: f64 },
    Replay(BTreeMap<(NodeId, NodeId), f64>),
}

impl DistanceSource {
    pub fn estimator(&self) -> DistanceEstimator {
        match self {
            DistanceSource::Exact => DistanceEstimator::Exact,
            DistanceSource::SignalStrength { exponent, sigma_db } => {
                DistanceEstimator::SignalStrength {
                    exponent: *exponent,
                    sigma_db: *sigma_db,
                }
            }
            DistanceSource::Replay(map) => DistanceEstimator::Replay(map.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Radio {
    pub range: f64,
    pub hop_delay: Micros,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescueConfig {
    /// When the trapped group starts forming.
    pub trigger: Micros,
    /// Wake-slot length τ.
    pub tau: Micros,
    /// Protocol round length R.
    pub round: Micros,
    pub awake_power_mw: f64,
    pub sleep_power_mw: f64,
    /// Bound on per-node clock skew; actual skews are drawn uniformly from
    /// `[-max_skew, max_skew]`.
    pub max_skew: Micros,
    pub distance_source: DistanceSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub horizon: Micros,
    pub schedule_policy: SchedulePolicy,
    pub routing_policy: RoutingPolicy,
    /// Whether opportunistic carriers are told about deliveries so they can
    /// drop their copies.
    pub delivered_notice: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: NodeId,
    pub kind: NodeKind,
    pub position: Point,
    pub trapped: bool,
    pub last_known: Option<Point>,
    pub waypoints: Vec<Point>,
    pub speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub segment: Segment,
    /// Absent means the obstacle blocks radio for the whole run.
    pub active: Option<(Micros, Micros)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub center: Point,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Traffic {
    pub from: NodeId,
    pub to: NodeId,
    pub at: Micros,
    pub class: MessageClass,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub radio: Radio,
    pub rescue: Option<RescueConfig>,
    pub experiment: Experiment,
    pub nodes: Vec<NodeSpec>,
    pub obstacles: Vec<Obstacle>,
    pub cells: Vec<Cell>,
    pub traffic: Vec<Traffic>,
}

// --- raw (on-disk) representation -----------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    radio: RawRadio,
    #[serde(skip_serializing_if = "Option::is_none")]
    rescue: Option<RawRescue>,
    experiment: RawExperiment,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    nodes: Vec<RawNode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    obstacles: Vec<RawObstacle>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    cells: Vec<RawCell>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    traffic: Vec<RawTraffic>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadio {
    range: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    hop_delay: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRescue {
    #[serde(skip_serializing_if = "Option::is_none")]
    trigger: Option<String>,
    tau: String,
    round: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    awake_power: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sleep_power: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_skew: Option<String>,
    distance_source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    path_loss_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shadowing_sigma_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    measured: Vec<RawMeasured>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasured {
    a: u32,
    b: u32,
    distance: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    horizon: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule_policy: Option<SchedulePolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    routing_policy: Option<RoutingPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delivered_notice: Option<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    x: String,
    y: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<NodeKind>,
    position: RawPoint,
    #[serde(skip_serializing_if = "Option::is_none")]
    trapped: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    last_known: Option<RawPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    waypoints: Vec<RawPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    speed: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    from: String,
    until: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObstacle {
    from: RawPoint,
    to: RawPoint,
    #[serde(skip_serializing_if = "Option::is_none")]
    active: Option<RawWindow>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    center: RawPoint,
    radius: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTraffic {
    from: u32,
    to: u32,
    at: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<MessageClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

// --- conversion ------------------------------------------------------------

fn meters_field(field: String, text: &str) -> Result<f64, ScenarioError> {
    units::meters(text).map_err(|source| ScenarioError::Unit { field, source })
}

fn micros_field(field: String, text: &str) -> Result<Micros, ScenarioError> {
    units::micros(text)
        .map(Micros)
        .map_err(|source| ScenarioError::Unit { field, source })
}

fn point_field(field: &str, raw: &RawPoint) -> Result<Point, ScenarioError> {
    Ok(Point::new(
        meters_field(format!("{field}.x"), &raw.x)?,
        meters_field(format!("{field}.y"), &raw.y)?,
    ))
}

impl RawScenario {
    fn build(self) -> Result<Scenario, ScenarioError> {
        if self.name.is_empty() {
            return Err(schema("name", "must not be empty"));
        }

        let radio = Radio {
            range: meters_field("radio.range".into(), &self.radio.range)?,
            hop_delay: match &self.radio.hop_delay {
                Some(t) => micros_field("radio.hop_delay".into(), t)?,
                None => Micros::from_millis(20),
            },
        };
        if !radio.range.is_finite() || radio.range <= 0.0 {
            return Err(schema("radio.range", "must be positive"));
        }

        let rescue = match self.rescue {
            Some(raw) => Some(build_rescue(raw)?),
            None => None,
        };

        let experiment = Experiment {
            horizon: micros_field("experiment.horizon".into(), &self.experiment.horizon)?,
            schedule_policy: self
                .experiment
                .schedule_policy
                .unwrap_or(SchedulePolicy::Clique),
            routing_policy: self
                .experiment
                .routing_policy
                .unwrap_or(RoutingPolicy::Full),
            delivered_notice: self.experiment.delivered_notice.unwrap_or(true),
        };
        if experiment.horizon.0 == 0 {
            return Err(schema("experiment.horizon", "must be positive"));
        }

        let mut nodes = Vec::new();
        for (i, raw) in self.nodes.iter().enumerate() {
            let field = format!("nodes[{i}]");
            let kind = raw.kind.unwrap_or(NodeKind::Phone);
            let trapped = raw.trapped.unwrap_or(false);
            let position = point_field(&format!("{field}.position"), &raw.position)?;
            let last_known = match &raw.last_known {
                Some(p) => Some(point_field(&format!("{field}.last_known"), p)?),
                None => None,
            };
            let mut waypoints = Vec::new();
            for (k, p) in raw.waypoints.iter().enumerate() {
                waypoints.push(point_field(&format!("{field}.waypoints[{k}]"), p)?);
            }
            let speed = match &raw.speed {
                Some(text) => Some(
                    units::meters_per_second(text).map_err(|source| ScenarioError::Unit {
                        field: format!("{field}.speed"),
                        source,
                    })?,
                ),
                None => None,
            };
            match (speed, waypoints.is_empty()) {
                (Some(s), _) if !s.is_finite() || s <= 0.0 => {
                    return Err(schema(format!("{field}.speed"), "must be positive"));
                }
                (Some(_), true) => {
                    return Err(schema(
                        format!("{field}.speed"),
                        "speed given but no waypoints",
                    ));
                }
                (None, false) => {
                    return Err(schema(
                        format!("{field}.waypoints"),
                        "waypoints given but no speed",
                    ));
                }
                _ => {}
            }
            if kind == NodeKind::CommandCenter {
                if trapped {
                    return Err(schema(
                        format!("{field}.trapped"),
                        "a command center cannot be trapped",
                    ));
                }
                if !waypoints.is_empty() {
                    return Err(schema(
                        format!("{field}.waypoints"),
                        "a command center cannot move",
                    ));
                }
            }
            if trapped && rescue.is_none() {
                return Err(schema(
                    format!("{field}.trapped"),
                    "trapped nodes need a [rescue] section",
                ));
            }
            nodes.push(NodeSpec {
                id: NodeId(raw.id),
                kind,
                position,
                trapped,
                last_known,
                waypoints,
                speed,
            });
        }
        if nodes.is_empty() {
            return Err(schema("nodes", "at least one node is required"));
        }
        for (i, n) in nodes.iter().enumerate() {
            if nodes[..i].iter().any(|m| m.id == n.id) {
                return Err(schema(format!("nodes[{i}].id"), "duplicate node id"));
            }
        }
        if nodes
            .iter()
            .filter(|n| n.kind == NodeKind::CommandCenter)
            .count()
            > 1
        {
            return Err(schema("nodes", "at most one command center"));
        }

        if let Some(r) = &rescue {
            if !nodes.iter().any(|n| n.trapped) {
                return Err(schema("rescue", "no trapped nodes in the scenario"));
            }
            let tau = r.tau.0;
            if !experiment.horizon.0.is_multiple_of(tau) {
                return Err(schema(
                    "experiment.horizon",
                    format!("must be a whole number of slots of {}", units::fmt_micros(tau)),
                ));
            }
            if !(r.round.0 * crate::rescue::ROUNDS_BEFORE_START).is_multiple_of(tau) {
                return Err(schema(
                    "rescue.round",
                    format!(
                        "setup time (5 rounds) must be a whole number of slots of {}",
                        units::fmt_micros(tau)
                    ),
                ));
            }
            if r.max_skew.0 * 2 >= r.round.0 {
                return Err(schema(
                    "rescue.max_skew",
                    "clock skew must be well under the round length",
                ));
            }
            if let DistanceSource::Replay(map) = &r.distance_source {
                for (k, (a, b)) in map.keys().enumerate() {
                    for id in [a, b] {
                        if !nodes.iter().any(|n| n.id == *id) {
                            return Err(schema(
                                format!("rescue.measured[{k}]"),
                                format!("unknown node {id}"),
                            ));
                        }
                    }
                }
            }
        }

        let mut obstacles = Vec::new();
        for (i, raw) in self.obstacles.iter().enumerate() {
            let field = format!("obstacles[{i}]");
            let a = point_field(&format!("{field}.from"), &raw.from)?;
            let b = point_field(&format!("{field}.to"), &raw.to)?;
            if a == b {
                return Err(schema(field, "zero-length obstacle"));
            }
            let active = match &raw.active {
                Some(w) => {
                    let from = micros_field(format!("{field}.active.from"), &w.from)?;
                    let until = micros_field(format!("{field}.active.until"), &w.until)?;
                    if from > until {
                        return Err(schema(
                            format!("{field}.active"),
                            "window ends before it starts",
                        ));
                    }
                    Some((from, until))
                }
                None => None,
            };
            obstacles.push(Obstacle {
                segment: Segment::new(a, b),
                active,
            });
        }

        let mut cells = Vec::new();
        for (i, raw) in self.cells.iter().enumerate() {
            let field = format!("cells[{i}]");
            let center = point_field(&format!("{field}.center"), &raw.center)?;
            let radius = meters_field(format!("{field}.radius"), &raw.radius)?;
            if !radius.is_finite() || radius <= 0.0 {
                return Err(schema(format!("{field}.radius"), "must be positive"));
            }
            cells.push(Cell { center, radius });
        }

        let mut traffic = Vec::new();
        for (i, raw) in self.traffic.iter().enumerate() {
            let field = format!("traffic[{i}]");
            let from = NodeId(raw.from);
            let to = NodeId(raw.to);
            for id in [from, to] {
                if !nodes.iter().any(|n| n.id == id) {
                    return Err(schema(field.clone(), format!("unknown node {id}")));
                }
            }
            if from == to {
                return Err(schema(field, "sender and receiver are the same"));
            }
            traffic.push(Traffic {
                from,
                to,
                at: micros_field(format!("{field}.at"), &raw.at)?,
                class: raw.kind.unwrap_or(MessageClass::General),
                note: raw.note.clone(),
            });
        }

        Ok(Scenario {
            name: self.name,
            seed: self.seed.unwrap_or(0),
            radio,
            rescue,
            experiment,
            nodes,
            obstacles,
            cells,
            traffic,
        })
    }
}

fn build_rescue(raw: RawRescue) -> Result<RescueConfig, ScenarioError> {
    let tau = micros_field("rescue.tau".into(), &raw.tau)?;
    let round = micros_field("rescue.round".into(), &raw.round)?;
    if tau.0 == 0 {
        return Err(schema("rescue.tau", "must be positive"));
    }
    if round.0 == 0 {
        return Err(schema("rescue.round", "must be positive"));
    }
    let mw = |field: &str, text: &Option<String>, default: f64| -> Result<f64, ScenarioError> {
        match text {
            Some(t) => units::milliwatts(t).map_err(|source| ScenarioError::Unit {
                field: field.into(),
                source,
            }),
            None => Ok(default),
        }
    };
    let distance_source = match raw.distance_source.as_str() {
        "exact" => {
            if raw.path_loss_exponent.is_some()
                || raw.shadowing_sigma_db.is_some()
                || !raw.measured.is_empty()
            {
                return Err(schema(
                    "rescue.distance_source",
                    "\"exact\" takes no extra parameters",
                ));
            }
            DistanceSource::Exact
        }
        "signal-strength" => {
            if !raw.measured.is_empty() {
                return Err(schema(
                    "rescue.measured",
                    "only valid with distance_source = \"replay\"",
                ));
            }
            DistanceSource::SignalStrength {
                exponent: raw.path_loss_exponent.unwrap_or(3.0),
                sigma_db: raw.shadowing_sigma_db.unwrap_or(2.0),
            }
        }
        "replay" => {
            if raw.path_loss_exponent.is_some() || raw.shadowing_sigma_db.is_some() {
                return Err(schema(
                    "rescue.distance_source",
                    "\"replay\" takes no propagation parameters",
                ));
            }
            if raw.measured.is_empty() {
                return Err(schema(
                    "rescue.measured",
                    "replay needs at least one measured distance",
                ));
            }
            let mut map = BTreeMap::new();
            for (k, m) in raw.measured.iter().enumerate() {
                let field = format!("rescue.measured[{k}]");
                if m.a == m.b {
                    return Err(schema(field, "a distance needs two distinct nodes"));
                }
                let d = meters_field(format!("{field}.distance"), &m.distance)?;
                if !d.is_finite() || d <= 0.0 {
                    return Err(schema(format!("{field}.distance"), "must be positive"));
                }
                if map
                    .insert(canonical(NodeId(m.a), NodeId(m.b)), d)
                    .is_some()
                {
                    return Err(schema(field, "duplicate pair"));
                }
            }
            DistanceSource::Replay(map)
        }
        other => {
            return Err(schema(
                "rescue.distance_source",
                format!("unknown source {other:?} (expected exact, signal-strength or replay)"),
            ));
        }
    };
    Ok(RescueConfig {
        trigger: match &raw.trigger {
            Some(t) => micros_field("rescue.trigger".into(), t)?,
            None => Micros(0),
        },
        tau,
        round,
        awake_power_mw: mw("rescue.awake_power", &raw.awake_power, 202.30)?,
        sleep_power_mw: mw("rescue.sleep_power", &raw.sleep_power, 12.98)?,
        max_skew: match &raw.max_skew {
            Some(t) => micros_field("rescue.max_skew".into(), t)?,
            None => Micros::from_millis(50),
        },
        distance_source,
    })
}

impl Scenario {
    fn to_raw(&self) -> RawScenario {
        let point = |p: Point| RawPoint {
            x: units::fmt_meters(p.x),
            y: units::fmt_meters(p.y),
        };
        RawScenario {
            name: self.name.clone(),
            seed: Some(self.seed),
            radio: RawRadio {
                range: units::fmt_meters(self.radio.range),
                hop_delay: Some(units::fmt_micros(self.radio.hop_delay.0)),
            },
            rescue: self.rescue.as_ref().map(|r| {
                let (source, exponent, sigma, measured) = match &r.distance_source {
                    DistanceSource::Exact => ("exact", None, None, Vec::new()),
                    DistanceSource::SignalStrength { exponent, sigma_db } => {
                        ("signal-strength", Some(*exponent), Some(*sigma_db), Vec::new())
                    }
                    DistanceSource::Replay(map) => (
                        "replay",
                        None,
                        None,
                        map.iter()
                            .map(|((a, b), d)| RawMeasured {
                                a: a.0,
                                b: b.0,
                                distance: units::fmt_meters(*d),
                            })
                            .collect(),
                    ),
                };
                RawRescue {
                    trigger: Some(units::fmt_micros(r.trigger.0)),
                    tau: units::fmt_micros(r.tau.0),
                    round: units::fmt_micros(r.round.0),
                    awake_power: Some(units::fmt_milliwatts(r.awake_power_mw)),
                    sleep_power: Some(units::fmt_milliwatts(r.sleep_power_mw)),
                    max_skew: Some(units::fmt_micros(r.max_skew.0)),
                    distance_source: source.into(),
                    path_loss_exponent: exponent,
                    shadowing_sigma_db: sigma,
                    measured,
                }
            }),
            experiment: RawExperiment {
                horizon: units::fmt_micros(self.experiment.horizon.0),
                schedule_policy: Some(self.experiment.schedule_policy),
                routing_policy: Some(self.experiment.routing_policy),
                delivered_notice: Some(self.experiment.delivered_notice),
            },
            nodes: self
                .nodes
                .iter()
                .map(|n| RawNode {
                    id: n.id.0,
                    kind: Some(n.kind),
                    position: point(n.position),
                    trapped: Some(n.trapped),
                    last_known: n.last_known.map(point),
                    waypoints: n.waypoints.iter().map(|p| point(*p)).collect(),
                    speed: n.speed.map(units::fmt_speed),
                })
                .collect(),
            obstacles: self
                .obstacles
                .iter()
                .map(|o| RawObstacle {
                    from: point(o.segment.a),
                    to: point(o.segment.b),
                    active: o.active.map(|(from, until)| RawWindow {
                        from: units::fmt_micros(from.0),
                        until: units::fmt_micros(until.0),
                    }),
                })
                .collect(),
            cells: self
                .cells
                .iter()
                .map(|c| RawCell {
                    center: point(c.center),
                    radius: units::fmt_meters(c.radius),
                })
                .collect(),
            traffic: self
                .traffic
                .iter()
                .map(|t| RawTraffic {
                    from: t.from.0,
                    to: t.to.0,
                    at: units::fmt_micros(t.at.0),
                    kind: Some(t.class),
                    note: t.note.clone(),
                })
                .collect(),
        }
    }

    /// Canonical TOML rendering; `parse` of the output reproduces `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&self.to_raw()).expect("scenario serializes")
    }

    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let raw: RawScenario = toml::from_str(text)?;
        raw.build()
    }

    /// The ids of the trapped group members.
    pub fn trapped(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.trapped)
            .map(|n| n.id)
            .collect()
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scenario::parse(&text)
}
