//! Python bindings: graph enumeration, schedule statistics, coverage
//! geometry, the signal-strength distance model, and whole-scenario runs.
//!
//! Scenarios cross the boundary as TOML text and results come back as JSON
//! strings (metrics) and JSONL (event log), so the Python side needs nothing
//! beyond `json`. Everything else is plain ints, floats and dicts; exact
//! rationals (γ, θ, vacancies) stay strings like `"1/4"`.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rescuemesh_core::graph::{self, Graph, NodeId};
use rescuemesh_core::log::to_jsonl;
use rescuemesh_core::positioning::DistanceEstimator;
use rescuemesh_core::rescue::schedule::{assign_schedule, compare_schedules};
use rescuemesh_core::scenario::{RoutingPolicy, Scenario};
use rescuemesh_core::units::{micros, Micros};
use rescuemesh_core::{run_scenario as run_core, RunOverrides};

fn build_graph(edges: Vec<(u32, u32)>, nodes: Option<Vec<u32>>) -> Graph {
    let explicit = nodes.unwrap_or_default().into_iter().map(NodeId);
    let pairs: Vec<(NodeId, NodeId)> = edges
        .into_iter()
        .map(|(a, b)| (NodeId(a), NodeId(b)))
        .collect();
    Graph::from_edges(explicit, &pairs)
}

fn member_ids(c: &graph::Clique) -> Vec<u32> {
    c.members().iter().map(|n| n.0).collect()
}

/// Maximal cliques of the undirected graph given as an edge list, each as a
/// sorted node list. `nodes` adds isolated nodes the edges do not mention.
#[pyfunction]
#[pyo3(signature = (edges, nodes=None))]
fn maximal_cliques(edges: Vec<(u32, u32)>, nodes: Option<Vec<u32>>) -> Vec<Vec<u32>> {
    graph::maximal_cliques(&build_graph(edges, nodes))
        .iter()
        .map(member_ids)
        .collect()
}

/// Maximal independent sets, same conventions as `maximal_cliques`.
#[pyfunction]
#[pyo3(signature = (edges, nodes=None))]
fn maximal_independent_sets(edges: Vec<(u32, u32)>, nodes: Option<Vec<u32>>) -> Vec<Vec<u32>> {
    graph::maximal_independent_sets(&build_graph(edges, nodes))
        .iter()
        .map(member_ids)
        .collect()
}

/// Fraction of the union disc area of a clique that any single member covers
/// alone (Monte Carlo, deterministic per seed). Positions are `(x, y)`
/// meters; every pairwise distance must be within `radius`.
#[pyfunction]
#[pyo3(signature = (positions, radius, samples=1_000_000, seed=0))]
fn clique_coverage_ratio(
    positions: Vec<(f64, f64)>,
    radius: f64,
    samples: u64,
    seed: u64,
) -> PyResult<f64> {
    let pts: Vec<(NodeId, rescuemesh_core::geometry::Point)> = positions
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| (NodeId(i as u32), rescuemesh_core::geometry::Point::new(x, y)))
        .collect();
    graph::clique_coverage_ratio(&pts, radius, samples, seed)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Wake-up schedule of a connectivity graph: per-node γ, θ and claimed
/// slots, the hyperperiod, maximal cliques with their vacancy fractions, and
/// the wake-up totals against the MIS-rotation and always-awake baselines.
#[pyfunction]
#[pyo3(signature = (edges, nodes=None))]
fn schedule_stats<'py>(
    py: Python<'py>,
    edges: Vec<(u32, u32)>,
    nodes: Option<Vec<u32>>,
) -> PyResult<Bound<'py, PyDict>> {
    let g = build_graph(edges, nodes);
    let schedule = assign_schedule(&g).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let cmp = compare_schedules(&g, &schedule);

    let out = PyDict::new_bound(py);
    out.set_item("hyperperiod", schedule.hyperperiod)?;

    let per_node = PyDict::new_bound(py);
    for (n, pattern) in &schedule.patterns {
        let stats = &schedule.stats[n];
        let entry = PyDict::new_bound(py);
        entry.set_item("gamma", stats.gamma.to_string())?;
        entry.set_item("theta", stats.theta.to_string())?;
        entry.set_item("slots", pattern.wake.iter().copied().collect::<Vec<u64>>())?;
        entry.set_item("period", pattern.period)?;
        per_node.set_item(n.0, entry)?;
    }
    out.set_item("nodes", per_node)?;

    out.set_item(
        "cliques",
        schedule.cliques.iter().map(member_ids).collect::<Vec<_>>(),
    )?;
    out.set_item(
        "vacancies",
        schedule
            .vacancies
            .iter()
            .map(|(c, v)| (member_ids(c), v.to_string()))
            .collect::<Vec<_>>(),
    )?;

    let wakeups = PyDict::new_bound(py);
    wakeups.set_item("clique", cmp.clique_wakeups)?;
    wakeups.set_item("mis_rotation", cmp.mis_rotation_wakeups.to_string())?;
    wakeups.set_item("always_awake", cmp.always_awake_wakeups)?;
    wakeups.set_item("savings_vs_always", cmp.savings_vs_always_awake)?;
    out.set_item("wakeups", wakeups)?;
    Ok(out)
}

/// One signal-strength distance estimate over a link of `true_distance`
/// meters under the log-distance model: `d · 10^(−X / (10·exponent))` with
/// `X ~ N(0, sigma_db²)`, deterministic per seed.
#[pyfunction]
#[pyo3(signature = (true_distance, exponent=3.0, sigma_db=0.0, seed=0))]
fn estimate_distance(true_distance: f64, exponent: f64, sigma_db: f64, seed: u64) -> PyResult<f64> {
    if !true_distance.is_finite() || true_distance < 0.0 {
        return Err(PyValueError::new_err("true_distance must be finite and >= 0"));
    }
    let est = DistanceEstimator::SignalStrength { exponent, sigma_db };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(est
        .measure(NodeId(0), NodeId(1), true_distance, &mut rng)
        .expect("signal-strength model always yields an estimate"))
}

/// Parse and validate scenario TOML; returns the canonical serialized form.
/// Raises ValueError with the schema diagnostic on any problem.
#[pyfunction]
fn validate_scenario(text: &str) -> PyResult<String> {
    Scenario::parse(text)
        .map(|sc| sc.to_toml())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Run a scenario given as TOML text. Returns `(metrics_json, events_jsonl)`.
/// Overrides mirror the command-line flags: `horizon` takes a duration with
/// units ("120 s"), `routing_policy` one of full/adhoc-only/static/flood,
/// `coverage_samples` a sampling period in seconds.
#[pyfunction]
#[pyo3(signature = (text, seed=None, horizon=None, routing_policy=None, coverage_samples=None))]
fn run_scenario(
    text: &str,
    seed: Option<u64>,
    horizon: Option<&str>,
    routing_policy: Option<&str>,
    coverage_samples: Option<u64>,
) -> PyResult<(String, String)> {
    let sc = Scenario::parse(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let horizon = horizon
        .map(|h| micros(h).map(Micros))
        .transpose()
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let routing_policy = routing_policy
        .map(|p| match p {
            "full" => Ok(RoutingPolicy::Full),
            "adhoc-only" => Ok(RoutingPolicy::AdhocOnly),
            "static" => Ok(RoutingPolicy::Static),
            "flood" => Ok(RoutingPolicy::Flood),
            other => Err(PyValueError::new_err(format!(
                "unknown policy {other:?} (expected full, adhoc-only, static or flood)"
            ))),
        })
        .transpose()?;
    let overrides = RunOverrides {
        seed,
        horizon,
        routing_policy,
        coverage_samples,
    };
    let out = run_core(&sc, &overrides).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((out.metrics.to_json_pretty(), to_jsonl(&out.log)))
}

/// Replay a table of measured pairwise distances `{(a, b): meters}` through
/// the positioning survey and return each node's coordinates in the group
/// frame, plus the nodes left unpositioned.
#[pyfunction]
fn position_from_distances<'py>(
    py: Python<'py>,
    measured: BTreeMap<(u32, u32), f64>,
) -> PyResult<Bound<'py, PyDict>> {
    use rescuemesh_core::positioning::{build_map, extend_map, PositionContext};

    let mut g = Graph::new();
    let mut table = BTreeMap::new();
    for (&(a, b), &d) in &measured {
        if !d.is_finite() || d <= 0.0 {
            return Err(PyValueError::new_err(format!(
                "distance for ({a}, {b}) must be finite and > 0, got {d}"
            )));
        }
        g.add_edge(NodeId(a), NodeId(b));
        table.insert(
            rescuemesh_core::positioning::canonical(NodeId(a), NodeId(b)),
            d,
        );
    }
    if table.is_empty() {
        return Err(PyValueError::new_err("need at least one measured pair"));
    }
    let owner = g.nodes().next().expect("nonempty graph");
    // Pairs without a measurement never heard each other, so the radio range
    // is at most a hair beyond the longest measured link.
    let range = table.values().fold(0.0f64, |m, &d| m.max(d));
    let ctx = PositionContext {
        graph: &g,
        distances: &table,
        range,
    };
    let mut map = build_map(owner, &ctx);
    extend_map(&mut map, &ctx);

    let out = PyDict::new_bound(py);
    let positions = PyDict::new_bound(py);
    for (n, p) in &map.positions {
        positions.set_item(n.0, (p.x, p.y))?;
    }
    out.set_item("frame", owner.0)?;
    out.set_item("positions", positions)?;
    out.set_item(
        "unpositioned",
        g.nodes()
            .filter(|n| !map.positions.contains_key(n))
            .map(|n| n.0)
            .collect::<Vec<u32>>(),
    )?;
    Ok(out)
}

#[pymodule]
fn rescuemesh_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(maximal_cliques, m)?)?;
    m.add_function(wrap_pyfunction!(maximal_independent_sets, m)?)?;
    m.add_function(wrap_pyfunction!(clique_coverage_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_stats, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_distance, m)?)?;
    m.add_function(wrap_pyfunction!(validate_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(position_from_distances, m)?)?;
    Ok(())
}
