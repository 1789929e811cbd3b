//! Undirected graphs, maximal-clique / maximal-independent-set enumeration,
//! one-hop network construction from neighbor claims, and Monte Carlo
//! coverage estimation for groups of radio discs.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{disc_bbox, Point};

/// Node identifier. Ordering on ids is load-bearing: it breaks θ ties in the
/// wake-up scheduling order and picks canonical axis nodes in positioning.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node {0} is not part of the graph")]
    UnknownNode(NodeId),
    #[error("coverage estimation needs at least one position")]
    EmptyGroup,
    #[error("coverage estimation needs at least one sample")]
    NoSamples,
    #[error(
        "nodes {a} and {b} are {distance:.3} m apart, beyond the {radius:.3} m radio range"
    )]
    PairOutOfRange {
        a: NodeId,
        b: NodeId,
        distance: f64,
        radius: f64,
    },
}

/// Simple undirected graph over `NodeId`s. Edges are stored canonically as
/// `(min, max)` pairs; iteration order is always sorted, which keeps every
/// derived artifact (cliques, schedules, logs) deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    nodes: BTreeSet<NodeId>,
    adj: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl Graph {
    pub fn new() -> Graph {
        Graph::default()
    }

    pub fn from_edges(nodes: impl IntoIterator<Item = NodeId>, edges: &[(NodeId, NodeId)]) -> Graph {
        let mut g = Graph::new();
        for n in nodes {
            g.add_node(n);
        }
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn add_node(&mut self, n: NodeId) {
        self.nodes.insert(n);
        self.adj.entry(n).or_default();
    }

    pub fn add_edge(&mut self, a: NodeId, b: NodeId) {
        if a == b {
            return;
        }
        self.add_node(a);
        self.add_node(b);
        self.adj.get_mut(&a).unwrap().insert(b);
        self.adj.get_mut(&b).unwrap().insert(a);
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.contains(&n)
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adj.get(&a).is_some_and(|s| s.contains(&b))
    }

    pub fn neighbors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adj.get(&n).into_iter().flatten().copied()
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.adj.get(&n).map_or(0, |s| s.len())
    }

    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (&a, nbrs) in &self.adj {
            for &b in nbrs {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Complement graph on the same node set.
    pub fn complement(&self) -> Graph {
        let mut g = Graph::new();
        for n in self.nodes() {
            g.add_node(n);
        }
        let nodes: Vec<NodeId> = self.nodes().collect();
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                if !self.has_edge(a, b) {
                    g.add_edge(a, b);
                }
            }
        }
        g
    }

    /// Connected components, each returned as a sorted node set; the list is
    /// ordered by smallest member.
    pub fn connected_components(&self) -> Vec<BTreeSet<NodeId>> {
        let mut seen: BTreeSet<NodeId> = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.nodes() {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![start];
            while let Some(n) = stack.pop() {
                if !comp.insert(n) {
                    continue;
                }
                for m in self.neighbors(n) {
                    if !comp.contains(&m) {
                        stack.push(m);
                    }
                }
            }
            seen.extend(comp.iter().copied());
            out.push(comp);
        }
        out
    }

    /// Subgraph induced by `keep`.
    pub fn induced(&self, keep: &BTreeSet<NodeId>) -> Graph {
        let mut g = Graph::new();
        for &n in keep {
            if self.contains(n) {
                g.add_node(n);
            }
        }
        for (a, b) in self.edges() {
            if keep.contains(&a) && keep.contains(&b) {
                g.add_edge(a, b);
            }
        }
        g
    }
}

/// A maximal clique (or, via the complement trick, a maximal independent
/// set). Members are kept sorted; cliques order lexicographically by member
/// list, which is the canonical order used everywhere.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Clique {
    members: Vec<NodeId>,
}

impl Clique {
    pub fn new(mut members: Vec<NodeId>) -> Clique {
        members.sort_unstable();
        members.dedup();
        Clique { members }
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.members.binary_search(&n).is_ok()
    }
}

impl std::fmt::Display for Clique {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "}}")
    }
}

/// All maximal cliques of `g`, in canonical (lexicographic) order. Uses
/// Bron–Kerbosch with pivoting; the pivot is the candidate with the most
/// neighbors inside the candidate set. Isolated nodes come out as singleton
/// cliques.
pub fn maximal_cliques(g: &Graph) -> Vec<Clique> {
    let mut out: Vec<Clique> = Vec::new();
    let mut r: Vec<NodeId> = Vec::new();
    let p: BTreeSet<NodeId> = g.nodes().collect();
    let x: BTreeSet<NodeId> = BTreeSet::new();
    bron_kerbosch(g, &mut r, p, x, &mut out);
    out.sort();
    out
}

fn bron_kerbosch(
    g: &Graph,
    r: &mut Vec<NodeId>,
    mut p: BTreeSet<NodeId>,
    mut x: BTreeSet<NodeId>,
    out: &mut Vec<Clique>,
) {
    if p.is_empty() && x.is_empty() {
        out.push(Clique::new(r.clone()));
        return;
    }
    // Pivot: maximize |P ∩ N(u)| over u ∈ P ∪ X so the branch set shrinks.
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| (g.neighbors(u).filter(|v| p.contains(v)).count(), std::cmp::Reverse(u)))
        .expect("p or x nonempty");
    let pivot_nbrs: BTreeSet<NodeId> = g.neighbors(pivot).collect();
    let todo: Vec<NodeId> = p.iter().copied().filter(|v| !pivot_nbrs.contains(v)).collect();
    for v in todo {
        let v_nbrs: BTreeSet<NodeId> = g.neighbors(v).collect();
        r.push(v);
        bron_kerbosch(
            g,
            r,
            p.intersection(&v_nbrs).copied().collect(),
            x.intersection(&v_nbrs).copied().collect(),
            out,
        );
        r.pop();
        p.remove(&v);
        x.insert(v);
    }
}

/// All maximal independent sets of `g`: exactly the maximal cliques of the
/// complement graph.
pub fn maximal_independent_sets(g: &Graph) -> Vec<Clique> {
    maximal_cliques(&g.complement())
}

/// A node's one-hop network: the node itself, its confirmed neighbors, the
/// edges among them, and (when available) measured edge distances in meters.
///
/// Built from broadcast neighbor claims; only mutual claims survive, so a
/// unidirectional link never produces an edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHopNetwork {
    pub owner: NodeId,
    pub graph: Graph,
    /// Mean of the two directional distance estimates, keyed `(min, max)`.
    pub distances: BTreeMap<(NodeId, NodeId), f64>,
}

impl OneHopNetwork {
    pub fn distance(&self, a: NodeId, b: NodeId) -> Option<f64> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.distances.get(&key).copied()
    }

    /// Maximal cliques of the one-hop network that contain the owner. A
    /// clique containing the owner lies entirely inside the owner's closed
    /// neighborhood, so these are exactly the maximal cliques of the full
    /// graph through the owner.
    pub fn cliques_of_owner(&self) -> Vec<Clique> {
        maximal_cliques(&self.graph)
            .into_iter()
            .filter(|c| c.contains(self.owner))
            .collect()
    }
}

/// Build `owner`'s one-hop network from the neighbor sets each node claimed
/// in its broadcast (each claim may carry a measured distance). A node enters
/// the network only if it claims the owner back; an edge between two members
/// exists only if both claim each other.
pub fn build_one_hop_network(
    owner: NodeId,
    claims: &BTreeMap<NodeId, BTreeMap<NodeId, Option<f64>>>,
) -> Result<OneHopNetwork, GraphError> {
    let own = claims.get(&owner).ok_or(GraphError::UnknownNode(owner))?;

    let mutual = |a: NodeId, b: NodeId| -> bool {
        claims.get(&a).is_some_and(|s| s.contains_key(&b))
            && claims.get(&b).is_some_and(|s| s.contains_key(&a))
    };
    let members: Vec<NodeId> = own
        .keys()
        .copied()
        .filter(|&v| v != owner && mutual(owner, v))
        .collect();

    let mut graph = Graph::new();
    graph.add_node(owner);
    let mut distances = BTreeMap::new();
    let mut link = |a: NodeId, b: NodeId, graph: &mut Graph| {
        graph.add_edge(a, b);
        let d_ab = claims.get(&a).and_then(|s| s.get(&b)).copied().flatten();
        let d_ba = claims.get(&b).and_then(|s| s.get(&a)).copied().flatten();
        let d = match (d_ab, d_ba) {
            (Some(x), Some(y)) => Some((x + y) / 2.0),
            (Some(x), None) | (None, Some(x)) => Some(x),
            (None, None) => None,
        };
        if let Some(d) = d {
            let key = if a < b { (a, b) } else { (b, a) };
            distances.insert(key, d);
        }
    };

    for &v in &members {
        link(owner, v, &mut graph);
    }
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            if mutual(a, b) {
                link(a, b, &mut graph);
            }
        }
    }

    Ok(OneHopNetwork {
        owner,
        graph,
        distances,
    })
}

/// Shared Monte Carlo sampler: the fraction of the union-of-all-discs area
/// covered by each subset of discs. Single-threaded and seeded, so results
/// are bit-identical for a given `(positions, subsets, samples, seed)`.
pub(crate) fn coverage_fractions(
    positions: &[Point],
    radius: f64,
    subsets: &[Vec<usize>],
    samples: u64,
    seed: u64,
) -> Result<Vec<f64>, GraphError> {
    if positions.is_empty() {
        return Err(GraphError::EmptyGroup);
    }
    if samples == 0 {
        return Err(GraphError::NoSamples);
    }
    let (min, max) = disc_bbox(positions, radius);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r2 = radius * radius;
    let mut union_hits: u64 = 0;
    let mut subset_hits = vec![0u64; subsets.len()];
    for _ in 0..samples {
        let x = rng.gen_range(min.x..max.x);
        let y = rng.gen_range(min.y..max.y);
        let p = Point::new(x, y);
        let covered =
            |idx: usize| (p.x - positions[idx].x).powi(2) + (p.y - positions[idx].y).powi(2) <= r2;
        if !(0..positions.len()).any(covered) {
            continue;
        }
        union_hits += 1;
        for (si, subset) in subsets.iter().enumerate() {
            if subset.iter().any(|&i| covered(i)) {
                subset_hits[si] += 1;
            }
        }
    }
    if union_hits == 0 {
        return Err(GraphError::NoSamples);
    }
    Ok(subset_hits
        .iter()
        .map(|&h| h as f64 / union_hits as f64)
        .collect())
}

/// Coverage efficiency of a clique: the minimum, over members, of the
/// fraction of the clique's union disc area that the single member covers
/// alone. Requires every pairwise distance to be within `radius` (otherwise
/// the members would not form a clique at that range).
pub fn clique_coverage_ratio(
    positions: &[(NodeId, Point)],
    radius: f64,
    samples: u64,
    seed: u64,
) -> Result<f64, GraphError> {
    if positions.is_empty() {
        return Err(GraphError::EmptyGroup);
    }
    for (i, &(a, pa)) in positions.iter().enumerate() {
        for &(b, pb) in &positions[i + 1..] {
            let d = pa.dist(pb);
            if d > radius * (1.0 + 1e-12) {
                return Err(GraphError::PairOutOfRange {
                    a,
                    b,
                    distance: d,
                    radius,
                });
            }
        }
    }
    let pts: Vec<Point> = positions.iter().map(|&(_, p)| p).collect();
    let singles: Vec<Vec<usize>> = (0..pts.len()).map(|i| vec![i]).collect();
    let fracs = coverage_fractions(&pts, radius, &singles, samples, seed)?;
    Ok(fracs.into_iter().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    /// The six-node group used across the scheduling tests: one four-clique
    /// {0,1,3,5}, one three-clique {0,1,2}, one two-clique {0,4}.
    pub(crate) fn six_node_group() -> Graph {
        Graph::from_edges(
            (0..6).map(NodeId),
            &[
                (n(0), n(1)),
                (n(0), n(3)),
                (n(0), n(5)),
                (n(1), n(3)),
                (n(1), n(5)),
                (n(3), n(5)),
                (n(0), n(2)),
                (n(1), n(2)),
                (n(0), n(4)),
            ],
        )
    }

    #[test]
    fn six_node_cliques() {
        let cliques = maximal_cliques(&six_node_group());
        let got: Vec<Vec<u32>> = cliques
            .iter()
            .map(|c| c.members().iter().map(|m| m.0).collect())
            .collect();
        assert_eq!(got, vec![vec![0, 1, 2], vec![0, 1, 3, 5], vec![0, 4]]);
    }

    #[test]
    fn six_node_independent_sets() {
        let sets = maximal_independent_sets(&six_node_group());
        let got: Vec<Vec<u32>> = sets
            .iter()
            .map(|c| c.members().iter().map(|m| m.0).collect())
            .collect();
        assert_eq!(got, vec![vec![0], vec![1, 4], vec![2, 3, 4], vec![2, 4, 5]]);
    }

    #[test]
    fn isolated_node_is_singleton_clique() {
        let mut g = Graph::new();
        g.add_node(n(7));
        g.add_edge(n(1), n(2));
        let cliques = maximal_cliques(&g);
        assert!(cliques.contains(&Clique::new(vec![n(7)])));
        assert!(cliques.contains(&Clique::new(vec![n(1), n(2)])));
        assert_eq!(cliques.len(), 2);
    }

    /// Brute-force oracle: enumerate every subset, keep cliques with no
    /// proper clique superset. Only usable for small graphs.
    pub(crate) fn brute_force_cliques(g: &Graph) -> Vec<Clique> {
        let nodes: Vec<NodeId> = g.nodes().collect();
        assert!(nodes.len() <= 16, "oracle is exponential");
        let is_clique = |mask: u32| -> bool {
            for i in 0..nodes.len() {
                if mask & (1 << i) == 0 {
                    continue;
                }
                for j in i + 1..nodes.len() {
                    if mask & (1 << j) != 0 && !g.has_edge(nodes[i], nodes[j]) {
                        return false;
                    }
                }
            }
            true
        };
        let cliques: Vec<u32> = (1u32..1 << nodes.len()).filter(|&m| is_clique(m)).collect();
        let maximal: Vec<u32> = cliques
            .iter()
            .copied()
            .filter(|&m| !cliques.iter().any(|&other| other != m && other & m == m))
            .collect();
        let mut out: Vec<Clique> = maximal
            .into_iter()
            .map(|m| {
                Clique::new(
                    (0..nodes.len())
                        .filter(|&i| m & (1 << i) != 0)
                        .map(|i| nodes[i])
                        .collect(),
                )
            })
            .collect();
        out.sort();
        out
    }

    #[test]
    fn matches_brute_force_on_random_graphs() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(0x6c11);
        for round in 0..200 {
            let size = rng.gen_range(1..=8);
            let p = rng.gen_range(0.1..0.9);
            let mut g = Graph::new();
            for i in 0..size {
                g.add_node(n(i));
            }
            for i in 0..size {
                for j in i + 1..size {
                    if rng.gen_bool(p) {
                        g.add_edge(n(i), n(j));
                    }
                }
            }
            assert_eq!(
                maximal_cliques(&g),
                brute_force_cliques(&g),
                "mismatch on round {round}"
            );
            assert_eq!(
                maximal_independent_sets(&g),
                brute_force_cliques(&g.complement()),
                "MIS mismatch on round {round}"
            );
        }
    }

    #[test]
    fn one_hop_network_drops_unidirectional_claims() {
        let mut claims: BTreeMap<NodeId, BTreeMap<NodeId, Option<f64>>> = BTreeMap::new();
        claims.insert(n(0), BTreeMap::from([(n(1), Some(10.0)), (n(2), Some(20.0))]));
        claims.insert(n(1), BTreeMap::from([(n(0), Some(12.0)), (n(2), None)]));
        // Node 2 heard node 0 but not node 1: edge 1-2 must not appear.
        claims.insert(n(2), BTreeMap::from([(n(0), Some(22.0))]));
        let net = build_one_hop_network(n(0), &claims).unwrap();
        assert!(net.graph.has_edge(n(0), n(1)));
        assert!(net.graph.has_edge(n(0), n(2)));
        assert!(!net.graph.has_edge(n(1), n(2)));
        // Distances are the mean of the two directional estimates.
        assert_eq!(net.distance(n(0), n(1)), Some(11.0));
        assert_eq!(net.distance(n(0), n(2)), Some(21.0));
    }

    #[test]
    fn one_hop_excludes_nodes_that_never_claimed_owner() {
        let mut claims: BTreeMap<NodeId, BTreeMap<NodeId, Option<f64>>> = BTreeMap::new();
        claims.insert(n(5), BTreeMap::from([(n(6), Some(30.0))]));
        claims.insert(n(6), BTreeMap::new());
        let net = build_one_hop_network(n(5), &claims).unwrap();
        assert!(!net.graph.contains(n(6)));
        assert_eq!(net.graph.node_count(), 1);
    }

    #[test]
    fn two_disc_coverage_matches_closed_form() {
        // Two discs of radius r at distance exactly r: each disc alone covers
        // π / (4π/3 + √3/2) of the union.
        let r = 100.0;
        let expected = std::f64::consts::PI
            / (4.0 * std::f64::consts::PI / 3.0 + 3f64.sqrt() / 2.0);
        let got = clique_coverage_ratio(
            &[(n(0), Point::new(0.0, 0.0)), (n(1), Point::new(r, 0.0))],
            r,
            1_000_000,
            7,
        )
        .unwrap();
        assert!(
            (got - expected).abs() < 0.005,
            "got {got}, expected {expected}"
        );
    }

    #[test]
    fn coverage_rejects_out_of_range_pair() {
        let err = clique_coverage_ratio(
            &[(n(0), Point::new(0.0, 0.0)), (n(1), Point::new(150.0, 0.0))],
            100.0,
            1000,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::PairOutOfRange { .. }));
    }

    #[test]
    fn coverage_is_deterministic_per_seed() {
        let pts = [
            (n(0), Point::new(0.0, 0.0)),
            (n(1), Point::new(50.0, 0.0)),
            (n(2), Point::new(25.0, 40.0)),
        ];
        let a = clique_coverage_ratio(&pts, 100.0, 200_000, 99).unwrap();
        let b = clique_coverage_ratio(&pts, 100.0, 200_000, 99).unwrap();
        assert_eq!(a, b);
        let c = clique_coverage_ratio(&pts, 100.0, 200_000, 100).unwrap();
        assert!((a - c).abs() < 0.01);
    }

    #[test]
    fn closer_members_cover_more_of_the_union() {
        // Shrinking the same clique's diameter increases the min single-node
        // fraction of the union.
        let wide = clique_coverage_ratio(
            &[(n(0), Point::new(0.0, 0.0)), (n(1), Point::new(100.0, 0.0))],
            100.0,
            400_000,
            3,
        )
        .unwrap();
        let tight = clique_coverage_ratio(
            &[(n(0), Point::new(0.0, 0.0)), (n(1), Point::new(50.0, 0.0))],
            100.0,
            400_000,
            3,
        )
        .unwrap();
        assert!(tight > wide);
    }
}
