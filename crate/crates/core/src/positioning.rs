//! GPS-free relative positioning from pairwise distance estimates.
//!
//! Trapped nodes cannot rely on satellite fixes, but they can estimate
//! distances to their radio neighbors from signal strength. One node anchors
//! a relative coordinate frame; everyone reachable through chains of
//! trilateration gets a position in that frame; the rest are reported as
//! outliers together with whatever distances are known to them, so a later
//! merge (or a rescuer with more context) can keep refining.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::Point;
use crate::graph::{maximal_cliques, Graph, NodeId};

/// How pairwise distances are measured.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceEstimator {
    /// Exact geometric distances (noise-free).
    Exact,
    /// Log-distance signal-strength model. Receiving a packet over true
    /// distance `d` yields the estimate `d · 10^(−X / (10·exponent))` with
    /// shadowing noise `X ~ N(0, sigma_db²)`; the reference power cancels
    /// out of the inversion, leaving only the path-loss exponent and the
    /// noise level.
    SignalStrength { exponent: f64, sigma_db: f64 },
    /// Replay externally supplied per-pair measurements.
    Replay(BTreeMap<(NodeId, NodeId), f64>),
}

impl DistanceEstimator {
    /// One directional measurement of the link `a → b`. `None` when a replay
    /// table has no entry for the pair (the link then carries no distance).
    pub fn measure(
        &self,
        a: NodeId,
        b: NodeId,
        true_distance: f64,
        rng: &mut impl Rng,
    ) -> Option<f64> {
        match self {
            DistanceEstimator::Exact => Some(true_distance),
            DistanceEstimator::SignalStrength { exponent, sigma_db } => {
                let noise = if *sigma_db > 0.0 {
                    Normal::new(0.0, *sigma_db).expect("sigma is finite").sample(rng)
                } else {
                    0.0
                };
                Some(true_distance * 10f64.powf(-noise / (10.0 * exponent)))
            }
            DistanceEstimator::Replay(table) => table.get(&canonical(a, b)).copied(),
        }
    }
}

pub fn canonical(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A relative coordinate assignment anchored at `frame_owner`'s frame: the
/// owner sits at the origin and its lowest-id seed neighbor defines the +x
/// axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionMap {
    pub frame_owner: NodeId,
    pub positions: BTreeMap<NodeId, Point>,
    /// Measured distances on edges with an unpositioned endpoint, carried so
    /// that merging maps can keep extending after new positions arrive.
    pub pending: BTreeMap<(NodeId, NodeId), f64>,
}

/// Everything a node knows when building or extending a map: the (partial)
/// topology, the measured distances keyed canonically, and the radio range —
/// used to reject mirror placements that would put two non-neighbors well
/// inside range of each other.
#[derive(Debug, Clone, Copy)]
pub struct PositionContext<'a> {
    pub graph: &'a Graph,
    pub distances: &'a BTreeMap<(NodeId, NodeId), f64>,
    pub range: f64,
}

impl PositionContext<'_> {
    fn dist(&self, a: NodeId, b: NodeId) -> Option<f64> {
        self.distances.get(&canonical(a, b)).copied()
    }
}

/// Build a map from scratch in `owner`'s frame.
///
/// The seed is the largest maximal clique containing the owner (ties go to
/// the lexicographically smallest member list): the owner sits at the
/// origin, the lowest-id co-member with a measured distance goes on the +x
/// axis, and the next co-member measured against both is placed with
/// positive y. After the seed, any node with measured distances to at least
/// two positioned nodes is placed by circle intersection — candidates with
/// more positioned neighbors first — using the owner and the most recently
/// placed neighbor as anchors, with the mirror ambiguity resolved by
/// [`consistency_score`] and score ties explored by backtracking against the
/// finished map's stress.
pub fn build_map(owner: NodeId, ctx: &PositionContext) -> PositionMap {
    let mut map = PositionMap {
        frame_owner: owner,
        positions: BTreeMap::new(),
        pending: BTreeMap::new(),
    };
    map.positions.insert(owner, Point::new(0.0, 0.0));
    let mut recency: Vec<NodeId> = vec![owner];

    let seed = maximal_cliques(ctx.graph)
        .into_iter()
        .filter(|c| c.contains(owner))
        .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))
        .map(|c| c.members().to_vec())
        .unwrap_or_default();

    if let Some(axis) = seed
        .iter()
        .copied()
        .find(|&v| v != owner && ctx.dist(owner, v).is_some())
    {
        let d = ctx.dist(owner, axis).unwrap();
        map.positions.insert(axis, Point::new(d, 0.0));
        recency.push(axis);

        // Third seed member fixes the frame's orientation: positive y by
        // convention. Placing it before the general loop keeps lower-id
        // two-anchor nodes from grabbing the convention first.
        let third = seed.iter().copied().find(|&v| {
            v != owner
                && v != axis
                && ctx.dist(owner, v).is_some()
                && ctx.dist(axis, v).is_some()
        });
        if let Some(third) = third {
            if let Some((m1, m2)) = circle_intersections(
                Point::new(0.0, 0.0),
                ctx.dist(owner, third).unwrap(),
                Point::new(d, 0.0),
                ctx.dist(axis, third).unwrap(),
            ) {
                map.positions.insert(third, if m1.y >= m2.y { m1 } else { m2 });
                recency.push(third);
            }
        }
    }

    // Main loop covers the rest of the seed clique too: its members all have
    // measured distances to the placed seed nodes.
    settle(&mut map, ctx, &mut recency, AnchorRule::OwnerRecent(owner));
    map.pending = collect_pending(&map.positions, ctx.distances);
    map
}

/// Fold `other` into `base`: positions already in `base` win, new ones are
/// adopted, pending distances are pooled, and trilateration re-runs to a
/// fixpoint so that freshly adopted positions can promote previously
/// unplaceable nodes. Both maps must share a frame.
pub fn merge_maps(base: &mut PositionMap, other: &PositionMap, ctx: &PositionContext) {
    for (n, p) in &other.positions {
        base.positions.entry(*n).or_insert(*p);
    }
    for (k, d) in &other.pending {
        base.pending.entry(*k).or_insert(*d);
    }
    extend_map(base, ctx);
}

/// Re-run trilateration to a fixpoint using the union of the context's
/// distances and the map's pending ones. Anchors here are the two lowest-id
/// positioned nodes measured against the candidate.
pub fn extend_map(map: &mut PositionMap, ctx: &PositionContext) {
    let mut pool = ctx.distances.clone();
    for (k, d) in &map.pending {
        pool.entry(*k).or_insert(*d);
    }
    let pooled = PositionContext {
        graph: ctx.graph,
        distances: &pool,
        range: ctx.range,
    };
    let mut recency: Vec<NodeId> = map.positions.keys().copied().collect();
    settle(map, &pooled, &mut recency, AnchorRule::LowestIds);
    map.pending = collect_pending(&map.positions, &pool);
}

/// Run placements to a fixpoint, backtracking over unresolved mirror ties.
///
/// A node placed from exactly two anchors has two mirror placements that the
/// evidence at hand sometimes cannot tell apart. Keeping the wrong one is
/// sticky: everything placed afterwards stays consistent with it, so the
/// error surfaces only as stress against nodes positioned *before* the tie,
/// and no single-node repair can rotate the misplaced cluster back. Each
/// genuine tie is therefore a branch point: both flips are explored
/// depth-first (default pick first) and the completion with the least
/// [`total_stress`] wins. Ties are rare — most mirrors are settled by a third
/// distance or a range-plausibility penalty — so the search usually collapses
/// to the single greedy pass. Past `MAX_TIES` branch points the defaults are
/// kept; a framework still ambiguous at that depth is under-determined anyway.
fn settle(
    map: &mut PositionMap,
    ctx: &PositionContext,
    recency: &mut Vec<NodeId>,
    rule: AnchorRule,
) {
    const MAX_TIES: usize = 12;
    let (greedy_map, greedy_rec, ties) = run_placements(map, ctx, recency, rule, &[]);
    if ties == 0 {
        *map = greedy_map;
        *recency = greedy_rec;
        return;
    }
    let mut best = (total_stress(&greedy_map, ctx), greedy_map, greedy_rec);
    let mut stack: Vec<Vec<bool>> = vec![vec![false], vec![true]];
    while let Some(script) = stack.pop() {
        let (m, rec, t) = run_placements(map, ctx, recency, rule, &script);
        if t > script.len() && script.len() < MAX_TIES {
            for flip in [false, true] {
                let mut next = script.clone();
                next.push(flip);
                stack.push(next);
            }
            continue;
        }
        let stress = total_stress(&m, ctx);
        if stress < best.0 {
            best = (stress, m, rec);
        }
    }
    let (_, m, rec) = best;
    *map = m;
    *recency = rec;
}

/// One greedy pass to a fixpoint, following `script` at unresolved mirror
/// ties (`false` keeps the default pick). Returns the finished map, the final
/// recency order, and the number of ties encountered.
fn run_placements(
    map: &PositionMap,
    ctx: &PositionContext,
    recency: &[NodeId],
    rule: AnchorRule,
    script: &[bool],
) -> (PositionMap, Vec<NodeId>, usize) {
    let mut m = map.clone();
    let mut rec = recency.to_vec();
    let mut ties = 0;
    while place_next(&mut m, ctx, &mut rec, rule, script, &mut ties) {}
    (m, rec, ties)
}

/// Total squared inconsistency of a map: measured-edge residuals plus
/// range-plausibility penalties for known strangers, over every positioned
/// pair.
fn total_stress(map: &PositionMap, ctx: &PositionContext) -> f64 {
    let placed: Vec<(NodeId, Point)> = map.positions.iter().map(|(n, p)| (*n, *p)).collect();
    let mut stress = 0.0;
    for (i, &(a, pa)) in placed.iter().enumerate() {
        for &(b, pb) in &placed[i + 1..] {
            let separation = pa.dist(pb);
            match ctx.dist(a, b) {
                Some(d) => stress += (separation - d) * (separation - d),
                None => {
                    let strangers =
                        ctx.graph.contains(a) && ctx.graph.contains(b) && !ctx.graph.has_edge(a, b);
                    if strangers && separation < ctx.range {
                        let depth = ctx.range - separation;
                        stress += depth * depth;
                    }
                }
            }
        }
    }
    stress
}

/// Distances that still touch an unpositioned endpoint.
pub fn collect_pending(
    positions: &BTreeMap<NodeId, Point>,
    distances: &BTreeMap<(NodeId, NodeId), f64>,
) -> BTreeMap<(NodeId, NodeId), f64> {
    distances
        .iter()
        .filter(|((a, b), _)| !positions.contains_key(a) || !positions.contains_key(b))
        .map(|(k, d)| (*k, *d))
        .collect()
}

/// Nodes of `g` that never accumulated two positioned, measured neighbors
/// and therefore have no coordinates.
pub fn outliers(map: &PositionMap, g: &Graph) -> Vec<NodeId> {
    g.nodes().filter(|n| !map.positions.contains_key(n)).collect()
}

#[derive(Clone, Copy)]
enum AnchorRule {
    /// Prefer the frame owner plus the most recently placed measured
    /// neighbor (initial map construction).
    OwnerRecent(NodeId),
    /// The two lowest-id positioned measured neighbors (merging).
    LowestIds,
}

/// Place the best placeable node, if any. Returns whether progress was made.
/// Mirror ties consume one entry of `script` each (default pick when the
/// script is exhausted) and bump `ties`.
fn place_next(
    map: &mut PositionMap,
    ctx: &PositionContext,
    recency: &mut Vec<NodeId>,
    rule: AnchorRule,
    script: &[bool],
    ties: &mut usize,
) -> bool {
    // Candidate set: unpositioned endpoints of any measured edge.
    let mut cands: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for (a, b) in ctx.distances.keys() {
        for (v, w) in [(*a, *b), (*b, *a)] {
            if !map.positions.contains_key(&v) && map.positions.contains_key(&w) {
                cands.entry(v).or_default().push(w);
            }
        }
    }
    cands.retain(|_, anchors| anchors.len() >= 2);
    // Most positioned neighbors first, then lowest id.
    let mut order: Vec<(NodeId, Vec<NodeId>)> = cands.into_iter().collect();
    order.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));

    for (cand, mut positioned_nbrs) in order {
        positioned_nbrs.sort_unstable();
        let (a1, a2) = match rule {
            AnchorRule::OwnerRecent(owner) => {
                let first = if positioned_nbrs.contains(&owner) {
                    owner
                } else {
                    most_recent(&positioned_nbrs, recency, None)
                };
                let second = most_recent(&positioned_nbrs, recency, Some(first));
                (first, second)
            }
            AnchorRule::LowestIds => (positioned_nbrs[0], positioned_nbrs[1]),
        };
        if a1 == a2 {
            continue;
        }
        let (p1, r1) = (map.positions[&a1], ctx.dist(cand, a1).unwrap());
        let (p2, r2) = (map.positions[&a2], ctx.dist(cand, a2).unwrap());
        let Some((m1, m2)) = circle_intersections(p1, r1, p2, r2) else {
            continue;
        };
        let (prefer, alternate, tie) = choose_mirror(cand, (a1, a2), m1, m2, map, ctx);
        let chosen = if tie {
            let flip = script.get(*ties).copied().unwrap_or(false);
            *ties += 1;
            if flip {
                alternate
            } else {
                prefer
            }
        } else {
            prefer
        };
        map.positions.insert(cand, chosen);
        recency.push(cand);
        return true;
    }
    false
}

fn most_recent(options: &[NodeId], recency: &[NodeId], skip: Option<NodeId>) -> NodeId {
    recency
        .iter()
        .rev()
        .copied()
        .find(|r| Some(*r) != skip && options.contains(r))
        .unwrap_or(options[0])
}

/// Both intersection points of the two anchor circles. With noisy radii the
/// circles may not meet; the altitude is then clamped to zero, i.e. the
/// point goes on the line between the anchors. `None` only for coincident
/// anchors.
fn circle_intersections(p1: Point, r1: f64, p2: Point, r2: f64) -> Option<(Point, Point)> {
    let d = p1.dist(p2);
    if d < 1e-12 {
        return None;
    }
    let ex = (p2.x - p1.x) / d;
    let ey = (p2.y - p1.y) / d;
    let x = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
    let h = (r1 * r1 - x * x).max(0.0).sqrt();
    let bx = p1.x + x * ex;
    let by = p1.y + x * ey;
    Some((
        Point::new(bx - h * ey, by + h * ex),
        Point::new(bx + h * ey, by - h * ex),
    ))
}

/// Order the two mirror placements as `(preferred, alternate, tie)`. While
/// the frame is still one-dimensional (every position on the x axis) the
/// positive-y side is chosen by convention — that is a gauge choice, not a
/// tie. Afterwards the lower [`consistency_score`] is preferred, with score
/// ties broken toward smaller y then smaller x; only the latter are reported
/// as genuine ties worth backtracking over.
fn choose_mirror(
    cand: NodeId,
    anchors: (NodeId, NodeId),
    m1: Point,
    m2: Point,
    map: &PositionMap,
    ctx: &PositionContext,
) -> (Point, Point, bool) {
    if map.positions.values().all(|p| p.y.abs() < 1e-9) {
        return if m1.y >= m2.y { (m1, m2, false) } else { (m2, m1, false) };
    }
    let s1 = consistency_score(cand, anchors, m1, map, ctx);
    let s2 = consistency_score(cand, anchors, m2, map, ctx);
    let tie = (s1 - s2).abs() <= 1e-9 * (1.0 + s1.min(s2));
    if s1 < s2 {
        (m1, m2, tie)
    } else if s2 < s1 {
        (m2, m1, tie)
    } else if (m1.y, m1.x) <= (m2.y, m2.x) {
        (m1, m2, tie)
    } else {
        (m2, m1, tie)
    }
}

/// How implausible a placement is, given everything else already positioned:
/// squared residuals against every other measured distance to a positioned
/// node, plus a squared penalty for each positioned known non-neighbor that
/// the placement would drag inside radio range (two nodes inside range would
/// have heard each other).
pub fn consistency_score(
    cand: NodeId,
    anchors: (NodeId, NodeId),
    at: Point,
    map: &PositionMap,
    ctx: &PositionContext,
) -> f64 {
    let mut score = 0.0;
    for (&v, &pv) in &map.positions {
        if v == cand || v == anchors.0 || v == anchors.1 {
            continue;
        }
        let separation = at.dist(pv);
        match ctx.dist(cand, v) {
            Some(d) => score += (separation - d) * (separation - d),
            None => {
                let known_strangers = ctx.graph.contains(cand)
                    && ctx.graph.contains(v)
                    && !ctx.graph.has_edge(cand, v);
                if known_strangers && separation < ctx.range {
                    let depth = ctx.range - separation;
                    score += depth * depth;
                }
            }
        }
    }
    score
}
