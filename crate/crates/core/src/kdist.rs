//! The k-distinctness walk graph, built explicitly for tiny inputs.
//!
//! Subsets of `[n]` are classified by type: `tau_i(S)` counts the maximal
//! i-fold value collisions inside S. Level `V_i` holds the subsets of type
//! `(r_1, ..., r_{i-1}, r_i + 1, r_{i+1}, ..., r_k)` with `r_k = 0`
//! (no increment for `V_0`), so walking up a level means completing one
//! more collision. Moves that leave the level structure land in degree-one
//! dead-end vertices, which keeps every non-top vertex at degree exactly
//! n. Top-level subsets are marked and connect only to the k ways of
//! removing one element of their k-collision.
//!
//! Everything is enumerated exhaustively, which is the point: all degree
//! and preimage invariants are checked exactly, and detection runs through
//! the same spectral machinery as any other instance with the level-0
//! resistance convention `R = 1/|V_0|` (the local reflections then match
//! `psi_u = C_1^{-1/2}|u> + sum |uv>` on the start level, plain edge sums
//! in between, and a sign flip on dead-ends).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::detect::{detect, DetectionModel, DetectionResult};
use crate::electric::Flow;
use crate::error::{Error, Result};
use crate::network::{Edge, ElectricNetwork, Instance, MarkedSet, Partition, Side, SourceDistribution};
use crate::walk::WalkParams;

/// Largest basis (vertex) count built exhaustively.
pub const BASIS_LIMIT: usize = 5000;
/// Largest n enumerated (2^n subsets).
const ENUM_LIMIT: usize = 20;

/// An input to the k-distinctness walk: the string, the collision arity,
/// and the level sizes `r_1..r_{k-1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KDistInstance {
    pub x: Vec<u32>,
    pub k: usize,
    pub r: Vec<usize>,
}

impl KDistInstance {
    pub fn new(x: Vec<u32>, k: usize, r: Vec<usize>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("k = {k}, need k >= 2")));
        }
        if r.len() != k - 1 {
            return Err(Error::InvalidParameter(format!(
                "r has {} entries, need k-1 = {}",
                r.len(),
                k - 1
            )));
        }
        let n = x.len();
        if n > ENUM_LIMIT {
            return Err(Error::ScaleExceeded(1 << (n.min(40)), 1 << ENUM_LIMIT));
        }
        for &ri in &r {
            if ri == 0 {
                return Err(Error::InvalidParameter("level sizes must be positive".into()));
            }
            if 4 * ri > n {
                return Err(Error::InvalidParameter(format!(
                    "level size {ri} exceeds n/4 = {}",
                    n as f64 / 4.0
                )));
            }
        }
        // At most one k-collision: no value more than k times, at most one
        // value exactly k times.
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for &v in &x {
            *counts.entry(v).or_default() += 1;
        }
        let at_k = counts.values().filter(|&&c| c >= k).count();
        if counts.values().any(|&c| c > k) || at_k > 1 {
            return Err(Error::InvalidParameter(
                "input must contain at most one k-collision".into(),
            ));
        }
        Ok(KDistInstance { x, k, r })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Indices of the unique k-collision, ascending, if the input is
    /// positive.
    pub fn collision(&self) -> Option<Vec<usize>> {
        let mut counts: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (j, &v) in self.x.iter().enumerate() {
            counts.entry(v).or_default().push(j);
        }
        counts.into_values().find(|idx| idx.len() == self.k)
    }
}

/// Type of a subset: `tau[i-1]` is the number of maximal i-collisions of
/// `x` inside S, for i up to k.
pub fn subset_type(mask: u64, x: &[u32], k: usize) -> Vec<usize> {
    let mut tau = vec![0usize; k];
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for (j, &v) in x.iter().enumerate() {
        if mask & (1 << j) != 0 {
            *counts.entry(v).or_default() += 1;
        }
    }
    for (_, c) in counts {
        if c <= k {
            tau[c - 1] += 1;
        }
    }
    tau
}

/// What a walk-graph vertex stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KDistVertex {
    /// A subset on level i.
    Level { level: usize, mask: u64 },
    /// A dead-end (S, j) in Z_i (so S sits on level i-1).
    DeadEnd { zone: usize, mask: u64, j: usize },
}

/// The explicit walk graph with its level decomposition.
#[derive(Debug, Clone)]
pub struct KDistGraph {
    pub network: ElectricNetwork,
    pub marked: MarkedSet,
    /// `levels[i]` = subsets of V_i, ascending by mask.
    pub levels: Vec<Vec<u64>>,
    /// `dead_ends[i]` = Z_i as (mask of S, j); index 0 is unused.
    pub dead_ends: Vec<Vec<(u64, usize)>>,
    /// Vertex id -> meaning.
    pub vertices: Vec<KDistVertex>,
    subset_id: BTreeMap<u64, usize>,
    edge_id: BTreeMap<(usize, usize), usize>,
}

impl KDistGraph {
    pub fn vertex_of_subset(&self, mask: u64) -> Option<usize> {
        self.subset_id.get(&mask).copied()
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_id.get(&(a.min(b), a.max(b))).copied()
    }

    /// The walk instance: uniform start on V_0, V_k marked. Errors when
    /// V_0 is empty (the input admits no start sets of the requested type).
    pub fn walk_instance(&self) -> Result<Instance> {
        if self.levels[0].is_empty() {
            return Err(Error::Precondition(
                "V_0 is empty: the input has no subsets of the start type".into(),
            ));
        }
        let v0: Vec<usize> = self.levels[0]
            .iter()
            .map(|&m| self.subset_id[&m])
            .collect();
        let sigma = SourceDistribution::uniform_on(self.network.vertex_count(), &v0)?;
        Instance::new(self.network.clone(), sigma, self.marked.clone())
    }
}

/// Enumerate levels and dead-ends, and assemble the unit-weight graph.
pub fn build_kdist_graph(inst: &KDistInstance) -> Result<KDistGraph> {
    let n = inst.n();
    let k = inst.k;

    // Level types: tau_0 has no increment, tau_i bumps r_i (r_k = 0).
    let mut base = inst.r.clone();
    base.push(0);
    let tau: Vec<Vec<usize>> = (0..=k)
        .map(|i| {
            let mut t = base.clone();
            if i > 0 {
                t[i - 1] += 1;
            }
            t
        })
        .collect();
    let level_size: Vec<usize> = tau
        .iter()
        .map(|t| t.iter().enumerate().map(|(i, r)| (i + 1) * r).sum())
        .collect();

    let mut levels: Vec<Vec<u64>> = vec![Vec::new(); k + 1];
    for mask in 0u64..(1 << n) {
        let size = mask.count_ones() as usize;
        for i in 0..=k {
            if size == level_size[i] && subset_type(mask, &inst.x, k) == tau[i] {
                levels[i].push(mask);
                break;
            }
        }
    }

    // Vertex ids: levels in order, then dead-ends by (zone, mask, j).
    let mut vertices = Vec::new();
    let mut subset_id = BTreeMap::new();
    let mut level_of = BTreeMap::new();
    for (i, level) in levels.iter().enumerate() {
        for &mask in level {
            subset_id.insert(mask, vertices.len());
            level_of.insert(mask, i);
            vertices.push(KDistVertex::Level { level: i, mask });
        }
    }

    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut dead_ends: Vec<Vec<(u64, usize)>> = vec![Vec::new(); k + 1];
    for i in 0..k {
        for &mask in &levels[i] {
            for j in 0..n {
                let t = mask ^ (1 << j);
                match level_of.get(&t) {
                    Some(&li) if li == i + 1 => {
                        edges.push((subset_id[&mask], subset_id[&t]));
                    }
                    Some(_) => {} // downward move; the lower level adds it
                    None => dead_ends[i + 1].push((mask, j)),
                }
            }
        }
    }
    for zone in dead_ends.iter_mut() {
        zone.sort_unstable();
    }
    let mut dead_id = BTreeMap::new();
    for (i, zone) in dead_ends.iter().enumerate() {
        for &(mask, j) in zone {
            dead_id.insert((mask, j), vertices.len());
            vertices.push(KDistVertex::DeadEnd { zone: i, mask, j });
        }
    }
    for zone in &dead_ends {
        for &(mask, j) in zone {
            edges.push((subset_id[&mask], dead_id[&(mask, j)]));
        }
    }

    let total = vertices.len();
    if total > BASIS_LIMIT {
        return Err(Error::ScaleExceeded(total, BASIS_LIMIT));
    }

    // Bipartition: V_i and Z_i with i even go to A. A dead-end in Z_i
    // hangs off a level-(i-1) subset, so every edge crosses.
    let sides: Vec<Side> = vertices
        .iter()
        .map(|v| match v {
            KDistVertex::Level { level, .. } => {
                if level % 2 == 0 {
                    Side::A
                } else {
                    Side::B
                }
            }
            KDistVertex::DeadEnd { zone, .. } => {
                if zone % 2 == 0 {
                    Side::A
                } else {
                    Side::B
                }
            }
        })
        .collect();

    let mut edge_id = BTreeMap::new();
    let edge_list: Vec<Edge> = edges
        .iter()
        .enumerate()
        .map(|(idx, &(a, b))| {
            edge_id.insert((a.min(b), a.max(b)), idx);
            Edge::new(a, b, 1.0)
        })
        .collect();
    let network =
        ElectricNetwork::new(total, edge_list)?.with_partition(Partition::from_sides(sides))?;
    let marked = MarkedSet::new(
        levels[k].iter().map(|&m| subset_id[&m]),
        total,
    )?;
    Ok(KDistGraph {
        network,
        marked,
        levels,
        dead_ends,
        vertices,
        subset_id,
        edge_id,
    })
}

/// Exact structural checks: degree of every vertex class, marked = V_k,
/// preimage counts into V_0, and the double-counting size bound
/// `(r_i + 1) |V_i| <= n C(k-1, i) |V_0|`. Returns violations.
pub fn check_structure(graph: &KDistGraph, inst: &KDistInstance) -> Vec<String> {
    let mut report = Vec::new();
    let n = inst.n();
    let k = inst.k;
    let net = &graph.network;

    for (id, v) in graph.vertices.iter().enumerate() {
        let deg = net.incident_edges(id).len();
        let expected = match v {
            KDistVertex::Level { level, .. } if *level == k => k,
            KDistVertex::Level { .. } => n,
            KDistVertex::DeadEnd { .. } => 1,
        };
        if deg != expected {
            report.push(format!("vertex {id} ({v:?}) has degree {deg}, expected {expected}"));
        }
    }

    for (id, v) in graph.vertices.iter().enumerate() {
        let is_top = matches!(v, KDistVertex::Level { level, .. } if *level == k);
        if graph.marked.contains(id) != is_top {
            report.push(format!("marked set mismatch at vertex {id} ({v:?})"));
        }
    }

    // Each S' in V_i has exactly r_i + 1 preimages in V_0 (with r_k = 0):
    // subsets of V_0 below S' whose complement in S' is one i-collision.
    let mut r_ext = inst.r.clone();
    r_ext.push(0);
    for i in 1..=k {
        for &sp in &graph.levels[i] {
            let mut preimages = 0;
            for &s in &graph.levels[0] {
                if s & sp == s {
                    let diff = sp & !s;
                    if diff.count_ones() as usize == i {
                        let vals: Vec<u32> = (0..n)
                            .filter(|&j| diff & (1 << j) != 0)
                            .map(|j| inst.x[j])
                            .collect();
                        if vals.iter().all(|&v| v == vals[0]) {
                            preimages += 1;
                        }
                    }
                }
            }
            if preimages != r_ext[i - 1] + 1 {
                report.push(format!(
                    "subset {sp:b} on level {i} has {preimages} preimages, expected {}",
                    r_ext[i - 1] + 1
                ));
            }
        }
    }

    // |V_i| (r_i + 1) <= n C(k-1, i) |V_0|.
    let choose = |m: usize, j: usize| -> usize {
        if j > m {
            return 0;
        }
        (0..j).fold(1usize, |acc, t| acc * (m - t) / (t + 1))
    };
    // For i = k the relation has exactly one preimage and the bound
    // degenerates, so only the middle levels are checked.
    for i in 1..k {
        let lhs = graph.levels[i].len() * (r_ext[i - 1] + 1);
        let rhs = n * choose(k - 1, i) * graph.levels[0].len();
        if lhs > rhs {
            report.push(format!(
                "|V_{i}| = {} violates the size bound {} (n C(k-1,{i}) |V_0| / (r_{i}+1))",
                graph.levels[i].len(),
                rhs
            ));
        }
    }
    report
}

/// The canonical unit flow of a positive instance: every start set
/// disjoint from the collision pushes `1/|V_0'|` along the chain that
/// adds the collision indices in ascending order. Conserves the uniform
/// distribution on V_0' (not the instance sigma, which is uniform on all
/// of V_0).
pub fn kdist_flow(graph: &KDistGraph, inst: &KDistInstance) -> Result<Flow> {
    let collision = inst.collision().ok_or(Error::NoCollision(inst.k))?;
    let coll_mask: u64 = collision.iter().map(|&j| 1u64 << j).sum();
    let v0_prime: Vec<u64> = graph.levels[0]
        .iter()
        .copied()
        .filter(|&m| m & coll_mask == 0)
        .collect();
    if v0_prime.is_empty() {
        return Err(Error::Precondition(
            "no start sets are disjoint from the collision".into(),
        ));
    }
    let unit = 1.0 / v0_prime.len() as f64;

    let mut values = vec![0.0; graph.network.edge_count()];
    for i in 0..inst.k {
        let prefix: u64 = collision[..i].iter().map(|&j| 1u64 << j).sum();
        for &mask in &graph.levels[i] {
            if mask & coll_mask != prefix {
                continue;
            }
            let next = mask | (1 << collision[i]);
            let a = graph.vertex_of_subset(mask).expect("level vertex");
            let b = graph
                .vertex_of_subset(next)
                .ok_or_else(|| Error::Precondition(format!("flow target {next:b} missing")))?;
            let e = graph
                .edge_between(a, b)
                .ok_or_else(|| Error::Precondition(format!("flow edge {a}-{b} missing")))?;
            // Sign along the stored orientation.
            let edge = &graph.network.edges()[e];
            values[e] = if edge.u == a { unit } else { -unit };
        }
    }
    Ok(Flow::new(values))
}

/// Size of V_0' (start sets disjoint from the collision).
pub fn v0_prime_count(graph: &KDistGraph, inst: &KDistInstance) -> Result<usize> {
    let collision = inst.collision().ok_or(Error::NoCollision(inst.k))?;
    let coll_mask: u64 = collision.iter().map(|&j| 1u64 << j).sum();
    Ok(graph.levels[0]
        .iter()
        .filter(|&&m| m & coll_mask == 0)
        .count())
}

/// Walk parameters for a built graph: the level-0 convention
/// `R = 1/|V_0|`, under which the generic reflection formula reproduces
/// the per-level diffusion rules. Note this R is a scaling convention, not
/// an upper bound on the instance resistance.
pub fn kdist_params(graph: &KDistGraph, c1: f64, c2: f64) -> Result<WalkParams> {
    if graph.levels[0].is_empty() {
        return Err(Error::Precondition("V_0 is empty".into()));
    }
    WalkParams::with_constants(c1, c2, 1.0 / graph.levels[0].len() as f64)
}

/// Build and run detection end to end.
pub fn kdist_detect(
    inst: &KDistInstance,
    c1: f64,
    c2: f64,
    model: DetectionModel,
) -> Result<DetectionResult> {
    let graph = build_kdist_graph(inst)?;
    let params = kdist_params(&graph, c1, c2)?;
    detect(&graph.walk_instance()?, &params, model)
}
