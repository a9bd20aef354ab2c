//! Graph, distribution, and marked-set data model.
//!
//! Networks are simple undirected weighted graphs over dense vertex ids
//! `0..n`. Edges carry a stable index (their position in the edge list)
//! that fixes basis ordering everywhere downstream, so construction order
//! matters for reproducibility. All types are immutable after construction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for "sigma sums to one".
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// One undirected edge with strictly positive weight.
///
/// The stored endpoint order `(u, v)` is the canonical orientation used by
/// flows: a positive flow value on this edge runs from `u` to `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(u: usize, v: usize, weight: f64) -> Self {
        Edge { u, v, weight }
    }

    /// The endpoint other than `x`; panics if `x` is not an endpoint.
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            debug_assert_eq!(x, self.v);
            self.u
        }
    }
}

/// Which side of a bipartition a vertex belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// A bipartition of the vertex set, stored per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    sides: Vec<Side>,
}

impl Partition {
    pub fn from_sides(sides: Vec<Side>) -> Self {
        Partition { sides }
    }

    /// Build from explicit vertex sets; they must cover `0..n` disjointly.
    pub fn from_sets(n: usize, a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> Result<Self> {
        if a.intersection(b).next().is_some() {
            return Err(Error::InvalidPartition("A and B intersect".into()));
        }
        let mut sides = vec![None; n];
        for &u in a {
            *sides
                .get_mut(u)
                .ok_or(Error::VertexOutOfRange(u, n))? = Some(Side::A);
        }
        for &u in b {
            *sides
                .get_mut(u)
                .ok_or(Error::VertexOutOfRange(u, n))? = Some(Side::B);
        }
        let sides = sides
            .into_iter()
            .enumerate()
            .map(|(u, s)| s.ok_or(Error::InvalidPartition(format!("vertex {u} in neither part"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Partition { sides })
    }

    pub fn side(&self, u: usize) -> Side {
        self.sides[u]
    }

    pub fn vertices_in(&self, side: Side) -> impl Iterator<Item = usize> + '_ {
        self.sides
            .iter()
            .enumerate()
            .filter(move |(_, s)| **s == side)
            .map(|(u, _)| u)
    }
}

/// Weighted undirected graph with an optional bipartition.
#[derive(Debug, Clone)]
pub struct ElectricNetwork {
    vertex_count: usize,
    edges: Vec<Edge>,
    partition: Option<Partition>,
    /// Incident edge indices per vertex, in edge order.
    incidence: Vec<Vec<usize>>,
}

impl ElectricNetwork {
    /// Build a network, rejecting self-loops, duplicate pairs, and
    /// non-positive weights.
    pub fn new(vertex_count: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut incidence = vec![Vec::new(); vertex_count];
        for (i, e) in edges.iter().enumerate() {
            if e.u >= vertex_count {
                return Err(Error::VertexOutOfRange(e.u, vertex_count));
            }
            if e.v >= vertex_count {
                return Err(Error::VertexOutOfRange(e.v, vertex_count));
            }
            if e.u == e.v {
                return Err(Error::SelfLoop(e.u));
            }
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(Error::NonPositiveWeight {
                    u: e.u,
                    v: e.v,
                    weight: e.weight,
                });
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge(key.0, key.1));
            }
            incidence[e.u].push(i);
            incidence[e.v].push(i);
        }
        Ok(ElectricNetwork {
            vertex_count,
            edges,
            partition: None,
            incidence,
        })
    }

    /// Attach a bipartition; every edge must cross it.
    pub fn with_partition(mut self, partition: Partition) -> Result<Self> {
        if partition.sides.len() != self.vertex_count {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} vertices, graph has {}",
                partition.sides.len(),
                self.vertex_count
            )));
        }
        for e in &self.edges {
            if partition.side(e.u) == partition.side(e.v) {
                return Err(Error::InvalidPartition(format!(
                    "edge {}-{} does not cross the partition",
                    e.u, e.v
                )));
            }
        }
        self.partition = Some(partition);
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    /// Indices of edges incident to `u`.
    pub fn incident_edges(&self, u: usize) -> &[usize] {
        &self.incidence[u]
    }

    /// W, the sum of all edge weights.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Weighted degree of `u`.
    pub fn weighted_degree(&self, u: usize) -> f64 {
        self.incidence[u].iter().map(|&i| self.edges[i].weight).sum()
    }

    /// The stationary distribution pi_u = deg_w(u) / 2W of the weighted
    /// random walk. Errors on graphs with no edges.
    pub fn stationary_distribution(&self) -> Result<SourceDistribution> {
        let w = self.total_weight();
        if w <= 0.0 {
            return Err(Error::EmptyGraph);
        }
        let probs = (0..self.vertex_count)
            .map(|u| self.weighted_degree(u) / (2.0 * w))
            .collect();
        SourceDistribution::new(probs)
    }

    /// Connected-component label per vertex.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.vertex_count];
        let mut next = 0;
        for start in 0..self.vertex_count {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut stack = vec![start];
            while let Some(x) = stack.pop() {
                for &ei in &self.incidence[x] {
                    let y = self.edges[ei].other(x);
                    if label[y] == usize::MAX {
                        label[y] = next;
                        stack.push(y);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

/// Initial probability distribution sigma over the vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDistribution {
    probabilities: Vec<f64>,
}

impl SourceDistribution {
    /// Entries must be non-negative and sum to 1 within `NORMALIZATION_TOL`.
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        for (u, &p) in probabilities.iter().enumerate() {
            if p < 0.0 || !p.is_finite() {
                return Err(Error::NegativeProbability { vertex: u, prob: p });
            }
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(sum));
        }
        Ok(SourceDistribution { probabilities })
    }

    /// All mass on a single vertex.
    pub fn point_mass(n: usize, u: usize) -> Result<Self> {
        if u >= n {
            return Err(Error::VertexOutOfRange(u, n));
        }
        let mut p = vec![0.0; n];
        p[u] = 1.0;
        Ok(SourceDistribution { probabilities: p })
    }

    /// Uniform over the given vertices.
    pub fn uniform_on(n: usize, vertices: &[usize]) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidParameter(
                "uniform distribution over an empty set".into(),
            ));
        }
        let mut p = vec![0.0; n];
        for &u in vertices {
            if u >= n {
                return Err(Error::VertexOutOfRange(u, n));
            }
            p[u] = 1.0 / vertices.len() as f64;
        }
        SourceDistribution::new(p)
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn prob(&self, u: usize) -> f64 {
        self.probabilities[u]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// S, the set of vertices with nonzero mass, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(u, _)| u)
            .collect()
    }
}

/// The set M of marked vertices; may be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkedSet {
    vertices: BTreeSet<usize>,
}

impl MarkedSet {
    pub fn new<I: IntoIterator<Item = usize>>(vertices: I, vertex_count: usize) -> Result<Self> {
        let vertices: BTreeSet<usize> = vertices.into_iter().collect();
        if let Some(&u) = vertices.iter().find(|&&u| u >= vertex_count) {
            return Err(Error::VertexOutOfRange(u, vertex_count));
        }
        Ok(MarkedSet { vertices })
    }

    pub fn empty() -> Self {
        MarkedSet::default()
    }

    pub fn contains(&self, u: usize) -> bool {
        self.vertices.contains(&u)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.vertices.iter().copied()
    }
}

/// A network together with its initial distribution and marked set.
#[derive(Debug, Clone)]
pub struct Instance {
    pub network: ElectricNetwork,
    pub sigma: SourceDistribution,
    pub marked: MarkedSet,
}

impl Instance {
    pub fn new(network: ElectricNetwork, sigma: SourceDistribution, marked: MarkedSet) -> Result<Self> {
        if sigma.len() != network.vertex_count() {
            return Err(Error::InvalidParameter(format!(
                "sigma covers {} vertices, graph has {}",
                sigma.len(),
                network.vertex_count()
            )));
        }
        Ok(Instance {
            network,
            sigma,
            marked,
        })
    }
}

/// Result of doubling: the bipartite instance plus the map back to the
/// original vertices. Doubled vertex `i` corresponds to original `i % n`
/// on side A (`i < n`) or B (`i >= n`).
#[derive(Debug, Clone)]
pub struct BipartiteDouble {
    pub instance: Instance,
    pub original_count: usize,
}

impl BipartiteDouble {
    pub fn original_of(&self, doubled: usize) -> (usize, Side) {
        if doubled < self.original_count {
            (doubled, Side::A)
        } else {
            (doubled - self.original_count, Side::B)
        }
    }
}

/// The bipartite doubling: vertex set V x {0, 1}, each original edge uv
/// becomes (u,0)(v,1) and (u,1)(v,0) with the same weight, sigma moves to
/// the 0-copies, and M is duplicated on both sides. The doubled total
/// weight is 2W.
pub fn bipartite_double(instance: &Instance) -> Result<BipartiteDouble> {
    let n = instance.network.vertex_count();
    let mut edges = Vec::with_capacity(2 * instance.network.edge_count());
    for e in instance.network.edges() {
        edges.push(Edge::new(e.u, e.v + n, e.weight));
        edges.push(Edge::new(e.u + n, e.v, e.weight));
    }
    let sides = (0..2 * n)
        .map(|i| if i < n { Side::A } else { Side::B })
        .collect();
    let network =
        ElectricNetwork::new(2 * n, edges)?.with_partition(Partition::from_sides(sides))?;
    let mut probs = vec![0.0; 2 * n];
    probs[..n].copy_from_slice(instance.sigma.probabilities());
    let sigma = SourceDistribution::new(probs)?;
    let marked = MarkedSet::new(
        instance.marked.iter().flat_map(|m| [m, m + n]),
        2 * n,
    )?;
    Ok(BipartiteDouble {
        instance: Instance::new(network, sigma, marked)?,
        original_count: n,
    })
}

/// Try to 2-color the graph so that every support vertex lands in part A.
/// Returns `None` when the graph is not bipartite or the support straddles
/// both classes of some component.
pub fn bipartition_with_support(
    network: &ElectricNetwork,
    sigma: &SourceDistribution,
) -> Option<Partition> {
    let n = network.vertex_count();
    let mut color: Vec<Option<Side>> = vec![None; n];
    for start in 0..n {
        if color[start].is_some() {
            continue;
        }
        color[start] = Some(Side::A);
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &ei in network.incident_edges(x) {
                let y = network.edges()[ei].other(x);
                let want = match color[x].unwrap() {
                    Side::A => Side::B,
                    Side::B => Side::A,
                };
                match color[y] {
                    None => {
                        color[y] = Some(want);
                        comp.push(y);
                        stack.push(y);
                    }
                    Some(c) if c != want => return None,
                    Some(_) => {}
                }
            }
        }
        // Orient this component so its support sits in A.
        let sup: Vec<usize> = comp.iter().copied().filter(|&v| sigma.prob(v) > 0.0).collect();
        if !sup.is_empty() {
            let first = color[sup[0]].unwrap();
            if sup.iter().any(|&v| color[v].unwrap() != first) {
                return None;
            }
            if first == Side::B {
                for &v in &comp {
                    color[v] = Some(match color[v].unwrap() {
                        Side::A => Side::B,
                        Side::B => Side::A,
                    });
                }
            }
        }
    }
    Some(Partition::from_sides(
        color.into_iter().map(|c| c.unwrap()).collect(),
    ))
}

/// Make an instance walk-ready: bipartite with sigma supported in A.
/// Attaches a 2-coloring when one exists and doubles the graph otherwise.
/// Returns the ready instance and whether doubling was applied.
pub fn ensure_walk_ready(instance: &Instance) -> Result<(Instance, bool)> {
    if let Some(p) = instance.network.partition() {
        let ok = instance
            .sigma
            .support()
            .iter()
            .all(|&u| p.side(u) == Side::A);
        if ok {
            return Ok((instance.clone(), false));
        }
        // Partition present but sigma not in A: fall through to doubling.
    } else if let Some(p) = bipartition_with_support(&instance.network, &instance.sigma) {
        let network = instance.network.clone().with_partition(p)?;
        return Ok((
            Instance::new(network, instance.sigma.clone(), instance.marked.clone())?,
            false,
        ));
    }
    Ok((bipartite_double(instance)?.instance, true))
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

/// On-disk instance: raw, possibly invalid data.
///
/// ```json
/// {"vertices": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0]],
///  "partition": null, "sigma": {"0": 1.0}, "marked": [2]}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub vertices: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub partition: Option<PartitionFile>,
    pub sigma: BTreeMap<String, f64>,
    pub marked: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionFile {
    #[serde(rename = "A")]
    pub a: Vec<usize>,
    #[serde(rename = "B")]
    pub b: Vec<usize>,
}

impl InstanceFile {
    pub fn from_instance(instance: &Instance) -> Self {
        let partition = instance.network.partition().map(|p| PartitionFile {
            a: p.vertices_in(Side::A).collect(),
            b: p.vertices_in(Side::B).collect(),
        });
        InstanceFile {
            vertices: instance.network.vertex_count(),
            edges: instance
                .network
                .edges()
                .iter()
                .map(|e| (e.u, e.v, e.weight))
                .collect(),
            partition,
            sigma: instance
                .sigma
                .support()
                .into_iter()
                .map(|u| (u.to_string(), instance.sigma.prob(u)))
                .collect(),
            marked: instance.marked.iter().collect(),
        }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        let edges = self
            .edges
            .iter()
            .map(|&(u, v, w)| Edge::new(u, v, w))
            .collect();
        let mut network = ElectricNetwork::new(self.vertices, edges)?;
        if let Some(p) = &self.partition {
            let a: BTreeSet<usize> = p.a.iter().copied().collect();
            let b: BTreeSet<usize> = p.b.iter().copied().collect();
            network = network.with_partition(Partition::from_sets(self.vertices, &a, &b)?)?;
        }
        let mut probs = vec![0.0; self.vertices];
        for (k, &p) in &self.sigma {
            let u: usize = k
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("sigma key {k:?} is not a vertex")))?;
            if u >= self.vertices {
                return Err(Error::VertexOutOfRange(u, self.vertices));
            }
            probs[u] = p;
        }
        let sigma = SourceDistribution::new(probs)?;
        let marked = MarkedSet::new(self.marked.iter().copied(), self.vertices)?;
        Instance::new(network, sigma, marked)
    }
}

/// Report every violated invariant of the raw data; an empty report means
/// the instance is valid.
pub fn validate(file: &InstanceFile) -> Vec<String> {
    let mut report = Vec::new();
    let n = file.vertices;
    let mut seen = BTreeSet::new();
    for &(u, v, w) in &file.edges {
        if u >= n || v >= n {
            report.push(format!("edge {u}-{v} references a vertex outside 0..{n}"));
            continue;
        }
        if u == v {
            report.push(format!("self-loop at vertex {u}"));
        }
        if !(w > 0.0) || !w.is_finite() {
            report.push(format!("edge {u}-{v} has non-positive weight {w}"));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            report.push(format!("duplicate edge between {} and {}", u.min(v), u.max(v)));
        }
    }
    if let Some(p) = &file.partition {
        let a: BTreeSet<usize> = p.a.iter().copied().collect();
        let b: BTreeSet<usize> = p.b.iter().copied().collect();
        if let Some(&u) = a.intersection(&b).next() {
            report.push(format!("partition parts intersect at vertex {u}"));
        }
        for u in 0..n {
            if !a.contains(&u) && !b.contains(&u) {
                report.push(format!("vertex {u} is in neither part"));
            }
        }
        if let Some(&u) = a.union(&b).find(|&&u| u >= n) {
            report.push(format!("partition references vertex {u} outside 0..{n}"));
        }
        for &(u, v, _) in &file.edges {
            if u < n && v < n && a.contains(&u) == a.contains(&v) {
                report.push(format!("edge {u}-{v} does not cross the partition"));
            }
        }
    }
    let mut sum = 0.0;
    for (k, &p) in &file.sigma {
        match k.parse::<usize>() {
            Ok(u) if u < n => {
                if p < 0.0 {
                    report.push(format!("sigma[{u}] = {p} is negative"));
                }
                sum += p;
            }
            Ok(u) => report.push(format!("sigma references vertex {u} outside 0..{n}")),
            Err(_) => report.push(format!("sigma key {k:?} is not a vertex")),
        }
    }
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        report.push(format!("sigma sums to {sum}, expected 1"));
    }
    for &m in &file.marked {
        if m >= n {
            report.push(format!("marked vertex {m} outside 0..{n}"));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_edge() -> Instance {
        let net = ElectricNetwork::new(2, vec![Edge::new(0, 1, 1.0)]).unwrap();
        let sigma = SourceDistribution::point_mass(2, 0).unwrap();
        let marked = MarkedSet::new([1], 2).unwrap();
        Instance::new(net, sigma, marked).unwrap()
    }

    #[test]
    fn rejects_invalid_edges() {
        assert!(matches!(
            ElectricNetwork::new(2, vec![Edge::new(0, 0, 1.0)]),
            Err(Error::SelfLoop(0))
        ));
        assert!(matches!(
            ElectricNetwork::new(2, vec![Edge::new(0, 1, 1.0), Edge::new(1, 0, 2.0)]),
            Err(Error::DuplicateEdge(0, 1))
        ));
        assert!(matches!(
            ElectricNetwork::new(2, vec![Edge::new(0, 1, 0.0)]),
            Err(Error::NonPositiveWeight { .. })
        ));
        assert!(matches!(
            ElectricNetwork::new(2, vec![Edge::new(0, 3, 1.0)]),
            Err(Error::VertexOutOfRange(3, 2))
        ));
    }

    #[test]
    fn total_weight_examples() {
        let single = ElectricNetwork::new(2, vec![Edge::new(0, 1, 1.0)]).unwrap();
        assert_eq!(single.total_weight(), 1.0);

        let triangle = ElectricNetwork::new(
            3,
            vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 2.0), Edge::new(0, 2, 3.0)],
        )
        .unwrap();
        assert_eq!(triangle.total_weight(), 6.0);

        let empty = ElectricNetwork::new(3, vec![]).unwrap();
        assert_eq!(empty.total_weight(), 0.0);
    }

    #[test]
    fn stationary_examples() {
        let single = ElectricNetwork::new(2, vec![Edge::new(0, 1, 1.0)]).unwrap();
        let pi = single.stationary_distribution().unwrap();
        assert_eq!(pi.probabilities(), &[0.5, 0.5]);

        let path = ElectricNetwork::new(3, vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)]).unwrap();
        let pi = path.stationary_distribution().unwrap();
        assert_eq!(pi.probabilities(), &[0.25, 0.5, 0.25]);

        let star = ElectricNetwork::new(
            4,
            vec![Edge::new(0, 1, 1.0), Edge::new(0, 2, 1.0), Edge::new(0, 3, 1.0)],
        )
        .unwrap();
        let pi = star.stationary_distribution().unwrap();
        assert!((pi.prob(0) - 0.5).abs() < 1e-15);
        for leaf in 1..4 {
            assert!((pi.prob(leaf) - 1.0 / 6.0).abs() < 1e-15);
        }

        let empty = ElectricNetwork::new(2, vec![]).unwrap();
        assert!(matches!(empty.stationary_distribution(), Err(Error::EmptyGraph)));
    }

    #[test]
    fn doubling_single_edge() {
        let doubled = bipartite_double(&unit_edge()).unwrap();
        let inst = &doubled.instance;
        assert_eq!(inst.network.vertex_count(), 4);
        assert_eq!(inst.network.edge_count(), 2);
        assert_eq!(inst.network.total_weight(), 2.0);
        assert_eq!(inst.sigma.prob(0), 1.0);
        assert!(inst.marked.contains(1) && inst.marked.contains(3));
        assert_eq!(doubled.original_of(3), (1, Side::B));
    }

    #[test]
    fn doubling_triangle() {
        let net = ElectricNetwork::new(
            3,
            vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 2.0), Edge::new(0, 2, 3.0)],
        )
        .unwrap();
        let w = net.total_weight();
        let sigma = SourceDistribution::point_mass(3, 0).unwrap();
        let marked = MarkedSet::new([2], 3).unwrap();
        let inst = Instance::new(net, sigma, marked).unwrap();
        let doubled = bipartite_double(&inst).unwrap();
        assert_eq!(doubled.instance.network.vertex_count(), 6);
        assert_eq!(doubled.instance.network.edge_count(), 6);
        assert!((doubled.instance.network.total_weight() - 2.0 * w).abs() < 1e-15);
        // Partition invariant holds on the doubled graph.
        let p = doubled.instance.network.partition().unwrap();
        for e in doubled.instance.network.edges() {
            assert_ne!(p.side(e.u), p.side(e.v));
        }
    }

    #[test]
    fn walk_ready_uses_coloring_when_possible() {
        // A path is bipartite: no doubling expected.
        let net = ElectricNetwork::new(3, vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)]).unwrap();
        let inst = Instance::new(
            net,
            SourceDistribution::point_mass(3, 0).unwrap(),
            MarkedSet::new([2], 3).unwrap(),
        )
        .unwrap();
        let (ready, doubled) = ensure_walk_ready(&inst).unwrap();
        assert!(!doubled);
        let p = ready.network.partition().unwrap();
        assert_eq!(p.side(0), Side::A);
        assert_eq!(p.side(1), Side::B);
        assert_eq!(p.side(2), Side::A);

        // A triangle is not: doubling expected.
        let net = ElectricNetwork::new(
            3,
            vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0), Edge::new(0, 2, 1.0)],
        )
        .unwrap();
        let inst = Instance::new(
            net,
            SourceDistribution::point_mass(3, 0).unwrap(),
            MarkedSet::empty(),
        )
        .unwrap();
        let (ready, doubled) = ensure_walk_ready(&inst).unwrap();
        assert!(doubled);
        assert_eq!(ready.network.vertex_count(), 6);
    }

    #[test]
    fn validate_reports_violations() {
        let mut file = InstanceFile::from_instance(&unit_edge());
        assert!(validate(&file).is_empty());

        file.edges.push((1, 0, 2.0));
        let report = validate(&file);
        assert!(report.iter().any(|r| r.contains("duplicate edge between 0 and 1")));

        file.sigma.insert("0".into(), 0.9);
        file.edges.pop();
        let report = validate(&file);
        assert!(report.iter().any(|r| r.contains("sums to 0.9")));
    }

    #[test]
    fn instance_file_round_trip() {
        let inst = unit_edge();
        let file = InstanceFile::from_instance(&inst);
        let text = serde_json::to_string(&file).unwrap();
        let back: InstanceFile = serde_json::from_str(&text).unwrap();
        let inst2 = back.to_instance().unwrap();
        assert_eq!(inst2.network.vertex_count(), 2);
        assert_eq!(inst2.sigma.prob(0), 1.0);
        assert!(inst2.marked.contains(1));
    }
}
