//! Learning graphs compiled to walk instances.
//!
//! A learning graph puts weighted edges between index subsets S and
//! S + {j}. Parity of |S| gives the bipartition for free, the initial
//! distribution is the point mass on the empty set, and for a concrete
//! input a subset is marked when fixing those indices already forces the
//! function to 1. Certificates are checked by brute force over the
//! declared domain; everything here is desk scale.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::detect::{detect, DetectionModel, DetectionResult};
use crate::electric;
use crate::error::{Error, Result};
use crate::network::{Edge, ElectricNetwork, Instance, MarkedSet, Partition, Side, SourceDistribution};
use crate::walk::WalkParams;

/// Hard cap on domain enumeration (`q^n`) and subset counts.
const DOMAIN_LIMIT: usize = 1 << 21;

/// The function a learning graph computes, with oracle-style evaluation
/// and an enumerable domain.
#[derive(Debug, Clone)]
pub struct OracleFunction {
    pub name: FunctionName,
    pub q: u8,
    pub domain: Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionName {
    /// 1 iff some entry is nonzero.
    Or,
    /// 1 iff every entry is nonzero.
    And,
}

#[derive(Debug, Clone)]
pub enum Domain {
    /// All of `[q]^n`.
    All,
    /// An explicit list of strings.
    Explicit(Vec<Vec<u8>>),
}

impl OracleFunction {
    pub fn evaluate(&self, x: &[u8]) -> bool {
        match self.name {
            FunctionName::Or => x.iter().any(|&v| v != 0),
            FunctionName::And => x.iter().all(|&v| v != 0),
        }
    }

    /// Enumerate the domain for certificate checks.
    pub fn domain_strings(&self, n: usize) -> Result<Vec<Vec<u8>>> {
        match &self.domain {
            Domain::Explicit(list) => Ok(list.clone()),
            Domain::All => {
                let size = (self.q as usize)
                    .checked_pow(n as u32)
                    .filter(|&s| s <= DOMAIN_LIMIT)
                    .ok_or_else(|| {
                        Error::ScaleExceeded(usize::MAX, DOMAIN_LIMIT)
                    })?;
                let mut out = Vec::with_capacity(size);
                let mut z = vec![0u8; n];
                loop {
                    out.push(z.clone());
                    let mut i = 0;
                    loop {
                        if i == n {
                            return Ok(out);
                        }
                        z[i] += 1;
                        if z[i] < self.q {
                            break;
                        }
                        z[i] = 0;
                        i += 1;
                    }
                }
            }
        }
    }

    pub fn contains(&self, x: &[u8], n: usize) -> bool {
        if x.len() != n || x.iter().any(|&v| v as usize >= self.q as usize) {
            return false;
        }
        match &self.domain {
            Domain::All => true,
            Domain::Explicit(list) => list.iter().any(|z| z == x),
        }
    }
}

/// One learning-graph edge S -> S + {j}; `subset` is a bitmask over the
/// input indices.
#[derive(Debug, Clone, Copy)]
pub struct LearningEdge {
    pub subset: u64,
    pub index: usize,
    pub weight: f64,
}

/// A weighted learning graph over subsets of input indices.
#[derive(Debug, Clone)]
pub struct LearningGraph {
    pub n: usize,
    pub edges: Vec<LearningEdge>,
    pub function: OracleFunction,
}

impl LearningGraph {
    pub fn new(n: usize, edges: Vec<LearningEdge>, function: OracleFunction) -> Result<Self> {
        if n > 63 {
            return Err(Error::InvalidParameter(format!("n = {n} exceeds 63 indices")));
        }
        for e in &edges {
            if e.index >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge index {} outside 0..{n}",
                    e.index
                )));
            }
            if e.subset & (1 << e.index) != 0 {
                return Err(Error::InvalidParameter(format!(
                    "edge adds index {} already in subset {:b}",
                    e.index, e.subset
                )));
            }
            if e.subset >> n != 0 {
                return Err(Error::InvalidParameter(format!(
                    "subset {:b} uses indices outside 0..{n}",
                    e.subset
                )));
            }
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "edge weight {} is not positive",
                    e.weight
                )));
            }
        }
        Ok(LearningGraph { n, edges, function })
    }

    /// Subset vertices: the empty set plus everything named by an edge.
    pub fn vertex_masks(&self) -> BTreeSet<u64> {
        let mut masks = BTreeSet::new();
        masks.insert(0u64);
        for e in &self.edges {
            masks.insert(e.subset);
            masks.insert(e.subset | (1 << e.index));
        }
        masks
    }

    /// The star learning graph for OR on n bits: unit edges from the empty
    /// set to every singleton.
    pub fn or_star(n: usize) -> Result<Self> {
        let edges = (0..n)
            .map(|j| LearningEdge {
                subset: 0,
                index: j,
                weight: 1.0,
            })
            .collect();
        LearningGraph::new(
            n,
            edges,
            OracleFunction {
                name: FunctionName::Or,
                q: 2,
                domain: Domain::All,
            },
        )
    }
}

/// A learning graph instantiated with a concrete input.
#[derive(Debug, Clone)]
pub struct CompiledInstance {
    pub instance: Instance,
    /// Vertex id -> subset mask.
    pub subsets: Vec<u64>,
}

impl CompiledInstance {
    pub fn vertex_of(&self, mask: u64) -> Option<usize> {
        self.subsets.iter().position(|&m| m == mask)
    }
}

/// Does fixing `x` on the indices of `mask` force the function to 1?
fn is_certificate(mask: u64, x: &[u8], domain: &[Vec<u8>], f: &OracleFunction) -> bool {
    domain.iter().all(|z| {
        let agrees = (0..x.len()).all(|j| mask & (1 << j) == 0 || z[j] == x[j]);
        !agrees || f.evaluate(z)
    })
}

/// Compile a learning graph against an input: the subset graph with its
/// parity bipartition, the point mass on the empty set, and the set of
/// certificate-containing subsets as marked vertices.
///
/// Subsets unreachable from the empty set cannot carry flow and are
/// pruned, except marked ones, which are kept so reachability failures
/// surface downstream instead of silently vanishing.
pub fn compile(lg: &LearningGraph, x: &[u8]) -> Result<CompiledInstance> {
    if !lg.function.contains(x, lg.n) {
        return Err(Error::InputOutsideDomain);
    }
    let domain = lg.function.domain_strings(lg.n)?;
    let masks: Vec<u64> = lg.vertex_masks().into_iter().collect();

    // Reachability from the empty set over the learning-graph edges.
    let index_of: BTreeMap<u64, usize> = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut reachable = vec![false; masks.len()];
    reachable[index_of[&0]] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for e in &lg.edges {
            let a = index_of[&e.subset];
            let b = index_of[&(e.subset | (1 << e.index))];
            if reachable[a] != reachable[b] {
                reachable[a] = true;
                reachable[b] = true;
                changed = true;
            }
        }
    }

    let marked_masks: BTreeSet<u64> = masks
        .iter()
        .copied()
        .filter(|&m| is_certificate(m, x, &domain, &lg.function))
        .collect();

    // Keep reachable vertices and unreachable marked ones; order by
    // (cardinality, mask) so the empty set is vertex 0.
    let mut kept: Vec<u64> = masks
        .iter()
        .copied()
        .filter(|&m| reachable[index_of[&m]] || marked_masks.contains(&m))
        .collect();
    kept.sort_by_key(|&m| (m.count_ones(), m));
    let id_of: BTreeMap<u64, usize> = kept.iter().enumerate().map(|(i, &m)| (m, i)).collect();

    let mut edges = Vec::new();
    for e in &lg.edges {
        let to = e.subset | (1 << e.index);
        if let (Some(&a), Some(&b)) = (id_of.get(&e.subset), id_of.get(&to)) {
            edges.push(Edge::new(a, b, e.weight));
        }
    }
    let sides = kept
        .iter()
        .map(|m| if m.count_ones() % 2 == 0 { Side::A } else { Side::B })
        .collect();
    let network =
        ElectricNetwork::new(kept.len(), edges)?.with_partition(Partition::from_sides(sides))?;
    let sigma = SourceDistribution::point_mass(kept.len(), 0)?;
    let marked = MarkedSet::new(
        kept.iter()
            .enumerate()
            .filter(|(_, m)| marked_masks.contains(m))
            .map(|(i, _)| i),
        kept.len(),
    )?;
    Ok(CompiledInstance {
        instance: Instance::new(network, sigma, marked)?,
        subsets: kept,
    })
}

/// Learning-graph complexity `sqrt(W max_x R)` over the provided positive
/// inputs. W is the total weight of the learning graph itself, not of the
/// pruned compilation.
pub fn complexity(lg: &LearningGraph, positive_inputs: &[Vec<u8>]) -> Result<f64> {
    if positive_inputs.is_empty() {
        return Err(Error::NoPositiveInputs);
    }
    let w: f64 = lg.edges.iter().map(|e| e.weight).sum();
    let mut worst = 0.0f64;
    for x in positive_inputs {
        let compiled = compile(lg, x)?;
        let r = electric::instance_resistance(&compiled.instance)?;
        worst = worst.max(r);
    }
    Ok((w * worst).sqrt())
}

/// One row of a certification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyRow {
    pub input: Vec<u8>,
    pub positive: bool,
    pub ideal: Option<f64>,
    pub kernel: Option<f64>,
    pub steps: Option<u64>,
    pub error: Option<String>,
    pub pass: bool,
}

/// Detection certification across inputs: positives must accept with
/// probability at least 2/3 and negatives at most 1/3 in both models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyReport {
    pub r_bound: f64,
    pub rows: Vec<CertifyRow>,
    pub all_pass: bool,
}

pub fn certify_detection(
    lg: &LearningGraph,
    positive_inputs: &[Vec<u8>],
    negative_inputs: &[Vec<u8>],
    c1: f64,
    c2: f64,
) -> Result<CertifyReport> {
    if positive_inputs.is_empty() {
        return Err(Error::NoPositiveInputs);
    }
    // R bound: the worst effective resistance over positives that admit one.
    let mut r_bound = 0.0f64;
    let mut resistance_errors: BTreeMap<Vec<u8>, String> = BTreeMap::new();
    for x in positive_inputs {
        let compiled = compile(lg, x)?;
        match electric::instance_resistance(&compiled.instance) {
            Ok(r) => r_bound = r_bound.max(r),
            Err(e) => {
                resistance_errors.insert(x.clone(), e.to_string());
            }
        }
    }
    if r_bound == 0.0 {
        return Err(Error::NoPositiveInputs);
    }
    let params = WalkParams::with_constants(c1, c2, r_bound)?;

    let mut rows = Vec::new();
    let mut run = |x: &Vec<u8>, positive: bool| -> Result<()> {
        if let Some(err) = resistance_errors.get(x) {
            rows.push(CertifyRow {
                input: x.clone(),
                positive,
                ideal: None,
                kernel: None,
                steps: None,
                error: Some(err.clone()),
                pass: false,
            });
            return Ok(());
        }
        let compiled = compile(lg, x)?;
        let run_model = |model| -> Result<DetectionResult> { detect(&compiled.instance, &params, model) };
        match (run_model(DetectionModel::IdealThreshold), run_model(DetectionModel::QpeKernel)) {
            (Ok(ideal), Ok(kernel)) => {
                let pass = if positive {
                    ideal.total_accept_prob >= 2.0 / 3.0 && kernel.total_accept_prob >= 2.0 / 3.0
                } else {
                    ideal.total_accept_prob <= 1.0 / 3.0 && kernel.total_accept_prob <= 1.0 / 3.0
                };
                rows.push(CertifyRow {
                    input: x.clone(),
                    positive,
                    ideal: Some(ideal.total_accept_prob),
                    kernel: Some(kernel.total_accept_prob),
                    steps: Some(ideal.steps),
                    error: None,
                    pass,
                });
            }
            (r1, r2) => {
                let err = r1.err().or(r2.err()).map(|e| e.to_string());
                rows.push(CertifyRow {
                    input: x.clone(),
                    positive,
                    ideal: None,
                    kernel: None,
                    steps: None,
                    error: err,
                    pass: false,
                });
            }
        }
        Ok(())
    };
    for x in positive_inputs {
        run(x, true)?;
    }
    for x in negative_inputs {
        run(x, false)?;
    }
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(CertifyReport {
        r_bound,
        rows,
        all_pass,
    })
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

/// On-disk learning graph:
///
/// ```json
/// {"n": 2, "edges": [[[], 0, 1.0], [[0], 1, 1.0]],
///  "function": {"name": "and", "q": 2, "domain": "all"}}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearningGraphFile {
    pub n: usize,
    pub edges: Vec<(Vec<usize>, usize, f64)>,
    pub function: FunctionFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionFile {
    pub name: String,
    pub q: u8,
    pub domain: DomainFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainFile {
    Keyword(String),
    Explicit(Vec<Vec<u8>>),
}

impl LearningGraphFile {
    pub fn to_graph(&self) -> Result<LearningGraph> {
        let name = match self.function.name.as_str() {
            "or" => FunctionName::Or,
            "and" => FunctionName::And,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown function name {other:?}"
                )))
            }
        };
        let domain = match &self.function.domain {
            DomainFile::Keyword(k) if k == "all" => Domain::All,
            DomainFile::Keyword(k) => {
                return Err(Error::InvalidParameter(format!(
                    "unknown domain keyword {k:?}"
                )))
            }
            DomainFile::Explicit(list) => Domain::Explicit(list.clone()),
        };
        let edges = self
            .edges
            .iter()
            .map(|(subset, j, w)| {
                let mut mask = 0u64;
                for &i in subset {
                    mask |= 1 << i;
                }
                LearningEdge {
                    subset: mask,
                    index: *j,
                    weight: *w,
                }
            })
            .collect();
        LearningGraph::new(
            self.n,
            edges,
            OracleFunction {
                name,
                q: self.function.q,
                domain,
            },
        )
    }

    pub fn from_graph(lg: &LearningGraph) -> Self {
        LearningGraphFile {
            n: lg.n,
            edges: lg
                .edges
                .iter()
                .map(|e| {
                    let subset: Vec<usize> = (0..lg.n).filter(|&i| e.subset & (1 << i) != 0).collect();
                    (subset, e.index, e.weight)
                })
                .collect(),
            function: FunctionFile {
                name: match lg.function.name {
                    FunctionName::Or => "or".into(),
                    FunctionName::And => "and".into(),
                },
                q: lg.function.q,
                domain: match &lg.function.domain {
                    Domain::All => DomainFile::Keyword("all".into()),
                    Domain::Explicit(list) => DomainFile::Explicit(list.clone()),
                },
            },
        }
    }
}
