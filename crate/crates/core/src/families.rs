//! Instance generators for experiments and tests.
//!
//! Every generator yields a walk-ready instance: bipartite families are
//! 2-colored in place, everything else is doubled. Random instances are
//! fully determined by the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kdist::{build_kdist_graph, KDistInstance};
use crate::learning::{compile, LearningGraph};
use crate::network::{ensure_walk_ready, Edge, ElectricNetwork, Instance, MarkedSet, SourceDistribution};

fn default_marked() -> bool {
    true
}

/// One experiment family with its size parameters. `marked` selects the
/// positive (default) or marked-free variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilyConfig {
    Path {
        length: usize,
        #[serde(default = "default_marked")]
        marked: bool,
    },
    Cycle {
        length: usize,
        #[serde(default = "default_marked")]
        marked: bool,
    },
    Grid {
        rows: usize,
        cols: usize,
        #[serde(default = "default_marked")]
        marked: bool,
    },
    Star {
        leaves: usize,
        #[serde(default = "default_marked")]
        marked: bool,
    },
    Complete {
        n: usize,
        #[serde(default = "default_marked")]
        marked: bool,
    },
    RandomWeighted {
        n: usize,
        #[serde(default = "default_marked")]
        marked: bool,
    },
    /// OR star learning graph; `bit` picks the positive input e_bit, absent
    /// means the all-zero input.
    LearningOr {
        n: usize,
        #[serde(default)]
        bit: Option<usize>,
    },
    Kdist {
        x: Vec<u32>,
        k: usize,
        r: Vec<usize>,
    },
}

/// A generated, walk-ready instance.
#[derive(Debug, Clone)]
pub struct Generated {
    pub label: String,
    pub instance: Instance,
    pub doubled: bool,
}

fn simple(
    label: String,
    n: usize,
    edges: Vec<Edge>,
    source: usize,
    marked: Option<usize>,
) -> Result<Generated> {
    let network = ElectricNetwork::new(n, edges)?;
    let sigma = SourceDistribution::point_mass(n, source)?;
    let marked = match marked {
        Some(m) => MarkedSet::new([m], n)?,
        None => MarkedSet::empty(),
    };
    let instance = Instance::new(network, sigma, marked)?;
    let (ready, doubled) = ensure_walk_ready(&instance)?;
    Ok(Generated {
        label,
        instance: ready,
        doubled,
    })
}

/// Deterministic instance for a family configuration.
pub fn generate(config: &FamilyConfig, seed: u64) -> Result<Generated> {
    match config {
        FamilyConfig::Path { length, marked } => {
            if *length == 0 {
                return Err(Error::InvalidParameter("path length must be positive".into()));
            }
            let edges = (0..*length).map(|i| Edge::new(i, i + 1, 1.0)).collect();
            simple(
                format!("path{length}"),
                length + 1,
                edges,
                0,
                marked.then_some(*length),
            )
        }
        FamilyConfig::Cycle { length, marked } => {
            if *length < 3 {
                return Err(Error::InvalidParameter("cycle length must be at least 3".into()));
            }
            let edges = (0..*length)
                .map(|i| Edge::new(i, (i + 1) % length, 1.0))
                .collect();
            simple(
                format!("cycle{length}"),
                *length,
                edges,
                0,
                marked.then_some(length / 2),
            )
        }
        FamilyConfig::Grid { rows, cols, marked } => {
            if *rows == 0 || *cols == 0 {
                return Err(Error::InvalidParameter("grid needs positive extents".into()));
            }
            let id = |r: usize, c: usize| r * cols + c;
            let mut edges = Vec::new();
            for r in 0..*rows {
                for c in 0..*cols {
                    if r + 1 < *rows {
                        edges.push(Edge::new(id(r, c), id(r + 1, c), 1.0));
                    }
                    if c + 1 < *cols {
                        edges.push(Edge::new(id(r, c), id(r, c + 1), 1.0));
                    }
                }
            }
            simple(
                format!("grid{rows}x{cols}"),
                rows * cols,
                edges,
                0,
                marked.then_some(rows * cols - 1),
            )
        }
        FamilyConfig::Star { leaves, marked } => {
            if *leaves == 0 {
                return Err(Error::InvalidParameter("star needs at least one leaf".into()));
            }
            let edges = (1..=*leaves).map(|i| Edge::new(0, i, 1.0)).collect();
            simple(
                format!("star{leaves}"),
                leaves + 1,
                edges,
                0,
                marked.then_some(*leaves),
            )
        }
        FamilyConfig::Complete { n, marked } => {
            if *n < 2 {
                return Err(Error::InvalidParameter("complete graph needs n >= 2".into()));
            }
            let mut edges = Vec::new();
            for i in 0..*n {
                for j in i + 1..*n {
                    edges.push(Edge::new(i, j, 1.0));
                }
            }
            simple(
                format!("complete{n}"),
                *n,
                edges,
                0,
                marked.then_some(n - 1),
            )
        }
        FamilyConfig::RandomWeighted { n, marked } => {
            if *n < 2 {
                return Err(Error::InvalidParameter("random graph needs n >= 2".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pairs = std::collections::BTreeSet::new();
            for v in 1..*n {
                let u = rng.gen_range(0..v);
                pairs.insert((u, v));
            }
            for _ in 0..n / 2 {
                let u = rng.gen_range(0..*n);
                let v = rng.gen_range(0..*n);
                if u != v {
                    pairs.insert((u.min(v), u.max(v)));
                }
            }
            let edges = pairs
                .into_iter()
                .map(|(u, v)| Edge::new(u, v, rng.gen_range(0.5..2.0)))
                .collect();
            simple(
                format!("random{n}-s{seed}"),
                *n,
                edges,
                0,
                marked.then_some(n - 1),
            )
        }
        FamilyConfig::LearningOr { n, bit } => {
            let lg = LearningGraph::or_star(*n)?;
            let mut x = vec![0u8; *n];
            if let Some(b) = bit {
                if *b >= *n {
                    return Err(Error::InvalidParameter(format!("bit {b} outside 0..{n}")));
                }
                x[*b] = 1;
            }
            let compiled = compile(&lg, &x)?;
            Ok(Generated {
                label: match bit {
                    Some(b) => format!("learning-or{n}-e{b}"),
                    None => format!("learning-or{n}-zero"),
                },
                instance: compiled.instance,
                doubled: false,
            })
        }
        FamilyConfig::Kdist { x, k, r } => {
            let inst = KDistInstance::new(x.clone(), *k, r.clone())?;
            let graph = build_kdist_graph(&inst)?;
            Ok(Generated {
                label: format!("kdist-n{}-k{k}", x.len()),
                instance: graph.walk_instance()?,
                doubled: false,
            })
        }
    }
}
