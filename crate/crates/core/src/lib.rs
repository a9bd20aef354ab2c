//! Quantum-walk search on weighted graphs, analyzed through electric
//! networks.
//!
//! The library covers both sides of the correspondence:
//!
//! * **Classical**: electric flows, flow energy, effective resistance,
//!   hitting and commute times on weighted graphs ([`electric`]), with the
//!   identities `H_{s,t} + H_{t,s} = 2WR_{s,t}` and `H_{pi,M} = 2WR_{pi,M}`
//!   checkable to solver precision.
//! * **Quantum**: the bipartite walk operator `U = R_B R_A` assembled from
//!   local reflections ([`walk`]), its exact spectral decomposition
//!   ([`spectral`]), and a detection procedure built on phase estimation
//!   with precision `1/(C2 sqrt(1 + C1 R W))` whose acceptance
//!   probabilities are computed exactly rather than sampled ([`detect`]).
//!
//! Marked-vertex certificates travel as vectors: an energy-minimal flow
//! gives an eigenvalue-1 eigenvector overlapping the start state, and on
//! marked-free instances the effective-spectral-gap bound caps the start
//! state's low-phase mass. Everything runs at desk scale with dense linear
//! algebra.
//!
//! Two applications are built in: learning graphs compiled against
//! concrete inputs ([`learning`]) and the explicit k-distinctness walk
//! graph with its level structure ([`kdist`]). Instance generators and the
//! standing verification suite live in [`families`] and [`suite`].
//!
//! ```
//! use ewalk::network::{Edge, ElectricNetwork, Instance, MarkedSet, SourceDistribution};
//! use ewalk::detect::{detect, DetectionModel};
//! use ewalk::walk::WalkParams;
//!
//! // A unit path 0-1-2 searched from one end for a mark on the other.
//! let network = ElectricNetwork::new(3, vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)]).unwrap();
//! let sigma = SourceDistribution::point_mass(3, 0).unwrap();
//! let marked = MarkedSet::new([2], 3).unwrap();
//! let instance = Instance::new(network, sigma, marked).unwrap();
//!
//! let r = ewalk::electric::instance_resistance(&instance).unwrap();
//! let params = WalkParams::new(r).unwrap();
//! let result = detect(&instance, &params, DetectionModel::IdealThreshold).unwrap();
//! assert!(result.total_accept_prob > 2.0 / 3.0);
//! ```

pub mod detect;
pub mod electric;
pub mod error;
pub mod families;
pub mod kdist;
pub mod learning;
pub mod network;
pub mod spectral;
pub mod suite;
pub mod walk;

pub use detect::{detect, DetectionModel, DetectionResult};
pub use electric::{commute_time, effective_resistance, electric_flow, flow_energy, hitting_time, Flow};
pub use error::{Error, Result};
pub use network::{
    bipartite_double, ensure_walk_ready, validate, Edge, ElectricNetwork, Instance, InstanceFile,
    MarkedSet, SourceDistribution,
};
pub use walk::{build_walk_operator, WalkOperator, WalkParams};
