//! Classical electric-network analysis.
//!
//! A unit of current is injected according to sigma, the edges conduct with
//! their weights, and everything is collected in the marked set, which is
//! held at potential zero. The energy `sum_e p_e^2 / w_e` of the resulting
//! flow is the effective resistance `R_{sigma,M}`; hitting and commute
//! times of the weighted random walk come out of the same grounded
//! Laplacian systems.
//!
//! Systems are solved by direct dense Cholesky factorization; graphs here
//! are desk-scale.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::{ElectricNetwork, Instance, MarkedSet, SourceDistribution};

/// Conservation residual tolerance for accepting a flow (Eq. condition at
/// unmarked vertices).
pub const CONSERVATION_TOL: f64 = 1e-9;

/// An antisymmetric edge function, stored once per edge under the canonical
/// orientation (the stored endpoint order): `value[e] > 0` means flow from
/// `edges[e].u` to `edges[e].v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    values: Vec<f64>,
}

impl Flow {
    pub fn new(values: Vec<f64>) -> Self {
        Flow { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, edge: usize) -> f64 {
        self.values[edge]
    }

    /// Signed value along the orientation `from -> other`.
    pub fn value_from(&self, network: &ElectricNetwork, edge: usize, from: usize) -> f64 {
        if network.edges()[edge].u == from {
            self.values[edge]
        } else {
            -self.values[edge]
        }
    }

    /// Net out-flow at `u`.
    pub fn divergence(&self, network: &ElectricNetwork, u: usize) -> f64 {
        network
            .incident_edges(u)
            .iter()
            .map(|&ei| self.value_from(network, ei, u))
            .sum()
    }

    /// Largest violation of `sigma_u = sum_v p_uv` over unmarked vertices,
    /// together with the offending vertex.
    pub fn conservation_residual(
        &self,
        network: &ElectricNetwork,
        sigma: &SourceDistribution,
        marked: &MarkedSet,
    ) -> (usize, f64) {
        let mut worst = (0, 0.0);
        for u in 0..network.vertex_count() {
            if marked.contains(u) {
                continue;
            }
            let r = (self.divergence(network, u) - sigma.prob(u)).abs();
            if r > worst.1 {
                worst = (u, r);
            }
        }
        worst
    }

    /// Export rows `[u, v, p_uv]` under the canonical orientation.
    pub fn to_rows(&self, network: &ElectricNetwork) -> Vec<(usize, usize, f64)> {
        network
            .edges()
            .iter()
            .zip(&self.values)
            .map(|(e, &p)| (e.u, e.v, p))
            .collect()
    }
}

/// Energy `sum_e p_e^2 / w_e` of a flow; independent of edge orientation.
pub fn flow_energy(flow: &Flow, network: &ElectricNetwork) -> f64 {
    network
        .edges()
        .iter()
        .zip(flow.values())
        .map(|(e, &p)| p * p / e.weight)
        .sum()
}

/// Vertices of components that contain at least one marked vertex, split
/// into (unmarked system vertices, membership flag per vertex). Errors if
/// any support vertex lives in a component without marked vertices.
fn grounded_vertices(
    network: &ElectricNetwork,
    sigma: &SourceDistribution,
    marked: &MarkedSet,
) -> Result<Vec<usize>> {
    if marked.is_empty() {
        return Err(Error::NoMarkedVertices);
    }
    let comp = network.components();
    let mut has_marked = vec![false; network.vertex_count()];
    {
        let mut comp_marked = std::collections::BTreeSet::new();
        for m in marked.iter() {
            comp_marked.insert(comp[m]);
        }
        for u in 0..network.vertex_count() {
            has_marked[u] = comp_marked.contains(&comp[u]);
        }
    }
    for u in sigma.support() {
        if !has_marked[u] {
            return Err(Error::DisconnectedSource(u));
        }
    }
    Ok((0..network.vertex_count())
        .filter(|&u| has_marked[u] && !marked.contains(u))
        .collect())
}

/// Solve the grounded Laplacian system `L_UU x = b` over the given unmarked
/// vertices. The submatrix is positive definite because every component in
/// the system touches the grounded set.
fn solve_grounded(network: &ElectricNetwork, system: &[usize], b: DVector<f64>) -> Result<DVector<f64>> {
    let m = system.len();
    let mut slot = vec![usize::MAX; network.vertex_count()];
    for (i, &u) in system.iter().enumerate() {
        slot[u] = i;
    }
    let mut l = DMatrix::zeros(m, m);
    for e in network.edges() {
        let (su, sv) = (slot[e.u], slot[e.v]);
        if su != usize::MAX {
            l[(su, su)] += e.weight;
        }
        if sv != usize::MAX {
            l[(sv, sv)] += e.weight;
        }
        if su != usize::MAX && sv != usize::MAX {
            l[(su, sv)] -= e.weight;
            l[(sv, su)] -= e.weight;
        }
    }
    let chol = l
        .cholesky()
        .ok_or_else(|| Error::Precondition("grounded Laplacian is not positive definite".into()))?;
    Ok(chol.solve(&b))
}

/// The unique energy-minimizing flow from sigma to M, via potentials of the
/// weighted Laplacian with M held at zero. Mass injected directly on a
/// marked vertex is collected on the spot and drives no current.
pub fn electric_flow(
    network: &ElectricNetwork,
    sigma: &SourceDistribution,
    marked: &MarkedSet,
) -> Result<Flow> {
    let system = grounded_vertices(network, sigma, marked)?;
    let b = DVector::from_iterator(system.len(), system.iter().map(|&u| sigma.prob(u)));
    let x = solve_grounded(network, &system, b)?;
    let mut potential = vec![0.0; network.vertex_count()];
    for (i, &u) in system.iter().enumerate() {
        potential[u] = x[i];
    }
    let values = network
        .edges()
        .iter()
        .map(|e| e.weight * (potential[e.u] - potential[e.v]))
        .collect();
    Ok(Flow::new(values))
}

/// `R_{sigma,M}`: the minimal energy of a flow from sigma to M, attained by
/// the electric flow.
pub fn effective_resistance(
    network: &ElectricNetwork,
    sigma: &SourceDistribution,
    marked: &MarkedSet,
) -> Result<f64> {
    let flow = electric_flow(network, sigma, marked)?;
    Ok(flow_energy(&flow, network))
}

/// Expected number of random-walk steps to reach M from sigma. Solves
/// `h = 0` on M, `h_u = 1 + sum_v (w_uv / deg_u) h_v` elsewhere, which in
/// grounded Laplacian form reads `(L h)_U = deg_U`, and returns
/// `sum_u sigma_u h_u`.
pub fn hitting_time(
    network: &ElectricNetwork,
    sigma: &SourceDistribution,
    marked: &MarkedSet,
) -> Result<f64> {
    let system = grounded_vertices(network, sigma, marked)?;
    let b = DVector::from_iterator(
        system.len(),
        system.iter().map(|&u| network.weighted_degree(u)),
    );
    let x = solve_grounded(network, &system, b)?;
    let mut h = vec![0.0; network.vertex_count()];
    for (i, &u) in system.iter().enumerate() {
        h[u] = x[i];
    }
    Ok(sigma
        .probabilities()
        .iter()
        .zip(&h)
        .map(|(&s, &hu)| s * hu)
        .sum())
}

/// Commute time `H_{s,t} + H_{t,s}` via two hitting-time solves.
pub fn commute_time(network: &ElectricNetwork, s: usize, t: usize) -> Result<f64> {
    if s == t {
        return Err(Error::InvalidParameter(format!(
            "commute time needs distinct vertices, got {s} twice"
        )));
    }
    let n = network.vertex_count();
    let to_t = hitting_time(
        network,
        &SourceDistribution::point_mass(n, s)?,
        &MarkedSet::new([t], n)?,
    )?;
    let to_s = hitting_time(
        network,
        &SourceDistribution::point_mass(n, t)?,
        &MarkedSet::new([s], n)?,
    )?;
    Ok(to_t + to_s)
}

/// Convenience wrappers over an [`Instance`].
pub fn instance_flow(instance: &Instance) -> Result<Flow> {
    electric_flow(&instance.network, &instance.sigma, &instance.marked)
}

pub fn instance_resistance(instance: &Instance) -> Result<f64> {
    effective_resistance(&instance.network, &instance.sigma, &instance.marked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Edge;

    fn net(n: usize, edges: &[(usize, usize, f64)]) -> ElectricNetwork {
        ElectricNetwork::new(n, edges.iter().map(|&(u, v, w)| Edge::new(u, v, w)).collect())
            .unwrap()
    }

    fn point(n: usize, u: usize) -> SourceDistribution {
        SourceDistribution::point_mass(n, u).unwrap()
    }

    fn marked(n: usize, vs: &[usize]) -> MarkedSet {
        MarkedSet::new(vs.iter().copied(), n).unwrap()
    }

    #[test]
    fn flow_energy_examples() {
        let g = net(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(flow_energy(&Flow::new(vec![0.0, 0.0]), &g), 0.0);
        // Half a unit on each of two unit edges.
        assert_eq!(flow_energy(&Flow::new(vec![0.5, 0.5]), &g), 0.5);

        let single = net(2, &[(0, 1, 1.0)]);
        assert_eq!(flow_energy(&Flow::new(vec![1.0]), &single), 1.0);
    }

    #[test]
    fn electric_flow_single_edge() {
        let g = net(2, &[(0, 1, 1.0)]);
        let f = electric_flow(&g, &point(2, 0), &marked(2, &[1])).unwrap();
        assert!((f.value(0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn electric_flow_weighted_path() {
        // Path 0-1-2 with weights (1, 2): the flow is forced to 1 on both
        // edges; energy 1 + 1/2.
        let g = net(3, &[(0, 1, 1.0), (1, 2, 2.0)]);
        let f = electric_flow(&g, &point(3, 0), &marked(3, &[2])).unwrap();
        assert!((f.value(0) - 1.0).abs() < 1e-13);
        assert!((f.value(1) - 1.0).abs() < 1e-13);
        assert!((flow_energy(&f, &g) - 1.5).abs() < 1e-13);
        let (_, residual) = f.conservation_residual(&g, &point(3, 0), &marked(3, &[2]));
        assert!(residual < 1e-13);
    }

    #[test]
    fn electric_flow_splits_evenly_between_parallel_routes() {
        // Two disjoint 2-edge routes from 0 to 3: half a unit each.
        let g = net(4, &[(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.0), (2, 3, 1.0)]);
        let f = electric_flow(&g, &point(4, 0), &marked(4, &[3])).unwrap();
        for e in 0..4 {
            assert!((f.value(e).abs() - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn resistance_laws() {
        // Series: two unit edges -> 2.
        let series = net(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let r = effective_resistance(&series, &point(3, 0), &marked(3, &[2])).unwrap();
        assert!((r - 2.0).abs() < 1e-12);

        // Parallel composition adds conductance: a weight-2 edge is a pair
        // of parallel unit edges -> 1/2.
        let parallel = net(2, &[(0, 1, 2.0)]);
        let r = effective_resistance(&parallel, &point(2, 0), &marked(2, &[1])).unwrap();
        assert!((r - 0.5).abs() < 1e-12);

        // K3 with unit weights, one edge in parallel with a 2-edge route:
        // 1 || (1 + 1) = 2/3.
        let k3 = net(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        let r = effective_resistance(&k3, &point(3, 0), &marked(3, &[1])).unwrap();
        assert!((r - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn hitting_time_examples() {
        let single = net(2, &[(0, 1, 1.0)]);
        let h = hitting_time(&single, &point(2, 0), &marked(2, &[1])).unwrap();
        assert!((h - 1.0).abs() < 1e-13);

        // Path 0-1-2: h_1 = 1 + h_0/2, h_0 = 1 + h_1 gives h_0 = 4.
        let path = net(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let h = hitting_time(&path, &point(3, 0), &marked(3, &[2])).unwrap();
        assert!((h - 4.0).abs() < 1e-12);

        // Average hitting time from the stationary distribution equals
        // 2 W R_{pi,M}; on this path both sides are 5/2.
        let pi = path.stationary_distribution().unwrap();
        let h = hitting_time(&path, &pi, &marked(3, &[2])).unwrap();
        assert!((h - 2.5).abs() < 1e-12);
        let r = effective_resistance(&path, &pi, &marked(3, &[2])).unwrap();
        assert!((h - 2.0 * path.total_weight() * r).abs() < 1e-12);
    }

    #[test]
    fn commute_time_examples() {
        let single = net(2, &[(0, 1, 1.0)]);
        assert!((commute_time(&single, 0, 1).unwrap() - 2.0).abs() < 1e-13);

        // Unit path of length L: commute between the ends is 2 L^2.
        for l in [2usize, 5, 8] {
            let edges: Vec<(usize, usize, f64)> = (0..l).map(|i| (i, i + 1, 1.0)).collect();
            let path = net(l + 1, &edges);
            let c = commute_time(&path, 0, l).unwrap();
            assert!((c - 2.0 * (l * l) as f64).abs() < 1e-10, "L={l}: {c}");
        }

        let k3 = net(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        assert!((commute_time(&k3, 0, 1).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_source_is_reported() {
        let g = net(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        let err = electric_flow(&g, &point(4, 0), &marked(4, &[3])).unwrap_err();
        assert!(matches!(err, Error::DisconnectedSource(0)));
        // Marked set in the same component: fine even though 2-3 floats.
        assert!(electric_flow(&g, &point(4, 0), &marked(4, &[1])).is_ok());
    }

    #[test]
    fn empty_marked_set_is_an_error() {
        let g = net(2, &[(0, 1, 1.0)]);
        assert!(matches!(
            effective_resistance(&g, &point(2, 0), &MarkedSet::empty()),
            Err(Error::NoMarkedVertices)
        ));
    }

    #[test]
    fn sigma_mass_on_marked_vertices_drives_no_current() {
        // Half the mass starts on the marked vertex: it is collected in
        // place, so only the other half flows.
        let g = net(2, &[(0, 1, 1.0)]);
        let sigma = SourceDistribution::new(vec![0.5, 0.5]).unwrap();
        let f = electric_flow(&g, &sigma, &marked(2, &[1])).unwrap();
        assert!((f.value(0) - 0.5).abs() < 1e-14);
        let h = hitting_time(&g, &sigma, &marked(2, &[1])).unwrap();
        assert!((h - 0.5).abs() < 1e-14);
    }

    #[test]
    fn energy_is_orientation_independent() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let n = rng.gen_range(4..9);
            let mut edges = Vec::new();
            for v in 1..n {
                let u = rng.gen_range(0..v);
                edges.push((u, v, rng.gen_range(0.5..2.0)));
            }
            if !edges.iter().any(|&(u, v, _)| (u, v) == (0, n - 1)) {
                edges.push((0, n - 1, rng.gen_range(0.5..2.0)));
            }
            let g = net(n, &edges);
            let reversed: Vec<(usize, usize, f64)> =
                edges.iter().map(|&(u, v, w)| (v, u, w)).collect();
            let g_rev = net(n, &reversed);
            let sigma = point(n, 0);
            let m = marked(n, &[n - 2]);
            let r = effective_resistance(&g, &sigma, &m).unwrap();
            let r_rev = effective_resistance(&g_rev, &sigma, &m).unwrap();
            assert!((r - r_rev).abs() <= 1e-15 * r.max(1.0));
        }
    }
}
