//! The quantum walk space, its reflections, and the spectral witnesses.
//!
//! The walk acts on `span{|u> : u in S} + span{|e> : e in E}` for a
//! bipartite graph with parts A and B and sigma supported in A. Every
//! unmarked vertex contributes a local reflection about the complement of
//!
//! ```text
//! psi_u = sqrt(sigma_u / (C1 R)) |u>  +  sum_{uv in E} sqrt(w_uv) |uv>
//! ```
//!
//! in its local space H_u (the first term is absent for u outside the
//! support); marked vertices contribute the identity. R_A and R_B are the
//! direct sums over the two parts and one walk step is U = R_B R_A.
//!
//! R_B as a direct sum only spans the edge subspace; it is extended by the
//! identity on the source-vertex states so that the start state lies in
//! its +1 eigenspace, which the negative-witness argument needs.
//!
//! Flows certify marked vertices: an energy-minimal flow yields the
//! eigenvalue-1 eigenvector `phi` with a guaranteed overlap with the start
//! state, while on marked-free instances the vector `w` with
//! `Pi_A w = 0`, `Pi_B w = start` certifies an effective spectral gap.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::electric::Flow;
use crate::error::{Error, Result};
use crate::network::{Instance, Side};
use crate::spectral::OrthogonalEigen;

/// Residual above which a claimed flow is rejected by witness builders.
pub const FLOW_TOL: f64 = 1e-9;

/// Constants of the walk and the known resistance bound.
///
/// `theta` is the phase-estimation precision `1 / (C2 sqrt(1 + C1 R W))`,
/// which equals `1 / (C2 ||w||)` for the negative witness; the associated
/// step constant is `C = C2 sqrt(1 + C1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    pub c1: f64,
    pub c2: f64,
    /// Known upper bound on the effective resistance of any marked set
    /// that may appear.
    pub r: f64,
}

impl WalkParams {
    /// Default constants C1 = 8, C2 = 4, so C = 12. These give a positive
    /// overlap of at least 8/9 and a negative window mass of at most 1/64.
    pub fn new(r: f64) -> Result<Self> {
        WalkParams::with_constants(8.0, 4.0, r)
    }

    pub fn with_constants(c1: f64, c2: f64, r: f64) -> Result<Self> {
        if !(c1 >= 1.0) || !c1.is_finite() {
            return Err(Error::InvalidParameter(format!("C1 = {c1}, need C1 >= 1")));
        }
        if !(c2 >= 1.0) || !c2.is_finite() {
            return Err(Error::InvalidParameter(format!("C2 = {c2}, need C2 >= 1")));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("R = {r}, need R > 0")));
        }
        Ok(WalkParams { c1, c2, r })
    }

    /// Phase-estimation precision for a graph of total weight `w_total`.
    pub fn theta(&self, w_total: f64) -> f64 {
        1.0 / (self.c2 * (1.0 + self.c1 * self.r * w_total).sqrt())
    }

    /// The step constant `C = C2 sqrt(1 + C1)`.
    pub fn c_constant(&self) -> f64 {
        self.c2 * (1.0 + self.c1).sqrt()
    }

    /// Advisory check that `r` really bounds the instance resistance.
    pub fn check_resistance_bound(&self, instance: &Instance) -> Result<()> {
        if instance.marked.is_empty() {
            return Ok(());
        }
        let actual = crate::electric::instance_resistance(instance)?;
        if actual > self.r * (1.0 + 1e-9) {
            return Err(Error::Precondition(format!(
                "R = {} does not bound the effective resistance {actual}",
                self.r
            )));
        }
        Ok(())
    }
}

/// Basis label of one walk-space dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLabel {
    /// A source vertex `|u>`.
    Vertex(usize),
    /// An edge `|e>` by stable index.
    Edge(usize),
}

/// Ordered basis of the walk space: source vertices ascending, then edges
/// by stable index. The ordering is what makes matrices reproducible.
#[derive(Debug, Clone)]
pub struct WalkSpace {
    support: Vec<usize>,
    vertex_slot: Vec<Option<usize>>,
    edge_count: usize,
}

impl WalkSpace {
    /// Requires a bipartition with sigma supported in A.
    pub fn new(instance: &Instance) -> Result<Self> {
        let partition = instance
            .network
            .partition()
            .ok_or(Error::MissingPartition)?;
        let support = instance.sigma.support();
        if support.iter().any(|&u| partition.side(u) != Side::A) {
            return Err(Error::SupportOutsideA);
        }
        let mut vertex_slot = vec![None; instance.network.vertex_count()];
        for (i, &u) in support.iter().enumerate() {
            vertex_slot[u] = Some(i);
        }
        Ok(WalkSpace {
            support,
            vertex_slot,
            edge_count: instance.network.edge_count(),
        })
    }

    pub fn dim(&self) -> usize {
        self.support.len() + self.edge_count
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Basis slot of `|u>` when `u` is in the support.
    pub fn vertex_slot(&self, u: usize) -> Option<usize> {
        self.vertex_slot.get(u).copied().flatten()
    }

    pub fn edge_slot(&self, edge: usize) -> usize {
        self.support.len() + edge
    }

    pub fn label(&self, slot: usize) -> BasisLabel {
        if slot < self.support.len() {
            BasisLabel::Vertex(self.support[slot])
        } else {
            BasisLabel::Edge(slot - self.support.len())
        }
    }

    /// Indices of the local space H_u: incident edges, plus `|u>` for
    /// support vertices in part A.
    pub fn local_indices(&self, instance: &Instance, u: usize) -> Vec<usize> {
        let mut idx = Vec::new();
        let side = instance.network.partition().map(|p| p.side(u));
        if side == Some(Side::A) {
            if let Some(s) = self.vertex_slot(u) {
                idx.push(s);
            }
        }
        for &e in instance.network.incident_edges(u) {
            idx.push(self.edge_slot(e));
        }
        idx
    }

    /// The start state `varsigma = sum_u sqrt(sigma_u) |u>`.
    pub fn start_state(&self, instance: &Instance) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        for (i, &u) in self.support.iter().enumerate() {
            v[i] = instance.sigma.prob(u).sqrt();
        }
        v
    }
}

/// `psi_u` in walk-space coordinates (not normalized). The vertex term is
/// present only for support vertices; marked vertices never use their psi.
pub fn build_psi(space: &WalkSpace, instance: &Instance, params: &WalkParams, u: usize) -> DVector<f64> {
    let mut v = DVector::zeros(space.dim());
    if let Some(slot) = space.vertex_slot(u) {
        v[slot] = (instance.sigma.prob(u) / (params.c1 * params.r)).sqrt();
    }
    for &e in instance.network.incident_edges(u) {
        v[space.edge_slot(e)] = instance.network.edges()[e].weight.sqrt();
    }
    v
}

/// The assembled walk: reflections, their product, the +1 projectors, and
/// the full spectral decomposition of U.
#[derive(Debug, Clone)]
pub struct WalkOperator {
    pub space: WalkSpace,
    pub r_a: DMatrix<f64>,
    pub r_b: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub pi_a: DMatrix<f64>,
    pub pi_b: DMatrix<f64>,
    pub spectrum: OrthogonalEigen,
}

/// Accumulate `target -= 2 psi psi^T` and `proj -= psi psi^T` using only
/// the local support of `psi`.
fn subtract_reflection(target: &mut DMatrix<f64>, proj: &mut DMatrix<f64>, psi: &DVector<f64>) {
    let support: Vec<(usize, f64)> = psi
        .iter()
        .enumerate()
        .filter(|(_, &x)| x != 0.0)
        .map(|(i, &x)| (i, x))
        .collect();
    for &(i, xi) in &support {
        for &(j, xj) in &support {
            target[(i, j)] -= 2.0 * xi * xj;
            proj[(i, j)] -= xi * xj;
        }
    }
}

/// Build R_A, R_B, U = R_B R_A, the projectors, and the spectrum.
pub fn build_walk_operator(instance: &Instance, params: &WalkParams) -> Result<WalkOperator> {
    let space = WalkSpace::new(instance)?;
    let d = space.dim();
    let partition = instance.network.partition().expect("checked by WalkSpace");

    let mut r_a = DMatrix::identity(d, d);
    let mut r_b = DMatrix::identity(d, d);
    let mut pi_a = DMatrix::identity(d, d);
    let mut pi_b = DMatrix::identity(d, d);

    for u in 0..instance.network.vertex_count() {
        if instance.marked.contains(u) {
            continue;
        }
        let psi = build_psi(&space, instance, params, u);
        let norm = psi.norm();
        if norm == 0.0 {
            continue; // isolated vertex outside the support
        }
        let psi = psi / norm;
        match partition.side(u) {
            Side::A => subtract_reflection(&mut r_a, &mut pi_a, &psi),
            Side::B => subtract_reflection(&mut r_b, &mut pi_b, &psi),
        }
    }

    let u_mat = &r_b * &r_a;
    let spectrum = OrthogonalEigen::new(&u_mat);
    Ok(WalkOperator {
        space,
        r_a,
        r_b,
        u: u_mat,
        pi_a,
        pi_b,
        spectrum,
    })
}

/// The diffusion D_u as a full-space matrix (identity off H_u). Mostly for
/// inspecting commutation; the operator assembly above never materializes
/// these one by one.
pub fn diffusion_matrix(
    space: &WalkSpace,
    instance: &Instance,
    params: &WalkParams,
    u: usize,
) -> DMatrix<f64> {
    let d = space.dim();
    let mut m = DMatrix::identity(d, d);
    if instance.marked.contains(u) {
        return m;
    }
    let psi = build_psi(space, instance, params, u);
    let norm = psi.norm();
    if norm == 0.0 {
        return m;
    }
    let psi = psi / norm;
    let mut unused = DMatrix::identity(d, d);
    subtract_reflection(&mut m, &mut unused, &psi);
    m
}

/// The eigenvalue-1 witness built from a flow: in the A-to-B orientation,
///
/// ```text
/// phi = sqrt(C1 R) sum_{u in S} sqrt(sigma_u) |u>  -  sum_e (p_e / sqrt(w_e)) |e>
/// ```
///
/// Orthogonal to every unmarked psi_u by flow conservation, so U phi = phi.
/// Its norm satisfies `||phi||^2 = C1 R + energy(flow)`.
pub fn positive_witness(
    space: &WalkSpace,
    instance: &Instance,
    params: &WalkParams,
    flow: &Flow,
) -> Result<DVector<f64>> {
    if instance.marked.is_empty() {
        return Err(Error::NoMarkedVertices);
    }
    let (vertex, residual) =
        flow.conservation_residual(&instance.network, &instance.sigma, &instance.marked);
    if residual > FLOW_TOL {
        return Err(Error::InvalidFlow { vertex, residual });
    }
    let partition = instance.network.partition().ok_or(Error::MissingPartition)?;
    let mut phi = DVector::zeros(space.dim());
    let scale = (params.c1 * params.r).sqrt();
    for &u in space.support() {
        phi[space.vertex_slot(u).unwrap()] = scale * instance.sigma.prob(u).sqrt();
    }
    for (e, edge) in instance.network.edges().iter().enumerate() {
        // Re-sign the stored orientation to run from A to B.
        let p = match partition.side(edge.u) {
            Side::A => flow.value(e),
            Side::B => -flow.value(e),
        };
        phi[space.edge_slot(e)] = -p / edge.weight.sqrt();
    }
    Ok(phi)
}

/// The marked-free witness
///
/// ```text
/// w = sum_{u in S} sqrt(sigma_u) |u>  +  sqrt(C1 R) sum_e sqrt(w_e) |e>,
/// ```
///
/// which satisfies `Pi_A w = 0`, `Pi_B w = varsigma`, and
/// `||w||^2 = 1 + C1 R W`.
pub fn negative_witness(
    space: &WalkSpace,
    instance: &Instance,
    params: &WalkParams,
) -> Result<DVector<f64>> {
    if !instance.marked.is_empty() {
        return Err(Error::Precondition(
            "negative witness requires an empty marked set".into(),
        ));
    }
    let mut w = DVector::zeros(space.dim());
    for &u in space.support() {
        w[space.vertex_slot(u).unwrap()] = instance.sigma.prob(u).sqrt();
    }
    let scale = (params.c1 * params.r).sqrt();
    for (e, edge) in instance.network.edges().iter().enumerate() {
        w[space.edge_slot(e)] = scale * edge.weight.sqrt();
    }
    Ok(w)
}

/// Numerical check of the effective spectral gap bound: for `w` in the
/// kernel of Pi_A, returns `(||P_theta Pi_B w||, (theta/2) ||w||)`. The
/// first must not exceed the second.
pub fn effective_gap_check(
    op: &WalkOperator,
    w: &DVector<f64>,
    theta: f64,
) -> Result<(f64, f64)> {
    let norm = w.norm();
    let kernel_residual = (&op.pi_a * w).norm();
    if kernel_residual > 1e-9 * norm.max(1.0) {
        return Err(Error::Precondition(format!(
            "vector is not in the kernel of Pi_A (residual {kernel_residual:e})"
        )));
    }
    let projected = &op.pi_b * w;
    let lhs = op.spectrum.phase_window_mass(&projected, theta).sqrt();
    Ok((lhs, 0.5 * theta * norm))
}

/// `R W` for `R = energy(flow)`, asserting the chain
/// `R W >= (sum_e |p_e|)^2 >= 1` that holds whenever the support and the
/// marked set are disjoint.
pub fn check_rw_lower_bound(instance: &Instance, flow: &Flow) -> Result<f64> {
    if instance.marked.is_empty() {
        return Err(Error::NoMarkedVertices);
    }
    if instance
        .sigma
        .support()
        .iter()
        .any(|&u| instance.marked.contains(u))
    {
        return Err(Error::Precondition(
            "support intersects the marked set".into(),
        ));
    }
    let (vertex, residual) =
        flow.conservation_residual(&instance.network, &instance.sigma, &instance.marked);
    if residual > FLOW_TOL {
        return Err(Error::InvalidFlow { vertex, residual });
    }
    let energy = crate::electric::flow_energy(flow, &instance.network);
    let w = instance.network.total_weight();
    let rw = energy * w;
    let abs_sum: f64 = flow.values().iter().map(|p| p.abs()).sum();
    if rw + 1e-9 < abs_sum * abs_sum {
        return Err(Error::Precondition(format!(
            "RW = {rw} fell below (sum |p_e|)^2 = {}",
            abs_sum * abs_sum
        )));
    }
    if abs_sum + 1e-9 < 1.0 {
        return Err(Error::Precondition(format!(
            "sum |p_e| = {abs_sum} fell below 1"
        )));
    }
    Ok(rw)
}

/// Which matrix of a walk operator to export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkMatrix {
    U,
    RA,
    RB,
    PiA,
    PiB,
}

impl WalkOperator {
    fn matrix(&self, which: WalkMatrix) -> &DMatrix<f64> {
        match which {
            WalkMatrix::U => &self.u,
            WalkMatrix::RA => &self.r_a,
            WalkMatrix::RB => &self.r_b,
            WalkMatrix::PiA => &self.pi_a,
            WalkMatrix::PiB => &self.pi_b,
        }
    }

    /// Dense row-major text dump with a basis-label header line.
    pub fn export_matrix(
        &self,
        instance: &Instance,
        which: WalkMatrix,
        out: &mut dyn Write,
    ) -> std::io::Result<()> {
        let labels: Vec<String> = (0..self.space.dim())
            .map(|slot| match self.space.label(slot) {
                BasisLabel::Vertex(u) => format!("v{u}"),
                BasisLabel::Edge(e) => {
                    let edge = &instance.network.edges()[e];
                    format!("e{e}:{}-{}", edge.u, edge.v)
                }
            })
            .collect();
        writeln!(out, "{}", labels.join(" "))?;
        let m = self.matrix(which);
        for r in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:.17e}", m[(r, c)])).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electric;
    use crate::network::{
        bipartition_with_support, Edge, ElectricNetwork, Instance, MarkedSet, SourceDistribution,
    };

    /// Single unit edge s=0, t=1 with sigma on s.
    fn single_edge(marked_t: bool) -> Instance {
        let net = ElectricNetwork::new(2, vec![Edge::new(0, 1, 1.0)]).unwrap();
        let sigma = SourceDistribution::point_mass(2, 0).unwrap();
        let marked = if marked_t {
            MarkedSet::new([1], 2).unwrap()
        } else {
            MarkedSet::empty()
        };
        let inst = Instance::new(net, sigma, marked).unwrap();
        let p = bipartition_with_support(&inst.network, &inst.sigma).unwrap();
        Instance::new(
            inst.network.clone().with_partition(p).unwrap(),
            inst.sigma,
            inst.marked,
        )
        .unwrap()
    }

    #[test]
    fn psi_substitution_examples() {
        // u outside the support with incident weights 1 and 4.
        let net = ElectricNetwork::new(
            3,
            vec![Edge::new(1, 0, 1.0), Edge::new(1, 2, 4.0)],
        )
        .unwrap();
        let sigma = SourceDistribution::point_mass(3, 0).unwrap();
        let inst = Instance::new(net, sigma, MarkedSet::empty()).unwrap();
        let p = bipartition_with_support(&inst.network, &inst.sigma).unwrap();
        let inst = Instance::new(
            inst.network.clone().with_partition(p).unwrap(),
            inst.sigma,
            inst.marked,
        )
        .unwrap();
        let space = WalkSpace::new(&inst).unwrap();
        let params = WalkParams::with_constants(1.0, 4.0, 1.0).unwrap();
        let psi = build_psi(&space, &inst, &params, 1);
        assert_eq!(psi[space.edge_slot(0)], 1.0);
        assert_eq!(psi[space.edge_slot(1)], 2.0);
        assert_eq!(psi[space.vertex_slot(0).unwrap()], 0.0);

        // u in S with sigma_u = 1, C1 = 1, R = 1, one unit edge.
        let inst1 = single_edge(false);
        let space1 = WalkSpace::new(&inst1).unwrap();
        let psi = build_psi(&space1, &inst1, &params, 0);
        assert_eq!(psi[0], 1.0);
        assert_eq!(psi[1], 1.0);

        // sigma_u = 1/2, C1 = 2, R = 1, one incident edge of weight 3:
        // psi = (1/2)|u> + sqrt(3)|uv>. Path 0-1-2 keeps the support in A.
        let net = ElectricNetwork::new(
            3,
            vec![Edge::new(0, 1, 3.0), Edge::new(1, 2, 1.0)],
        )
        .unwrap();
        let sigma = SourceDistribution::new(vec![0.5, 0.0, 0.5]).unwrap();
        let inst = Instance::new(net, sigma, MarkedSet::empty()).unwrap();
        let p = bipartition_with_support(&inst.network, &inst.sigma).unwrap();
        let inst = Instance::new(
            inst.network.clone().with_partition(p).unwrap(),
            inst.sigma,
            inst.marked,
        )
        .unwrap();
        let space = WalkSpace::new(&inst).unwrap();
        let params2 = WalkParams::with_constants(2.0, 4.0, 1.0).unwrap();
        let psi = build_psi(&space, &inst, &params2, 0);
        assert!((psi[space.vertex_slot(0).unwrap()] - 0.5).abs() < 1e-15);
        assert!((psi[space.edge_slot(0)] - 3.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_edge_positive_operator_by_hand() {
        let inst = single_edge(true);
        let params = WalkParams::with_constants(1.0, 4.0, 1.0).unwrap();
        let op = build_walk_operator(&inst, &params).unwrap();
        assert_eq!(op.space.dim(), 2);
        // t is marked: R_B is the identity.
        assert!((op.r_b.clone() - DMatrix::<f64>::identity(2, 2)).norm() < 1e-15);
        // R_A reflects about the complement of (|s> + |st>)/sqrt(2).
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!((op.r_a.clone() - expected.clone()).norm() < 1e-14);
        assert!((op.u.clone() - expected).norm() < 1e-14);
    }

    #[test]
    fn single_edge_positive_witness_is_fixed() {
        let inst = single_edge(true);
        let params = WalkParams::with_constants(1.0, 4.0, 1.0).unwrap();
        let op = build_walk_operator(&inst, &params).unwrap();
        let flow = electric::instance_flow(&inst).unwrap();
        let phi = positive_witness(&op.space, &inst, &params, &flow).unwrap();
        assert!((phi[0] - 1.0).abs() < 1e-14);
        assert!((phi[1] + 1.0).abs() < 1e-14);
        assert!(((&op.u * &phi) - &phi).norm() < 1e-14);
        // ||phi||^2 = C1 R + energy = 2 and <phi, start> = sqrt(C1 R) = 1.
        assert!((phi.norm_squared() - 2.0).abs() < 1e-14);
        let start = op.space.start_state(&inst);
        assert!((phi.dot(&start) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_edge_negative_witness_kernel() {
        let inst = single_edge(false);
        let params = WalkParams::with_constants(1.0, 4.0, 1.0).unwrap();
        let op = build_walk_operator(&inst, &params).unwrap();
        let w = negative_witness(&op.space, &inst, &params).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-15);
        assert!((w[1] - 1.0).abs() < 1e-15);
        assert!((&op.pi_a * &w).norm() < 1e-14);
        let start = op.space.start_state(&inst);
        assert!(((&op.pi_b * &w) - start).norm() < 1e-14);
        assert!((w.norm_squared() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn all_of_b_marked_reduces_u_to_r_a() {
        // Star with every leaf marked: each D_u on B is the identity, so U
        // agrees with R_A everywhere.
        let net = ElectricNetwork::new(
            4,
            vec![Edge::new(0, 1, 1.0), Edge::new(0, 2, 2.0), Edge::new(0, 3, 1.5)],
        )
        .unwrap();
        let inst = Instance::new(
            net,
            SourceDistribution::point_mass(4, 0).unwrap(),
            MarkedSet::new([1, 2, 3], 4).unwrap(),
        )
        .unwrap();
        let p = bipartition_with_support(&inst.network, &inst.sigma).unwrap();
        let inst = Instance::new(
            inst.network.clone().with_partition(p).unwrap(),
            inst.sigma,
            inst.marked,
        )
        .unwrap();
        let op = build_walk_operator(&inst, &WalkParams::new(1.0).unwrap()).unwrap();
        assert!((op.u.clone() - op.r_a.clone()).norm() < 1e-15);
    }

    #[test]
    fn reflections_square_to_identity() {
        let inst = single_edge(false);
        let params = WalkParams::new(1.0).unwrap();
        let op = build_walk_operator(&inst, &params).unwrap();
        let d = op.space.dim();
        let id = DMatrix::<f64>::identity(d, d);
        assert!(((&op.r_a * &op.r_a) - &id).norm() < 1e-12);
        assert!(((&op.r_b * &op.r_b) - &id).norm() < 1e-12);
        assert!(((op.u.transpose() * &op.u) - &id).norm() < 1e-12);
    }

    #[test]
    fn gap_check_extremes() {
        let inst = single_edge(false);
        let params = WalkParams::new(1.0).unwrap();
        let op = build_walk_operator(&inst, &params).unwrap();
        let w = negative_witness(&op.space, &inst, &params).unwrap();
        // Theta = 0: no eigenphase-zero overlap on a marked-free instance.
        let (lhs, bound) = effective_gap_check(&op, &w, 0.0).unwrap();
        assert!(lhs < 1e-9);
        assert_eq!(bound, 0.0);
        // Theta = pi captures everything: ||Pi_B w|| <= (pi/2)||w||.
        let (lhs, bound) = effective_gap_check(&op, &w, std::f64::consts::PI).unwrap();
        assert!(lhs <= bound);
        let start = op.space.start_state(&inst);
        assert!((lhs - (&op.pi_b * &w).norm()).abs() < 1e-12);
        assert!((lhs - start.norm()).abs() < 1e-12);
    }

    #[test]
    fn gap_check_rejects_non_kernel_vectors() {
        let inst = single_edge(false);
        let params = WalkParams::new(1.0).unwrap();
        let op = build_walk_operator(&inst, &params).unwrap();
        let bad = DVector::from_vec(vec![1.0, 0.0]);
        assert!(effective_gap_check(&op, &bad, 0.5).is_err());
    }

    #[test]
    fn rw_bound_examples() {
        // Single unit edge: RW = 1, equality in the chain.
        let inst = single_edge(true);
        let flow = electric::instance_flow(&inst).unwrap();
        let rw = check_rw_lower_bound(&inst, &flow).unwrap();
        assert!((rw - 1.0).abs() < 1e-12);

        // Unit path of length L: RW = L^2.
        for l in [2usize, 4] {
            let edges: Vec<Edge> = (0..l).map(|i| Edge::new(i, i + 1, 1.0)).collect();
            let net = ElectricNetwork::new(l + 1, edges).unwrap();
            let inst = Instance::new(
                net,
                SourceDistribution::point_mass(l + 1, 0).unwrap(),
                MarkedSet::new([l], l + 1).unwrap(),
            )
            .unwrap();
            let p = bipartition_with_support(&inst.network, &inst.sigma).unwrap();
            let inst = Instance::new(
                inst.network.clone().with_partition(p).unwrap(),
                inst.sigma,
                inst.marked,
            )
            .unwrap();
            let flow = electric::instance_flow(&inst).unwrap();
            let rw = check_rw_lower_bound(&inst, &flow).unwrap();
            assert!((rw - (l * l) as f64).abs() < 1e-10);
        }

        // Parallel pair as a weight-2 edge: R = 1/2, W = 2, RW = 1.
        let net = ElectricNetwork::new(2, vec![Edge::new(0, 1, 2.0)]).unwrap();
        let inst = Instance::new(
            net,
            SourceDistribution::point_mass(2, 0).unwrap(),
            MarkedSet::new([1], 2).unwrap(),
        )
        .unwrap();
        let p = bipartition_with_support(&inst.network, &inst.sigma).unwrap();
        let inst = Instance::new(
            inst.network.clone().with_partition(p).unwrap(),
            inst.sigma,
            inst.marked,
        )
        .unwrap();
        let flow = electric::instance_flow(&inst).unwrap();
        let rw = check_rw_lower_bound(&inst, &flow).unwrap();
        assert!((rw - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positive_witness_rejects_bogus_flows() {
        let inst = single_edge(true);
        let params = WalkParams::new(1.0).unwrap();
        let space = WalkSpace::new(&inst).unwrap();
        let bogus = Flow::new(vec![0.25]);
        assert!(matches!(
            positive_witness(&space, &inst, &params, &bogus),
            Err(Error::InvalidFlow { .. })
        ));
    }

    #[test]
    fn matrix_export_has_labels_and_rows() {
        let inst = single_edge(true);
        let op = build_walk_operator(&inst, &WalkParams::new(1.0).unwrap()).unwrap();
        let mut buf = Vec::new();
        op.export_matrix(&inst, WalkMatrix::U, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "v0 e0:0-1");
        assert_eq!(lines.count(), 2);
    }
}
