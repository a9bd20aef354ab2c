//! Eigendecomposition of real orthogonal matrices.
//!
//! The walk operator is a product of two real reflections, hence real
//! orthogonal, and its eigenvalues live on the unit circle in conjugate
//! pairs. General-purpose nonsymmetric eigensolvers do not return an
//! orthonormal eigenbasis inside degenerate eigenspaces, which this crate
//! relies on for projector arithmetic, so the decomposition is built from
//! two well-conditioned symmetric eigenproblems instead:
//!
//! 1. `H = (U + U^T)/2` is symmetric and commutes with `U`, so each
//!    eigenspace of `H` (eigenvalue `cos theta`) is exactly `U`-invariant.
//!    Clustered eigenvalues are merged; merged spans are still invariant.
//! 2. Within a group the restriction `A = V^T U V` is orthogonal with
//!    antisymmetric part `K`. `S = K^T K` is symmetric positive
//!    semidefinite with eigenvalues `sin^2 theta`; its eigenvectors with
//!    `sin theta ~ 0` are real eigenvectors of `U` (eigenvalue +-1), and
//!    the rest pair up as `x, Kx/s` spanning rotation planes. The pair
//!    `(x -+ i Kx/s)/sqrt(2)` is a conjugate pair of complex eigenvectors
//!    with eigenvalues `exp(+-i theta)`.
//!
//! Antisymmetry makes `x` and `Kx` orthogonal automatically, so the
//! resulting complex basis is orthonormal to rounding. Phases are
//! recovered from `atan2(sin, cos)` with `sin` taken from `||Kx||`, which
//! stays fully accurate near `theta = 0` where `arccos` alone would lose
//! half the digits.
//!
//! `S_MIN` separates genuine rotation planes from the +-1 eigenspaces. It
//! sits at the noise floor of the second eigensolve (~sqrt(machine eps));
//! instances at the scale this crate targets have their smallest nonzero
//! eigenphase orders of magnitude above it.

use nalgebra::{Complex, DMatrix, DVector};

/// Eigenvalues of the symmetric part closer than this are grouped.
const GROUP_TOL: f64 = 1e-10;
/// Eigenvalues of `K^T K` closer than this share a rotation block.
const SUBGROUP_TOL: f64 = 1e-12;
/// `sin theta` below this is treated as an exact +-1 eigenvector.
const S_MIN: f64 = 1e-7;

pub type Complex64 = Complex<f64>;

/// Spectral decomposition of a real orthogonal matrix: eigenphases in
/// `(-pi, pi]` and a matching orthonormal set of complex eigenvector
/// columns.
#[derive(Debug, Clone)]
pub struct OrthogonalEigen {
    pub phases: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl OrthogonalEigen {
    /// Decompose a real orthogonal `u`.
    pub fn new(u: &DMatrix<f64>) -> Self {
        let d = u.nrows();
        assert_eq!(d, u.ncols(), "matrix must be square");
        if d == 0 {
            return OrthogonalEigen {
                phases: Vec::new(),
                vectors: DMatrix::zeros(0, 0),
            };
        }

        let h = (u + u.transpose()) * 0.5;
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());

        let mut phases = Vec::with_capacity(d);
        let mut vectors = DMatrix::<Complex64>::zeros(d, d);
        let mut col = 0;

        let mut start = 0;
        while start < d {
            let mut end = start + 1;
            while end < d
                && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] <= GROUP_TOL
            {
                end += 1;
            }
            let m = end - start;
            let mut vg = DMatrix::zeros(d, m);
            for (k, &oi) in order[start..end].iter().enumerate() {
                vg.set_column(k, &eig.eigenvectors.column(oi));
            }
            decompose_group(u, &vg, &mut phases, &mut vectors, &mut col);
            start = end;
        }
        debug_assert_eq!(col, d);
        OrthogonalEigen { phases, vectors }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    /// Squared overlaps `|<v_j, state>|^2` of a real state with every
    /// eigenvector.
    pub fn overlaps(&self, state: &DVector<f64>) -> Vec<f64> {
        (0..self.dim())
            .map(|j| {
                let a: Complex64 = self
                    .vectors
                    .column(j)
                    .iter()
                    .zip(state.iter())
                    .map(|(v, &s)| v.conj() * s)
                    .sum();
                a.norm_sqr()
            })
            .collect()
    }

    /// Total squared overlap of `state` with eigenvectors of phase
    /// magnitude at most `theta` (the mass of `P_theta state`).
    pub fn phase_window_mass(&self, state: &DVector<f64>, theta: f64) -> f64 {
        self.overlaps(state)
            .iter()
            .zip(&self.phases)
            .filter(|(_, &p)| p.abs() <= theta)
            .map(|(m, _)| m)
            .sum()
    }

    /// `sum_j exp(i theta_j) v_j v_j^H`, for verification.
    pub fn reassemble(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut out = DMatrix::<Complex64>::zeros(d, d);
        for j in 0..d {
            let lambda = Complex64::new(self.phases[j].cos(), self.phases[j].sin());
            let v = self.vectors.column(j);
            for r in 0..d {
                for c in 0..d {
                    out[(r, c)] += lambda * v[r] * v[c].conj();
                }
            }
        }
        out
    }

    /// Largest entry of `|reassemble() - u|`; rounding-level for a genuine
    /// orthogonal input.
    pub fn reassembly_error(&self, u: &DMatrix<f64>) -> f64 {
        let re = self.reassemble();
        let mut worst = 0.0f64;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                let diff = (re[(r, c)] - Complex64::new(u[(r, c)], 0.0)).norm();
                worst = worst.max(diff);
            }
        }
        worst
    }
}

/// Decompose `U` restricted to the (invariant) span of the orthonormal
/// columns `vg`, appending eigenpairs.
fn decompose_group(
    u: &DMatrix<f64>,
    vg: &DMatrix<f64>,
    phases: &mut Vec<f64>,
    vectors: &mut DMatrix<Complex64>,
    col: &mut usize,
) {
    let m = vg.ncols();
    let ag = vg.transpose() * u * vg;
    let kg = (&ag - ag.transpose()) * 0.5;
    let sg = kg.transpose() * &kg;
    let eig = sg.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());

    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] <= SUBGROUP_TOL
        {
            end += 1;
        }
        let mu: f64 = order[start..end]
            .iter()
            .map(|&oi| eig.eigenvalues[oi].max(0.0))
            .sum::<f64>()
            / (end - start) as f64;

        if mu.sqrt() <= S_MIN {
            // Real eigenvectors: eigenvalue +1 or -1 by the Rayleigh
            // quotient sign.
            for &oi in &order[start..end] {
                let x = eig.eigenvectors.column(oi).clone_owned();
                let c = (x.transpose() * &ag * &x)[(0, 0)];
                let full = vg * &x;
                phases.push(if c >= 0.0 { 0.0 } else { std::f64::consts::PI });
                for r in 0..u.nrows() {
                    vectors[(r, *col)] = Complex64::new(full[r], 0.0);
                }
                *col += 1;
            }
        } else {
            // Rotation planes: consume basis vectors in pairs (x, Kx/s).
            let mut remaining: Vec<DVector<f64>> = order[start..end]
                .iter()
                .map(|&oi| eig.eigenvectors.column(oi).clone_owned())
                .collect();
            while let Some(x) = remaining.first().cloned() {
                remaining.remove(0);
                let x = &x / x.norm();
                let y_raw = &kg * &x;
                let s = y_raw.norm();
                if s <= S_MIN {
                    // Numerical leftover; emit as a real eigenvector.
                    let c = (x.transpose() * &ag * &x)[(0, 0)];
                    let full = vg * &x;
                    phases.push(if c >= 0.0 { 0.0 } else { std::f64::consts::PI });
                    for r in 0..u.nrows() {
                        vectors[(r, *col)] = Complex64::new(full[r], 0.0);
                    }
                    *col += 1;
                    continue;
                }
                let y = &y_raw / s;
                // Re-orthonormalize what is left against the consumed pair.
                let mut next: Vec<DVector<f64>> = Vec::with_capacity(remaining.len());
                for mut z in remaining {
                    z -= &x * x.dot(&z);
                    z -= &y * y.dot(&z);
                    for f in &next {
                        let proj = f.dot(&z);
                        z -= f * proj;
                    }
                    let n = z.norm();
                    if n > 1e-8 {
                        next.push(z / n);
                    }
                }
                remaining = next;

                let c = 0.5
                    * ((x.transpose() * &ag * &x)[(0, 0)] + (y.transpose() * &ag * &y)[(0, 0)]);
                let sv = (y.transpose() * &kg * &x)[(0, 0)];
                let theta = sv.atan2(c);
                let fx = vg * &x;
                let fy = vg * &y;
                let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
                for r in 0..u.nrows() {
                    // (fx - i fy)/sqrt(2) has eigenvalue exp(+i theta).
                    vectors[(r, *col)] = Complex64::new(fx[r], -fy[r]) * inv_sqrt2;
                    vectors[(r, *col + 1)] = Complex64::new(fx[r], fy[r]) * inv_sqrt2;
                }
                phases.push(theta);
                phases.push(-theta);
                *col += 2;
            }
        }
        start = end;
    }
}
