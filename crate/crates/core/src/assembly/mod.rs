//! The c/dG system: facet Laplacian stiffness, symmetric interior-penalty
//! edge couplings, the mean-corrected load and the mean-zero constrained solve.

mod load;
mod solve;

pub use load::{load_vector, LoadVector};
pub use solve::{solve, Solution};

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CdgError, Result};
use crate::exec::{map_indexed, Execution};
use crate::femspace::{edge_rule, triangle_rule, FacetOperators, P2Space};
use crate::geometry::Vec3;
use crate::sparse::{CsrMatrix, SymmetricBuilder};

pub type ElementMatrix = SMatrix<f64, 6, 6>;
pub type EdgeMatrix = SMatrix<f64, 12, 12>;

/// Which length enters the `beta / h` penalty weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HMode {
    /// Global maximum edge length.
    #[default]
    #[serde(alias = "global")]
    GlobalH,
    /// Length of the edge itself.
    #[serde(alias = "per-edge")]
    PerEdge,
}

/// Assembled stiffness matrix with the constraint vector `m_i = int phi_i`.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub mass: Vec<f64>,
    /// `|Gamma_h|`.
    pub area: f64,
    pub beta: f64,
    pub h_mode: HMode,
    /// Global mesh size used for the penalty in `GlobalH` mode.
    pub h: f64,
}

/// `(Delta u, Delta v)_K = area * L L^T` for the constant facet Laplacians `L`.
pub fn element_matrix(ops: &FacetOperators) -> ElementMatrix {
    let l = &ops.laplacians;
    let mut m = ElementMatrix::zeros();
    for i in 0..6 {
        for j in i..6 {
            let v = ops.area * l[i] * l[j];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// The two facets meeting at an edge, seen from the edge.
///
/// `ends[s]` holds the local vertex indices (in face `s`) of the edge start
/// and end points, so that both faces share the parametrization
/// `x(t) = start + t (end - start)`.
#[derive(Debug, Clone, Copy)]
pub struct EdgeSides<'a> {
    pub facets: [&'a FacetOperators; 2],
    pub ends: [[usize; 2]; 2],
    pub conormals: [Vec3; 2],
    pub length: f64,
}

/// Jump of the conormal derivative and average of the facet Laplacian of each
/// of the 12 local basis functions (6 of `K+` then 6 of `K-`) at an edge point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTrace {
    pub jump: [f64; 12],
    pub average: [f64; 12],
}

impl EdgeSides<'_> {
    pub fn trace(&self, t: f64) -> EdgeTrace {
        let mut jump = [0.0; 12];
        let mut average = [0.0; 12];
        for s in 0..2 {
            let mut bary = [0.0; 3];
            bary[self.ends[s][0]] = 1.0 - t;
            bary[self.ends[s][1]] = t;
            let grads = self.facets[s].gradients(bary);
            for i in 0..6 {
                // nu_E . [[grad w]] = nu+ . grad w+ + nu- . grad w-
                jump[6 * s + i] = self.conormals[s].dot(&grads[i]);
                average[6 * s + i] = 0.5 * self.facets[s].laplacians[i];
            }
        }
        EdgeTrace { jump, average }
    }
}

/// Consistency, symmetry and penalty terms of one edge over the concatenated
/// local dofs of `K+` and `K-`.
pub fn edge_matrix(sides: &EdgeSides<'_>, beta: f64, h_penalty: f64) -> EdgeMatrix {
    let rule = edge_rule();
    let penalty = beta / h_penalty;
    let mut m = EdgeMatrix::zeros();
    for (&t, &w) in rule.points.iter().zip(&rule.weights) {
        let EdgeTrace { jump, average } = sides.trace(t);
        let w = w * sides.length;
        for a in 0..12 {
            for b in a..12 {
                m[(a, b)] += w * (penalty * jump[a] * jump[b] - average[a] * jump[b] - jump[a] * average[b]);
            }
        }
    }
    for a in 0..12 {
        for b in 0..a {
            m[(a, b)] = m[(b, a)];
        }
    }
    m
}

impl P2Space {
    /// Both faces of edge `e` with their shared edge parametrization.
    pub fn edge_sides(&self, e: usize) -> EdgeSides<'_> {
        let edge = &self.adjacency.edges[e];
        let ends = [0, 1].map(|s| {
            let face = &self.mesh.faces[edge.faces[s]];
            let local = |v: usize| face.iter().position(|&x| x == v).expect("edge vertex not in face");
            [local(edge.vertices[0]), local(edge.vertices[1])]
        });
        EdgeSides {
            facets: [&self.facets[edge.faces[0]], &self.facets[edge.faces[1]]],
            ends,
            conormals: edge.conormals,
            length: edge.length,
        }
    }

    /// Global dofs of the 12 local edge functions (`K+` then `K-`).
    pub fn edge_dofs(&self, e: usize) -> [usize; 12] {
        let [kp, km] = self.adjacency.edges[e].faces;
        let mut dofs = [0; 12];
        dofs[..6].copy_from_slice(&self.dofs.faces[kp]);
        dofs[6..].copy_from_slice(&self.dofs.faces[km]);
        dofs
    }

    /// Penalty length of edge `e`.
    pub fn penalty_length(&self, e: usize, h_mode: HMode) -> f64 {
        match h_mode {
            HMode::GlobalH => self.h,
            HMode::PerEdge => self.adjacency.edges[e].length,
        }
    }
}

/// `m_i = int_{Gamma_h} phi_i` on one face.
fn element_mass(ops: &FacetOperators) -> [f64; 6] {
    let rule = triangle_rule();
    let mut out = [0.0; 6];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let phi = ops.values(*p);
        for i in 0..6 {
            out[i] += w * 2.0 * ops.area * phi[i];
        }
    }
    out
}

/// Assembles `A`, `m` and `|Gamma_h|`.
///
/// Local matrices are computed with `exec`; the scatter always runs in
/// (face index, edge index) order, so both modes give identical matrices.
pub fn assemble(space: &P2Space, beta: f64, h_mode: HMode, exec: Execution) -> Result<SparseSystem> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(CdgError::InvalidInput(format!("penalty parameter must be positive, got {beta}")));
    }
    let nfaces = space.facets.len();
    let nedges = space.adjacency.edges.len();
    let elements = map_indexed(exec, nfaces, |k| (element_matrix(&space.facets[k]), element_mass(&space.facets[k])));
    let edges = map_indexed(exec, nedges, |e| {
        edge_matrix(&space.edge_sides(e), beta, space.penalty_length(e, h_mode))
    });

    let edge_dofs: Vec<[usize; 12]> = (0..nedges).map(|e| space.edge_dofs(e)).collect();
    let mut builder = SymmetricBuilder::new(space.ndof(), edge_dofs.iter().map(|d| &d[..]));
    let mut mass = vec![0.0; space.ndof()];
    for (k, (local, m)) in elements.iter().enumerate() {
        let dofs = &space.dofs.faces[k];
        builder.add_local(dofs, local.transpose().as_slice());
        for (i, v) in dofs.iter().zip(m) {
            mass[*i] += v;
        }
    }
    for (dofs, local) in edge_dofs.iter().zip(&edges) {
        builder.add_local(dofs, local.transpose().as_slice());
    }
    let area = space.facets.iter().map(|f| f.area).sum();
    Ok(SparseSystem { matrix: builder.finish(), mass, area, beta, h_mode, h: space.h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ImplicitSurface;
    use crate::mesh::generate_mesh;
    use nalgebra::DMatrix;

    fn icosahedron_space() -> P2Space {
        P2Space::new(generate_mesh(ImplicitSurface::unit_sphere(), 0).unwrap()).unwrap()
    }

    #[test]
    fn element_matrix_is_rank_one() {
        let pts = [Vec3::new(0.1, 0.0, 0.2), Vec3::new(1.0, 0.3, 0.1), Vec3::new(0.2, 0.9, 0.5)];
        let ops = FacetOperators::new(0, &pts).unwrap();
        let m = element_matrix(&ops);
        let ones = nalgebra::SVector::<f64, 6>::repeat(1.0);
        assert!((m * ones).norm() < 1e-12 * m.norm());
        let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let l2: f64 = ops.laplacians.iter().map(|l| l * l).sum();
        assert!((eig[5] - ops.area * l2).abs() < 1e-12 * eig[5]);
        assert!(eig[..5].iter().all(|e| e.abs() < 1e-12 * eig[5]));
    }

    #[test]
    fn icosahedron_system_invariants() {
        let space = icosahedron_space();
        let sys = assemble(&space, 10.0, HMode::GlobalH, Execution::Sequential).unwrap();
        assert!(sys.matrix.is_symmetric());
        let ones = vec![1.0; space.ndof()];
        let a1 = sys.matrix.matvec(&ones);
        let max = a1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max <= 1e-10 * sys.matrix.frobenius_norm());
        let total: f64 = sys.mass.iter().sum();
        assert!((total - sys.area).abs() <= 1e-12 * sys.area);
        assert!((sys.area - space.mesh.area()).abs() <= 1e-12 * sys.area);
    }

    #[test]
    fn penalty_is_monotone() {
        let space = icosahedron_space();
        let a = assemble(&space, 10.0, HMode::GlobalH, Execution::Sequential).unwrap();
        let b = assemble(&space, 20.0, HMode::GlobalH, Execution::Sequential).unwrap();
        let v: Vec<f64> = (0..space.ndof()).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.1).collect();
        assert!(b.matrix.quadratic_form(&v) > a.matrix.quadratic_form(&v));
    }

    #[test]
    fn parallel_assembly_matches_sequential() {
        let space = P2Space::new(generate_mesh(ImplicitSurface::model_torus(), 2).unwrap()).unwrap();
        let s = assemble(&space, 10.0, HMode::GlobalH, Execution::Sequential).unwrap();
        let p = assemble(&space, 10.0, HMode::GlobalH, Execution::Parallel).unwrap();
        assert_eq!(s.matrix, p.matrix);
        assert_eq!(s.mass, p.mass);
    }

    #[test]
    fn invalid_beta_rejected() {
        let space = icosahedron_space();
        assert!(assemble(&space, -1.0, HMode::GlobalH, Execution::Sequential).is_err());
        assert!(assemble(&space, 0.0, HMode::PerEdge, Execution::Sequential).is_err());
    }

    fn constrained_min_eigenvalue(sys: &SparseSystem) -> f64 {
        let n = sys.mass.len();
        let a = DMatrix::from_fn(n, n, |i, j| sys.matrix.get(i, j));
        // orthonormal basis of {v : m^T v = 0} via a Householder-completed QR
        let mut basis = DMatrix::<f64>::zeros(n, n);
        basis.set_column(0, &nalgebra::DVector::from_column_slice(&sys.mass));
        for j in 1..n {
            basis[(j, j)] = 1.0;
        }
        let q = basis.qr().q();
        let z = q.columns(1, n - 1).into_owned();
        let reduced = z.transpose() * a * &z;
        reduced.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn coercivity_probe() {
        let space = icosahedron_space();
        let sys = assemble(&space, 10.0, HMode::GlobalH, Execution::Sequential).unwrap();
        let min = constrained_min_eigenvalue(&sys);
        assert!(min > 0.0, "min constrained eigenvalue {min}");
        let weak = assemble(&space, 0.01, HMode::GlobalH, Execution::Sequential).unwrap();
        assert!(constrained_min_eigenvalue(&weak) < 0.0);
    }

    #[test]
    fn per_edge_and_global_penalties_are_comparable() {
        let space = P2Space::new(generate_mesh(ImplicitSurface::unit_sphere(), 2).unwrap()).unwrap();
        let g = assemble(&space, 10.0, HMode::GlobalH, Execution::Sequential).unwrap();
        let e = assemble(&space, 10.0, HMode::PerEdge, Execution::Sequential).unwrap();
        let v: Vec<f64> = space.dof_points().iter().map(|x| x.z * x.z + 0.3 * x.x).collect();
        let ratio = e.matrix.quadratic_form(&v) / g.matrix.quadratic_form(&v);
        let min_len = space.adjacency.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min);
        assert!(ratio >= 1.0 - 1e-12 && ratio <= 2.0 * space.h / min_len, "ratio {ratio}");
    }
}
