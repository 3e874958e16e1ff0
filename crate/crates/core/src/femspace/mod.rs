//! Continuous piecewise-quadratic Lagrange space on the facet surface.
//!
//! Local dof order on a face is `[v0, v1, v2, e0, e1, e2]` where `e_i` is the
//! midpoint of the edge opposite vertex `i`. Globally, vertex dofs come first,
//! then edge dofs in adjacency order.

mod quadrature;

pub use quadrature::{edge_rule, triangle_rule, EdgeRule, QuadratureRule, TriangleRule};

use nalgebra::{Matrix2, Vector2};

use crate::error::{CdgError, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::geometry::Vec3;
use crate::mesh::{build_adjacency, Adjacency, TriangleMesh};

/// Values and reference gradients `d/dxi` of the six quadratic Lagrange basis
/// functions at barycentric coordinates `(l0, l1, l2)`, with `xi = (l1, l2)`.
pub fn reference_p2(bary: [f64; 3]) -> ([f64; 6], [[f64; 2]; 6]) {
    const DL: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let l = bary;
    let mut values = [0.0; 6];
    let mut grads = [[0.0; 2]; 6];
    for i in 0..3 {
        values[i] = l[i] * (2.0 * l[i] - 1.0);
        let c = 4.0 * l[i] - 1.0;
        grads[i] = [c * DL[i][0], c * DL[i][1]];
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        values[3 + i] = 4.0 * l[j] * l[k];
        grads[3 + i] = [
            4.0 * (l[j] * DL[k][0] + l[k] * DL[j][0]),
            4.0 * (l[j] * DL[k][1] + l[k] * DL[j][1]),
        ];
    }
    (values, grads)
}

/// Orthonormal tangent frame of a facet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetFrame {
    pub origin: Vec3,
    pub t1: Vec3,
    pub t2: Vec3,
    pub normal: Vec3,
    /// Maps reference coordinates to in-frame coordinates.
    pub jacobian: Matrix2<f64>,
    pub inverse: Matrix2<f64>,
}

impl FacetFrame {
    /// Frame with `t1` along the longest edge and `t2 = n x t1`.
    pub fn new(face: usize, points: &[Vec3; 3]) -> Result<Self> {
        let [x0, x1, x2] = points;
        let edges = [x1 - x0, x2 - x1, x0 - x2];
        let longest = edges
            .iter()
            .copied()
            .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))
            .unwrap_or_else(|| edges[0]);
        let cross = (x1 - x0).cross(&(x2 - x0));
        let area = 0.5 * cross.norm();
        if !(area >= 1e-14 * longest.norm_squared()) {
            return Err(CdgError::DegenerateTriangle { face, area });
        }
        let normal = cross.normalize();
        let t1 = longest.normalize();
        let t2 = normal.cross(&t1);
        let (a, b) = (x1 - x0, x2 - x0);
        let jacobian = Matrix2::new(t1.dot(&a), t1.dot(&b), t2.dot(&a), t2.dot(&b));
        let inverse = jacobian.try_inverse().ok_or(CdgError::DegenerateTriangle { face, area })?;
        Ok(FacetFrame { origin: *x0, t1, t2, normal, jacobian, inverse })
    }

    pub fn to_frame(&self, x: &Vec3) -> Vector2<f64> {
        let r = x - self.origin;
        Vector2::new(self.t1.dot(&r), self.t2.dot(&r))
    }

    pub fn from_frame(&self, v: &Vector2<f64>) -> Vec3 {
        self.t1 * v.x + self.t2 * v.y
    }

    /// Barycentric coordinates of a point in the facet plane.
    pub fn barycentric(&self, x: &Vec3) -> [f64; 3] {
        let xi = self.inverse * self.to_frame(x);
        [1.0 - xi.x - xi.y, xi.x, xi.y]
    }
}

/// Tangential calculus of the P2 basis on one facet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacetOperators {
    pub frame: FacetFrame,
    pub area: f64,
    /// Tangential gradients of the barycentric coordinates.
    pub bary_gradients: [Vec3; 3],
    /// Facet Laplacians of the six basis functions (constant on the facet).
    pub laplacians: [f64; 6],
}

impl FacetOperators {
    pub fn new(face: usize, points: &[Vec3; 3]) -> Result<Self> {
        let frame = FacetFrame::new(face, points)?;
        let area = 0.5 * frame.jacobian.determinant();
        // columns of J^{-T} are the in-frame gradients of xi1, xi2
        let inv_t = frame.inverse.transpose();
        let g1 = frame.from_frame(&inv_t.column(0).into_owned());
        let g2 = frame.from_frame(&inv_t.column(1).into_owned());
        let g = [-(g1 + g2), g1, g2];
        let mut laplacians = [0.0; 6];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            laplacians[i] = 4.0 * g[i].norm_squared();
            laplacians[3 + i] = 8.0 * g[j].dot(&g[k]);
        }
        Ok(FacetOperators { frame, area, bary_gradients: g, laplacians })
    }

    pub fn values(&self, bary: [f64; 3]) -> [f64; 6] {
        reference_p2(bary).0
    }

    /// Tangential gradients `grad_{Gamma_h} phi_i` at barycentric coordinates `bary`.
    pub fn gradients(&self, bary: [f64; 3]) -> [Vec3; 6] {
        let g = &self.bary_gradients;
        let l = bary;
        let mut out = [Vec3::zeros(); 6];
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            out[i] = g[i] * (4.0 * l[i] - 1.0);
            out[3 + i] = (g[k] * l[j] + g[j] * l[k]) * 4.0;
        }
        out
    }

    /// Maps barycentric coordinates to the physical point on the facet.
    pub fn point(&self, bary: [f64; 3]) -> Vec3 {
        let xi = Vector2::new(bary[1], bary[2]);
        self.frame.origin + self.frame.from_frame(&(self.frame.jacobian * xi))
    }
}

/// Global numbering of the continuous P2 dofs.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub ndof: usize,
    pub nvertices: usize,
    pub faces: Vec<[usize; 6]>,
}

impl DofMap {
    pub fn new(mesh: &TriangleMesh, adjacency: &Adjacency) -> Self {
        let nv = mesh.vertices.len();
        let faces = mesh
            .faces
            .iter()
            .zip(&adjacency.face_edges)
            .map(|(f, e)| [f[0], f[1], f[2], nv + e[0], nv + e[1], nv + e[2]])
            .collect();
        DofMap { ndof: nv + adjacency.edges.len(), nvertices: nv, faces }
    }
}

/// Mesh, adjacency, dof map and facet operators bundled for assembly and post-processing.
#[derive(Debug, Clone)]
pub struct P2Space {
    pub mesh: TriangleMesh,
    pub adjacency: Adjacency,
    pub dofs: DofMap,
    pub facets: Vec<FacetOperators>,
    /// Maximum edge length.
    pub h: f64,
}

impl P2Space {
    pub fn new(mesh: TriangleMesh) -> Result<Self> {
        Self::with_execution(mesh, Execution::default())
    }

    pub fn with_execution(mesh: TriangleMesh, exec: Execution) -> Result<Self> {
        let adjacency = build_adjacency(&mesh)?;
        let dofs = DofMap::new(&mesh, &adjacency);
        let facets = try_map_indexed(exec, mesh.faces.len(), |k| FacetOperators::new(k, &mesh.face_points(k)))?;
        let h = adjacency.edges.iter().map(|e| e.length).fold(0.0, f64::max);
        Ok(P2Space { mesh, adjacency, dofs, facets, h })
    }

    pub fn ndof(&self) -> usize {
        self.dofs.ndof
    }

    /// Physical location of every dof: vertices, then edge midpoints.
    pub fn dof_points(&self) -> Vec<Vec3> {
        let mut pts = self.mesh.vertices.clone();
        pts.extend(self.adjacency.edges.iter().map(|e| e.midpoint));
        pts
    }

    /// Nodal interpolant of `g o p`.
    pub fn interpolate_lifted<F>(&self, g: F) -> Result<Vec<f64>>
    where
        F: Fn(&Vec3) -> f64,
    {
        self.dof_points()
            .iter()
            .map(|x| self.mesh.surface.closest_point(x).map(|p| g(&p)))
            .collect()
    }

    /// Value of the P2 function with coefficients `coeffs` on face `k`.
    pub fn eval(&self, coeffs: &[f64], k: usize, bary: [f64; 3]) -> f64 {
        let phi = self.facets[k].values(bary);
        self.dofs.faces[k].iter().zip(phi).map(|(&i, v)| coeffs[i] * v).sum()
    }

    /// Facet gradient of the P2 function on face `k`.
    pub fn eval_gradient(&self, coeffs: &[f64], k: usize, bary: [f64; 3]) -> Vec3 {
        let g = self.facets[k].gradients(bary);
        self.dofs.faces[k].iter().zip(g).map(|(&i, v)| v * coeffs[i]).sum()
    }

    /// Constant facet Laplacian of the P2 function on face `k`.
    pub fn eval_laplacian(&self, coeffs: &[f64], k: usize) -> f64 {
        let l = self.facets[k].laplacians;
        self.dofs.faces[k].iter().zip(l).map(|(&i, v)| coeffs[i] * v).sum()
    }
}
