//! Facet surfaces `Gamma_h` with vertices on the exact surface, their edge
//! adjacency, conormals and the symmetric edge normal used by the jump terms.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CdgError, Result};
use crate::geometry::{ImplicitSurface, Vec3};

/// Faces are counter-clockwise when seen from outside.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub surface: ImplicitSurface,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    /// Maximum edge length.
    pub h: f64,
    pub ndof: usize,
    pub nvertices: usize,
    pub nfaces: usize,
    pub nedges: usize,
}

impl MeshStats {
    pub fn euler_characteristic(&self) -> i64 {
        self.nvertices as i64 - self.nedges as i64 + self.nfaces as i64
    }
}

/// Per-face geometry of the facet surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceGeometry {
    pub normal: Vec3,
    pub area: f64,
    pub centroid: Vec3,
}

/// Data attached to an interior edge shared by the faces `K+` and `K-`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeAdjacency {
    /// `[K+, K-]`.
    pub faces: [usize; 2],
    /// Local slot of the edge in each face (the index of the opposite vertex).
    pub local: [usize; 2],
    /// Endpoints with `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    pub midpoint: Vec3,
    pub length: f64,
    /// Outward unit conormals `[nu+, nu-]`, each in its own facet plane.
    pub conormals: [Vec3; 2],
    /// `(nu+ - nu-) / (1 - nu+ . nu-)`.
    pub edge_normal: Vec3,
}

impl EdgeAdjacency {
    /// Point on the edge at parameter `t in [0, 1]`, measured from `vertices[0]`.
    pub fn point(&self, mesh: &TriangleMesh, t: f64) -> Vec3 {
        let a = mesh.vertices[self.vertices[0]];
        let b = mesh.vertices[self.vertices[1]];
        a + (b - a) * t
    }
}

/// Face/edge incidence of a closed facet surface.
#[derive(Debug, Clone)]
pub struct Adjacency {
    pub faces: Vec<FaceGeometry>,
    pub edges: Vec<EdgeAdjacency>,
    /// `face_edges[k][i]` is the edge opposite local vertex `i` of face `k`.
    pub face_edges: Vec<[usize; 3]>,
}

/// Unit normal, area and centroid of a triangle.
pub fn triangle_geometry(a: &Vec3, b: &Vec3, c: &Vec3) -> FaceGeometry {
    let cross = (b - a).cross(&(c - a));
    let norm = cross.norm();
    FaceGeometry { normal: cross / norm, area: 0.5 * norm, centroid: (a + b + c) / 3.0 }
}

/// Outward conormal of the edge `a -> b` of a face with normal `n`.
fn conormal(a: &Vec3, b: &Vec3, n: &Vec3) -> Vec3 {
    (b - a).normalize().cross(n)
}

/// Symmetric edge normal from the two face conormals.
pub fn edge_normal(plus: &Vec3, minus: &Vec3) -> Vec3 {
    (plus - minus) / (1.0 - plus.dot(minus))
}

impl TriangleMesh {
    pub fn face_points(&self, k: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[k];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_geometry(&self, k: usize) -> FaceGeometry {
        let [a, b, c] = self.face_points(k);
        triangle_geometry(&a, &b, &c)
    }

    /// Unique undirected edges in order of first appearance (face, local slot).
    fn edge_map(&self) -> (Vec<[usize; 2]>, HashMap<(usize, usize), usize>, Vec<[usize; 3]>) {
        let mut index = HashMap::with_capacity(self.faces.len() * 3 / 2);
        let mut edges = Vec::with_capacity(self.faces.len() * 3 / 2);
        let mut face_edges = Vec::with_capacity(self.faces.len());
        for f in &self.faces {
            let mut slots = [0; 3];
            for (i, slot) in slots.iter_mut().enumerate() {
                let (a, b) = (f[(i + 1) % 3], f[(i + 2) % 3]);
                let key = (a.min(b), a.max(b));
                *slot = *index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
            }
            face_edges.push(slots);
        }
        (edges, index, face_edges)
    }

    pub fn stats(&self) -> MeshStats {
        let (edges, _, _) = self.edge_map();
        let h = edges
            .iter()
            .map(|[a, b]| (self.vertices[*a] - self.vertices[*b]).norm())
            .fold(0.0, f64::max);
        MeshStats {
            h,
            ndof: self.vertices.len() + edges.len(),
            nvertices: self.vertices.len(),
            nfaces: self.faces.len(),
            nedges: edges.len(),
        }
    }

    /// Total area of the facet surface.
    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|k| self.face_geometry(k).area).sum()
    }

    /// Flips faces whose normal disagrees with the surface normal at the centroid.
    fn orient_outward(&mut self) -> Result<()> {
        for k in 0..self.faces.len() {
            let g = self.face_geometry(k);
            let n = self.surface.jet(&g.centroid)?.n;
            if g.normal.dot(&n) < 0.0 {
                self.faces[k].swap(1, 2);
            }
        }
        Ok(())
    }

    /// Writes the mesh in ASCII OFF format.
    pub fn write_off<W: Write>(&self, mut out: W) -> io::Result<()> {
        let stats = self.stats();
        writeln!(out, "OFF")?;
        writeln!(out, "{} {} {}", stats.nvertices, stats.nfaces, stats.nedges)?;
        for v in &self.vertices {
            writeln!(out, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z)?;
        }
        for f in &self.faces {
            writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
        }
        Ok(())
    }
}

/// Statistics of a mesh: max edge length and entity counts.
pub fn mesh_size(mesh: &TriangleMesh) -> MeshStats {
    mesh.stats()
}

/// Structured mesh family. Sphere: icosahedron refined `resolution` times with
/// radial projection. Torus: `(3 * 2^res) x (5 * 2^res)` parameter grid with
/// each quad split along a fixed (shorter) diagonal.
pub fn generate_mesh(surface: ImplicitSurface, resolution: u32) -> Result<TriangleMesh> {
    let mut mesh = match surface {
        ImplicitSurface::Sphere { radius } => icosphere(radius, resolution, surface),
        ImplicitSurface::Torus { major, minor } => {
            let n_theta = 3usize << resolution;
            let n_phi = 5usize << resolution;
            torus_grid(major, minor, n_theta, n_phi, surface)
        }
        ImplicitSurface::Plane => {
            return Err(CdgError::InvalidInput("the plane has no closed mesh family; use flat_patch".into()))
        }
    };
    mesh.orient_outward()?;
    Ok(mesh)
}

fn icosphere(radius: f64, resolution: u32, surface: ImplicitSurface) -> TriangleMesh {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, g, 0.0],
        [1.0, g, 0.0],
        [-1.0, -g, 0.0],
        [1.0, -g, 0.0],
        [0.0, -1.0, g],
        [0.0, 1.0, g],
        [0.0, -1.0, -g],
        [0.0, 1.0, -g],
        [g, 0.0, -1.0],
        [g, 0.0, 1.0],
        [-g, 0.0, -1.0],
        [-g, 0.0, 1.0],
    ];
    let mut vertices: Vec<Vec3> = raw.iter().map(|v| Vec3::from(*v).normalize() * radius).collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..resolution {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut refined = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = (vertices[a] + vertices[b]).normalize() * radius;
                vertices.push(m);
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            refined.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = refined;
    }
    TriangleMesh { vertices, faces, surface }
}

fn torus_grid(major: f64, minor: f64, n_theta: usize, n_phi: usize, surface: ImplicitSurface) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let theta = 2.0 * PI * i as f64 / n_theta as f64;
        let w = major + minor * theta.cos();
        for j in 0..n_phi {
            let phi = 2.0 * PI * j as f64 / n_phi as f64;
            vertices.push(Vec3::new(w * phi.cos(), w * phi.sin(), minor * theta.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % n_theta) * n_phi + (j % n_phi);
    let mut faces = Vec::with_capacity(2 * n_theta * n_phi);
    for i in 0..n_theta {
        for j in 0..n_phi {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let d_main = (vertices[v00] - vertices[v11]).norm();
            let d_anti = (vertices[v10] - vertices[v01]).norm();
            // the grid quads are isosceles trapezoids, so ties resolve to the main diagonal
            if d_anti < d_main * (1.0 - 1e-12) {
                faces.push([v00, v01, v10]);
                faces.push([v10, v01, v11]);
            } else {
                faces.push([v00, v11, v10]);
                faces.push([v00, v01, v11]);
            }
        }
    }
    TriangleMesh { vertices, faces, surface }
}

/// Flat `n x n` patch of the unit square in the `z = 0` plane (open; test fixture).
pub fn flat_patch(n: usize) -> TriangleMesh {
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        for j in 0..=n {
            vertices.push(Vec3::new(j as f64 / n as f64, i as f64 / n as f64, 0.0));
        }
    }
    let id = |i: usize, j: usize| i * (n + 1) + j;
    let mut faces = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            faces.push([id(i, j), id(i, j + 1), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i + 1, j)]);
        }
    }
    TriangleMesh { vertices, faces, surface: ImplicitSurface::Plane }
}

/// Moves every vertex by a uniformly random tangential offset of length at
/// most `amplitude` times its shortest incident edge and projects it back
/// onto the surface.
///
/// The generator is ChaCha8 seeded with `seed`, so results are reproducible
/// across platforms.
pub fn perturb_vertices(mesh: &TriangleMesh, amplitude: f64, seed: u64) -> Result<TriangleMesh> {
    if !(0.0..=0.3).contains(&amplitude) {
        return Err(CdgError::InvalidInput(format!("perturbation amplitude must lie in [0, 0.3], got {amplitude}")));
    }
    if amplitude == 0.0 {
        return Ok(mesh.clone());
    }
    let h = mesh.stats().h;
    // displacements scale with the shortest incident edge so that graded
    // meshes (the torus grid) keep their small elements shape-regular
    let mut local = vec![f64::INFINITY; mesh.vertices.len()];
    for f in &mesh.faces {
        for i in 0..3 {
            let (a, b) = (f[i], f[(i + 1) % 3]);
            let len = (mesh.vertices[a] - mesh.vertices[b]).norm();
            local[a] = local[a].min(len);
            local[b] = local[b].min(len);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = Vec::with_capacity(mesh.vertices.len());
    for (v, h_local) in mesh.vertices.iter().zip(&local) {
        let radius = amplitude * h_local;
        let n = mesh.surface.jet(v)?.n;
        let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let t1 = n.cross(&helper).normalize();
        let t2 = n.cross(&t1);
        let r = radius * rng.random::<f64>().sqrt();
        let angle = 2.0 * PI * rng.random::<f64>();
        let moved = v + (t1 * angle.cos() + t2 * angle.sin()) * r;
        vertices.push(mesh.surface.closest_point(&moved)?);
    }
    let out = TriangleMesh { vertices, faces: mesh.faces.clone(), surface: mesh.surface };
    let min_area = 1e-3 * h * h / 2.0;
    for k in 0..out.faces.len() {
        let g = out.face_geometry(k);
        if !(g.area >= min_area) {
            return Err(CdgError::DegenerateFace { face: k, area: g.area });
        }
    }
    Ok(out)
}

/// Pairs every edge with its two faces and computes conormals and edge normals.
pub fn build_adjacency(mesh: &TriangleMesh) -> Result<Adjacency> {
    let faces: Vec<FaceGeometry> = (0..mesh.faces.len()).map(|k| mesh.face_geometry(k)).collect();
    let (edge_list, _, face_edges) = mesh.edge_map();
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(2); edge_list.len()];
    for (k, slots) in face_edges.iter().enumerate() {
        for (i, &e) in slots.iter().enumerate() {
            incident[e].push((k, i));
        }
    }
    let mut edges = Vec::with_capacity(edge_list.len());
    for (e, inc) in incident.iter().enumerate() {
        let [a, b] = edge_list[e];
        if inc.len() != 2 {
            return Err(CdgError::NonManifoldEdge { a, b, count: inc.len() });
        }
        let conormals = [0, 1].map(|s| {
            let (k, i) = inc[s];
            let f = mesh.faces[k];
            let (p, q) = (mesh.vertices[f[(i + 1) % 3]], mesh.vertices[f[(i + 2) % 3]]);
            conormal(&p, &q, &faces[k].normal)
        });
        let (va, vb) = (mesh.vertices[a], mesh.vertices[b]);
        edges.push(EdgeAdjacency {
            faces: [inc[0].0, inc[1].0],
            local: [inc[0].1, inc[1].1],
            vertices: [a, b],
            midpoint: (va + vb) * 0.5,
            length: (vb - va).norm(),
            conormals,
            edge_normal: edge_normal(&conormals[0], &conormals[1]),
        });
    }
    Ok(Adjacency { faces, edges, face_edges })
}

/// Outward conormals of the three edges of a face, indexed by opposite vertex.
pub fn face_conormals(mesh: &TriangleMesh, k: usize) -> [Vec3; 3] {
    let p = mesh.face_points(k);
    let n = mesh.face_geometry(k).normal;
    [0, 1, 2].map(|i| conormal(&p[(i + 1) % 3], &p[(i + 2) % 3], &n))
}

/// Structured meshes at the given levels, optionally perturbed.
pub fn mesh_family(
    surface: ImplicitSurface,
    levels: &[u32],
    perturbation: Option<(f64, u64)>,
) -> Result<Vec<TriangleMesh>> {
    levels
        .iter()
        .map(|&level| {
            let mesh = generate_mesh(surface, level)?;
            match perturbation {
                Some((amplitude, seed)) => perturb_vertices(&mesh, amplitude, seed),
                None => Ok(mesh),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn icosahedron_counts() {
        let m = generate_mesh(ImplicitSurface::unit_sphere(), 0).unwrap();
        let s = m.stats();
        assert_eq!((s.nvertices, s.nfaces, s.nedges), (12, 20, 30));
        assert_eq!(s.euler_characteristic(), 2);
        assert_eq!(s.ndof, 42);
        let edge = 4.0 / (10.0 + 2.0 * 5f64.sqrt()).sqrt();
        assert_relative_eq!(s.h, edge, epsilon = 1e-14);
        assert_relative_eq!(s.h, 1.0515, epsilon = 1e-4);
    }

    #[test]
    fn torus_counts() {
        let m = generate_mesh(ImplicitSurface::model_torus(), 1).unwrap();
        let s = m.stats();
        assert_eq!((s.nvertices, s.nfaces, s.nedges), (60, 120, 180));
        assert_eq!(s.euler_characteristic(), 0);
        assert_eq!(m.stats(), s);
    }

    #[test]
    fn outward_orientation() {
        for (surface, level) in [(ImplicitSurface::unit_sphere(), 3), (ImplicitSurface::model_torus(), 2)] {
            let m = generate_mesh(surface, level).unwrap();
            if level == 3 {
                assert_eq!(m.faces.len(), 1280);
            }
            for k in 0..m.faces.len() {
                let g = m.face_geometry(k);
                assert!(g.normal.dot(&surface.jet(&g.centroid).unwrap().n) > 0.0);
            }
        }
    }

    #[test]
    fn vertices_on_surface_and_closed() {
        for (surface, level) in [(ImplicitSurface::unit_sphere(), 3), (ImplicitSurface::model_torus(), 3)] {
            let m = generate_mesh(surface, level).unwrap();
            assert!(m.vertices.iter().all(|v| surface.distance(v).abs() <= 1e-10));
            let mut total = Vec3::zeros();
            let mut area = 0.0;
            for k in 0..m.faces.len() {
                let g = m.face_geometry(k);
                total += g.normal * g.area;
                area += g.area;
            }
            assert!(total.norm() <= 1e-10 * area);
            assert_eq!(m.stats().euler_characteristic(), surface.euler_characteristic().unwrap());
        }
    }

    #[test]
    fn refinement_halves_h() {
        // projecting the first midpoints of the flat icosahedron lengthens edges
        // (ratio ~0.588); from level 1 on the ratio settles near 1/2
        for level in 1..5 {
            let a = generate_mesh(ImplicitSurface::unit_sphere(), level).unwrap().stats().h;
            let b = generate_mesh(ImplicitSurface::unit_sphere(), level + 1).unwrap().stats().h;
            let ratio = b / a;
            assert!((0.45..=0.55).contains(&ratio), "ratio {ratio} at level {level}");
        }
    }

    #[test]
    fn perturbation_contract() {
        let m = generate_mesh(ImplicitSurface::unit_sphere(), 3).unwrap();
        assert_eq!(perturb_vertices(&m, 0.0, 5).unwrap(), m);
        let a = perturb_vertices(&m, 0.2, 42).unwrap();
        let b = perturb_vertices(&m, 0.2, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.vertices, m.vertices);
        assert_eq!(a.faces, m.faces);
        assert!(a.vertices.iter().all(|v| a.surface.distance(v).abs() <= 1e-10));
        let h = m.stats().h;
        for (p, q) in a.vertices.iter().zip(&m.vertices) {
            assert!((p - q).norm() <= 0.2 * h * 1.01);
        }
        assert!(perturb_vertices(&m, 0.5, 1).is_err());
    }

    #[test]
    fn adjacency_pairs_every_edge() {
        let m = generate_mesh(ImplicitSurface::model_torus(), 1).unwrap();
        let adj = build_adjacency(&m).unwrap();
        assert_eq!(adj.edges.len(), 180);
        for e in &adj.edges {
            let t = (m.vertices[e.vertices[1]] - m.vertices[e.vertices[0]]).normalize();
            for s in 0..2 {
                let nu = e.conormals[s];
                let face = &adj.faces[e.faces[s]];
                assert!(nu.dot(&t).abs() < 1e-13);
                assert!(nu.dot(&face.normal).abs() < 1e-13);
                // points away from the face
                assert!(nu.dot(&(e.midpoint - face.centroid)) > 0.0);
            }
        }
    }

    #[test]
    fn open_patch_is_rejected() {
        let m = flat_patch(2);
        assert!(matches!(build_adjacency(&m), Err(CdgError::NonManifoldEdge { count: 1, .. })));
    }

    #[test]
    fn coplanar_edge_normal_is_conormal() {
        let plus = Vec3::new(0.0, 1.0, 0.0);
        let minus = -plus;
        assert_eq!(1.0 - plus.dot(&minus), 2.0);
        assert_eq!(edge_normal(&plus, &minus), plus);
    }

    #[test]
    fn off_header() {
        let m = generate_mesh(ImplicitSurface::unit_sphere(), 0).unwrap();
        let mut buf = Vec::new();
        m.write_off(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "OFF");
        assert_eq!(lines[1], "12 20 30");
        assert_eq!(lines.len(), 2 + 12 + 20);
        assert!(lines[14].starts_with("3 "));
    }
}
