//! Error norms, convergence orders, and numerical checks of the geometric
//! approximation estimates.

use serde::{Deserialize, Serialize};

use crate::assembly::{EdgeTrace, HMode};
use crate::error::{CdgError, Result};
use crate::exec::{max_indexed, sum_indexed, try_map_indexed, Execution};
use crate::femspace::{edge_rule, triangle_rule, P2Space};
use crate::geometry::{ImplicitSurface, Vec3};
use crate::mesh::{face_conormals, TriangleMesh};

/// Extension `g o p` of a surface function to the tubular neighborhood.
pub fn lift<G>(surface: &ImplicitSurface, g: G, x: &Vec3) -> Result<f64>
where
    G: Fn(&Vec3) -> f64,
{
    surface.closest_point(x).map(|p| g(&p))
}

/// `||u o p - u_h||` in `L^2(Gamma_h) / R`: the error with its mean removed.
pub fn l2_quotient_error<U>(space: &P2Space, coeffs: &[f64], exact: &U, exec: Execution) -> Result<f64>
where
    U: Fn(&Vec3) -> f64 + Sync,
{
    let rule = triangle_rule();
    let surface = space.mesh.surface;
    let errors = try_map_indexed(exec, space.facets.len(), |k| {
        let ops = &space.facets[k];
        rule.points
            .iter()
            .map(|b| {
                let p = surface.closest_point(&ops.point(*b))?;
                Ok(exact(&p) - space.eval(coeffs, k, *b))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let weight = |k: usize, q: usize| rule.weights[q] * 2.0 * space.facets[k].area;
    let area: f64 = space.facets.iter().map(|f| f.area).sum();
    let mean = sum_indexed(exec, errors.len(), |k| errors[k].iter().enumerate().map(|(q, e)| weight(k, q) * e).sum())
        / area;
    let sq = sum_indexed(exec, errors.len(), |k| {
        errors[k].iter().enumerate().map(|(q, e)| weight(k, q) * (e - mean).powi(2)).sum()
    });
    Ok(sq.sqrt())
}

/// Squared contributions of the discrete energy norm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyParts {
    pub laplacian: f64,
    pub average: f64,
    pub jump: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        (self.laplacian + self.average + self.jump).sqrt()
    }
}

/// Discrete energy norm of the P2 function `w`:
/// `sum_K ||Delta w||_K^2 + h ||{Delta w}||_{dK}^2 + h^{-1} ||nu_E . [[grad w]]||_{dK}^2`.
///
/// Each interior edge belongs to two element boundaries and is counted twice.
pub fn energy_norm_parts(space: &P2Space, w: &[f64], h_mode: HMode, exec: Execution) -> EnergyParts {
    let laplacian = sum_indexed(exec, space.facets.len(), |k| {
        space.facets[k].area * space.eval_laplacian(w, k).powi(2)
    });
    let rule = edge_rule();
    let edge_terms: Vec<(f64, f64)> = crate::exec::map_indexed(exec, space.adjacency.edges.len(), |e| {
        let sides = space.edge_sides(e);
        let dofs = space.edge_dofs(e);
        let h = space.penalty_length(e, h_mode);
        let (mut avg, mut jump) = (0.0, 0.0);
        for (&t, &wq) in rule.points.iter().zip(&rule.weights) {
            let EdgeTrace { jump: j, average: a } = sides.trace(t);
            let jv: f64 = dofs.iter().zip(j).map(|(&i, v)| w[i] * v).sum();
            let av: f64 = dofs.iter().zip(a).map(|(&i, v)| w[i] * v).sum();
            avg += wq * sides.length * av * av * h;
            jump += wq * sides.length * jv * jv / h;
        }
        (2.0 * avg, 2.0 * jump)
    });
    let (average, jump) = edge_terms.iter().fold((0.0, 0.0), |(a, j), (x, y)| (a + x, j + y));
    EnergyParts { laplacian, average, jump }
}

/// `|||u - u_h|||_h`: the discrete energy norm of the error with the exact
/// `Delta_Gamma u` lifted to the facets and no gradient jumps for `u`.
///
/// Dominated by the `O(h)` interpolation error of the quadratic space.
pub fn energy_error<L>(space: &P2Space, coeffs: &[f64], exact_laplacian: &L, exec: Execution) -> Result<f64>
where
    L: Fn(&Vec3) -> f64 + Sync,
{
    let surface = space.mesh.surface;
    let tri = triangle_rule();
    let laplacian = try_map_indexed(exec, space.facets.len(), |k| {
        let ops = &space.facets[k];
        let lh = space.eval_laplacian(coeffs, k);
        let mut acc = 0.0;
        for (b, w) in tri.points.iter().zip(&tri.weights) {
            let p = surface.closest_point(&ops.point(*b))?;
            acc += w * 2.0 * ops.area * (exact_laplacian(&p) - lh).powi(2);
        }
        Ok(acc)
    })?;
    let rule = edge_rule();
    let edges = try_map_indexed(exec, space.adjacency.edges.len(), |e| {
        let sides = space.edge_sides(e);
        let dofs = space.edge_dofs(e);
        let edge = &space.adjacency.edges[e];
        let h = space.h;
        let (mut avg, mut jump) = (0.0, 0.0);
        for (&t, &wq) in rule.points.iter().zip(&rule.weights) {
            let EdgeTrace { jump: j, average: a } = sides.trace(t);
            let jv: f64 = dofs.iter().zip(j).map(|(&i, v)| coeffs[i] * v).sum();
            let av: f64 = dofs.iter().zip(a).map(|(&i, v)| coeffs[i] * v).sum();
            let p = surface.closest_point(&edge.point(&space.mesh, t))?;
            avg += wq * sides.length * (exact_laplacian(&p) - av).powi(2) * h;
            jump += wq * sides.length * jv * jv / h;
        }
        Ok(2.0 * (avg + jump))
    })?;
    Ok((laplacian.iter().sum::<f64>() + edges.iter().sum::<f64>()).sqrt())
}

/// `|||pi u - u_h|||_h` with `pi` the nodal P2 interpolant of `u o p`.
///
/// Measures the discrete error only; on structured meshes it converges
/// faster than [`energy_error`].
pub fn interpolant_energy_error<U>(space: &P2Space, coeffs: &[f64], exact: &U, exec: Execution) -> Result<f64>
where
    U: Fn(&Vec3) -> f64 + Sync,
{
    let interp = space.interpolate_lifted(exact)?;
    let diff: Vec<f64> = interp.iter().zip(coeffs).map(|(a, b)| a - b).collect();
    Ok(energy_norm_parts(space, &diff, HMode::GlobalH, exec).total())
}

/// Pairwise orders `log(e_{k-1}/e_k) / log(h_{k-1}/h_k)`.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    check_rate_data(errors, hs)?;
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_slope(errors: &[f64], hs: &[f64]) -> Result<f64> {
    check_rate_data(errors, hs)?;
    let n = errors.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

fn check_rate_data(errors: &[f64], hs: &[f64]) -> Result<()> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(CdgError::InvalidInput(format!(
            "need at least two (error, h) pairs of equal length, got {} and {}",
            errors.len(),
            hs.len()
        )));
    }
    if let Some(index) = errors.iter().chain(hs).position(|v| !(*v > 0.0)) {
        return Err(CdgError::NonPositive { index: index % errors.len() });
    }
    Ok(())
}

/// Largest deviations between the facet surface and the exact surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySample {
    pub h: f64,
    pub max_d: f64,
    pub max_n_diff: f64,
    pub max_one_ndot: f64,
    pub max_mu: f64,
    pub max_conormal: f64,
}

/// Per-level samples and the fitted log-log slope of each column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryRates {
    pub rows: Vec<GeometrySample>,
    /// `[d, n - n_h, 1 - n.n_h, 1 - mu_h, conormal]`; `None` with fewer than two levels.
    pub slopes: Option<[f64; 5]>,
}

/// Curved conormal at an edge point: `n x t` for the lifted edge tangent `t`,
/// signed to agree with the facet conormal.
fn curved_conormal(surface: &ImplicitSurface, x: &Vec3, tangent: &Vec3, facet_conormal: &Vec3) -> Result<Vec3> {
    let step = 1e-6 * surface.scale();
    let lifted = (surface.closest_point(&(x + tangent * step))? - surface.closest_point(&(x - tangent * step))?)
        / (2.0 * step);
    let n = surface.jet(x)?.n;
    let nu = n.cross(&lifted).normalize();
    Ok(if nu.dot(facet_conormal) < 0.0 { -nu } else { nu })
}

/// Samples the geometric errors of one mesh at facet and edge quadrature points.
///
/// Works on open meshes as well: conormals are taken per face edge.
pub fn geometry_sample(mesh: &TriangleMesh, exec: Execution) -> Result<GeometrySample> {
    let surface = mesh.surface;
    let tri = triangle_rule();
    let edge = edge_rule();
    let per_face = try_map_indexed(exec, mesh.faces.len(), |k| {
        let pts = mesh.face_points(k);
        let n_h = mesh.face_geometry(k).normal;
        let mut out = [0.0f64; 5];
        for b in &tri.points {
            let x = pts[0] * b[0] + pts[1] * b[1] + pts[2] * b[2];
            let jet = surface.jet(&x)?;
            let mu = surface.measure_ratio(&x, &n_h)?;
            out[0] = out[0].max(jet.d.abs());
            out[1] = out[1].max((jet.n - n_h).norm());
            out[2] = out[2].max((1.0 - jet.n.dot(&n_h)).abs());
            out[3] = out[3].max((1.0 - mu).abs());
        }
        let conormals = face_conormals(mesh, k);
        for i in 0..3 {
            let (a, c) = (pts[(i + 1) % 3], pts[(i + 2) % 3]);
            let tangent = (c - a).normalize();
            for &t in &edge.points {
                let x = a + (c - a) * t;
                let nu_gamma = curved_conormal(&surface, &x, &tangent, &conormals[i])?;
                let projected = surface.jet(&x)?.projector() * conormals[i];
                out[4] = out[4].max((nu_gamma - projected).norm());
            }
        }
        Ok(out)
    })?;
    let col = |c: usize| max_indexed(Execution::Sequential, per_face.len(), |k| per_face[k][c]);
    Ok(GeometrySample {
        h: mesh.stats().h,
        max_d: col(0),
        max_n_diff: col(1),
        max_one_ndot: col(2),
        max_mu: col(3),
        max_conormal: col(4),
    })
}

/// Geometry table over a mesh family with fitted slopes.
pub fn geometry_rates(meshes: &[TriangleMesh], exec: Execution) -> Result<GeometryRates> {
    let rows = meshes.iter().map(|m| geometry_sample(m, exec)).collect::<Result<Vec<_>>>()?;
    let slopes = if rows.len() >= 2 {
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let fit = |f: fn(&GeometrySample) -> f64| fitted_slope(&rows.iter().map(f).collect::<Vec<_>>(), &hs);
        Some([
            fit(|r| r.max_d)?,
            fit(|r| r.max_n_diff)?,
            fit(|r| r.max_one_ndot)?,
            fit(|r| r.max_mu)?,
            fit(|r| r.max_conormal)?,
        ])
    } else {
        None
    };
    Ok(GeometryRates { rows, slopes })
}

/// Largest gap between the facet gradient of the lifted function `w o p`
/// (central differences in the facet plane) and `P_h (P - d H) grad_Gamma w`.
///
/// `grad` returns the Cartesian gradient of any extension of `w`; it is
/// projected onto the tangent plane at `p(x)` here.
pub fn lifting_diagnostic<W, G>(mesh: &TriangleMesh, w: &W, grad: &G, exec: Execution) -> Result<f64>
where
    W: Fn(&Vec3) -> f64 + Sync,
    G: Fn(&Vec3) -> Vec3 + Sync,
{
    let surface = mesh.surface;
    let rule = triangle_rule();
    let step = 1e-6 * surface.scale();
    let per_face = try_map_indexed(exec, mesh.faces.len(), |k| {
        let pts = mesh.face_points(k);
        let n_h = mesh.face_geometry(k).normal;
        let t1 = (pts[1] - pts[0]).normalize();
        let t2 = n_h.cross(&t1);
        let lifted = |y: &Vec3| surface.closest_point(y).map(|p| w(&p));
        let mut worst = 0.0f64;
        for b in &rule.points {
            let x = pts[0] * b[0] + pts[1] * b[1] + pts[2] * b[2];
            let mut fd = Vec3::zeros();
            for t in [t1, t2] {
                fd += t * ((lifted(&(x + t * step))? - lifted(&(x - t * step))?) / (2.0 * step));
            }
            let jet = surface.jet(&x)?;
            let on = surface.jet(&jet.p)?;
            let tangential = on.projector() * grad(&jet.p);
            let p_h = nalgebra::Matrix3::identity() - n_h * n_h.transpose();
            let chain = p_h * jet.lift_jacobian() * tangential;
            worst = worst.max((fd - chain).norm());
        }
        Ok(worst)
    })?;
    Ok(per_face.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ImplicitSurface;
    use crate::mesh::{flat_patch, generate_mesh};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn lift_examples() {
        let s = ImplicitSurface::unit_sphere();
        assert_eq!(lift(&s, |_| 3.5, &Vec3::new(0.3, 0.2, 1.1)).unwrap(), 3.5);
        let on = Vec3::new(0.6, 0.0, 0.8);
        assert_relative_eq!(lift(&s, |p| p.x + p.z, &on).unwrap(), 1.4, epsilon = 1e-15);
        assert_eq!(lift(&s, |p| p.z, &Vec3::new(0.0, 0.0, 2.0)).unwrap(), 1.0);
        assert!(lift(&ImplicitSurface::model_torus(), |p| p.z, &Vec3::zeros()).is_err());
    }

    #[test]
    fn eoc_examples() {
        assert_relative_eq!(eoc(&[4e-2, 1e-2], &[0.2, 0.1]).unwrap()[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(eoc(&[1e-1, 5e-2], &[0.2, 0.1]).unwrap()[0], 1.0, epsilon = 1e-12);
        assert_eq!(eoc(&[0.3, 0.3], &[0.2, 0.1]).unwrap()[0], 0.0);
        assert!(matches!(eoc(&[0.0, 1.0], &[0.2, 0.1]), Err(CdgError::NonPositive { index: 0 })));
        assert!(eoc(&[1.0], &[0.2]).is_err());
    }

    proptest! {
        #[test]
        fn eoc_recovers_power_law(c in 0.1f64..10.0, p in 0.5f64..4.0) {
            let hs = [0.4f64, 0.2, 0.1, 0.05];
            let errors: Vec<f64> = hs.iter().map(|h| c * h.powf(p)).collect();
            for r in eoc(&errors, &hs).unwrap() {
                prop_assert!((r - p).abs() <= 1e-12);
            }
            prop_assert!((fitted_slope(&errors, &hs).unwrap() - p).abs() <= 1e-12);
        }
    }

    #[test]
    fn quotient_error_ignores_constants() {
        let space = P2Space::new(generate_mesh(ImplicitSurface::unit_sphere(), 2).unwrap()).unwrap();
        let exact = |x: &Vec3| x.x * x.y + x.z;
        let interp = space.interpolate_lifted(exact).unwrap();
        let e0 = l2_quotient_error(&space, &interp, &exact, Execution::Sequential).unwrap();
        let shifted: Vec<f64> = interp.iter().map(|v| v + 2.75).collect();
        let e1 = l2_quotient_error(&space, &shifted, &exact, Execution::Parallel).unwrap();
        assert!((e0 - e1).abs() <= 1e-12);

        // exact function equal to a constant shift of u_h: zero error
        let zero = vec![0.0; space.ndof()];
        let e = l2_quotient_error(&space, &zero, &|_: &Vec3| 4.0, Execution::Sequential).unwrap();
        assert!(e < 1e-13);
    }

    #[test]
    fn quotient_error_of_z_on_sphere() {
        // int z^2 = 4 pi / 3 on the unit sphere, mean zero
        let want = (4.0 * std::f64::consts::PI / 3.0).sqrt();
        let space = P2Space::new(generate_mesh(ImplicitSurface::unit_sphere(), 4).unwrap()).unwrap();
        let zero = vec![0.0; space.ndof()];
        let e = l2_quotient_error(&space, &zero, &|x: &Vec3| x.z, Execution::Parallel).unwrap();
        assert!((e - want).abs() < 2e-3, "{e} vs {want}");
    }

    #[test]
    fn energy_norm_kernel() {
        let space = P2Space::new(generate_mesh(ImplicitSurface::model_torus(), 1).unwrap()).unwrap();
        let exact = |x: &Vec3| x.x.sin() * x.z;
        let interp = space.interpolate_lifted(exact).unwrap();
        assert_eq!(interpolant_energy_error(&space, &interp, &exact, Execution::Sequential).unwrap(), 0.0);
        let ones = vec![1.0; space.ndof()];
        assert!(energy_norm_parts(&space, &ones, HMode::GlobalH, Execution::Sequential).total() < 1e-10);
    }

    #[test]
    fn interpolation_energy_error_is_first_order() {
        // u = z on the unit sphere, Delta_Gamma u = -2 z
        let (mut hs, mut es) = (vec![], vec![]);
        for level in 2..5 {
            let space = P2Space::new(generate_mesh(ImplicitSurface::unit_sphere(), level).unwrap()).unwrap();
            let interp = space.interpolate_lifted(|x: &Vec3| x.z).unwrap();
            es.push(energy_error(&space, &interp, &|x: &Vec3| -2.0 * x.z, Execution::Parallel).unwrap());
            hs.push(space.h);
        }
        let slope = fitted_slope(&es, &hs).unwrap();
        assert!((0.8..1.3).contains(&slope), "{slope}");
    }

    #[test]
    fn flat_patch_geometry_is_exact() {
        let s = geometry_sample(&flat_patch(4), Execution::Sequential).unwrap();
        assert_eq!(s.max_d, 0.0);
        assert_eq!(s.max_n_diff, 0.0);
        assert_eq!(s.max_one_ndot, 0.0);
        assert_eq!(s.max_mu, 0.0);
        // only finite-difference noise from the lifted tangent remains
        assert!(s.max_conormal < 1e-9);
    }

    #[test]
    fn single_level_has_no_slopes() {
        let meshes = vec![generate_mesh(ImplicitSurface::unit_sphere(), 1).unwrap()];
        assert!(geometry_rates(&meshes, Execution::Sequential).unwrap().slopes.is_none());
    }

    #[test]
    fn lifting_identity_holds() {
        let sphere = generate_mesh(ImplicitSurface::unit_sphere(), 2).unwrap();
        let c = lifting_diagnostic(&sphere, &|_: &Vec3| 2.0, &|_: &Vec3| Vec3::zeros(), Execution::Sequential).unwrap();
        assert_eq!(c, 0.0);
        let z = lifting_diagnostic(&sphere, &|p: &Vec3| p.z, &|_: &Vec3| Vec3::z(), Execution::Parallel).unwrap();
        assert!(z <= 1e-8, "sphere z: {z}");
        let torus = generate_mesh(ImplicitSurface::model_torus(), 2).unwrap();
        let sin_phi = |p: &Vec3| p.y.atan2(p.x).sin();
        let grad = |p: &Vec3| {
            let s2 = p.x * p.x + p.y * p.y;
            Vec3::new(-p.y, p.x, 0.0) * (p.y.atan2(p.x).cos() / s2)
        };
        let t = lifting_diagnostic(&torus, &sin_phi, &grad, Execution::Parallel).unwrap();
        assert!(t <= 1e-7, "torus sin(phi): {t}");
    }
}
