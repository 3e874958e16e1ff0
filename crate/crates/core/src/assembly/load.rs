use crate::error::Result;
use crate::exec::{try_map_indexed, Execution};
use crate::femspace::{triangle_rule, P2Space};
use crate::geometry::Vec3;

/// Load vector `b_i = (f_h, phi_i)` with `f_h = f o p - |Gamma_h|^{-1} (f o p, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    pub b: Vec<f64>,
    /// The subtracted mean `|Gamma_h|^{-1} (f o p, 1)_{Gamma_h}`.
    pub mean_correction: f64,
}

/// Two-pass assembly of the mean-corrected load, with `f` lifted through the
/// closest-point map.
pub fn load_vector<F>(space: &P2Space, f: &F, exec: Execution) -> Result<LoadVector>
where
    F: Fn(&Vec3) -> f64 + Sync,
{
    let rule = triangle_rule();
    let surface = space.mesh.surface;
    // f o p at every quadrature point, face by face
    let samples = try_map_indexed(exec, space.facets.len(), |k| {
        let ops = &space.facets[k];
        rule.points
            .iter()
            .map(|p| surface.closest_point(&ops.point(*p)).map(|q| f(&q)))
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut integral = 0.0;
    let mut area = 0.0;
    for (ops, vals) in space.facets.iter().zip(&samples) {
        integral += vals.iter().zip(&rule.weights).map(|(v, w)| v * w * 2.0 * ops.area).sum::<f64>();
        area += ops.area;
    }
    let mean_correction = integral / area;

    let mut b = vec![0.0; space.ndof()];
    for (k, (ops, vals)) in space.facets.iter().zip(&samples).enumerate() {
        let mut local = [0.0; 6];
        for ((p, w), v) in rule.points.iter().zip(&rule.weights).zip(vals) {
            let phi = ops.values(*p);
            let scale = w * 2.0 * ops.area * (v - mean_correction);
            for i in 0..6 {
                local[i] += scale * phi[i];
            }
        }
        for (i, v) in space.dofs.faces[k].iter().zip(local) {
            b[*i] += v;
        }
    }
    Ok(LoadVector { b, mean_correction })
}
