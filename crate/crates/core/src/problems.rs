//! The two model problems: exact solutions, their biharmonic loads, and an
//! independent finite-difference oracle for `Delta_Gamma^2` in surface
//! coordinates.
//!
//! Sphere coordinates: `x = rho sin(theta) cos(phi)`, `y = rho sin(theta) sin(phi)`,
//! `z = rho cos(theta)`. Torus coordinates: `x = (R + r cos(theta)) cos(phi)`,
//! `y = (R + r cos(theta)) sin(phi)`, `z = r sin(theta)`.

use serde::{Deserialize, Serialize};

use crate::error::{CdgError, Result};
use crate::geometry::{ImplicitSurface, Vec3};

/// Where the right-hand side comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadSource {
    /// Published closed form (sphere) or the published load code (torus).
    Paper,
    /// Biharmonic of the exact solution computed independently.
    #[default]
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Sphere,
    Torus,
}

impl std::str::FromStr for ProblemKind {
    type Err = CdgError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(ProblemKind::Sphere),
            "torus" => Ok(ProblemKind::Torus),
            other => Err(CdgError::InvalidInput(format!("unknown problem '{other}' (expected sphere or torus)"))),
        }
    }
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProblemKind::Sphere => "sphere",
            ProblemKind::Torus => "torus",
        })
    }
}

/// A surface with a mean-zero exact solution `u` and load `f = Delta_Gamma^2 u`.
///
/// `exact` and `load` depend only on the surface coordinates of the query
/// point, so they evaluate the lift `g o p` directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelProblem {
    pub kind: ProblemKind,
    pub surface: ImplicitSurface,
    pub load_source: LoadSource,
}

/// Unit sphere with `u = (3 x^2 y - y^3) / |x|^3`.
pub fn sphere_problem(load_source: LoadSource) -> ModelProblem {
    ModelProblem { kind: ProblemKind::Sphere, surface: ImplicitSurface::unit_sphere(), load_source }
}

/// Torus `R = 1`, `r = 0.6` with `u = sin(3 phi) cos(3 theta + phi)`.
pub fn torus_problem(load_source: LoadSource) -> ModelProblem {
    ModelProblem { kind: ProblemKind::Torus, surface: ImplicitSurface::model_torus(), load_source }
}

impl ModelProblem {
    pub fn new(kind: ProblemKind, load_source: LoadSource) -> Self {
        match kind {
            ProblemKind::Sphere => sphere_problem(load_source),
            ProblemKind::Torus => torus_problem(load_source),
        }
    }

    pub fn name(&self) -> String {
        self.kind.to_string()
    }

    fn chart(&self) -> Chart {
        match self.surface {
            ImplicitSurface::Sphere { radius } => Chart::Sphere { radius },
            ImplicitSurface::Torus { major, minor } => Chart::Torus { major, minor },
            ImplicitSurface::Plane => unreachable!("model problems live on closed surfaces"),
        }
    }

    /// Surface coordinates `(theta, phi)` of the closest point to `x`.
    pub fn coordinates(&self, x: &Vec3) -> Result<(f64, f64)> {
        let s = x.x.hypot(x.y);
        match self.surface {
            ImplicitSurface::Torus { major, .. } => {
                if s == 0.0 {
                    return Err(CdgError::AxisPoint { point: [x.x, x.y, x.z] });
                }
                Ok((x.z.atan2(s - major), x.y.atan2(x.x)))
            }
            _ => {
                let r = x.norm();
                if r == 0.0 {
                    return Err(CdgError::OutsideNeighborhood { point: [x.x, x.y, x.z] });
                }
                Ok(((x.z / r).clamp(-1.0, 1.0).acos(), x.y.atan2(x.x)))
            }
        }
    }

    /// Exact solution in surface coordinates.
    pub fn exact_at(&self, theta: f64, phi: f64) -> f64 {
        match self.kind {
            ProblemKind::Sphere => {
                // (3 x^2 y - y^3) / r^3 = sin^3(theta) sin(phi) (3 - 4 sin^2(phi))
                let (sp, st) = (phi.sin(), theta.sin());
                st.powi(3) * sp * (3.0 - 4.0 * sp * sp)
            }
            ProblemKind::Torus => (3.0 * phi).sin() * (3.0 * theta + phi).cos(),
        }
    }

    /// Exact solution at the closest point to `x`.
    pub fn exact(&self, x: &Vec3) -> f64 {
        match self.kind {
            ProblemKind::Sphere => {
                let r = x.norm();
                (3.0 * x.x * x.x * x.y - x.y.powi(3)) / (r * r * r)
            }
            ProblemKind::Torus => {
                let (theta, phi) = self.coordinates(x).unwrap_or((0.0, 0.0));
                self.exact_at(theta, phi)
            }
        }
    }

    /// Closed-form `Delta_Gamma u` in surface coordinates.
    pub fn laplace_beltrami_at(&self, theta: f64, phi: f64) -> f64 {
        match self.surface {
            ImplicitSurface::Sphere { radius } => -12.0 * self.exact_at(theta, phi) / (radius * radius),
            ImplicitSurface::Torus { major, minor } => {
                let w = major + minor * theta.cos();
                let u = self.exact_at(theta, phi);
                let u_theta = -3.0 * (3.0 * phi).sin() * (3.0 * theta + phi).sin();
                let u_phiphi = -10.0 * u - 6.0 * (3.0 * phi).cos() * (3.0 * theta + phi).sin();
                -9.0 * u / (minor * minor) - theta.sin() / (minor * w) * u_theta + u_phiphi / (w * w)
            }
            ImplicitSurface::Plane => unreachable!("model problems live on closed surfaces"),
        }
    }

    /// `Delta_Gamma u` at the closest point to `x`.
    pub fn laplace_beltrami(&self, x: &Vec3) -> f64 {
        let (theta, phi) = self.coordinates(x).unwrap_or((0.0, 0.0));
        self.laplace_beltrami_at(theta, phi)
    }

    /// Load in surface coordinates, from the configured source.
    pub fn load_at(&self, theta: f64, phi: f64) -> f64 {
        match (self.kind, self.load_source, self.surface) {
            (ProblemKind::Sphere, LoadSource::Paper, ImplicitSurface::Sphere { radius }) => {
                let sp = phi.sin();
                -12.0 * radius.powi(-2) * sp * theta.sin().powi(3) * (4.0 * sp * sp - 3.0)
            }
            (ProblemKind::Sphere, LoadSource::Oracle, ImplicitSurface::Sphere { radius }) => {
                // degree-3 spherical harmonic: Delta u = -12 u / rho^2
                144.0 * radius.powi(-4) * self.exact_at(theta, phi)
            }
            (ProblemKind::Torus, LoadSource::Paper, ImplicitSurface::Torus { major, minor }) => {
                torus_load_code(major, minor, phi, theta)
            }
            (ProblemKind::Torus, LoadSource::Oracle, _) => {
                self.chart().biharmonic_fd(&|t, p| self.exact_at(t, p), theta, phi)
            }
            _ => unreachable!("problem kind and surface always match"),
        }
    }

    /// Load at the closest point to `x`.
    pub fn load(&self, x: &Vec3) -> f64 {
        let (theta, phi) = self.coordinates(x).unwrap_or((0.0, 0.0));
        self.load_at(theta, phi)
    }

    /// Independent finite-difference `Delta_Gamma^2 u` at `(theta, phi)`.
    pub fn oracle_load_at(&self, theta: f64, phi: f64) -> f64 {
        self.chart().biharmonic_fd(&|t, p| self.exact_at(t, p), theta, phi)
    }

    /// Finite-difference `Delta_Gamma u` at `(theta, phi)`.
    pub fn laplace_beltrami_fd_at(&self, theta: f64, phi: f64) -> f64 {
        let chart = self.chart();
        let u = |t: f64, p: f64| self.exact_at(t, p);
        richardson(|h| chart.laplace_beltrami_fd(&u, theta, phi, h), FD_STEP)
    }

    /// Parametric area element `sqrt(det g)`.
    pub fn area_element(&self, theta: f64) -> f64 {
        self.chart().area_element(theta)
    }
}

/// Load density for the torus problem, `loadfcn(r, phi, th)` with the major
/// radius `R` bound from the surface. The expression tree is kept verbatim.
#[allow(clippy::too_many_lines)]
pub fn torus_load_code(big_r: f64, r: f64, phi: f64, th: f64) -> f64 {
    let (sin, cos) = (f64::sin, f64::cos);
    let rr = big_r;
    let r2 = r * r;
    let r3 = r2 * r;
    let r4 = r2 * r2;
    let rr2 = rr * rr;
    let rr3 = rr2 * rr;
    let rr4 = rr2 * rr2;
    let num = 9.0 * r4 * sin(2.0 * phi + th)
        + 491.0 * r4 * sin(4.0 * phi + th)
        + 324.0 * rr4 * sin(2.0 * phi - 3.0 * th)
        + 324.0 * rr4 * sin(4.0 * phi + 3.0 * th)
        + 179.0 * r4 * sin(2.0 * phi - th)
        + 313.0 * r4 * sin(2.0 * phi - 3.0 * th)
        + 9.0 * r4 * sin(4.0 * phi - th)
        + 179.0 * r4 * sin(2.0 * phi - 5.0 * th)
        + 1561.0 * r4 * sin(4.0 * phi + 3.0 * th)
        + 36.0 * r4 * sin(2.0 * phi - 7.0 * th)
        + 347.0 * r4 * sin(4.0 * phi + 5.0 * th)
        + 36.0 * r4 * sin(4.0 * phi + 7.0 * th)
        + 366.0 * rr2 * r2 * sin(2.0 * phi - th)
        + 1386.0 * rr2 * r2 * sin(2.0 * phi - 3.0 * th)
        + 696.0 * rr2 * r2 * sin(2.0 * phi - 5.0 * th)
        + 2250.0 * rr2 * r2 * sin(4.0 * phi + 3.0 * th)
        + 696.0 * rr2 * r2 * sin(4.0 * phi + 5.0 * th)
        + 99.0 * rr * r3 * sin(2.0 * phi)
        + 821.0 * rr * r3 * sin(2.0 * phi - 2.0 * th)
        + 570.0 * rr3 * r * sin(2.0 * phi - 2.0 * th)
        + 875.0 * rr * r3 * sin(2.0 * phi - 4.0 * th)
        + 1781.0 * rr * r3 * sin(4.0 * phi + 2.0 * th)
        + 798.0 * rr3 * r * sin(2.0 * phi - 4.0 * th)
        + 570.0 * rr3 * r * sin(4.0 * phi + 2.0 * th)
        + 261.0 * rr * r3 * sin(2.0 * phi - 6.0 * th)
        + 1547.0 * rr * r3 * sin(4.0 * phi + 4.0 * th)
        + 798.0 * rr3 * r * sin(4.0 * phi + 4.0 * th)
        + 261.0 * rr * r3 * sin(4.0 * phi + 6.0 * th)
        + 366.0 * rr2 * r2 * sin(4.0 * phi + th)
        + 198.0 * rr * r3 * cos(2.0 * phi) * sin(2.0 * phi);
    let den = 8.0 * rr4 * r4
        + 32.0 * rr3 * r.powi(5) * cos(th)
        + 48.0 * rr2 * r.powi(6) * cos(th).powi(2)
        + 32.0 * rr * r.powi(7) * cos(th).powi(3)
        + 8.0 * r.powi(8) * cos(th).powi(4);
    num / den
}

/// Base step of the nested finite differences. Smaller steps lose accuracy
/// to cancellation in the fourth derivatives.
const FD_STEP: f64 = 0.04;

/// Orthogonal surface coordinates `(theta, phi)` of a model surface.
#[derive(Debug, Clone, Copy)]
enum Chart {
    Sphere { radius: f64 },
    Torus { major: f64, minor: f64 },
}

fn d1<G: Fn(f64) -> f64>(g: G, x: f64, h: f64) -> f64 {
    (-g(x + 2.0 * h) + 8.0 * g(x + h) - 8.0 * g(x - h) + g(x - 2.0 * h)) / (12.0 * h)
}

fn d2<G: Fn(f64) -> f64>(g: G, x: f64, h: f64) -> f64 {
    (-g(x + 2.0 * h) + 16.0 * g(x + h) - 30.0 * g(x) + 16.0 * g(x - h) - g(x - 2.0 * h)) / (12.0 * h * h)
}

/// Eliminates the `h^4` error term of a fourth-order difference.
fn richardson<F: Fn(f64) -> f64>(approx: F, h: f64) -> f64 {
    (16.0 * approx(0.5 * h) - approx(h)) / 15.0
}

impl Chart {
    fn area_element(&self, theta: f64) -> f64 {
        match *self {
            Chart::Sphere { radius } => radius * radius * theta.sin(),
            Chart::Torus { major, minor } => minor * (major + minor * theta.cos()),
        }
    }

    /// Coefficients `(c_tt, c_t, c_pp)` with `Delta = c_tt d_tt + c_t d_t + c_pp d_pp`.
    fn coefficients(&self, theta: f64) -> (f64, f64, f64) {
        match *self {
            Chart::Sphere { radius } => {
                let k = radius.powi(-2);
                let s = theta.sin();
                (k, k * theta.cos() / s, k / (s * s))
            }
            Chart::Torus { major, minor } => {
                let w = major + minor * theta.cos();
                (minor.powi(-2), -theta.sin() / (minor * w), w.powi(-2))
            }
        }
    }

    fn laplace_beltrami_fd(&self, g: &dyn Fn(f64, f64) -> f64, theta: f64, phi: f64, h: f64) -> f64 {
        let (ctt, ct, cpp) = self.coefficients(theta);
        ctt * d2(|t| g(t, phi), theta, h) + ct * d1(|t| g(t, phi), theta, h) + cpp * d2(|p| g(theta, p), phi, h)
    }

    fn biharmonic_fd(&self, g: &dyn Fn(f64, f64) -> f64, theta: f64, phi: f64) -> f64 {
        richardson(
            |h| {
                let inner = |t: f64, p: f64| self.laplace_beltrami_fd(g, t, p, h);
                self.laplace_beltrami_fd(&inner, theta, phi, h)
            },
            FD_STEP,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    // Delta^2 u for the torus problem at (theta, phi), from symbolic
    // differentiation of u in toroidal coordinates (computer algebra).
    const TORUS_SYMBOLIC: [(f64, f64, f64); 3] = [
        (0.7, 1.3, 621.066_115_553_301_6),
        (0.1, 2.0, 262.539_949_013_932_8),
        (2.5, 4.0, -3196.322_487_318_911_5),
    ];

    #[test]
    fn sphere_values() {
        let p = sphere_problem(LoadSource::Oracle);
        assert_eq!(p.exact(&Vec3::new(0.0, 0.0, 1.0)), 0.0);
        assert_eq!(p.exact(&Vec3::new(0.0, 0.0, -1.0)), 0.0);
        assert_eq!(p.exact(&Vec3::new(0.0, 1.0, 0.0)), -1.0);
        assert_relative_eq!(p.load(&Vec3::new(0.0, 1.0, 0.0)), -144.0, epsilon = 1e-12);
        // lift: value at 2x equals value at x
        let x = Vec3::new(0.3, -0.5, 0.2);
        assert_relative_eq!(p.exact(&x), p.exact(&(x * 2.0)), epsilon = 1e-14);
        let (t, ph) = p.coordinates(&x).unwrap();
        assert_relative_eq!(p.exact(&x), p.exact_at(t, ph), epsilon = 1e-14);
    }

    #[test]
    fn paper_sphere_load_is_second_order_load() {
        // the published formula equals 12 u = -Delta_Gamma u, not 144 u
        let paper = sphere_problem(LoadSource::Paper);
        for (t, ph) in [(0.4, 0.3), (1.2, 2.2), (2.9, -1.0)] {
            assert_relative_eq!(paper.load_at(t, ph), 12.0 * paper.exact_at(t, ph), epsilon = 1e-12);
        }
    }

    #[test]
    fn sphere_fd_oracle_self_test() {
        let p = sphere_problem(LoadSource::Oracle);
        for (t, ph) in [(0.5, 0.2), (1.0, 1.7), (1.5, 3.0), (2.4, 5.5)] {
            let lb = p.laplace_beltrami_fd_at(t, ph);
            assert!((lb + 12.0 * p.exact_at(t, ph)).abs() <= 1e-6, "({t}, {ph})");
            let bi = p.oracle_load_at(t, ph);
            assert!((bi - 144.0 * p.exact_at(t, ph)).abs() <= 1e-6 * 144.0);
        }
    }

    #[test]
    fn closed_form_laplacian_matches_fd() {
        for p in [sphere_problem(LoadSource::Oracle), torus_problem(LoadSource::Oracle)] {
            for (t, ph) in [(0.5, 0.2), (1.0, 1.7), (2.5, 4.0), (1.9, 5.5)] {
                let fd = p.laplace_beltrami_fd_at(t, ph);
                assert!((p.laplace_beltrami_at(t, ph) - fd).abs() <= 1e-7 * fd.abs().max(1.0), "{} ({t}, {ph})", p.name());
            }
        }
    }

    #[test]
    fn torus_values() {
        let p = torus_problem(LoadSource::Paper);
        assert_eq!(p.exact_at(0.0, 0.0), 0.0);
        let x = Vec3::new(1.6, 0.0, 0.0);
        assert_eq!(p.exact(&x), 0.0);
        assert!(matches!(p.coordinates(&Vec3::new(0.0, 0.0, 0.3)), Err(CdgError::AxisPoint { .. })));
        let (t, ph): (f64, f64) = (0.7, 1.3);
        let w = 1.0 + 0.6 * t.cos();
        let x = Vec3::new(w * ph.cos(), w * ph.sin(), 0.6 * t.sin());
        let (tt, pp) = p.coordinates(&x).unwrap();
        assert_relative_eq!(tt, t, epsilon = 1e-14);
        assert_relative_eq!(pp, ph, epsilon = 1e-14);
    }

    #[test]
    fn torus_loads_match_symbolic_values() {
        let paper = torus_problem(LoadSource::Paper);
        let oracle = torus_problem(LoadSource::Oracle);
        for (t, ph, want) in TORUS_SYMBOLIC {
            assert_relative_eq!(paper.load_at(t, ph), want, max_relative = 1e-13);
            assert_relative_eq!(oracle.load_at(t, ph), want, max_relative = 1e-6);
        }
        assert_relative_eq!(
            paper.load_at(0.7, 1.3),
            oracle.load_at(0.7, 1.3),
            max_relative = 1e-5
        );
    }

    fn grid_mean(p: &ModelProblem, g: impl Fn(f64, f64) -> f64, n: usize) -> (f64, f64) {
        let (theta_range, theta_offset) = match p.kind {
            ProblemKind::Sphere => (PI, 0.5),
            ProblemKind::Torus => (2.0 * PI, 0.0),
        };
        let (dt, dp) = (theta_range / n as f64, 2.0 * PI / n as f64);
        let mut integral = 0.0;
        let mut scale = 0.0;
        for i in 0..n {
            let t = (i as f64 + theta_offset) * dt;
            for j in 0..n {
                let v = g(t, j as f64 * dp);
                let w = p.area_element(t) * dt * dp;
                integral += v * w;
                scale += v.abs() * w;
            }
        }
        (integral, scale)
    }

    #[test]
    fn solutions_and_loads_have_zero_mean() {
        for p in [sphere_problem(LoadSource::Oracle), torus_problem(LoadSource::Paper)] {
            let (iu, su) = grid_mean(&p, |t, ph| p.exact_at(t, ph), 96);
            assert!(iu.abs() <= 1e-8 * su, "{}: {iu}", p.name());
            let (i_f, sf) = grid_mean(&p, |t, ph| p.load_at(t, ph), 96);
            assert!(i_f.abs() <= 1e-8 * sf, "{}: {i_f}", p.name());
        }
    }
}
