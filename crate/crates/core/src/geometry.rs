//! Analytic implicit surfaces: signed distance, normal, Weingarten map,
//! closest-point projection and the derived quantities used by the
//! discretization (extended principal curvatures, surface measure ratio).

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{CdgError, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Fraction of the tube radius that bounds the admissible neighborhood.
const NEIGHBORHOOD_MARGIN: f64 = 0.99;

/// A closed surface given by an analytic signed distance function.
///
/// `Plane` is the `z = 0` plane. It is not closed and exists as a flat
/// fixture where the facet surface coincides with the exact one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ImplicitSurface {
    Sphere { radius: f64 },
    Torus { major: f64, minor: f64 },
    Plane,
}

/// Signed distance together with its first two derivatives and the closest point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceJet {
    pub d: f64,
    pub n: Vec3,
    pub hessian: Mat3,
    pub p: Vec3,
}

impl SurfaceJet {
    /// Tangential projector `I - n n^T`.
    pub fn projector(&self) -> Mat3 {
        Mat3::identity() - self.n * self.n.transpose()
    }

    /// Jacobian of the closest-point map, `P - d H`.
    pub fn lift_jacobian(&self) -> Mat3 {
        self.projector() - self.hessian * self.d
    }
}

impl ImplicitSurface {
    pub fn sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(CdgError::InvalidInput(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(ImplicitSurface::Sphere { radius })
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self> {
        if !(minor > 0.0 && minor < major && major.is_finite()) {
            return Err(CdgError::InvalidInput(format!(
                "torus radii must satisfy 0 < r < R, got R={major}, r={minor}"
            )));
        }
        Ok(ImplicitSurface::Torus { major, minor })
    }

    /// The unit sphere used by the first model problem.
    pub fn unit_sphere() -> Self {
        ImplicitSurface::Sphere { radius: 1.0 }
    }

    /// The torus with `R = 1`, `r = 0.6` used by the second model problem.
    pub fn model_torus() -> Self {
        ImplicitSurface::Torus { major: 1.0, minor: 0.6 }
    }

    /// Exact area of the surface; `None` for the unbounded plane.
    pub fn area(&self) -> Option<f64> {
        use std::f64::consts::PI;
        match *self {
            ImplicitSurface::Sphere { radius } => Some(4.0 * PI * radius * radius),
            ImplicitSurface::Torus { major, minor } => Some(4.0 * PI * PI * major * minor),
            ImplicitSurface::Plane => None,
        }
    }

    /// Euler characteristic of the closed surface.
    pub fn euler_characteristic(&self) -> Option<i64> {
        match self {
            ImplicitSurface::Sphere { .. } => Some(2),
            ImplicitSurface::Torus { .. } => Some(0),
            ImplicitSurface::Plane => None,
        }
    }

    /// Length scale used for finite-difference steps and neighborhood checks.
    pub fn scale(&self) -> f64 {
        match *self {
            ImplicitSurface::Sphere { radius } => radius,
            ImplicitSurface::Torus { major, .. } => major,
            ImplicitSurface::Plane => 1.0,
        }
    }

    /// Signed distance only. Defined everywhere except the degenerate sets
    /// (sphere center, torus axis), where it still returns a finite value.
    pub fn distance(&self, x: &Vec3) -> f64 {
        match *self {
            ImplicitSurface::Sphere { radius } => x.norm() - radius,
            ImplicitSurface::Torus { major, minor } => {
                let s = x.x.hypot(x.y);
                (s - major).hypot(x.z) - minor
            }
            ImplicitSurface::Plane => x.z,
        }
    }

    fn outside(x: &Vec3) -> CdgError {
        CdgError::OutsideNeighborhood { point: [x.x, x.y, x.z] }
    }

    /// Signed distance, normal `grad d`, Hessian `grad^2 d`, and closest point.
    pub fn jet(&self, x: &Vec3) -> Result<SurfaceJet> {
        match *self {
            ImplicitSurface::Sphere { radius } => {
                let rho = x.norm();
                if !(rho > (1.0 - NEIGHBORHOOD_MARGIN) * radius) {
                    return Err(Self::outside(x));
                }
                let n = x / rho;
                let hessian = (Mat3::identity() - n * n.transpose()) / rho;
                Ok(SurfaceJet { d: rho - radius, n, hessian, p: n * radius })
            }
            ImplicitSurface::Torus { major, minor } => {
                let s = x.x.hypot(x.y);
                if !(s > 0.0) {
                    return Err(Self::outside(x));
                }
                let a = s - major;
                let rho = a.hypot(x.z);
                let d = rho - minor;
                if !(d.abs() < NEIGHBORHOOD_MARGIN * minor) {
                    return Err(Self::outside(x));
                }
                let e_s = Vec3::new(x.x / s, x.y / s, 0.0);
                let e_phi = Vec3::new(-x.y / s, x.x / s, 0.0);
                let e_z = Vec3::z();
                let (cos_t, sin_t) = (a / rho, x.z / rho);
                let n = e_s * cos_t + e_z * sin_t;
                let t = e_z * cos_t - e_s * sin_t;
                // level sets of d are tori with tube radius rho
                let hessian = t * t.transpose() / rho + e_phi * e_phi.transpose() * (cos_t / s);
                let p = e_s * major + n * minor;
                Ok(SurfaceJet { d, n, hessian, p })
            }
            ImplicitSurface::Plane => Ok(SurfaceJet {
                d: x.z,
                n: Vec3::z(),
                hessian: Mat3::zeros(),
                p: Vec3::new(x.x, x.y, 0.0),
            }),
        }
    }

    /// Closest point `p(x) = x - d(x) n(x)`.
    pub fn closest_point(&self, x: &Vec3) -> Result<Vec3> {
        self.jet(x).map(|j| j.p)
    }

    /// Principal curvatures at the closest point `p(x)`.
    fn surface_curvatures(&self, jet: &SurfaceJet) -> (f64, f64) {
        match *self {
            ImplicitSurface::Sphere { radius } => (1.0 / radius, 1.0 / radius),
            ImplicitSurface::Torus { major, minor } => {
                let s = jet.p.x.hypot(jet.p.y);
                let cos_t = (s - major) / minor;
                (1.0 / minor, cos_t / (major + minor * cos_t))
            }
            ImplicitSurface::Plane => (0.0, 0.0),
        }
    }

    /// Principal curvatures extended off the surface,
    /// `kappa_i(x) = kappa_i(p) / (1 + d(x) kappa_i(p))`.
    pub fn extended_curvatures(&self, x: &Vec3) -> Result<(f64, f64)> {
        let jet = self.jet(x)?;
        let (k1, k2) = self.surface_curvatures(&jet);
        Ok((k1 / (1.0 + jet.d * k1), k2 / (1.0 + jet.d * k2)))
    }

    /// Ratio `mu_h` with `mu_h ds_h = ds o p` at a point `x` of a facet with unit normal `n_h`.
    pub fn measure_ratio(&self, x: &Vec3, n_h: &Vec3) -> Result<f64> {
        let jet = self.jet(x)?;
        let (k1, k2) = self.extended_curvatures(x)?;
        let mu = jet.n.dot(n_h) * (1.0 - jet.d * k1) * (1.0 - jet.d * k2);
        if mu > 0.0 {
            Ok(mu)
        } else {
            Err(CdgError::NonPositiveMeasure { value: mu })
        }
    }
}
