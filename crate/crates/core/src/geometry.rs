//! Analytic exact surfaces: signed distance, its derivatives, the closest
//! point map and the exact mean curvature vector.
//!
//! Sign convention: `rho < 0` inside, `grad rho` is the outward normal on the
//! surface, and the exact mean curvature vector is `-(lap rho) grad rho`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::Vec3;

/// Distance to the medial axis below which derivatives of the signed
/// distance are treated as undefined.
pub const MEDIAL_AXIS_GUARD: f64 = 1e-9;

/// All exact quantities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFieldSample {
    pub rho: f64,
    pub grad_rho: Vec3,
    pub laplacian_rho: f64,
    pub curvature_vector: Vec3,
    pub normal: Vec3,
    pub closest_point: Vec3,
}

/// A smooth closed surface given by a closed-form signed distance function.
pub trait ExactSurface: Send + Sync {
    /// Signed distance together with its gradient and Laplacian.
    fn distance_derivatives(&self, point: &Vec3) -> Result<(f64, Vec3, f64)>;

    fn closest_point(&self, point: &Vec3) -> Result<Vec3>;

    fn area(&self) -> f64;

    fn signed_distance(&self, point: &Vec3) -> Result<f64> {
        Ok(self.distance_derivatives(point)?.0)
    }

    fn gradient(&self, point: &Vec3) -> Result<Vec3> {
        Ok(self.distance_derivatives(point)?.1)
    }

    fn laplacian(&self, point: &Vec3) -> Result<f64> {
        Ok(self.distance_derivatives(point)?.2)
    }

    /// `-(lap rho) grad rho`, evaluated at `point` itself (no projection).
    fn exact_curvature_vector(&self, point: &Vec3) -> Result<Vec3> {
        let (_, grad, lap) = self.distance_derivatives(point)?;
        Ok(-lap * grad)
    }

    /// Exact normal `n o p`; the gradient of a distance function is constant
    /// along normal lines, so this is the gradient at `point`.
    fn normal(&self, point: &Vec3) -> Result<Vec3> {
        self.gradient(point)
    }

    fn sample(&self, point: &Vec3) -> Result<ExactFieldSample> {
        let (rho, grad_rho, laplacian_rho) = self.distance_derivatives(point)?;
        Ok(ExactFieldSample {
            rho,
            grad_rho,
            laplacian_rho,
            curvature_vector: -laplacian_rho * grad_rho,
            normal: grad_rho,
            closest_point: self.closest_point(point)?,
        })
    }
}

/// Torus around the z-axis with center-circle radius `major` and tube
/// radius `minor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusShape {
    major: f64,
    minor: f64,
}

impl TorusShape {
    pub fn new(major: f64, minor: f64) -> Result<Self> {
        if !(minor > 0.0 && major > minor) || !major.is_finite() {
            return Err(Error::InvalidShape(format!(
                "torus requires R > r > 0, got R={major}, r={minor}"
            )));
        }
        Ok(Self { major, minor })
    }

    pub fn major_radius(&self) -> f64 {
        self.major
    }

    pub fn minor_radius(&self) -> f64 {
        self.minor
    }

    /// Parametric point: `theta` runs around the z-axis, `phi` around the tube.
    pub fn point(&self, theta: f64, phi: f64) -> Vec3 {
        let ring = self.major + self.minor * phi.cos();
        Vec3::new(ring * theta.cos(), ring * theta.sin(), self.minor * phi.sin())
    }

    /// `(s, w, d)`: distance from the z-axis, offset from the center circle
    /// in the meridian plane, and distance to the center circle.
    fn meridian(&self, p: &Vec3) -> Result<(f64, f64, f64)> {
        let s = p.x.hypot(p.y);
        if s < MEDIAL_AXIS_GUARD {
            return Err(Error::MedialAxisPoint(*p));
        }
        let w = s - self.major;
        let d = p.z.hypot(w);
        if d < MEDIAL_AXIS_GUARD {
            return Err(Error::MedialAxisPoint(*p));
        }
        Ok((s, w, d))
    }
}

impl Default for TorusShape {
    fn default() -> Self {
        Self {
            major: 1.0,
            minor: 0.5,
        }
    }
}

impl ExactSurface for TorusShape {
    fn distance_derivatives(&self, p: &Vec3) -> Result<(f64, Vec3, f64)> {
        let (s, w, d) = self.meridian(p)?;
        let rho = d - self.minor;
        let radial = w / d;
        let grad = Vec3::new(radial * p.x / s, radial * p.y / s, p.z / d);
        // Cylindrical Laplacian: the planar distance to (R, 0) contributes 1/d,
        // the azimuthal term rho_s / s contributes w / (d s).
        let lap = 1.0 / d + w / (d * s);
        Ok((rho, grad, lap))
    }

    fn closest_point(&self, p: &Vec3) -> Result<Vec3> {
        let (s, w, d) = self.meridian(p)?;
        let ring = self.major + self.minor * w / d;
        Ok(Vec3::new(ring * p.x / s, ring * p.y / s, self.minor * p.z / d))
    }

    fn area(&self) -> f64 {
        4.0 * PI * PI * self.major * self.minor
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereShape {
    radius: f64,
    center: Vec3,
}

impl SphereShape {
    pub fn new(radius: f64, center: Vec3) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidShape(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        Ok(Self { radius, center })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    fn offset(&self, p: &Vec3) -> Result<(Vec3, f64)> {
        let q = p - self.center;
        let len = q.norm();
        if len < MEDIAL_AXIS_GUARD {
            return Err(Error::MedialAxisPoint(*p));
        }
        Ok((q, len))
    }
}

impl ExactSurface for SphereShape {
    fn distance_derivatives(&self, p: &Vec3) -> Result<(f64, Vec3, f64)> {
        let (q, len) = self.offset(p)?;
        Ok((len - self.radius, q / len, 2.0 / len))
    }

    fn closest_point(&self, p: &Vec3) -> Result<Vec3> {
        let (q, len) = self.offset(p)?;
        Ok(self.center + q * (self.radius / len))
    }

    fn area(&self) -> f64 {
        4.0 * PI * self.radius * self.radius
    }
}

/// Either analytic surface, for configuration-driven code paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Torus(TorusShape),
    Sphere(SphereShape),
}

impl ExactSurface for Shape {
    fn distance_derivatives(&self, point: &Vec3) -> Result<(f64, Vec3, f64)> {
        match self {
            Shape::Torus(t) => t.distance_derivatives(point),
            Shape::Sphere(s) => s.distance_derivatives(point),
        }
    }

    fn closest_point(&self, point: &Vec3) -> Result<Vec3> {
        match self {
            Shape::Torus(t) => t.closest_point(point),
            Shape::Sphere(s) => s.closest_point(point),
        }
    }

    fn area(&self) -> f64 {
        match self {
            Shape::Torus(t) => t.area(),
            Shape::Sphere(s) => s.area(),
        }
    }
}
