//! Explicitly triangulated closed surfaces: structured, diagonal-flipped and
//! perturbed torus meshes with edge adjacency.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{ExactSurface, TorusShape};
use crate::Vec3;

/// Triangles below this area are rejected at construction.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

/// Stream offset separating the vertex-perturbation RNG from the
/// diagonal-flip RNG for the same seed.
const PERTURB_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// A perturbed quad uses its other diagonal when the drawn split leaves a
/// triangle with less than this fraction of the nominal parametric area.
const FALLBACK_AREA_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshKind {
    /// Every parametric quad split along its (i,j)-(i+1,j+1) diagonal.
    Structured,
    /// Structured, with each diagonal flipped with probability 1/2.
    FlippedDiagonals,
    /// Flipped diagonals plus random parametric node displacement.
    Perturbed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshFamily {
    pub kind: MeshKind,
    pub n_theta: usize,
    pub n_phi: usize,
    pub seed: u64,
    /// Node displacement as a fraction of the parametric spacing.
    pub amplitude: f64,
}

impl MeshFamily {
    pub const DEFAULT_AMPLITUDE: f64 = 0.3;

    pub fn structured(n_theta: usize, n_phi: usize) -> Self {
        Self {
            kind: MeshKind::Structured,
            n_theta,
            n_phi,
            seed: 0,
            amplitude: 0.0,
        }
    }

    pub fn flipped(n_theta: usize, n_phi: usize, seed: u64) -> Self {
        Self {
            kind: MeshKind::FlippedDiagonals,
            seed,
            ..Self::structured(n_theta, n_phi)
        }
    }

    pub fn perturbed(n_theta: usize, n_phi: usize, seed: u64, amplitude: f64) -> Self {
        Self {
            kind: MeshKind::Perturbed,
            seed,
            amplitude,
            ..Self::structured(n_theta, n_phi)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_theta < 3 || self.n_phi < 3 {
            return Err(Error::InvalidConfig(format!(
                "grid counts must be at least 3, got {}x{}",
                self.n_theta, self.n_phi
            )));
        }
        if !(0.0..0.45).contains(&self.amplitude) {
            return Err(Error::InvalidConfig(format!(
                "perturbation amplitude must lie in [0, 0.45), got {}",
                self.amplitude
            )));
        }
        Ok(())
    }
}

/// An undirected edge. `left` traverses `vertices[0] -> vertices[1]`,
/// `right` traverses it the other way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub left: usize,
    pub right: usize,
}

/// A closed, consistently oriented triangulated surface.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    h: f64,
}

impl SurfaceMesh {
    /// Validates areas, builds edge adjacency and stores the global mesh
    /// parameter `h`.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, h: f64) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::EmptySurface);
        }
        for (index, tri) in triangles.iter().enumerate() {
            let area = triangle_area(&vertices, tri);
            if !(area >= MIN_TRIANGLE_AREA) {
                return Err(Error::DegenerateTriangle { index, area });
            }
        }
        let edges = build_edges(&triangles)?;
        Ok(Self {
            vertices,
            triangles,
            edges,
            h,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        triangle_area(&self.vertices, &self.triangles[t])
    }

    /// Unit normal following the vertex order.
    pub fn triangle_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (a + b + c) / 3.0
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    /// Largest ratio of longest edge to inscribed-circle diameter.
    pub fn max_aspect_ratio(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                let lengths = [(b - a).norm(), (c - b).norm(), (a - c).norm()];
                let longest = lengths.iter().cloned().fold(0.0, f64::max);
                let perimeter: f64 = lengths.iter().sum();
                let inscribed = 4.0 * self.triangle_area(t) / perimeter;
                longest / inscribed
            })
            .fold(0.0, f64::max)
    }
}

pub fn surface_area(mesh: &SurfaceMesh) -> f64 {
    mesh.surface_area()
}

fn triangle_area(vertices: &[Vec3], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|v| vertices[v]);
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Resolves every undirected edge to its two incident triangles.
///
/// Fails with [`Error::NonManifoldEdge`] listing every vertex pair that is not
/// traversed exactly once in each direction.
pub fn build_edges(triangles: &[[usize; 3]]) -> Result<Vec<Edge>> {
    // (min, max) -> (triangle traversing min->max, triangle traversing max->min)
    let mut incidence: BTreeMap<(usize, usize), (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let entry = incidence.entry((a.min(b), a.max(b))).or_default();
            if a < b {
                entry.0.push(t);
            } else {
                entry.1.push(t);
            }
        }
    }

    let mut edges = Vec::with_capacity(incidence.len());
    let mut bad = Vec::new();
    for ((a, b), (forward, backward)) in incidence {
        if forward.len() == 1 && backward.len() == 1 {
            edges.push(Edge {
                vertices: [a, b],
                left: forward[0],
                right: backward[0],
            });
        } else {
            bad.push([a, b]);
        }
    }
    if bad.is_empty() {
        Ok(edges)
    } else {
        Err(Error::NonManifoldEdge { edges: bad })
    }
}

/// Generates one member of a torus mesh family.
///
/// Vertices always lie on the exact torus; the perturbed family moves nodes
/// in parameter space only. `h = N^(-1/2)` with `N` the vertex count.
pub fn generate(family: &MeshFamily, shape: &TorusShape) -> Result<SurfaceMesh> {
    family.validate()?;
    let (nt, np) = (family.n_theta, family.n_phi);
    let dtheta = 2.0 * PI / nt as f64;
    let dphi = 2.0 * PI / np as f64;
    let index = |i: usize, j: usize| (i % nt) * np + (j % np);

    let jitter = family.kind == MeshKind::Perturbed && family.amplitude > 0.0;
    let mut offsets = vec![(0.0, 0.0); nt * np];
    if jitter {
        for (k, offset) in offsets.iter_mut().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(family.seed ^ PERTURB_SEED_SALT);
            rng.set_stream(k as u64);
            let a = family.amplitude * dtheta * rng.random_range(-1.0..=1.0);
            let b = family.amplitude * dphi * rng.random_range(-1.0..=1.0);
            *offset = (a, b);
        }
    }
    // Unwrapped parameter coordinates, so quads across the seam stay intact.
    let param = |i: usize, j: usize| {
        let (a, b) = offsets[index(i, j)];
        (i as f64 * dtheta + a, j as f64 * dphi + b)
    };
    let vertices: Vec<Vec3> = (0..nt)
        .flat_map(|i| (0..np).map(move |j| (i, j)))
        .map(|(i, j)| {
            let (theta, phi) = param(i, j);
            shape.point(theta, phi)
        })
        .collect();

    let signed = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| {
        0.5 * ((q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0))
    };
    let min_param_area = FALLBACK_AREA_FRACTION * 0.5 * dtheta * dphi;
    let mut triangles = Vec::with_capacity(2 * nt * np);
    for i in 0..nt {
        for j in 0..np {
            let (v00, v10, v11, v01) = (
                index(i, j),
                index(i + 1, j),
                index(i + 1, j + 1),
                index(i, j + 1),
            );
            let mut flip = match family.kind {
                MeshKind::Structured => false,
                MeshKind::FlippedDiagonals | MeshKind::Perturbed => {
                    let mut rng = ChaCha8Rng::seed_from_u64(family.seed);
                    rng.set_stream(index(i, j) as u64);
                    rng.random::<bool>()
                }
            };
            if jitter {
                let (p00, p10, p11, p01) = (param(i, j), param(i + 1, j), param(i + 1, j + 1), param(i, j + 1));
                let quality = |flip: bool| {
                    if flip {
                        signed(p00, p10, p01).min(signed(p10, p11, p01))
                    } else {
                        signed(p00, p10, p11).min(signed(p00, p11, p01))
                    }
                };
                if quality(flip) < min_param_area && quality(!flip) > quality(flip) {
                    flip = !flip;
                }
            }
            if flip {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            } else {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
    }

    let h = (vertices.len() as f64).powf(-0.5);
    let mesh = SurfaceMesh::new(vertices, triangles, h)?;
    for t in 0..mesh.triangles().len() {
        let outward = shape.gradient(&mesh.centroid(t))?;
        if mesh.triangle_normal(t).dot(&outward) <= 0.0 {
            return Err(Error::InvertedTriangle { index: t });
        }
    }
    Ok(mesh)
}
