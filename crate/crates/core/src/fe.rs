//! Uniform finite element view of meshed and cut surfaces.
//!
//! A meshed triangle carries the three vertex hat functions; a cut cell
//! carries the four linear basis functions of its parent tetrahedron. All
//! integrands downstream are built from these flat-element data.

use arrayvec::ArrayVec;

use crate::cut::{BackgroundMesh, CutSurface};
use crate::meshed::SurfaceMesh;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Meshed,
    Cut,
}

/// A flat surface element with its local basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub dofs: ArrayVec<usize, 4>,
    /// Ambient gradients of the local basis functions. In-plane for meshed
    /// triangles, full tet gradients for cut cells.
    pub gradients: ArrayVec<Vec3, 4>,
    /// Point where local basis 0 equals one and all others vanish.
    pub origin: Vec3,
    /// Unit normal, oriented outward.
    pub normal: Vec3,
    pub centroid: Vec3,
    pub area: f64,
    /// Flat triangles covering the element.
    pub triangles: ArrayVec<[Vec3; 3], 2>,
}

impl Element {
    pub fn basis_values(&self, x: &Vec3) -> ArrayVec<f64, 4> {
        let mut v: ArrayVec<f64, 4> = self.gradients.iter().map(|g| g.dot(&(x - self.origin))).collect();
        v[0] += 1.0;
        v
    }

    /// Tangential gradient `P grad`, `P = I - n n^T`.
    pub fn tangential(&self, g: &Vec3) -> Vec3 {
        g - self.normal * self.normal.dot(g)
    }
}

/// An edge of the surface partition shared by two elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceEdge {
    pub elements: [usize; 2],
    pub endpoints: [Vec3; 2],
}

/// An interior background face between two active tets, identified by the
/// elements they carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceJump {
    pub elements: [usize; 2],
    /// Unit normal pointing out of `elements[0]`.
    pub normal: Vec3,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeSurface {
    kind: SurfaceKind,
    elements: Vec<Element>,
    edges: Vec<SurfaceEdge>,
    faces: Vec<FaceJump>,
    dof_positions: Vec<Vec3>,
    h: f64,
}

impl FeSurface {
    pub fn from_mesh(mesh: &SurfaceMesh) -> Self {
        let elements = (0..mesh.triangles().len())
            .map(|t| {
                let tri = mesh.triangles()[t];
                let corners = mesh.corners(t);
                let normal = mesh.triangle_normal(t);
                let area = mesh.triangle_area(t);
                let gradients = (0..3)
                    .map(|i| {
                        let (next, prev) = (corners[(i + 1) % 3], corners[(i + 2) % 3]);
                        normal.cross(&(prev - next)) / (2.0 * area)
                    })
                    .collect();
                let mut triangles = ArrayVec::new();
                triangles.push(corners);
                Element {
                    dofs: tri.into_iter().collect(),
                    gradients,
                    origin: corners[0],
                    normal,
                    centroid: mesh.centroid(t),
                    area,
                    triangles,
                }
            })
            .collect();
        let edges = mesh
            .edges()
            .iter()
            .map(|e| SurfaceEdge {
                elements: [e.left, e.right],
                endpoints: e.vertices.map(|v| mesh.vertices()[v]),
            })
            .collect();
        Self {
            kind: SurfaceKind::Meshed,
            elements,
            edges,
            faces: Vec::new(),
            dof_positions: mesh.vertices().to_vec(),
            h: mesh.h(),
        }
    }

    pub fn from_cut(background: &BackgroundMesh, cut: &CutSurface) -> Self {
        let nodes = background.nodes();
        let elements = cut
            .cells()
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let poly = cut.polygon(c);
                let centroid = poly.iter().sum::<Vec3>() / poly.len() as f64;
                Element {
                    dofs: cell.dofs.into_iter().collect(),
                    gradients: cell.gradients.into_iter().collect(),
                    origin: nodes[cell.nodes[0]],
                    normal: cut.cell_normal(c),
                    centroid,
                    area: cut.cell_area(c),
                    triangles: cut.sub_triangles(c),
                }
            })
            .collect();
        let edges = cut
            .cut_edges()
            .iter()
            .map(|e| SurfaceEdge {
                elements: e.cells,
                endpoints: e.endpoints,
            })
            .collect();
        let faces = cut
            .interior_faces()
            .iter()
            .map(|f| FaceJump {
                elements: f.cells,
                normal: f.normal,
                area: f.area,
            })
            .collect();
        Self {
            kind: SurfaceKind::Cut,
            elements,
            edges,
            faces,
            dof_positions: cut.dof_positions().to_vec(),
            h: cut.h(),
        }
    }

    /// Assembles a surface from prepared parts, e.g. an open patch. Edge and
    /// face element indices must refer to `elements`, element dofs to
    /// `dof_positions`.
    pub fn from_parts(
        kind: SurfaceKind,
        elements: Vec<Element>,
        edges: Vec<SurfaceEdge>,
        faces: Vec<FaceJump>,
        dof_positions: Vec<Vec3>,
        h: f64,
    ) -> Self {
        Self {
            kind,
            elements,
            edges,
            faces,
            dof_positions,
            h,
        }
    }

    #[cfg(test)]
    pub(crate) fn test_surface(elements: Vec<Element>, edges: Vec<SurfaceEdge>, n_dofs: usize, h: f64) -> Self {
        Self::from_parts(SurfaceKind::Meshed, elements, edges, Vec::new(), vec![Vec3::zeros(); n_dofs], h)
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn edges(&self) -> &[SurfaceEdge] {
        &self.edges
    }

    /// Interior background faces; empty for meshed surfaces.
    pub fn faces(&self) -> &[FaceJump] {
        &self.faces
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_positions.len()
    }

    pub fn dof_positions(&self) -> &[Vec3] {
        &self.dof_positions
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn area(&self) -> f64 {
        self.elements.iter().map(|e| e.area).sum()
    }
}

impl From<&SurfaceMesh> for FeSurface {
    fn from(mesh: &SurfaceMesh) -> Self {
        Self::from_mesh(mesh)
    }
}
