//! Cut surfaces: the zero level set of a piecewise linear distance function
//! on a structured background tetrahedral mesh.
//!
//! Every intersected tetrahedron contributes one planar cell, a triangle or a
//! quadrilateral. Cells meet along cut edges lying in interior tet faces.

use std::collections::{BTreeMap, HashMap};

use arrayvec::ArrayVec;
use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::geometry::ExactSurface;
use crate::Vec3;

/// Relative threshold of the zero-value perturbation applied to nodal
/// level-set values.
pub const ZERO_PERTURBATION: f64 = 1e-12;

/// Axis-aligned box `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl Bounds {
    /// `[-1.6, 1.6]^2 x [-0.6, 0.6]`, enclosing the `R = 1, r = 1/2` torus.
    pub fn torus_box() -> Self {
        Self {
            min: Vec3::new(-1.6, -1.6, -0.6),
            max: Vec3::new(1.6, 1.6, 0.6),
        }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn volume(&self) -> f64 {
        self.extent().product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    /// Sorted node indices.
    pub nodes: [usize; 3],
    pub tets: (usize, Option<usize>),
}

/// Structured Kuhn-split tetrahedral mesh of a box.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundMesh {
    bounds: Bounds,
    cells: [usize; 3],
    nodes: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    faces: Vec<Face>,
    h: f64,
}

/// Kuhn split: one tet per axis permutation, each a monotone path from the
/// cell's lowest corner to its highest.
const KUHN_PATHS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

impl BackgroundMesh {
    /// Splits `bounds` into `cells[0] x cells[1] x cells[2]` boxes of six
    /// tetrahedra each. `h = N^(-1/3)` with `N` the node count.
    pub fn new(bounds: Bounds, cells: [usize; 3]) -> Result<Self> {
        if cells.contains(&0) {
            return Err(Error::InvalidConfig(format!("cell counts must be positive, got {cells:?}")));
        }
        let [nx, ny, nz] = cells;
        let node_index = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
        let extent = bounds.extent();

        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
        for k in 0..=nz {
            for j in 0..=ny {
                for i in 0..=nx {
                    nodes.push(Vec3::new(
                        bounds.min.x + extent.x * i as f64 / nx as f64,
                        bounds.min.y + extent.y * j as f64 / ny as f64,
                        bounds.min.z + extent.z * k as f64 / nz as f64,
                    ));
                }
            }
        }

        let mut tets = Vec::with_capacity(6 * nx * ny * nz);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    for path in KUHN_PATHS {
                        let mut corner = [i, j, k];
                        let mut tet = [node_index(i, j, k); 4];
                        for (step, axis) in path.iter().enumerate() {
                            corner[*axis] += 1;
                            tet[step + 1] = node_index(corner[0], corner[1], corner[2]);
                        }
                        if signed_volume(&nodes, &tet) < 0.0 {
                            tet.swap(2, 3);
                        }
                        tets.push(tet);
                    }
                }
            }
        }

        let faces = build_faces(&tets);
        let h = (nodes.len() as f64).cbrt().recip();
        Ok(Self {
            bounds,
            cells,
            nodes,
            tets,
            faces,
            h,
        })
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        signed_volume(&self.nodes, &self.tets[t])
    }

    /// Index of the face with the given (unsorted) nodes.
    pub fn find_face(&self, mut nodes: [usize; 3]) -> Option<usize> {
        nodes.sort_unstable();
        self.faces.binary_search_by(|f| f.nodes.cmp(&nodes)).ok()
    }
}

/// Background mesh of the torus box with cells of edge about
/// `1 / n_per_unit`.
///
/// The x and y cell counts are forced odd so that no node lies on the
/// z-axis, which belongs to the medial axis of the torus.
pub fn generate_background(n_per_unit: usize) -> Result<BackgroundMesh> {
    if n_per_unit < 2 {
        return Err(Error::InvalidConfig(format!(
            "n_per_unit must be at least 2, got {n_per_unit}"
        )));
    }
    let bounds = Bounds::torus_box();
    let extent = bounds.extent();
    let count = |len: f64| ((len * n_per_unit as f64).round() as usize).max(1);
    let odd = |c: usize| if c.is_multiple_of(2) { c + 1 } else { c };
    let cells = [odd(count(extent.x)), odd(count(extent.y)), count(extent.z)];
    BackgroundMesh::new(bounds, cells)
}

fn signed_volume(nodes: &[Vec3], tet: &[usize; 4]) -> f64 {
    let [a, b, c, d] = tet.map(|n| nodes[n]);
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}

fn build_faces(tets: &[[usize; 4]]) -> Vec<Face> {
    let mut incidences: Vec<([usize; 3], usize)> = Vec::with_capacity(4 * tets.len());
    for (t, tet) in tets.iter().enumerate() {
        for skip in 0..4 {
            let mut nodes = [0; 3];
            let mut m = 0;
            for (local, &n) in tet.iter().enumerate() {
                if local != skip {
                    nodes[m] = n;
                    m += 1;
                }
            }
            nodes.sort_unstable();
            incidences.push((nodes, t));
        }
    }
    incidences.sort_unstable();

    let mut faces = Vec::with_capacity(incidences.len() / 2 + 1);
    let mut idx = 0;
    while idx < incidences.len() {
        let (nodes, first) = incidences[idx];
        if idx + 1 < incidences.len() && incidences[idx + 1].0 == nodes {
            faces.push(Face {
                nodes,
                tets: (first, Some(incidences[idx + 1].1)),
            });
            idx += 2;
        } else {
            faces.push(Face {
                nodes,
                tets: (first, None),
            });
            idx += 1;
        }
    }
    faces
}

/// Nodal interpolant of a signed distance function.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetField {
    pub values: Vec<f64>,
}

/// Evaluates `rho` at every background node, replacing values with
/// `|rho| < 1e-12 max|rho|` by `+1e-12 max|rho|` so that no nodal value is
/// exactly zero.
pub fn interpolate_levelset<S: ExactSurface + ?Sized>(
    mesh: &BackgroundMesh,
    shape: &S,
) -> Result<LevelSetField> {
    let mut values = mesh
        .nodes()
        .iter()
        .map(|p| shape.signed_distance(p))
        .collect::<Result<Vec<_>>>()?;
    perturb_zeros(&mut values);
    Ok(LevelSetField { values })
}

fn perturb_zeros(values: &mut [f64]) {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eps = ZERO_PERTURBATION * scale;
    for v in values.iter_mut() {
        if v.abs() < eps || *v == 0.0 {
            *v = if eps > 0.0 { eps } else { f64::MIN_POSITIVE };
        }
    }
}

/// Zero crossing of the level set on a background edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Sorted node pair.
    pub edge: [usize; 2],
    pub point: Vec3,
}

/// The planar piece of the cut surface inside one active tetrahedron.
#[derive(Debug, Clone, PartialEq)]
pub struct CutCell {
    /// Background tet index.
    pub parent: usize,
    pub nodes: [usize; 4],
    /// Degree-of-freedom index of each tet node.
    pub dofs: [usize; 4],
    /// Gradients of the tet's barycentric basis functions.
    pub gradients: [Vec3; 4],
    /// Crossing indices, ordered so that consecutive crossings share a tet
    /// face and the polygon normal agrees with `grad rho_h`.
    pub polygon: ArrayVec<usize, 4>,
    pub level_set_gradient: Vec3,
}

/// A background face shared by two active tetrahedra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorFace {
    pub face: usize,
    /// Cell indices of the two active tets.
    pub cells: [usize; 2],
    /// Unit normal pointing out of `cells[0]`.
    pub normal: Vec3,
    pub area: f64,
}

/// Intersection of the cut surface with an interior face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutEdge {
    pub face: usize,
    pub endpoints: [Vec3; 2],
    pub cells: [usize; 2],
    /// Background tet indices of the two cells.
    pub tets: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutSurface {
    crossings: Vec<Crossing>,
    cells: Vec<CutCell>,
    interior_faces: Vec<InteriorFace>,
    cut_edges: Vec<CutEdge>,
    dof_nodes: Vec<usize>,
    dof_positions: Vec<Vec3>,
    h: f64,
}

/// Local edges crossed by the zero set, in polygon order.
fn crossing_pattern(values: &[f64; 4]) -> ArrayVec<(usize, usize), 4> {
    let negative: ArrayVec<usize, 4> = (0..4).filter(|&k| values[k] < 0.0).collect();
    let positive: ArrayVec<usize, 4> = (0..4).filter(|&k| values[k] >= 0.0).collect();
    let mut edges = ArrayVec::new();
    match negative.len() {
        1 | 3 => {
            let (lone, rest) = if negative.len() == 1 {
                (negative[0], positive)
            } else {
                (positive[0], negative)
            };
            for other in rest {
                edges.push((lone, other));
            }
        }
        2 => {
            let (n0, n1, p0, p1) = (negative[0], negative[1], positive[0], positive[1]);
            edges.extend([(n0, p0), (n0, p1), (n1, p1), (n1, p0)]);
        }
        _ => {}
    }
    edges
}

fn tet_gradients(points: &[Vec3; 4]) -> Result<[Vec3; 4]> {
    let jac = Matrix3::from_columns(&[
        points[1] - points[0],
        points[2] - points[0],
        points[3] - points[0],
    ]);
    let inv = jac
        .try_inverse()
        .ok_or_else(|| Error::InconsistentTopology("degenerate background tet".into()))?;
    let g1 = inv.row(0).transpose();
    let g2 = inv.row(1).transpose();
    let g3 = inv.row(2).transpose();
    Ok([-(g1 + g2 + g3), g1, g2, g3])
}

/// Extracts the zero level set of `field` as one planar cell per
/// intersected tetrahedron and resolves the active tets, interior faces and
/// cut edges.
pub fn extract(mesh: &BackgroundMesh, field: &LevelSetField) -> Result<CutSurface> {
    if field.values.len() != mesh.nodes().len() {
        return Err(Error::DimensionMismatch {
            expected: mesh.nodes().len(),
            actual: field.values.len(),
        });
    }
    if let Some(i) = field.values.iter().position(|v| *v == 0.0) {
        return Err(Error::InconsistentTopology(format!(
            "level-set value at node {i} is exactly zero"
        )));
    }
    let values = &field.values;
    let nodes = mesh.nodes();

    let mut crossings: Vec<Crossing> = Vec::new();
    let mut crossing_index: HashMap<[usize; 2], usize> = HashMap::new();
    let mut cells: Vec<CutCell> = Vec::new();

    for (t, tet) in mesh.tets().iter().enumerate() {
        let local_values = tet.map(|n| values[n]);
        let pattern = crossing_pattern(&local_values);
        if pattern.is_empty() {
            continue;
        }
        let mut polygon: ArrayVec<usize, 4> = pattern
            .iter()
            .map(|&(la, lb)| {
                let (a, b) = (tet[la].min(tet[lb]), tet[la].max(tet[lb]));
                *crossing_index.entry([a, b]).or_insert_with(|| {
                    let (ra, rb) = (values[a], values[b]);
                    let point = nodes[a] + (nodes[b] - nodes[a]) * (ra / (ra - rb));
                    crossings.push(Crossing { edge: [a, b], point });
                    crossings.len() - 1
                })
            })
            .collect();

        let points = tet.map(|n| nodes[n]);
        let gradients = tet_gradients(&points)?;
        let level_set_gradient: Vec3 = (0..4).map(|k| local_values[k] * gradients[k]).sum();
        let normal = polygon_normal(&polygon.iter().map(|&c| crossings[c].point).collect());
        if normal.dot(&level_set_gradient) < 0.0 {
            polygon.reverse();
        }
        cells.push(CutCell {
            parent: t,
            nodes: *tet,
            dofs: [0; 4],
            gradients,
            polygon,
            level_set_gradient,
        });
    }

    // Degrees of freedom: every node of an active tet, in node order.
    let mut dof_of_node = vec![usize::MAX; nodes.len()];
    for cell in &cells {
        for &n in &cell.nodes {
            dof_of_node[n] = 0;
        }
    }
    let mut dof_nodes = Vec::new();
    for (n, slot) in dof_of_node.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = dof_nodes.len();
            dof_nodes.push(n);
        }
    }
    for cell in &mut cells {
        cell.dofs = cell.nodes.map(|n| dof_of_node[n]);
    }
    let dof_positions = dof_nodes.iter().map(|&n| nodes[n]).collect();

    let mut cell_of_tet = vec![usize::MAX; mesh.tets().len()];
    for (c, cell) in cells.iter().enumerate() {
        cell_of_tet[cell.parent] = c;
    }

    let mut interior_faces = Vec::new();
    for (f, face) in mesh.faces().iter().enumerate() {
        let (t0, Some(t1)) = face.tets else { continue };
        let (c0, c1) = (cell_of_tet[t0], cell_of_tet[t1]);
        if c0 == usize::MAX || c1 == usize::MAX {
            continue;
        }
        let [a, b, c] = face.nodes.map(|n| nodes[n]);
        let cross = (b - a).cross(&(c - a));
        let area = 0.5 * cross.norm();
        let mut normal = cross.normalize();
        let tet_centroid: Vec3 = mesh.tets()[t0].iter().map(|&n| nodes[n]).sum::<Vec3>() / 4.0;
        if normal.dot(&((a + b + c) / 3.0 - tet_centroid)) < 0.0 {
            normal = -normal;
        }
        interior_faces.push(InteriorFace {
            face: f,
            cells: [c0, c1],
            normal,
            area,
        });
    }

    // Pair up polygon edges through the tet face containing them.
    let mut by_face: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (c, cell) in cells.iter().enumerate() {
        let m = cell.polygon.len();
        for k in 0..m {
            let (e1, e2) = (
                crossings[cell.polygon[k]].edge,
                crossings[cell.polygon[(k + 1) % m]].edge,
            );
            let mut face_nodes: Vec<usize> = e1.iter().chain(e2.iter()).cloned().collect();
            face_nodes.sort_unstable();
            face_nodes.dedup();
            if face_nodes.len() != 3 {
                return Err(Error::InconsistentTopology(format!(
                    "polygon edge of cell {c} does not lie in a tet face"
                )));
            }
            let face = mesh
                .find_face([face_nodes[0], face_nodes[1], face_nodes[2]])
                .ok_or_else(|| Error::InconsistentTopology("missing background face".into()))?;
            by_face.entry(face).or_default().push((c, k));
        }
    }

    let mut cut_edges = Vec::with_capacity(by_face.len());
    for (face, sides) in by_face {
        if sides.len() != 2 || sides[0].0 == sides[1].0 {
            return Err(Error::InconsistentTopology(format!(
                "cut edge in face {face} borders {} cell(s)",
                sides.len()
            )));
        }
        let (c0, k0) = sides[0];
        let cell = &cells[c0];
        let m = cell.polygon.len();
        let endpoints = [
            crossings[cell.polygon[k0]].point,
            crossings[cell.polygon[(k0 + 1) % m]].point,
        ];
        let c1 = sides[1].0;
        cut_edges.push(CutEdge {
            face,
            endpoints,
            cells: [c0, c1],
            tets: [cells[c0].parent, cells[c1].parent],
        });
    }

    Ok(CutSurface {
        crossings,
        cells,
        interior_faces,
        cut_edges,
        dof_nodes,
        dof_positions,
        h: mesh.h(),
    })
}

/// Unnormalized area-weighted normal (Newell's method).
fn polygon_normal(points: &ArrayVec<Vec3, 4>) -> Vec3 {
    let m = points.len();
    (0..m).map(|k| points[k].cross(&points[(k + 1) % m])).sum::<Vec3>()
}

impl CutSurface {
    pub fn crossings(&self) -> &[Crossing] {
        &self.crossings
    }

    pub fn cells(&self) -> &[CutCell] {
        &self.cells
    }

    /// Background indices of the intersected tets, in cell order.
    pub fn active_tets(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c.parent).collect()
    }

    pub fn interior_faces(&self) -> &[InteriorFace] {
        &self.interior_faces
    }

    pub fn cut_edges(&self) -> &[CutEdge] {
        &self.cut_edges
    }

    /// Background node of each degree of freedom.
    pub fn dof_nodes(&self) -> &[usize] {
        &self.dof_nodes
    }

    pub fn dof_positions(&self) -> &[Vec3] {
        &self.dof_positions
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn polygon(&self, cell: usize) -> ArrayVec<Vec3, 4> {
        self.cells[cell]
            .polygon
            .iter()
            .map(|&c| self.crossings[c].point)
            .collect()
    }

    /// Unit normal of a cell, oriented along `grad rho_h`.
    pub fn cell_normal(&self, cell: usize) -> Vec3 {
        polygon_normal(&self.polygon(cell)).normalize()
    }

    /// Triangles covering a cell; quadrilaterals are split along the
    /// shorter diagonal.
    pub fn sub_triangles(&self, cell: usize) -> ArrayVec<[Vec3; 3], 2> {
        let p = self.polygon(cell);
        let mut out = ArrayVec::new();
        if p.len() == 3 {
            out.push([p[0], p[1], p[2]]);
        } else if (p[2] - p[0]).norm() <= (p[3] - p[1]).norm() {
            out.push([p[0], p[1], p[2]]);
            out.push([p[0], p[2], p[3]]);
        } else {
            out.push([p[1], p[2], p[3]]);
            out.push([p[1], p[3], p[0]]);
        }
        out
    }

    pub fn cell_area(&self, cell: usize) -> f64 {
        self.sub_triangles(cell)
            .iter()
            .map(|[a, b, c]| 0.5 * (b - a).cross(&(c - a)).norm())
            .sum()
    }

    /// Values of the parent tet's four basis functions at `x`.
    pub fn basis_values(&self, cell: usize, x: &Vec3, background: &[Vec3]) -> [f64; 4] {
        let c = &self.cells[cell];
        let origin = background[c.nodes[0]];
        let mut v = c.gradients.map(|g| g.dot(&(x - origin)));
        v[0] += 1.0;
        v
    }

    /// `V - E + F` of the polygonal complex.
    pub fn euler_characteristic(&self) -> i64 {
        self.crossings.len() as i64 - self.cut_edges.len() as i64 + self.cells.len() as i64
    }

    /// Number of connected components, cells being adjacent through cut edges.
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.cells.len()).collect();
        fn root(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for e in &self.cut_edges {
            let (a, b) = (root(&mut parent, e.cells[0]), root(&mut parent, e.cells[1]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        (0..self.cells.len()).filter(|&i| root(&mut parent, i) == i).count()
    }
}

pub fn cut_area(cut: &CutSurface) -> f64 {
    (0..cut.cells().len()).map(|c| cut.cell_area(c)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{SphereShape, TorusShape};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn unit_cube() -> BackgroundMesh {
        BackgroundMesh::new(
            Bounds {
                min: Vec3::zeros(),
                max: Vec3::new(1.0, 1.0, 1.0),
            },
            [1, 1, 1],
        )
        .unwrap()
    }

    /// Single reference tet with vertices 0, e_x, e_y, e_z.
    fn reference_tet() -> BackgroundMesh {
        let nodes = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        let tets = vec![[0, 1, 2, 3]];
        let faces = build_faces(&tets);
        BackgroundMesh {
            bounds: Bounds {
                min: Vec3::zeros(),
                max: Vec3::new(1.0, 1.0, 1.0),
            },
            cells: [1, 1, 1],
            nodes,
            tets,
            faces,
            h: 1.0,
        }
    }

    /// Cells of a single-tet extraction; the open surface has no cut edges,
    /// so only the per-tet geometry is exercised.
    fn single_tet_cells(values: [f64; 4]) -> Vec<ArrayVec<Vec3, 4>> {
        let mesh = reference_tet();
        let tet = mesh.tets()[0];
        let pattern = crossing_pattern(&values);
        if pattern.is_empty() {
            return vec![];
        }
        let poly = pattern
            .iter()
            .map(|&(a, b)| {
                let (pa, pb) = (mesh.nodes()[tet[a]], mesh.nodes()[tet[b]]);
                pa + (pb - pa) * (values[a] / (values[a] - values[b]))
            })
            .collect();
        vec![poly]
    }

    #[test]
    fn unit_cube_kuhn_split() {
        let mesh = unit_cube();
        assert_eq!(mesh.tets().len(), 6);
        let total: f64 = (0..6).map(|t| mesh.tet_volume(t)).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
        assert!((0..6).all(|t| mesh.tet_volume(t) > 0.0));
        let interior = mesh.faces().iter().filter(|f| f.tets.1.is_some()).count();
        // Six internal faces around the main diagonal, twelve on the boundary.
        assert_eq!(interior, 6);
        assert_eq!(mesh.faces().len(), 18);
    }

    #[test]
    fn torus_box_volume_and_conformity() {
        let mesh = generate_background(3).unwrap();
        let total: f64 = (0..mesh.tets().len()).map(|t| mesh.tet_volume(t)).sum();
        assert_abs_diff_eq!(total, 3.2 * 3.2 * 1.2, epsilon = 1e-10);
        assert_abs_diff_eq!(total, 12.288, epsilon = 1e-10);
        // Boundary faces: two triangles per boundary cell face.
        let [nx, ny, nz] = mesh.cells();
        let boundary = mesh.faces().iter().filter(|f| f.tets.1.is_none()).count();
        assert_eq!(boundary, 4 * (nx * ny + ny * nz + nx * nz));
        assert_abs_diff_eq!(mesh.h(), (mesh.nodes().len() as f64).cbrt().recip());
    }

    #[test]
    fn background_is_deterministic() {
        assert_eq!(generate_background(4).unwrap(), generate_background(4).unwrap());
        assert!(generate_background(1).is_err());
    }

    #[test]
    fn box_nodes_avoid_z_axis() {
        for n in [6, 9, 13, 19] {
            let mesh = generate_background(n).unwrap();
            assert!(mesh.cells()[0] % 2 == 1 && mesh.cells()[1] % 2 == 1);
            assert!(mesh.nodes().iter().all(|p| p.x.hypot(p.y) > 1e-3));
        }
    }

    #[test]
    fn levelset_node_values() {
        let torus = TorusShape::default();
        let mesh = BackgroundMesh::new(
            Bounds {
                min: Vec3::new(-1.5, -1.6, -0.6),
                max: Vec3::new(1.5, 1.6, 0.6),
            },
            [2, 2, 2],
        )
        .unwrap();
        let field = interpolate_levelset(&mesh, &torus);
        // (0, 0, 0) is a node of this mesh and lies on the medial axis.
        assert!(matches!(field, Err(Error::MedialAxisPoint(_))));

        let mut values = vec![
            torus.signed_distance(&Vec3::new(1.5, 0.0, 0.0)).unwrap(),
            torus.signed_distance(&Vec3::new(1.6, 1.6, 0.6)).unwrap(),
            torus.signed_distance(&Vec3::new(0.0, 1e-3, 0.0)).unwrap(),
        ];
        assert_eq!(values[0], 0.0);
        assert!(values[1] > 0.0);
        assert_abs_diff_eq!(values[2], 0.499, epsilon = 1e-12);
        perturb_zeros(&mut values);
        let max = values[1].max(values[2]);
        assert_eq!(values[0], ZERO_PERTURBATION * max);
    }

    #[test]
    fn single_tet_patterns() {
        let tri = single_tet_cells([-1.0, 1.0, 1.0, 1.0]);
        assert_eq!(tri[0].len(), 3);
        for p in &tri[0] {
            // Midpoints of the edges at vertex 0.
            assert_abs_diff_eq!(p.sum(), 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(p.amax(), 0.5, epsilon = 1e-15);
        }
        let quad = single_tet_cells([-1.0, -1.0, 1.0, 1.0]);
        assert_eq!(quad[0].len(), 4);
        assert!(single_tet_cells([1.0, 2.0, 3.0, 4.0]).is_empty());
    }

    #[test]
    fn midpoint_triangle_area() {
        let cells = single_tet_cells([-1.0, 1.0, 1.0, 1.0]);
        let [a, b, c] = [cells[0][0], cells[0][1], cells[0][2]];
        let area = 0.5 * (b - a).cross(&(c - a)).norm();
        // Midpoints (1/2,0,0), (0,1/2,0), (0,0,1/2): quarter of the slanted
        // face area sqrt(3)/2.
        assert_abs_diff_eq!(area, 3f64.sqrt() / 8.0, epsilon = 1e-15);
    }

    fn torus_cut(n: usize) -> (BackgroundMesh, CutSurface) {
        let mesh = generate_background(n).unwrap();
        let field = interpolate_levelset(&mesh, &TorusShape::default()).unwrap();
        let cut = extract(&mesh, &field).unwrap();
        (mesh, cut)
    }

    #[test]
    fn torus_cut_is_closed_with_torus_topology() {
        let (mesh, cut) = torus_cut(5);
        assert_eq!(cut.euler_characteristic(), 0);
        assert_eq!(cut.component_count(), 1);
        let mut borders = vec![0usize; cut.cells().len()];
        for e in cut.cut_edges() {
            borders[e.cells[0]] += 1;
            borders[e.cells[1]] += 1;
            let face = mesh.faces()[e.face];
            let (t0, t1) = (face.tets.0, face.tets.1.unwrap());
            assert!(e.tets == [t0, t1] || e.tets == [t1, t0]);
        }
        for (c, cell) in cut.cells().iter().enumerate() {
            assert_eq!(borders[c], cell.polygon.len());
        }
    }

    #[test]
    fn torus_cells_are_planar_and_contained() {
        let (mesh, cut) = torus_cut(5);
        let nodes = mesh.nodes();
        for (c, cell) in cut.cells().iter().enumerate() {
            let poly = cut.polygon(c);
            let n = cut.cell_normal(c);
            for p in &poly {
                assert!((p - poly[0]).dot(&n).abs() <= 1e-12);
                let bary = cut.basis_values(c, p, nodes);
                // On a tet edge: two barycentric coordinates vanish.
                let zeros = bary.iter().filter(|b| b.abs() <= 1e-12).count();
                assert!(zeros >= 2, "{bary:?}");
                assert!(bary.iter().all(|b| *b >= -1e-12));
            }
            assert!(n.dot(&cell.level_set_gradient) > 0.0);
        }
    }

    #[test]
    fn adjacent_cells_are_consistently_oriented() {
        let (_, cut) = torus_cut(4);
        for e in cut.cut_edges() {
            let forward = |c: usize| {
                let poly = cut.polygon(c);
                let m = poly.len();
                (0..m).any(|k| poly[k] == e.endpoints[0] && poly[(k + 1) % m] == e.endpoints[1])
            };
            assert_ne!(forward(e.cells[0]), forward(e.cells[1]));
        }
    }

    #[test]
    fn interior_faces_join_active_tets() {
        let (mesh, cut) = torus_cut(4);
        assert!(!cut.interior_faces().is_empty());
        for f in cut.interior_faces() {
            let [c0, c1] = f.cells;
            let face = mesh.faces()[f.face];
            assert_eq!(face.tets.0, cut.cells()[c0].parent);
            assert_eq!(face.tets.1, Some(cut.cells()[c1].parent));
            let tet_centroid: Vec3 =
                cut.cells()[c0].nodes.iter().map(|&n| mesh.nodes()[n]).sum::<Vec3>() / 4.0;
            let face_point = mesh.nodes()[face.nodes[0]];
            assert!(f.normal.dot(&(face_point - tet_centroid)) > 0.0);
            assert_abs_diff_eq!(f.normal.norm(), 1.0, epsilon = 1e-14);
        }
    }

    fn area_errors<S: ExactSurface>(shape: &S, levels: &[usize]) -> Vec<(f64, f64)> {
        levels
            .iter()
            .map(|&n| {
                let mesh = generate_background(n).unwrap();
                let field = interpolate_levelset(&mesh, shape).unwrap();
                let cut = extract(&mesh, &field).unwrap();
                (mesh.h(), (cut_area(&cut) - shape.area()).abs())
            })
            .collect()
    }

    #[test]
    fn torus_cut_area_converges_quadratically() {
        let errors = area_errors(&TorusShape::default(), &[6, 12, 24]);
        let rate = |a: (f64, f64), b: (f64, f64)| (a.1 / b.1).ln() / (a.0 / b.0).ln();
        let last = rate(errors[1], errors[2]);
        assert!(last > 1.7, "rate {last}, errors {errors:?}");
        assert!(errors[2].1 < 2e-2 * 2.0 * PI * PI);
    }

    #[test]
    fn sphere_cut_area_converges() {
        let sphere = SphereShape::new(0.5, Vec3::new(0.01, 0.02, 0.03)).unwrap();
        let errors = area_errors(&sphere, &[6, 12, 24]);
        let rate = |a: (f64, f64), b: (f64, f64)| (a.1 / b.1).ln() / (a.0 / b.0).ln();
        assert!(rate(errors[1], errors[2]) > 1.7, "{errors:?}");
        assert_abs_diff_eq!(sphere.area(), PI);
    }
}
