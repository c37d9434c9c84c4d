//! Assembly of the discrete forms: mass, load from the tangential gradient
//! of the coordinate map, conormal-jump edge stabilization and normal-jump
//! face stabilization.
//!
//! Every integrand is a product of linear basis values and per-element
//! constant gradients over flat triangles, so the edge-midpoint rule is
//! exact throughout.

use arrayvec::ArrayVec;

use crate::error::{Error, Result};
use crate::fe::{Element, FeSurface, SurfaceKind};
use crate::sparse::SparseSymMatrix;
use crate::Vec3;

/// Three right-hand sides, one per coordinate component.
pub type VectorLoad = [Vec<f64>; 3];

/// `(u, v)` over the discrete surface.
pub fn assemble_mass(surface: &FeSurface) -> Result<SparseSymMatrix> {
    ensure_nonempty(surface)?;
    let mut triplets = Vec::with_capacity(surface.elements().len() * 16);
    for element in surface.elements() {
        let n = element.dofs.len();
        let mut local = [[0.0; 4]; 4];
        for [a, b, c] in &element.triangles {
            let weight = 0.5 * (b - a).cross(&(c - a)).norm() / 3.0;
            for q in [(a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5] {
                let phi = element.basis_values(&q);
                for i in 0..n {
                    for j in 0..=i {
                        local[i][j] += weight * phi[i] * phi[j];
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..=i {
                triplets.push((element.dofs[i], element.dofs[j], local[i][j]));
            }
        }
    }
    Ok(SparseSymMatrix::from_triplets(surface.n_dofs(), triplets))
}

/// `(grad_S x, grad_S v)`: entry `i` of component `k` is
/// `sum_K |K| e_k . P_K grad phi_i`.
pub fn assemble_load(surface: &FeSurface) -> Result<VectorLoad> {
    ensure_nonempty(surface)?;
    let n = surface.n_dofs();
    let mut load = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for element in surface.elements() {
        for (dof, g) in element.dofs.iter().zip(&element.gradients) {
            let tangential = element.tangential(g);
            for k in 0..3 {
                load[k][*dof] += element.area * tangential[k];
            }
        }
    }
    Ok(load)
}

/// `sum_E h |E| [t_E . grad_S u][t_E . grad_S v]` with the global `h`.
pub fn assemble_edge_stab(surface: &FeSurface) -> Result<SparseSymMatrix> {
    ensure_nonempty(surface)?;
    let elements = surface.elements();
    let mut triplets = Vec::with_capacity(surface.edges().len() * 36);
    for edge in surface.edges() {
        let [a, b] = edge.endpoints;
        let length = (b - a).norm();
        if length == 0.0 {
            continue;
        }
        let direction = (b - a) / length;
        let midpoint = (a + b) * 0.5;
        let mut jump = JumpCoefficients::new();
        for &e in &edge.elements {
            let element = &elements[e];
            let conormal = outward_conormal(element, &direction, &midpoint);
            // The conormal lies in the element plane, so t . P g = t . g.
            for (dof, g) in element.dofs.iter().zip(&element.gradients) {
                jump.add(*dof, conormal.dot(g));
            }
        }
        jump.push_outer(surface.h() * length, &mut triplets);
    }
    Ok(SparseSymMatrix::from_triplets(surface.n_dofs(), triplets))
}

/// `sum_F |F| [n_F . grad u][n_F . grad v]` over faces shared by two active
/// tets. Only defined for cut surfaces.
pub fn assemble_face_stab(surface: &FeSurface) -> Result<SparseSymMatrix> {
    if surface.kind() != SurfaceKind::Cut {
        return Err(Error::NotApplicable("face stabilization requires a cut surface"));
    }
    ensure_nonempty(surface)?;
    let elements = surface.elements();
    let mut triplets = Vec::with_capacity(surface.faces().len() * 25);
    for face in surface.faces() {
        let mut jump = JumpCoefficients::new();
        for (side, &e) in face.elements.iter().enumerate() {
            // n_{F,T1} = n, n_{F,T2} = -n.
            let sign = if side == 0 { 1.0 } else { -1.0 };
            let element = &elements[e];
            for (dof, g) in element.dofs.iter().zip(&element.gradients) {
                jump.add(*dof, sign * face.normal.dot(g));
            }
        }
        jump.push_outer(face.area, &mut triplets);
    }
    Ok(SparseSymMatrix::from_triplets(surface.n_dofs(), triplets))
}

fn ensure_nonempty(surface: &FeSurface) -> Result<()> {
    if surface.elements().is_empty() {
        Err(Error::EmptySurface)
    } else {
        Ok(())
    }
}

/// Unit vector in the element plane, orthogonal to the edge direction and
/// pointing away from the element.
fn outward_conormal(element: &Element, direction: &Vec3, edge_point: &Vec3) -> Vec3 {
    let t = element.normal.cross(direction).normalize();
    if t.dot(&(edge_point - element.centroid)) < 0.0 {
        -t
    } else {
        t
    }
}

/// Per-dof jump coefficients across one edge or face.
struct JumpCoefficients(ArrayVec<(usize, f64), 8>);

impl JumpCoefficients {
    fn new() -> Self {
        Self(ArrayVec::new())
    }

    fn add(&mut self, dof: usize, value: f64) {
        match self.0.iter_mut().find(|(d, _)| *d == dof) {
            Some((_, v)) => *v += value,
            None => self.0.push((dof, value)),
        }
    }

    fn push_outer(&self, weight: f64, triplets: &mut Vec<(usize, usize, f64)>) {
        for (a, &(i, ci)) in self.0.iter().enumerate() {
            for &(j, cj) in &self.0[..=a] {
                triplets.push((i, j, weight * ci * cj));
            }
        }
    }
}

/// Assembled forms of the stabilized problem for one surface.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSystem {
    pub mass: SparseSymMatrix,
    pub edge_stab: SparseSymMatrix,
    /// Present only for cut surfaces.
    pub face_stab: Option<SparseSymMatrix>,
    pub load: VectorLoad,
    pub dof_positions: Vec<crate::Vec3>,
    pub h: f64,
    pub tau_e: f64,
    pub tau_f: f64,
}

impl DiscreteSystem {
    pub fn assemble(surface: &FeSurface, tau_e: f64, tau_f: f64) -> Result<Self> {
        if !(tau_e >= 0.0 && tau_f >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "stabilization parameters must be non-negative, got tau_e={tau_e}, tau_f={tau_f}"
            )));
        }
        let face_stab = match surface.kind() {
            SurfaceKind::Cut => Some(assemble_face_stab(surface)?),
            SurfaceKind::Meshed if tau_f > 0.0 => {
                return Err(Error::InvalidConfig("tau_f must be 0 for meshed surfaces".into()))
            }
            SurfaceKind::Meshed => None,
        };
        Ok(Self {
            mass: assemble_mass(surface)?,
            edge_stab: assemble_edge_stab(surface)?,
            face_stab,
            load: assemble_load(surface)?,
            dof_positions: surface.dof_positions().to_vec(),
            h: surface.h(),
            tau_e,
            tau_f,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.mass.dim()
    }

    /// `mass + tau_e edge_stab + tau_f face_stab`; vanishing terms are
    /// skipped so zero parameters return the mass matrix exactly.
    pub fn system_matrix(&self) -> SparseSymMatrix {
        let mut terms = vec![(1.0, &self.mass)];
        if self.tau_e != 0.0 {
            terms.push((self.tau_e, &self.edge_stab));
        }
        if let (Some(face), true) = (&self.face_stab, self.tau_f != 0.0) {
            terms.push((self.tau_f, face));
        }
        if terms.len() == 1 {
            return self.mass.clone();
        }
        SparseSymMatrix::linear_combination(self.n_dofs(), &terms)
    }

    /// Right-hand sides of the solve.
    ///
    /// The load form integrates to `-lap_S x`, while curvature vectors here
    /// follow `H = -(lap rho) grad rho = lap_S x`; the load is negated so the
    /// solution approximates the same field the exact surfaces report.
    pub fn rhs(&self) -> VectorLoad {
        self.load.clone().map(|v| v.into_iter().map(|x| -x).collect())
    }
}

pub fn system_matrix(system: &DiscreteSystem) -> SparseSymMatrix {
    system.system_matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshed::{generate, MeshFamily};
    use crate::geometry::TorusShape;
    use approx::assert_abs_diff_eq;

    fn flat_triangle() -> FeSurface {
        // Open surfaces have no edge list; only element data is used here.
        let v = [Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 1.5, 0.0)];
        let normal = Vec3::z();
        let area = 1.5;
        let gradients = (0..3)
            .map(|i| normal.cross(&(v[(i + 2) % 3] - v[(i + 1) % 3])) / (2.0 * area))
            .collect();
        let mut triangles = ArrayVec::new();
        triangles.push(v);
        let element = Element {
            dofs: [0, 1, 2].into_iter().collect(),
            gradients,
            origin: v[0],
            normal,
            centroid: (v[0] + v[1] + v[2]) / 3.0,
            area,
            triangles,
        };
        FeSurface::test_surface(vec![element], vec![], 3, 1.0)
    }

    #[test]
    fn single_triangle_mass() {
        let m = assemble_mass(&flat_triangle()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.5 / 6.0 } else { 1.5 / 12.0 };
                assert_abs_diff_eq!(m.get(i, j), expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn flat_triangle_load_has_no_normal_component() {
        let load = assemble_load(&flat_triangle()).unwrap();
        assert!(load[2].iter().all(|v| *v == 0.0));
        for k in 0..2 {
            assert_abs_diff_eq!(load[k].iter().sum::<f64>(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn empty_surface_is_rejected() {
        let empty = FeSurface::test_surface(vec![], vec![], 0, 1.0);
        assert!(matches!(assemble_mass(&empty), Err(Error::EmptySurface)));
        assert!(matches!(assemble_load(&empty), Err(Error::EmptySurface)));
    }

    #[test]
    fn face_stab_not_applicable_to_meshes() {
        let mesh = generate(&MeshFamily::structured(6, 3), &TorusShape::default()).unwrap();
        let fe = FeSurface::from(&mesh);
        assert!(matches!(assemble_face_stab(&fe), Err(Error::NotApplicable(_))));
        assert!(DiscreteSystem::assemble(&fe, 0.1, 0.1).is_err());
        assert!(DiscreteSystem::assemble(&fe, -0.1, 0.0).is_err());
    }

    /// Unit square split along the (0,0)-(1,1) diagonal, as a two-element
    /// surface whose only interior edge is the diagonal.
    fn square_patch() -> FeSurface {
        let vertices = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let tris = [[0usize, 1, 2], [0, 2, 3]];
        // Build elements directly since the patch is open.
        let elements = tris
            .iter()
            .map(|tri| {
                let v = tri.map(|i| vertices[i]);
                let normal = Vec3::z();
                let area = 0.5;
                let gradients = (0..3)
                    .map(|i| normal.cross(&(v[(i + 2) % 3] - v[(i + 1) % 3])) / (2.0 * area))
                    .collect();
                let mut triangles = ArrayVec::new();
                triangles.push(v);
                Element {
                    dofs: tri.iter().cloned().collect(),
                    gradients,
                    origin: v[0],
                    normal,
                    centroid: (v[0] + v[1] + v[2]) / 3.0,
                    area,
                    triangles,
                }
            })
            .collect();
        let edges = vec![crate::fe::SurfaceEdge {
            elements: [0, 1],
            endpoints: [vertices[0], vertices[2]],
        }];
        FeSurface::test_surface(elements, edges, 4, 0.5)
    }

    #[test]
    fn linear_function_has_no_edge_jump() {
        let patch = square_patch();
        let j = assemble_edge_stab(&patch).unwrap();
        let coords = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let u: Vec<f64> = coords.iter().map(|(x, y)| 0.3 + 2.0 * x - 1.5 * y).collect();
        assert!(j.mul_vec(&u).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn hat_function_diagonal_jump() {
        // Hat at vertex 1 = (1,0): gradient (1,-1) on K1 = (0,1,2), absent
        // on K2 = (0,2,3). K1 lies below the diagonal, so t_{E,K1} =
        // (-1,1)/sqrt2 and the jump is -sqrt2. Entry = h |E| jump^2.
        let patch = square_patch();
        let j = assemble_edge_stab(&patch).unwrap();
        let (h, len) = (0.5, 2f64.sqrt());
        assert_abs_diff_eq!(j.get(1, 1), h * len * 2.0, epsilon = 1e-14);
        // Hat at vertex 3: gradient (-1,1) on K2, t_{E,K2} = (1,-1)/sqrt2,
        // jump -sqrt2 as well.
        assert_abs_diff_eq!(j.get(1, 3), h * len * 2.0, epsilon = 1e-14);
        // Hat at vertex 0: conormal derivatives 1/sqrt2 on both sides.
        assert_abs_diff_eq!(j.get(0, 0), h * len * 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(j.get(0, 1), -h * len * 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(j.sum_entries(), 0.0, epsilon = 1e-14);
    }
}
