//! OBJ and legacy VTK writers for surfaces and curvature fields.

use std::io::{self, Write};

use arrayvec::ArrayVec;

use crate::analysis::CurvatureField;
use crate::cut::{BackgroundMesh, CutSurface, LevelSetField};
use crate::meshed::SurfaceMesh;
use crate::Vec3;

const VTK_TRIANGLE: u8 = 5;
const VTK_TETRA: u8 = 10;

fn write_point<W: Write>(out: &mut W, prefix: &str, p: &Vec3) -> io::Result<()> {
    writeln!(out, "{prefix}{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z)
}

fn write_obj<W: Write>(mut out: W, points: &[Vec3], triangles: &[[usize; 3]]) -> io::Result<()> {
    for p in points {
        write_point(&mut out, "v ", p)?;
    }
    for t in triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

/// Crossing-index triangles of the cut surface, split like
/// [`CutSurface::sub_triangles`].
pub fn cut_triangles(cut: &CutSurface) -> Vec<[usize; 3]> {
    let points = cut.crossings();
    let mut out = Vec::with_capacity(2 * cut.cells().len());
    for cell in cut.cells() {
        let p: &ArrayVec<usize, 4> = &cell.polygon;
        if p.len() == 3 {
            out.push([p[0], p[1], p[2]]);
            continue;
        }
        let d02 = (points[p[2]].point - points[p[0]].point).norm();
        let d13 = (points[p[3]].point - points[p[1]].point).norm();
        if d02 <= d13 {
            out.push([p[0], p[1], p[2]]);
            out.push([p[0], p[2], p[3]]);
        } else {
            out.push([p[1], p[2], p[3]]);
            out.push([p[1], p[3], p[0]]);
        }
    }
    out
}

pub fn write_mesh_obj<W: Write>(mesh: &SurfaceMesh, out: W) -> io::Result<()> {
    write_obj(out, mesh.vertices(), mesh.triangles())
}

pub fn write_cut_obj<W: Write>(cut: &CutSurface, out: W) -> io::Result<()> {
    let points: Vec<Vec3> = cut.crossings().iter().map(|c| c.point).collect();
    write_obj(out, &points, &cut_triangles(cut))
}

fn write_vtk_surface<W: Write>(
    mut out: W,
    title: &str,
    points: &[Vec3],
    triangles: &[[usize; 3]],
    values: &[Vec3],
) -> io::Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{title}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", points.len())?;
    for p in points {
        write_point(&mut out, "", p)?;
    }
    writeln!(out, "CELLS {} {}", triangles.len(), 4 * triangles.len())?;
    for t in triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {}", triangles.len())?;
    for _ in triangles {
        writeln!(out, "{VTK_TRIANGLE}")?;
    }
    writeln!(out, "POINT_DATA {}", points.len())?;
    writeln!(out, "VECTORS H double")?;
    for v in values {
        write_point(&mut out, "", v)?;
    }
    writeln!(out, "SCALARS Hmag double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in values {
        writeln!(out, "{:.16e}", v.norm())?;
    }
    Ok(())
}

/// Triangulated surface with the per-vertex curvature vector and its length.
pub fn write_mesh_vtk<W: Write>(mesh: &SurfaceMesh, field: &CurvatureField, out: W) -> io::Result<()> {
    assert_eq!(field.len(), mesh.vertices().len(), "one curvature vector per vertex");
    write_vtk_surface(out, "curvature", mesh.vertices(), mesh.triangles(), &field.coefficients)
}

/// Values of a background field at the crossing points of the cut surface.
pub fn evaluate_at_crossings(cut: &CutSurface, background: &BackgroundMesh, field: &CurvatureField) -> Vec<Vec3> {
    let mut values = vec![None; cut.crossings().len()];
    for (c, cell) in cut.cells().iter().enumerate() {
        for &k in &cell.polygon {
            if values[k].is_none() {
                let phi = cut.basis_values(c, &cut.crossings()[k].point, background.nodes());
                let v: Vec3 = cell
                    .dofs
                    .iter()
                    .zip(phi)
                    .map(|(d, p)| field.coefficients[*d] * p)
                    .sum();
                values[k] = Some(v);
            }
        }
    }
    values.into_iter().map(|v| v.unwrap_or_else(Vec3::zeros)).collect()
}

/// Cut surface with the background curvature field evaluated at its vertices.
pub fn write_cut_vtk<W: Write>(
    cut: &CutSurface,
    background: &BackgroundMesh,
    field: &CurvatureField,
    out: W,
) -> io::Result<()> {
    assert_eq!(field.len(), cut.dof_nodes().len(), "one curvature vector per dof");
    let points: Vec<Vec3> = cut.crossings().iter().map(|c| c.point).collect();
    let values = evaluate_at_crossings(cut, background, field);
    write_vtk_surface(out, "curvature", &points, &cut_triangles(cut), &values)
}

/// Background tetrahedra with the nodal level set.
pub fn write_background_vtk<W: Write>(mesh: &BackgroundMesh, field: &LevelSetField, mut out: W) -> io::Result<()> {
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "level set")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.nodes().len())?;
    for p in mesh.nodes() {
        write_point(&mut out, "", p)?;
    }
    let tets = mesh.tets();
    writeln!(out, "CELLS {} {}", tets.len(), 5 * tets.len())?;
    for t in tets {
        writeln!(out, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(out, "CELL_TYPES {}", tets.len())?;
    for _ in tets {
        writeln!(out, "{VTK_TETRA}")?;
    }
    writeln!(out, "POINT_DATA {}", mesh.nodes().len())?;
    writeln!(out, "SCALARS rho double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in &field.values {
        writeln!(out, "{v:.16e}")?;
    }
    Ok(())
}
