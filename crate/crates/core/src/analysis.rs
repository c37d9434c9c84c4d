//! Error measurement and convergence diagnostics.

use std::io::{self, Write};

use crate::assembly::DiscreteSystem;
use crate::error::{Error, Result};
use crate::fe::FeSurface;
use crate::geometry::ExactSurface;
use crate::Vec3;

/// One 3-vector per degree of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub coefficients: Vec<Vec3>,
}

impl CurvatureField {
    pub fn zeros(n: usize) -> Self {
        Self {
            coefficients: vec![Vec3::zeros(); n],
        }
    }

    pub fn from_components(components: &[Vec<f64>; 3]) -> Self {
        let n = components[0].len();
        Self {
            coefficients: (0..n)
                .map(|i| Vec3::new(components[0][i], components[1][i], components[2][i]))
                .collect(),
        }
    }

    pub fn components(&self) -> [Vec<f64>; 3] {
        [0, 1, 2].map(|k| self.coefficients.iter().map(|v| v[k]).collect())
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients.iter().all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.coefficients.iter().map(|v| v.norm()).collect()
    }
}

/// Nodal interpolant of the exact curvature vector, evaluated at the
/// closest surface point of each degree of freedom.
pub fn interpolate_exact<S: ExactSurface + ?Sized>(surface: &FeSurface, shape: &S) -> Result<CurvatureField> {
    let coefficients = surface
        .dof_positions()
        .iter()
        .map(|x| shape.exact_curvature_vector(&shape.closest_point(x)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(CurvatureField { coefficients })
}

fn check_dims(system: &DiscreteSystem, field: &CurvatureField) -> Result<()> {
    if field.len() != system.n_dofs() {
        return Err(Error::DimensionMismatch {
            expected: system.n_dofs(),
            actual: field.len(),
        });
    }
    Ok(())
}

/// Mass-weighted discrete L2 distance, summed over the three components.
pub fn discrete_l2_error(system: &DiscreteSystem, a: &CurvatureField, b: &CurvatureField) -> Result<f64> {
    check_dims(system, a)?;
    check_dims(system, b)?;
    let diff = CurvatureField {
        coefficients: a.coefficients.iter().zip(&b.coefficients).map(|(x, y)| x - y).collect(),
    };
    let total: f64 = diff.components().iter().map(|c| system.mass.quadratic_form(c)).sum();
    Ok(total.max(0.0).sqrt())
}

/// L2 distance between the discrete field and the exact curvature vector,
/// integrated with the edge-midpoint rule on every flat (sub)triangle.
pub fn quadrature_l2_error<S: ExactSurface + ?Sized>(
    surface: &FeSurface,
    field: &CurvatureField,
    shape: &S,
) -> Result<f64> {
    if field.len() != surface.n_dofs() {
        return Err(Error::DimensionMismatch {
            expected: surface.n_dofs(),
            actual: field.len(),
        });
    }
    let mut total = 0.0;
    for element in surface.elements() {
        for [a, b, c] in &element.triangles {
            let weight = 0.5 * (b - a).cross(&(c - a)).norm() / 3.0;
            for q in [(a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5] {
                let phi = element.basis_values(&q);
                let discrete: Vec3 = element
                    .dofs
                    .iter()
                    .zip(&phi)
                    .map(|(d, p)| field.coefficients[*d] * *p)
                    .sum();
                let exact = shape.exact_curvature_vector(&q)?;
                total += weight * (discrete - exact).norm_squared();
            }
        }
    }
    Ok(total.sqrt())
}

/// Experimental order of convergence between two refinement levels.
pub fn eoc(h_coarse: f64, e_coarse: f64, h_fine: f64, e_fine: f64) -> Result<f64> {
    if !(h_coarse > 0.0 && e_coarse > 0.0 && h_fine > 0.0 && e_fine > 0.0) {
        return Err(Error::NonPositiveInput("eoc"));
    }
    if !(h_fine < h_coarse) {
        return Err(Error::InvalidConfig(format!(
            "eoc requires h_fine < h_coarse, got {h_fine} >= {h_coarse}"
        )));
    }
    Ok((e_coarse / e_fine).ln() / (h_coarse / h_fine).ln())
}

/// Squared stabilized norm `|u|^2 + tau_e |||u|||_E^2 + tau_f |||u|||_F^2`,
/// summed over components.
pub fn stability_norm(system: &DiscreteSystem, field: &CurvatureField) -> Result<f64> {
    check_dims(system, field)?;
    let mut total = 0.0;
    for c in field.components() {
        total += system.mass.quadratic_form(&c);
        if system.tau_e != 0.0 {
            total += system.tau_e * system.edge_stab.quadratic_form(&c);
        }
        if let (Some(face), true) = (&system.face_stab, system.tau_f != 0.0) {
            total += system.tau_f * face.quadratic_form(&c);
        }
    }
    Ok(total)
}

/// Scaled sup-norm proxies of `|rho| <~ h^2` and `|n o p - n_h| <~ h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryReport {
    pub max_rho: f64,
    pub max_normal_deviation: f64,
    pub rho_ratio: f64,
    pub normal_ratio: f64,
}

/// Samples every element at its corners, edge midpoints and centroid.
pub fn geometry_report<S: ExactSurface + ?Sized>(surface: &FeSurface, shape: &S) -> Result<GeometryReport> {
    let mut max_rho = 0.0f64;
    let mut max_normal = 0.0f64;
    for element in surface.elements() {
        let mut samples = vec![element.centroid];
        for [a, b, c] in &element.triangles {
            samples.extend([*a, *b, *c, (a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5]);
        }
        for x in &samples {
            let (rho, grad, _) = shape.distance_derivatives(x)?;
            max_rho = max_rho.max(rho.abs());
            max_normal = max_normal.max((grad - element.normal).norm());
        }
    }
    let h = surface.h();
    Ok(GeometryReport {
        max_rho,
        max_normal_deviation: max_normal,
        rho_ratio: max_rho / (h * h),
        normal_ratio: max_normal / h,
    })
}

/// One row of a refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub h: f64,
    pub dofs: usize,
    pub error: f64,
    pub eoc: Option<f64>,
    pub stability: f64,
    pub rho_ratio: f64,
    pub normal_ratio: f64,
    pub cg_iterations: usize,
}

/// Fills `eoc` of every row from its predecessor.
pub fn fill_eoc(records: &mut [ConvergenceRecord]) -> Result<()> {
    for i in 1..records.len() {
        let (prev, cur) = (&records[i - 1], &records[i]);
        records[i].eoc = Some(eoc(prev.h, prev.error, cur.h, cur.error)?);
    }
    if let Some(first) = records.first_mut() {
        first.eoc = None;
    }
    Ok(())
}

pub const CSV_HEADER: &str = "h,N,error,eoc,stability,rho_ratio,normal_ratio,cg_iters";

pub fn write_csv<W: Write>(records: &[ConvergenceRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let eoc = r.eoc.map(|v| format!("{v:.17e}")).unwrap_or_default();
        writeln!(
            out,
            "{:.17e},{},{:.17e},{},{:.17e},{:.17e},{:.17e},{}",
            r.h, r.dofs, r.error, eoc, r.stability, r.rho_ratio, r.normal_ratio, r.cg_iterations
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{SphereShape, TorusShape};
    use crate::meshed::{generate, MeshFamily, SurfaceMesh};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn structured(nt: usize, np: usize) -> (SurfaceMesh, FeSurface, DiscreteSystem) {
        let mesh = generate(&MeshFamily::structured(nt, np), &TorusShape::default()).unwrap();
        let fe = FeSurface::from(&mesh);
        let system = DiscreteSystem::assemble(&fe, 0.1, 0.0).unwrap();
        (mesh, fe, system)
    }

    #[test]
    fn eoc_examples() {
        assert_abs_diff_eq!(eoc(0.2, 1.0, 0.1, 0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eoc(0.2, 1.0, 0.1, 0.25).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eoc(0.2, 1.0, 0.1, 1.0).unwrap(), 0.0);
        assert!(matches!(eoc(0.2, 0.0, 0.1, 1.0), Err(Error::NonPositiveInput(_))));
        assert!(matches!(eoc(-0.2, 1.0, 0.1, 1.0), Err(Error::NonPositiveInput(_))));
        assert!(eoc(0.1, 1.0, 0.2, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn eoc_is_scale_invariant(
            hc in 0.01..1.0f64, ratio in 1.1..4.0f64,
            ec in 1e-6..1.0f64, ef in 1e-6..1.0f64, scale in 1e-3..1e3f64,
        ) {
            let hf = hc / ratio;
            let a = eoc(hc, ec, hf, ef).unwrap();
            let b = eoc(hc, scale * ec, hf, scale * ef).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn interpolation_at_equator_vertices() {
        let (mesh, fe, _) = structured(8, 4);
        let field = interpolate_exact(&fe, &TorusShape::default()).unwrap();
        // Vertex (0,0) sits at (1.5,0,0), vertex (0,2) at phi = pi, (0.5,0,0).
        assert_abs_diff_eq!(mesh.vertices()[0], Vec3::new(1.5, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(field.coefficients[0], Vec3::new(-8.0 / 3.0, 0.0, 0.0), epsilon = 1e-12);
        assert_abs_diff_eq!(mesh.vertices()[2], Vec3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(field.coefficients[2], Vec3::zeros(), epsilon = 1e-12);

        let sphere = SphereShape::new(1.0, Vec3::zeros()).unwrap();
        let h = sphere.exact_curvature_vector(&sphere.closest_point(&Vec3::new(0.0, 0.0, 1.0)).unwrap()).unwrap();
        assert_abs_diff_eq!(h, Vec3::new(0.0, 0.0, -2.0), epsilon = 1e-15);
    }

    #[test]
    fn discrete_error_properties() {
        let (_, fe, system) = structured(12, 6);
        let exact = interpolate_exact(&fe, &TorusShape::default()).unwrap();
        assert_eq!(discrete_l2_error(&system, &exact, &exact).unwrap(), 0.0);

        // Constant difference c: |c| sqrt(area).
        let c = Vec3::new(0.3, -0.4, 1.2);
        let shifted = CurvatureField {
            coefficients: exact.coefficients.iter().map(|v| v + c).collect(),
        };
        let err = discrete_l2_error(&system, &shifted, &exact).unwrap();
        assert_abs_diff_eq!(err, c.norm() * fe.area().sqrt(), epsilon = 1e-12);
        let back = discrete_l2_error(&system, &exact, &shifted).unwrap();
        assert_abs_diff_eq!(err, back, epsilon = 1e-15);

        let short = CurvatureField::zeros(3);
        assert!(matches!(
            discrete_l2_error(&system, &exact, &short),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(stability_norm(&system, &short), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn quadrature_error_properties() {
        let shape = TorusShape::default();
        let mut interp_errors = vec![];
        for n in [16, 32, 64] {
            let (_, fe, system) = structured(2 * n, n);
            let exact = interpolate_exact(&fe, &shape).unwrap();
            let q = quadrature_l2_error(&fe, &exact, &shape).unwrap();
            let d = discrete_l2_error(&system, &exact, &CurvatureField::zeros(fe.n_dofs())).unwrap();
            let z = quadrature_l2_error(&fe, &CurvatureField::zeros(fe.n_dofs()), &shape).unwrap();
            // Zero field: close to the discrete norm of the interpolant.
            assert!((z / d - 1.0).abs() < 0.05, "{z} vs {d}");
            interp_errors.push((fe.h(), q));
        }
        for pair in interp_errors.windows(2) {
            let rate = eoc(pair[0].0, pair[0].1, pair[1].0, pair[1].1).unwrap();
            assert!(rate > 1.8, "interpolation rate {rate}");
        }
        let (_, fe, _) = structured(8, 4);
        let exact = interpolate_exact(&fe, &shape).unwrap();
        assert!(quadrature_l2_error(&fe, &exact, &shape).unwrap() > 0.0);
    }

    #[test]
    fn stability_norm_of_zero_is_zero() {
        let (_, fe, system) = structured(8, 4);
        assert_eq!(stability_norm(&system, &CurvatureField::zeros(fe.n_dofs())).unwrap(), 0.0);
    }

    #[test]
    fn geometry_report_on_structured_torus() {
        let shape = TorusShape::default();
        let mut ratios = vec![];
        for n in [16, 32, 64] {
            let (mesh, fe, _) = structured(2 * n, n);
            for v in mesh.vertices() {
                assert!(shape.signed_distance(v).unwrap().abs() <= 1e-12);
            }
            let report = geometry_report(&fe, &shape).unwrap();
            ratios.push((report.rho_ratio, report.normal_ratio));
        }
        for k in 0..2 {
            let values: Vec<f64> = ratios.iter().map(|r| if k == 0 { r.0 } else { r.1 }).collect();
            let max = values.iter().cloned().fold(f64::MIN, f64::max);
            let min = values.iter().cloned().fold(f64::MAX, f64::min);
            assert!(max / min < 4.0, "{values:?}");
        }
    }

    #[test]
    fn csv_layout() {
        let mut rows = vec![
            ConvergenceRecord {
                h: 0.2,
                dofs: 10,
                error: 1.0,
                eoc: None,
                stability: 3.0,
                rho_ratio: 0.1,
                normal_ratio: 0.2,
                cg_iterations: 7,
            },
            ConvergenceRecord {
                h: 0.1,
                dofs: 40,
                error: 0.25,
                eoc: None,
                stability: 3.1,
                rho_ratio: 0.1,
                normal_ratio: 0.2,
                cg_iterations: 9,
            },
        ];
        fill_eoc(&mut rows).unwrap();
        assert_abs_diff_eq!(rows[1].eoc.unwrap(), 2.0, epsilon = 1e-14);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1].split(',').nth(3), Some(""));
        assert_eq!(lines[2].split(',').count(), 8);
        assert!(lines[2].ends_with(",9"));
    }
}
