//! End-to-end runs: build a surface, assemble, solve and measure.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::{
    discrete_l2_error, fill_eoc, geometry_report, interpolate_exact, quadrature_l2_error, stability_norm,
    write_csv, ConvergenceRecord, CurvatureField,
};
use crate::assembly::DiscreteSystem;
use crate::cut::{extract, generate_background, interpolate_levelset, Bounds, BackgroundMesh, CutSurface};
use crate::error::{Error, Result};
use crate::fe::FeSurface;
use crate::geometry::TorusShape;
use crate::io;
use crate::meshed::{generate, MeshFamily, MeshKind, SurfaceMesh};
use crate::solve::{solve_components, SolveReport, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Meshed,
    Cut,
}

/// One refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Grid { n_theta: usize, n_phi: usize },
    Cut { n_per_unit: usize },
}

impl Level {
    fn size(&self) -> usize {
        match *self {
            Level::Grid { n_theta, n_phi } => n_theta * n_phi,
            Level::Cut { n_per_unit } => n_per_unit,
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    /// `"64x32"` is a torus grid, a bare integer a cut resolution.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse level '{s}'"));
        let s = s.trim();
        match s.split_once(['x', 'X']) {
            Some((a, b)) => Ok(Level::Grid {
                n_theta: a.trim().parse().map_err(|_| bad())?,
                n_phi: b.trim().parse().map_err(|_| bad())?,
            }),
            None => Ok(Level::Cut {
                n_per_unit: s.parse().map_err(|_| bad())?,
            }),
        }
    }
}

/// Comma separated list of levels.
pub fn parse_levels(s: &str) -> Result<Vec<Level>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

pub fn default_levels(mode: Mode) -> Vec<Level> {
    match mode {
        Mode::Meshed => [(32, 16), (64, 32), (128, 64), (256, 128)]
            .map(|(n_theta, n_phi)| Level::Grid { n_theta, n_phi })
            .to_vec(),
        Mode::Cut => [6, 9, 13, 19].map(|n_per_unit| Level::Cut { n_per_unit }).to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Triangulation family; ignored in cut mode.
    pub family: MeshKind,
    pub levels: Vec<Level>,
    pub major: f64,
    pub minor: f64,
    pub tau_e: f64,
    pub tau_f: f64,
    pub seed: u64,
    pub amplitude: f64,
    pub tolerance: f64,
    /// CG iteration cap; `None` uses the solver default.
    pub max_iterations: Option<usize>,
    pub csv: Option<PathBuf>,
    pub export_vtk: Option<PathBuf>,
    pub export_obj: Option<PathBuf>,
}

impl RunConfig {
    pub fn meshed(family: MeshKind) -> Self {
        Self {
            mode: Mode::Meshed,
            family,
            levels: default_levels(Mode::Meshed),
            major: 1.0,
            minor: 0.5,
            tau_e: 0.1,
            tau_f: 0.0,
            seed: 1,
            amplitude: MeshFamily::DEFAULT_AMPLITUDE,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: None,
            csv: None,
            export_vtk: None,
            export_obj: None,
        }
    }

    pub fn cut() -> Self {
        Self {
            mode: Mode::Cut,
            levels: default_levels(Mode::Cut),
            tau_e: 0.0,
            tau_f: 0.1,
            ..Self::meshed(MeshKind::Structured)
        }
    }

    pub fn with_levels(mut self, levels: Vec<Level>) -> Self {
        self.levels = levels;
        self
    }

    pub fn shape(&self) -> Result<TorusShape> {
        TorusShape::new(self.major, self.minor)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidConfig(m));
        if !(self.tau_e >= 0.0 && self.tau_f >= 0.0) || !self.tau_e.is_finite() || !self.tau_f.is_finite() {
            return invalid(format!(
                "tau_e and tau_f must be finite and non-negative, got {} and {}",
                self.tau_e, self.tau_f
            ));
        }
        if self.mode == Mode::Meshed && self.tau_f != 0.0 {
            return invalid(format!("tau_f must be 0 in meshed mode, got {}", self.tau_f));
        }
        if !(self.tolerance > 0.0) {
            return invalid(format!("solver tolerance must be positive, got {}", self.tolerance));
        }
        let shape = self.shape()?;
        if self.levels.is_empty() {
            return invalid("no refinement levels given".into());
        }
        for level in &self.levels {
            match (self.mode, level) {
                (Mode::Meshed, Level::Grid { n_theta, n_phi }) => {
                    self.family_for(*n_theta, *n_phi).validate()?;
                }
                (Mode::Cut, Level::Cut { n_per_unit }) if *n_per_unit >= 2 => {}
                (Mode::Cut, Level::Cut { n_per_unit }) => {
                    return invalid(format!("n_per_unit must be at least 2, got {n_per_unit}"));
                }
                (Mode::Meshed, _) => return invalid("meshed levels must be given as NTHETAxNPHI".into()),
                (Mode::Cut, _) => return invalid("cut levels must be given as a single integer".into()),
            }
        }
        if self.levels.windows(2).any(|w| w[1].size() <= w[0].size()) {
            return invalid("refinement levels must be strictly increasing".into());
        }
        if self.mode == Mode::Cut {
            let b = Bounds::torus_box();
            let reach = shape.major_radius() + shape.minor_radius();
            if reach >= b.max.x || shape.minor_radius() >= b.max.z {
                return invalid(format!(
                    "torus R={}, r={} does not fit the background box",
                    self.major, self.minor
                ));
            }
        }
        Ok(())
    }

    fn family_for(&self, n_theta: usize, n_phi: usize) -> MeshFamily {
        match self.family {
            MeshKind::Structured => MeshFamily::structured(n_theta, n_phi),
            MeshKind::FlippedDiagonals => MeshFamily::flipped(n_theta, n_phi, self.seed),
            MeshKind::Perturbed => MeshFamily::perturbed(n_theta, n_phi, self.seed, self.amplitude),
        }
    }
}

/// The discrete surface of one level.
#[derive(Debug, Clone)]
pub enum Discretization {
    Meshed(SurfaceMesh),
    Cut { background: Box<BackgroundMesh>, cut: Box<CutSurface> },
}

#[derive(Debug, Clone)]
pub struct LevelResult {
    pub record: ConvergenceRecord,
    pub field: CurvatureField,
    pub reports: [SolveReport; 3],
    pub surface: FeSurface,
    pub discretization: Discretization,
}

pub fn build_surface(config: &RunConfig, level: Level) -> Result<(Discretization, FeSurface)> {
    let shape = config.shape()?;
    match (config.mode, level) {
        (Mode::Meshed, Level::Grid { n_theta, n_phi }) => {
            let mesh = generate(&config.family_for(n_theta, n_phi), &shape)?;
            let fe = FeSurface::from_mesh(&mesh);
            Ok((Discretization::Meshed(mesh), fe))
        }
        (Mode::Cut, Level::Cut { n_per_unit }) => {
            let background = generate_background(n_per_unit)?;
            let level_set = interpolate_levelset(&background, &shape)?;
            let cut = extract(&background, &level_set)?;
            let fe = FeSurface::from_cut(&background, &cut);
            Ok((
                Discretization::Cut {
                    background: Box::new(background),
                    cut: Box::new(cut),
                },
                fe,
            ))
        }
        _ => Err(Error::InvalidConfig("level does not match mode".into())),
    }
}

/// Solves one level. Meshed errors use the mass-weighted nodal difference,
/// cut errors integrate against the exact field on the cut surface.
pub fn solve_level(config: &RunConfig, level: Level) -> Result<LevelResult> {
    let shape = config.shape()?;
    let (discretization, surface) = build_surface(config, level)?;
    let system = DiscreteSystem::assemble(&surface, config.tau_e, config.tau_f)?;
    let matrix = system.system_matrix();
    let (solution, reports) = solve_components(&matrix, &system.rhs(), config.tolerance, config.max_iterations)?;
    let field = CurvatureField::from_components(&solution);

    let error = match config.mode {
        Mode::Meshed => discrete_l2_error(&system, &field, &interpolate_exact(&surface, &shape)?)?,
        Mode::Cut => quadrature_l2_error(&surface, &field, &shape)?,
    };
    let geometry = geometry_report(&surface, &shape)?;
    let record = ConvergenceRecord {
        h: surface.h(),
        dofs: surface.n_dofs(),
        error,
        eoc: None,
        stability: stability_norm(&system, &field)?,
        rho_ratio: geometry.rho_ratio,
        normal_ratio: geometry.normal_ratio,
        cg_iterations: reports.iter().map(|r| r.iterations).max().unwrap_or(0),
    };
    Ok(LevelResult {
        record,
        field,
        reports,
        surface,
        discretization,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn export(config: &RunConfig, result: &LevelResult) -> Result<()> {
    if let Some(path) = &config.export_vtk {
        let out = create(path)?;
        match &result.discretization {
            Discretization::Meshed(mesh) => io::write_mesh_vtk(mesh, &result.field, out)?,
            Discretization::Cut { background, cut } => io::write_cut_vtk(cut, background, &result.field, out)?,
        }
    }
    if let Some(path) = &config.export_obj {
        let out = create(path)?;
        match &result.discretization {
            Discretization::Meshed(mesh) => io::write_mesh_obj(mesh, out)?,
            Discretization::Cut { cut, .. } => io::write_cut_obj(cut, out)?,
        }
    }
    Ok(())
}

/// Runs the first configured level and writes any requested exports.
pub fn run_once(config: &RunConfig) -> Result<LevelResult> {
    config.validate()?;
    let result = solve_level(config, config.levels[0])?;
    export(config, &result)?;
    if let Some(path) = &config.csv {
        write_csv(std::slice::from_ref(&result.record), create(path)?)?;
    }
    Ok(result)
}

/// Runs every level in order, fills the EOC column, writes the CSV and
/// exports the finest level.
pub fn run_study(config: &RunConfig) -> Result<Vec<ConvergenceRecord>> {
    config.validate()?;
    if config.levels.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "a study needs at least 3 levels, got {}",
            config.levels.len()
        )));
    }
    let mut records = Vec::with_capacity(config.levels.len());
    let mut last = None;
    for &level in &config.levels {
        let result = solve_level(config, level)?;
        records.push(result.record.clone());
        last = Some(result);
    }
    fill_eoc(&mut records)?;
    if let Some(result) = &last {
        export(config, result)?;
    }
    if let Some(path) = &config.csv {
        write_csv(&records, create(path)?)?;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_parsing() {
        assert_eq!("32x16".parse::<Level>().unwrap(), Level::Grid { n_theta: 32, n_phi: 16 });
        assert_eq!(" 9 ".parse::<Level>().unwrap(), Level::Cut { n_per_unit: 9 });
        assert!("3x".parse::<Level>().is_err());
        assert!("abc".parse::<Level>().is_err());
        assert_eq!(parse_levels("6,9,13").unwrap().len(), 3);
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::meshed(MeshKind::Structured);
        c.validate().unwrap();
        c.tau_f = 0.1;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let c = RunConfig::meshed(MeshKind::Structured).with_levels(parse_levels("64x32,32x16").unwrap());
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let c = RunConfig::meshed(MeshKind::Structured).with_levels(parse_levels("6,9").unwrap());
        assert!(c.validate().is_err());
        let mut c = RunConfig::cut();
        c.validate().unwrap();
        c.major = 1.3;
        assert!(c.validate().is_err());
        let mut c = RunConfig::cut();
        c.tau_e = -1.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::cut();
        c.minor = 2.0;
        assert!(matches!(c.validate(), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn study_needs_three_levels() {
        let c = RunConfig::meshed(MeshKind::Structured).with_levels(parse_levels("8x4,16x8").unwrap());
        assert!(matches!(run_study(&c), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn single_runs() {
        let c = RunConfig::meshed(MeshKind::Structured).with_levels(parse_levels("32x16").unwrap());
        let r = run_once(&c).unwrap();
        assert!(r.record.error.is_finite() && r.record.error > 0.0);
        assert!(r.record.stability.is_finite());
        assert_eq!(r.record.dofs, 512);

        let c = RunConfig::cut().with_levels(vec![Level::Cut { n_per_unit: 8 }]);
        let r = run_once(&c).unwrap();
        assert!(r.record.error.is_finite());
        assert!(r.reports.iter().all(|s| s.converged));
    }

    #[test]
    fn studies_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::meshed(MeshKind::Perturbed).with_levels(parse_levels("12x6,16x8,24x12").unwrap());
        let mut outputs = vec![];
        for name in ["a.csv", "b.csv"] {
            c.csv = Some(dir.path().join(name));
            run_study(&c).unwrap();
            outputs.push(std::fs::read(dir.path().join(name)).unwrap());
        }
        assert_eq!(outputs[0], outputs[1]);
    }
}
