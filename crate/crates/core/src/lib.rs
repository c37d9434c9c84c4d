//! Stabilized finite element approximation of the mean curvature vector on
//! triangulated and cut level-set surfaces.
//!
//! The discrete curvature `H_h` solves
//! `(M + tau_e J_E + tau_f J_F) H_h = L` componentwise, where `M` is the
//! surface mass matrix, `L` the weak Laplace-Beltrami of the embedding and
//! `J_E`, `J_F` gradient-jump penalties across surface edges and background
//! faces.

pub mod analysis;
pub mod assembly;
pub mod cut;
pub mod error;
pub mod experiment;
pub mod fe;
pub mod geometry;
pub mod io;
pub mod meshed;
pub mod solve;
pub mod sparse;

pub type Vec3 = nalgebra::Vector3<f64>;

pub use analysis::{CurvatureField, ConvergenceRecord, GeometryReport};
pub use assembly::DiscreteSystem;
pub use cut::{BackgroundMesh, CutSurface};
pub use error::{Error, Result};
pub use experiment::{run_once, run_study, Mode, RunConfig};
pub use fe::FeSurface;
pub use geometry::{ExactSurface, Shape, SphereShape, TorusShape};
pub use meshed::{MeshFamily, MeshKind, SurfaceMesh};
pub use solve::SolveReport;
pub use sparse::SparseSymMatrix;
