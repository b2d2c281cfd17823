//! Population and sample-based EM for mixtures of two spherical Gaussians.
//!
//! The population update is evaluated exactly through a planar reduction to
//! one-dimensional Gaussian integrals (see [`kernels`]); the sample update runs
//! on seeded synthetic data. [`harness`] couples the two and hosts the
//! acceptance suite.

pub mod error;
pub mod experiment;
pub mod gauss_quad;
pub mod geometry;
pub mod harness;
pub mod kernels;
pub mod landscape;
pub mod population_em;
pub mod sample_em;
pub mod trajectory;

pub use error::{EmError, Result};
pub use gauss_quad::QuadratureSpec;
pub use geometry::{ABState, MeanPair, MixtureModel, PlanarCoords, Vector};
pub use population_em::StopRule;
pub use trajectory::{StepRecord, Trajectory};

/// Version string embedded in every emitted artifact.
pub const ARTIFACT_VERSION: &str = concat!("emlab ", env!("CARGO_PKG_VERSION"));
