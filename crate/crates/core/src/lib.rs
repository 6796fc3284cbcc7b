pub mod averaging;
pub mod blowup;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod operators;
pub mod propagator;
pub mod fields;
pub mod quadrature;
pub mod random;
pub mod suites;

pub use error::{Error, Result};
pub use geometry::{build_metric, validate_surface, MetricSamples, SurfaceProfile, ValidationReport};
pub use grid::{Grid, Spectral};
pub use fields::{Hodge, Params, ScalarField, State, VectorField};
pub use operators::{CoriolisProfile, CorrectorCoeffs, Operators, Perturbation};
