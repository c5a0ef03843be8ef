//! Bow complexes and monads for instanton bundles on multi-Taub-NUT spaces.

pub mod error;
pub mod bowdata;
pub mod generator;
pub mod io;
pub mod linalg;
pub mod monad;
pub mod orthosymplectic;
pub mod report;
pub mod topology;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use topology::{
    chern_summary, compute_dimensions, validate_topology, ChernSummary, DimensionVector,
    TopologicalData, Violation,
};
