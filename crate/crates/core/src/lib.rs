//! Numerical workbench for the Dirichlet problem of degenerate Beltrami
//! equations with boundary data on Carathéodory prime ends.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: catalog domains, prime-end charts and approach paths;
//! * [`field`]: sampled complex coefficients and dilatation statistics;
//! * [`criteria`]: admissibility checks on the dilatation quotient;
//! * [`transforms`]: periodic Cauchy and Beurling transforms;
//! * [`solver`]: the principal homeomorphic solution of the Beltrami equation;
//! * [`conformal`]: explicit and zipper conformal maps;
//! * [`harmonic`]: Schwarz integral on the disk, annulus Dirichlet problem;
//! * [`pipeline`]: composed solutions and boundary verification;
//! * [`runner`]: configuration parsing and artifact emission.

pub mod conformal;
pub mod criteria;
pub mod error;
pub mod field;
pub mod geometry;
pub mod harmonic;
pub mod numeric;
pub mod pipeline;
pub mod runner;
pub mod solver;
pub mod transforms;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
