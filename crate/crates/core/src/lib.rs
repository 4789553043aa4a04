//! Numerical laboratory for null control of a cubic complex Ginzburg-Landau
//! equation with dynamic (Wentzell-type) boundary conditions on a disk.
//!
//! The crate is organized around six subsystems:
//!
//! - [`geometry`]: disk domain, control regions, triangulation, and the
//!   weight-generating function eta0,
//! - [`assembly`]: piecewise-linear bulk/surface mass and stiffness operators
//!   with trace-identified degrees of freedom,
//! - [`weights`]: the Carleman weight family (space-time and one-sided
//!   envelopes) with log-space evaluation,
//! - [`evolution`]: theta-scheme time integration of the forward, adjoint and
//!   cubic systems, with an algebraically exact discrete adjoint,
//! - [`carleman`]: collocation audit of the conjugated-operator identity and
//!   the Carleman-inequality ratio harness,
//! - [`control`]: weighted variational null-control synthesis, a penalized
//!   dual (HUM) oracle, observability-constant sampling, and the nonlinear
//!   source-iteration loop.
//!
//! Everything downstream of [`geometry::Mesh`] and
//! [`assembly::OperatorSet`] treats those objects as immutable and shares
//! them freely across threads.

pub mod assembly;
pub mod carleman;
pub mod control;
pub mod evolution;
pub mod exec;
pub mod geometry;
pub mod linalg;
pub mod logspace;
pub mod numfmt;
pub mod random;
pub mod sparse;
pub mod weights;

pub mod acceptance;

pub use assembly::{BulkSurfaceField, OperatorSet};
pub use geometry::{DiskGeometry, Eta0Field, Mesh, Params};
pub use weights::WeightSet;

use thiserror::Error;

/// Crate-wide error type. Variants map onto the process exit codes of the
/// command-line front end: precondition rejections exit with 2, numerical
/// divergence with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
    pub fn divergence(msg: impl Into<String>) -> Self {
        Error::Divergence(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
