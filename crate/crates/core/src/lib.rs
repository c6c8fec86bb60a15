//! Lowest-energy binary labelings under statistic constraints.
//!
//! The library minimizes pairwise submodular energies subject to equality or
//! inequality constraints on labeling statistics (size, boundary length,
//! coordinate mean/variance/covariance, per-tile size). Inequalities are
//! reduced to equalities with slack variables, the Lagrangian dual is
//! maximized by a cutting-plane method whose oracle is an st-mincut solver,
//! and the returned labeling carries a certificate: it has minimum energy
//! among all labelings sharing its effective statistics.
//!
//! Modules:
//! - [`energy`]: pairwise binary energies, reparameterizations, grid builder.
//! - [`maxflow`]: exact minimization via augmenting-path st-mincut.
//! - [`constraints`]: the constraint families, slack rules, search boxes.
//! - [`dual`]: the cutting-plane loop and its master linear program.
//! - [`verifier`]: exhaustive enumeration oracle for small instances.
//! - [`imaging`]: image/mask I/O, ground-truth statistics, error metrics.
//! - [`fixtures`]: seeded synthetic instances and segmentation scenes.
//!
//! With the default `parallel` feature the exhaustive verifier splits the
//! labeling index range across threads via rayon; disabling the feature
//! keeps every code path sequential.

pub mod constraints;
pub mod dual;
pub mod energy;
mod error;
pub mod fixtures;
pub mod imaging;
mod lp;
pub mod maxflow;
pub mod verifier;

pub use error::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
