//! Numerical verification engine for metalinear and metaplectic frame
//! bundles that are compatible under the pairing of two polarizations.
//!
//! Bundles live on finite nerves with sampled overlaps; every construction is
//! checked pointwise at the sample points.

pub mod cech;
pub mod compatibility;
pub mod corpus;
pub mod error;
pub mod frames;
pub mod gf2;
pub mod groups;
pub mod linalg;
pub mod metaplectic_induction;
pub mod pipeline;
pub mod report;
pub mod sampling;
pub mod scenario;
pub mod tol;

pub use error::{HfeError, Result};
pub use tol::Tolerances;
