//! Null geometry, stability operators and quasi-local energies of
//! triangulated spacelike spheres in analytic ambient models.

pub mod ambient;
pub mod checks;
pub mod discrete_ops;
pub mod energies;
pub mod error;
pub mod foliation;
pub mod pipeline;
pub mod stability;
pub mod surface;

pub use error::{Error, Result};
