//! Triangulated spheres and their induced geometry.

mod geometry;
mod mesh;

pub use geometry::InducedGeometry;
pub use mesh::{fields_csv, SurfaceMesh, MAX_LEVEL};
