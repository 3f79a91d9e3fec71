//! Multi-solution shape correspondence by exploring a tree of low-frequency functional
//! maps, refining the candidates with bijective spectral upsampling and reporting them
//! with a set of quality metrics.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fmap;
pub mod maptree;
pub mod mesh;
pub mod metrics;
pub mod refine;
pub mod select;
pub mod shapes;
pub mod spectral;

pub use error::{Error, Result};
pub use mesh::TriangleMesh;
