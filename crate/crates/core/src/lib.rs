pub mod bench;
pub mod error;
pub mod geom;
pub mod index;
pub mod metrics;
pub mod skyline;
pub mod storage;
pub mod voronoi;

pub use error::{Error, Result};
