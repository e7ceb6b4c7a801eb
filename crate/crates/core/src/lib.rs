//! Quasihyperbolic geometry of plane domains with finite boundary.
pub mod engine;
pub mod error;
pub mod geometry;
pub mod lab;
pub mod oracle;
pub mod quadrature;
pub mod spiral;
pub mod voronoi;
pub use error::{QhError, Result};
pub use geometry::{Point, Polyline, PrincipalAngle};
pub use voronoi::{CellLocation, VoronoiDomain};
