//! Finite generalized polygons: catalog generators, axiom checking,
//! doubling transforms, epimorphism search and classification, and free
//! completions toward thin targets.

pub mod catalog;
pub mod freebuild;
pub mod geometry;
pub mod morphisms;
pub mod report;
pub mod search;
pub mod transforms;

pub use geometry::{Element, Geometry, GeometryError, Order};
