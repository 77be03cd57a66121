//! Set-valued dynamics on box collections and point clouds.
//!
//! This module knows nothing about fluids. It provides the abstract side of
//! the study: cell mappings whose images are unions of boxes, omega-limit
//! sets computed by decreasing intersection, and asymmetric Hausdorff
//! distances between finite point clouds. The flow solver feeds it data; the
//! demos in [`demos`] exercise it on maps whose limit sets are known exactly.

mod boxes;
mod cloud;
pub mod demos;
mod map;
mod omega;

pub use boxes::{BoxCollection, Geometry};
pub use cloud::{
    covering_diameter, hausdorff_dist, hausdorff_semidist, MetricTag, PointCloud,
};
pub use map::{semigroup_property_check, Branch, CellMapping};
pub use omega::omega_limit;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MvdsError {
    #[error("bad geometry: {0}")]
    BadGeometry(String),
    #[error("geometries disagree; collections live on different grids")]
    GeometryMismatch,
    #[error("point {point:?} lies outside the domain")]
    PointOutsideDomain { point: Vec<f64> },
    #[error("cell {cell:?} lies outside the domain")]
    CellOutsideDomain { cell: Vec<i64> },
    #[error("image leaves the domain; the box covering cannot represent it")]
    ImageEscapesDomain,
    #[error("the start collection is not positively invariant under the mapping")]
    NotPositivelyInvariant,
    #[error("omega limit did not stabilize within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("operation needs a nonempty point cloud")]
    EmptyCloud,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("budget must be at least one center")]
    BadBudget,
}
