//! Probabilistic shadow fields over occupancy grids.
//!
//! A *shadow field* stores, for every cell of a grid, the probability that an
//! unobstructed line of sight exists between that cell and a point light
//! source (the tracked target). The field is computed by a layered dynamic
//! program that sweeps outward from the light one quadrant/octant at a time,
//! blending each cell from its predecessors toward the light with cached
//! angular weights. The result is a smooth, differentiable stand-in for
//! ray-cast visibility that is cheap enough to rebuild at sensor rate.
//!
//! On top of the field sit two cost terms for trajectory optimization: a
//! relaxed log-barrier on the sampled visibility probability and an
//! orientation lock that points a camera axis at the target. A small
//! receding-horizon planner ties them together on a kinematic end-effector
//! model.
//!
//! Modules:
//! - [`occupancy`]: probabilistic occupancy grids (synthetic scenes,
//!   point-cloud ingestion, binary persistence).
//! - [`weights`]: environment-independent angular weight caches (2D and 3D).
//! - [`field`]: the shadow field itself — update, sampling, gradients,
//!   slicing, persistence.
//! - [`raycast`]: deterministic voxel traversal and hard-shadow fields, used
//!   both for map ingestion and as the validation baseline.
//! - [`cost`]: relaxed log barrier, visibility cost, orientation lock.
//! - [`planner`]: single-shooting trajectory optimizer and receding-horizon
//!   driver.
//! - [`pgm`]: tiny binary PGM writer for slice export.

pub mod cost;
pub mod error;
pub mod field;
pub mod geometry;
pub mod occupancy;
pub mod pgm;
pub mod planner;
pub mod raycast;
pub mod weights;

pub use error::Error;
pub use field::{
    storage_report, update_shadow_field, update_shadow_field_2d, FieldExtents, FieldSlice,
    ShadowField, StorageReport,
};
pub use geometry::{Axis, GridGeometry, WorldPoint, WorldVector};
pub use occupancy::{IngestParams, OccupancyGrid};
pub use raycast::{hard_field, line_of_sight, VisibilityVerdict};
pub use weights::{WeightCache2d, WeightCache3d};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
