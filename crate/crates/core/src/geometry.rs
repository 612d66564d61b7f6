//! Grid registration: axis-aligned, uniform-resolution grids in the world
//! frame, with the cell-centered convention used everywhere in this crate.
//!
//! A cell's value is attributed to its center. `origin` is the world position
//! of the center of cell (0, 0, 0), and world-to-index rounds to the nearest
//! center: `i = floor((p - origin) * resolution + 0.5)` per axis. Cell
//! boundaries therefore sit at half-integer index coordinates.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

pub type WorldPoint = nalgebra::Point3<f64>;
pub type WorldVector = nalgebra::Vector3<f64>;

/// One of the three grid axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The two axes spanning the plane orthogonal to `self`, in (row-major
    /// fast, slow) order.
    pub fn plane(self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::X, Axis::Z),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::Parse(format!("unknown axis {other:?}"))),
        }
    }
}

/// Dimensions, resolution and world registration of a dense grid.
///
/// `resolution` is in cells per meter and is uniform across axes. 2D grids
/// are represented with `dims[2] == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    dims: [usize; 3],
    resolution: f64,
    origin: [f64; 3],
}

impl GridGeometry {
    pub fn new(dims: [usize; 3], resolution: f64, origin: WorldPoint) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidGeometry(format!(
                "all dims must be >= 1, got {dims:?}"
            )));
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "resolution must be positive and finite, got {resolution}"
            )));
        }
        dims[0]
            .checked_mul(dims[1])
            .and_then(|p| p.checked_mul(dims[2]))
            .ok_or_else(|| Error::InvalidGeometry(format!("dims {dims:?} overflow")))?;
        Ok(Self {
            dims,
            resolution,
            origin: [origin.x, origin.y, origin.z],
        })
    }

    /// 2D convenience constructor: one cell thick in z, z-origin at 0.
    pub fn new_2d(dims: [usize; 2], resolution: f64, origin: [f64; 2]) -> Result<Self> {
        Self::new(
            [dims[0], dims[1], 1],
            resolution,
            WorldPoint::new(origin[0], origin[1], 0.0),
        )
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        false // dims are validated >= 1
    }

    pub fn is_2d(&self) -> bool {
        self.dims[2] == 1
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Edge length of a cell in meters.
    pub fn cell_size(&self) -> f64 {
        1.0 / self.resolution
    }

    /// World position of the center of cell (0, 0, 0).
    pub fn origin(&self) -> WorldPoint {
        WorldPoint::new(self.origin[0], self.origin[1], self.origin[2])
    }

    /// Nearest-cell index of a world point, unbounded (may be negative or
    /// beyond dims).
    pub fn world_to_index_unbounded(&self, p: WorldPoint) -> [i64; 3] {
        let mut idx = [0i64; 3];
        for a in 0..3 {
            idx[a] = ((p[a] - self.origin[a]) * self.resolution + 0.5).floor() as i64;
        }
        idx
    }

    /// Nearest-cell index of a world point, `None` if outside the grid.
    pub fn world_to_index(&self, p: WorldPoint) -> Option<[usize; 3]> {
        let idx = self.world_to_index_unbounded(p);
        if self.contains(idx) {
            Some([idx[0] as usize, idx[1] as usize, idx[2] as usize])
        } else {
            None
        }
    }

    /// World position of a cell center. Indices may lie outside the grid;
    /// the affine map extends naturally.
    pub fn index_to_world(&self, idx: [i64; 3]) -> WorldPoint {
        WorldPoint::new(
            self.origin[0] + idx[0] as f64 / self.resolution,
            self.origin[1] + idx[1] as f64 / self.resolution,
            self.origin[2] + idx[2] as f64 / self.resolution,
        )
    }

    pub fn contains(&self, idx: [i64; 3]) -> bool {
        (0..3).all(|a| idx[a] >= 0 && (idx[a] as usize) < self.dims[a])
    }

    /// Row-major linear index, x fastest.
    pub fn linear(&self, idx: [usize; 3]) -> usize {
        debug_assert!(idx[0] < self.dims[0] && idx[1] < self.dims[1] && idx[2] < self.dims[2]);
        idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])
    }

    /// Continuous index coordinates of a world point: cell centers sit at
    /// integers, boundaries at half-integers.
    pub fn world_to_continuous(&self, p: WorldPoint) -> [f64; 3] {
        [
            (p.x - self.origin[0]) * self.resolution,
            (p.y - self.origin[1]) * self.resolution,
            (p.z - self.origin[2]) * self.resolution,
        ]
    }
}
