//! Deterministic voxel traversal and hard-shadow visibility.
//!
//! The traversal walks every cell a segment passes through in amortized
//! constant time per cell, stepping one axis at a time by comparing the
//! parametric distances to the next cell boundary. It is the classical
//! baseline the probabilistic field is validated against, and it also drives
//! free-space carving during point-cloud ingestion.
//!
//! Cells are half-open along each axis. A segment endpoint that lands exactly
//! on a cell boundary is nudged 1e-9 index units along the direction of
//! travel, so corner and edge touches resolve deterministically.

use crate::field::{FieldExtents, ShadowField};
use crate::geometry::{Axis, GridGeometry, WorldPoint};
use crate::occupancy::OccupancyGrid;
use crate::{Error, Result};

const BOUNDARY_NUDGE: f64 = 1e-9;

/// Outcome of a line-of-sight query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityVerdict {
    pub visible: bool,
    /// First blocking cell along the segment, present iff not visible.
    pub first_blocker: Option<[i64; 3]>,
    /// Total number of cells the segment passes through, endpoints included.
    pub cells_traversed: usize,
}

/// Iterator over the cells a world-space segment passes through, in order
/// from `a` to `b`. Indices are unbounded; callers clip against their grid.
pub struct Traversal {
    cell: [i64; 3],
    end: [i64; 3],
    step: [i64; 3],
    t_max: [f64; 3],
    t_delta: [f64; 3],
    remaining: usize,
    done: bool,
}

/// Cells crossed by the segment from `a` to `b`, in traversal order.
pub fn traverse(geom: &GridGeometry, a: WorldPoint, b: WorldPoint) -> Traversal {
    // Work in continuous corner coordinates: cell i spans [i, i+1).
    let mut ua = geom.world_to_continuous(a);
    let mut ub = geom.world_to_continuous(b);
    for axis in 0..3 {
        ua[axis] += 0.5;
        ub[axis] += 0.5;
        let d = ub[axis] - ua[axis];
        if d != 0.0 {
            let nudge = BOUNDARY_NUDGE * d.signum();
            if ua[axis].fract() == 0.0 {
                ua[axis] += nudge;
            }
            if ub[axis].fract() == 0.0 {
                ub[axis] += nudge;
            }
        }
    }

    let mut cell = [0i64; 3];
    let mut end = [0i64; 3];
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for axis in 0..3 {
        cell[axis] = ua[axis].floor() as i64;
        end[axis] = ub[axis].floor() as i64;
        let d = ub[axis] - ua[axis];
        if d > 0.0 {
            step[axis] = 1;
            t_max[axis] = ((cell[axis] + 1) as f64 - ua[axis]) / d;
            t_delta[axis] = 1.0 / d;
        } else if d < 0.0 {
            step[axis] = -1;
            t_max[axis] = (cell[axis] as f64 - ua[axis]) / d;
            t_delta[axis] = -1.0 / d;
        }
    }
    let remaining = (0..3)
        .map(|a| (end[a] - cell[a]).unsigned_abs() as usize)
        .sum::<usize>()
        + 3;
    Traversal {
        cell,
        end,
        step,
        t_max,
        t_delta,
        remaining,
        done: false,
    }
}

impl Iterator for Traversal {
    type Item = [i64; 3];

    fn next(&mut self) -> Option<[i64; 3]> {
        if self.done {
            return None;
        }
        let current = self.cell;
        if current == self.end || self.remaining == 0 {
            self.done = true;
            return Some(current);
        }
        self.remaining -= 1;
        // Step along the axis whose boundary is nearest; ties break toward x
        // then y, which matches the half-open convention.
        let mut axis = 0;
        if self.t_max[1] < self.t_max[axis] {
            axis = 1;
        }
        if self.t_max[2] < self.t_max[axis] {
            axis = 2;
        }
        self.cell[axis] += self.step[axis];
        self.t_max[axis] += self.t_delta[axis];
        Some(current)
    }
}

/// Ray-cast visibility between two world points.
///
/// The cells containing `a` and `b` never block, so a target sitting inside
/// an occupied cell does not occlude itself. Out-of-grid cells are free.
pub fn line_of_sight(
    occ: &OccupancyGrid,
    a: WorldPoint,
    b: WorldPoint,
    threshold: f64,
) -> VisibilityVerdict {
    let geom = occ.geometry();
    let start_cell = geom.world_to_index_unbounded(a);
    let end_cell = geom.world_to_index_unbounded(b);
    let mut cells_traversed = 0;
    let mut first_blocker = None;
    for cell in traverse(geom, a, b) {
        cells_traversed += 1;
        if first_blocker.is_some() || cell == start_cell || cell == end_cell {
            continue;
        }
        if occ.prob_at(cell) > threshold {
            first_blocker = Some(cell);
        }
    }
    VisibilityVerdict {
        visible: first_blocker.is_none(),
        first_blocker,
        cells_traversed,
    }
}

/// Binary visibility field: ray-cast from the light center to every cell
/// center. Occupied cells read 0.
pub fn hard_field(
    occ: &OccupancyGrid,
    light_world: WorldPoint,
    extents: FieldExtents,
    threshold: f64,
) -> Result<ShadowField> {
    let mut field = ShadowField::shell(occ.geometry(), light_world, extents, threshold)?;
    let light_center = occ
        .geometry()
        .index_to_world(field.light_index_global());
    let dims = field.geometry().dims();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let center = field.geometry().index_to_world([x as i64, y as i64, z as i64]);
                let global = occ.geometry().world_to_index_unbounded(center);
                let value = if occ.prob_at(global) > threshold {
                    0.0
                } else if line_of_sight(occ, light_center, center, threshold).visible {
                    1.0
                } else {
                    0.0
                };
                field.set_value([x, y, z], value);
            }
        }
    }
    Ok(field)
}

/// One sample of a soft-vs-hard visibility profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    /// World coordinate of the cell center along the profile axis.
    pub coord: f64,
    pub soft: f64,
    pub hard: f64,
}

/// Sample both fields at cell centers along a grid-aligned line.
///
/// `fixed` holds the world coordinates of the two remaining axes in
/// [`Axis::plane`] order; the second entry is ignored for 2D fields.
pub fn compare_profile(
    soft: &ShadowField,
    hard: &ShadowField,
    axis: Axis,
    fixed: [f64; 2],
) -> Result<Vec<ProfileRow>> {
    if soft.geometry() != hard.geometry() {
        return Err(Error::GeometryMismatch(
            "soft and hard fields must share a grid".into(),
        ));
    }
    let geom = soft.geometry();
    let dims = geom.dims();
    let (u_axis, v_axis) = axis.plane();
    let mut probe = geom.origin();
    probe[u_axis.index()] = fixed[0];
    probe[v_axis.index()] = if geom.is_2d() && v_axis == Axis::Z {
        geom.origin()[2]
    } else {
        fixed[1]
    };
    let line = geom.world_to_index_unbounded(probe);
    for a in [u_axis, v_axis] {
        let a = a.index();
        let coord = line[a];
        if coord < 0 || coord as usize >= dims[a] {
            return Err(Error::OutOfBounds(format!(
                "profile line coordinate {coord} outside axis {a} (dim {})",
                dims[a]
            )));
        }
    }

    let mut idx = [
        line[0].max(0) as usize,
        line[1].max(0) as usize,
        line[2].max(0) as usize,
    ];
    let mut rows = Vec::with_capacity(dims[axis.index()]);
    for i in 0..dims[axis.index()] {
        idx[axis.index()] = i;
        let center = geom.index_to_world([idx[0] as i64, idx[1] as i64, idx[2] as i64]);
        rows.push(ProfileRow {
            coord: center[axis.index()],
            soft: soft.value(idx),
            hard: hard.value(idx),
        });
    }
    Ok(rows)
}

/// Render profile rows as CSV with a `coord,soft,hard` header.
pub fn profile_to_csv(rows: &[ProfileRow]) -> String {
    let mut out = String::from("coord,soft,hard\n");
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.coord, row.soft, row.hard as i64));
    }
    out
}
