//! The probabilistic shadow field: per-cell likelihood of line of sight to a
//! point light source.
//!
//! The field is a local window of the global occupancy grid centered on the
//! light cell. Every cell starts at 1.0; the update then sweeps each
//! quadrant (2D) or octant (3D) outward from the light in layer order. A
//! cell whose occupancy exceeds the confidence threshold is assigned one
//! minus its occupancy; every other cell is a blend of its predecessor cells
//! one step toward the light, weighted by the cached angular weights:
//!
//! ```text
//! F(c) = w_x * F(x_pred) + w_y * F(y_pred) + w_z * F(z_pred)
//! ```
//!
//! That is 3 multiplications and 2 additions per interior cell; boundary
//! cells (on the axis lines and coordinate planes through the light) use the
//! lower-dimensional forms and cost less. Cells of the window that fall
//! outside the global map read occupancy 0.
//!
//! Cells on the axis planes through the light belong to several octants;
//! each is written exactly once, owned by the octant with nonnegative signs.
//! The eight octant interiors only read their own cells plus that shared
//! seam, so after a sequential seam pass they are updated concurrently.
//!
//! Updates always build a fresh field, so published fields are immutable
//! snapshots: samplers never observe a half-written update.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::Error;
use crate::geometry::{Axis, GridGeometry, WorldPoint, WorldVector};
use crate::occupancy::OccupancyGrid;
use crate::weights::{WeightCache2d, WeightCache3d};
use crate::Result;

const MAGIC: &[u8; 4] = b"SFF1";

/// Window size of a field around the light cell, in cells per direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldExtents {
    /// Cells from the light to the upper window boundary, per axis.
    pub pos: [usize; 3],
    /// Cells from the light to the lower window boundary, per axis.
    pub neg: [usize; 3],
}

impl FieldExtents {
    pub fn symmetric(x: usize, y: usize, z: usize) -> Self {
        Self {
            pos: [x, y, z],
            neg: [x, y, z],
        }
    }

    pub fn symmetric_2d(x: usize, y: usize) -> Self {
        Self {
            pos: [x, y, 0],
            neg: [x, y, 0],
        }
    }

    /// Largest offset per axis, which is what a weight cache must cover.
    pub fn required_cache(&self) -> [usize; 3] {
        [
            self.pos[0].max(self.neg[0]),
            self.pos[1].max(self.neg[1]),
            self.pos[2].max(self.neg[2]),
        ]
    }

    pub fn dims(&self) -> [usize; 3] {
        [
            self.neg[0] + self.pos[0] + 1,
            self.neg[1] + self.pos[1] + 1,
            self.neg[2] + self.pos[2] + 1,
        ]
    }
}

/// Number of worker threads for octant updates and weight-table builds.
/// `SHADOWFIELD_THREADS` caps it; the default is the hardware concurrency.
pub(crate) fn worker_threads() -> usize {
    if let Ok(v) = std::env::var("SHADOWFIELD_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Dense visibility-probability field around one light source.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowField {
    geometry: GridGeometry,
    values: Vec<f64>,
    light_local: [usize; 3],
    light_global: [usize; 3],
    extents: FieldExtents,
    threshold: f64,
    light_world: WorldPoint,
}

impl ShadowField {
    /// A fresh all-ones field registered on the global grid around the
    /// light. Shared by the probabilistic update and the hard-shadow
    /// baseline so both produce identically-registered fields.
    pub(crate) fn shell(
        global: &GridGeometry,
        light_world: WorldPoint,
        extents: FieldExtents,
        threshold: f64,
    ) -> Result<Self> {
        let light_global = global.world_to_index(light_world).ok_or_else(|| {
            Error::OutOfBounds(format!(
                "light {light_world:?} is outside the occupancy grid"
            ))
        })?;
        let dims = extents.dims();
        let origin = global.index_to_world([
            light_global[0] as i64 - extents.neg[0] as i64,
            light_global[1] as i64 - extents.neg[1] as i64,
            light_global[2] as i64 - extents.neg[2] as i64,
        ]);
        let geometry = GridGeometry::new(dims, global.resolution(), origin)?;
        let len = geometry.len();
        Ok(Self {
            geometry,
            values: vec![1.0; len],
            light_local: extents.neg,
            light_global,
            extents,
            threshold,
            light_world,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: [usize; 3]) -> f64 {
        self.values[self.geometry.linear(idx)]
    }

    pub(crate) fn set_value(&mut self, idx: [usize; 3], v: f64) {
        let i = self.geometry.linear(idx);
        self.values[i] = v;
    }

    pub fn light_index_local(&self) -> [i64; 3] {
        [
            self.light_local[0] as i64,
            self.light_local[1] as i64,
            self.light_local[2] as i64,
        ]
    }

    pub fn light_index_global(&self) -> [i64; 3] {
        [
            self.light_global[0] as i64,
            self.light_global[1] as i64,
            self.light_global[2] as i64,
        ]
    }

    pub fn extents(&self) -> FieldExtents {
        self.extents
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn light_world(&self) -> WorldPoint {
        self.light_world
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Interpolated field value at a world point.
    ///
    /// Cell-centered bilinear/trilinear interpolation; points beyond the
    /// outermost cell centers clamp to the boundary value.
    pub fn sample(&self, p: WorldPoint) -> f64 {
        self.sample_with_gradient(p).0
    }

    /// Analytic gradient of the interpolant, in 1/meter. Zero along axes
    /// where the query point is beyond the clamp region.
    pub fn gradient(&self, p: WorldPoint) -> WorldVector {
        self.sample_with_gradient(p).1
    }

    /// Value and gradient in one pass over the interpolation corners.
    pub fn sample_with_gradient(&self, p: WorldPoint) -> (f64, WorldVector) {
        let c = self.geometry.world_to_continuous(p);
        let dims = self.geometry.dims();
        let mut i0 = [0usize; 3];
        let mut frac = [0.0f64; 3];
        let mut live = [false; 3]; // axis participates in interpolation
        let mut inside = [false; 3]; // gradient nonzero along this axis
        for a in 0..3 {
            let n = dims[a];
            if n == 1 {
                continue;
            }
            let hi = (n - 1) as f64;
            let t = c[a].clamp(0.0, hi);
            let mut base = t.floor() as usize;
            if base >= n - 1 {
                base = n - 2;
            }
            i0[a] = base;
            frac[a] = t - base as f64;
            live[a] = true;
            inside[a] = c[a] >= 0.0 && c[a] <= hi;
        }

        let corner = |d: [usize; 3]| -> f64 {
            let idx = [
                (i0[0] + d[0]).min(dims[0] - 1),
                (i0[1] + d[1]).min(dims[1] - 1),
                (i0[2] + d[2]).min(dims[2] - 1),
            ];
            self.values[self.geometry.linear(idx)]
        };
        let w = |a: usize, d: usize| -> f64 {
            if !live[a] {
                if d == 0 {
                    1.0
                } else {
                    0.0
                }
            } else if d == 0 {
                1.0 - frac[a]
            } else {
                frac[a]
            }
        };

        let mut value = 0.0;
        let mut slope = [0.0f64; 3];
        // Slopes are weighted sums of corner differences, so constant data
        // cancels exactly instead of leaving rounding residue.
        for dz in 0..2 {
            for dy in 0..2 {
                for dx in 0..2 {
                    let v = corner([dx, dy, dz]);
                    value += w(0, dx) * w(1, dy) * w(2, dz) * v;
                }
                slope[0] +=
                    w(1, dy) * w(2, dz) * (corner([1, dy, dz]) - corner([0, dy, dz]));
            }
            for dx in 0..2 {
                slope[1] +=
                    w(0, dx) * w(2, dz) * (corner([dx, 1, dz]) - corner([dx, 0, dz]));
            }
        }
        for dy in 0..2 {
            for dx in 0..2 {
                slope[2] +=
                    w(0, dx) * w(1, dy) * (corner([dx, dy, 1]) - corner([dx, dy, 0]));
            }
        }

        let res = self.geometry.resolution();
        let mut grad = WorldVector::zeros();
        for a in 0..3 {
            if live[a] && inside[a] {
                grad[a] = slope[a] * res;
            }
        }
        (value, grad)
    }

    /// Extract the plane of cells nearest a world level along `axis`.
    pub fn slice(&self, axis: Axis, world_level: f64) -> Result<FieldSlice> {
        let a = axis.index();
        let dims = self.geometry.dims();
        let origin = self.geometry.origin();
        let level_index =
            ((world_level - origin[a]) * self.geometry.resolution() + 0.5).floor() as i64;
        if level_index < 0 || level_index as usize >= dims[a] {
            return Err(Error::OutOfBounds(format!(
                "slice level {world_level} maps to layer {level_index}, grid has {} layers",
                dims[a]
            )));
        }
        let level_index = level_index as usize;
        let (fast, slow) = axis.plane();
        let (fa, sa) = (fast.index(), slow.index());
        let mut values = Vec::with_capacity(dims[fa] * dims[sa]);
        let mut idx = [0usize; 3];
        idx[a] = level_index;
        for s in 0..dims[sa] {
            idx[sa] = s;
            for f in 0..dims[fa] {
                idx[fa] = f;
                values.push(self.values[self.geometry.linear(idx)]);
            }
        }
        let mut level_idx3 = [0i64; 3];
        level_idx3[a] = level_index as i64;
        let level_world = self.geometry.index_to_world(level_idx3)[a];
        Ok(FieldSlice {
            axis,
            level_index,
            level_world,
            dims: [dims[fa], dims[sa]],
            resolution: self.geometry.resolution(),
            origin: [origin[fa], origin[sa]],
            values,
        })
    }

    /// Write the field in the binary `SFF1` format (little-endian).
    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        for d in self.geometry.dims() {
            w.write_u32::<LittleEndian>(
                u32::try_from(d)
                    .map_err(|_| Error::FileFormat(format!("dimension {d} exceeds u32")))?,
            )?;
        }
        w.write_f64::<LittleEndian>(self.geometry.resolution())?;
        let origin = self.geometry.origin();
        for a in 0..3 {
            w.write_f64::<LittleEndian>(origin[a])?;
        }
        for v in self.light_local {
            w.write_u32::<LittleEndian>(v as u32)?;
        }
        for v in self.light_global {
            w.write_u32::<LittleEndian>(v as u32)?;
        }
        w.write_f64::<LittleEndian>(self.threshold)?;
        for &v in &self.values {
            w.write_f32::<LittleEndian>(v as f32)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a field written by [`ShadowField::save`]. Values are stored as
    /// 32-bit floats and the light position snaps to its cell center.
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|e| Error::FileFormat(format!("header too short: {e}")))?;
        if &magic != MAGIC {
            return Err(Error::FileFormat(format!(
                "bad magic {magic:?}, expected {MAGIC:?}"
            )));
        }
        let mut dims = [0usize; 3];
        for d in dims.iter_mut() {
            *d = r
                .read_u32::<LittleEndian>()
                .map_err(|e| Error::FileFormat(format!("truncated dims: {e}")))? as usize;
        }
        let resolution = r
            .read_f64::<LittleEndian>()
            .map_err(|e| Error::FileFormat(format!("truncated resolution: {e}")))?;
        let mut origin = [0.0f64; 3];
        for o in origin.iter_mut() {
            *o = r
                .read_f64::<LittleEndian>()
                .map_err(|e| Error::FileFormat(format!("truncated origin: {e}")))?;
        }
        let mut light_local = [0usize; 3];
        for v in light_local.iter_mut() {
            *v = r
                .read_u32::<LittleEndian>()
                .map_err(|e| Error::FileFormat(format!("truncated light index: {e}")))?
                as usize;
        }
        let mut light_global = [0usize; 3];
        for v in light_global.iter_mut() {
            *v = r
                .read_u32::<LittleEndian>()
                .map_err(|e| Error::FileFormat(format!("truncated light index: {e}")))?
                as usize;
        }
        let threshold = r
            .read_f64::<LittleEndian>()
            .map_err(|e| Error::FileFormat(format!("truncated threshold: {e}")))?;
        let geometry = GridGeometry::new(
            dims,
            resolution,
            WorldPoint::new(origin[0], origin[1], origin[2]),
        )?;
        for a in 0..3 {
            if light_local[a] >= dims[a] {
                return Err(Error::FileFormat(format!(
                    "light index {light_local:?} outside dims {dims:?}"
                )));
            }
        }
        let mut values = vec![0.0f64; geometry.len()];
        for v in values.iter_mut() {
            let f = r
                .read_f32::<LittleEndian>()
                .map_err(|e| Error::FileFormat(format!("payload shorter than header dims: {e}")))?;
            if !f.is_finite() || !(0.0..=1.0).contains(&f) {
                return Err(Error::FileFormat(format!(
                    "field value {f} outside [0, 1]"
                )));
            }
            *v = f as f64;
        }
        let extents = FieldExtents {
            neg: light_local,
            pos: [
                dims[0] - 1 - light_local[0],
                dims[1] - 1 - light_local[1],
                dims[2] - 1 - light_local[2],
            ],
        };
        let light_world = geometry.index_to_world([
            light_local[0] as i64,
            light_local[1] as i64,
            light_local[2] as i64,
        ]);
        Ok(Self {
            geometry,
            values,
            light_local,
            light_global,
            extents,
            threshold,
            light_world,
        })
    }
}

/// Value-array accounting for one field and its weight table.
#[derive(Debug, Clone, Copy)]
pub struct StorageReport {
    pub field_cells: usize,
    /// Stored weight entries (three maps over the first octant only).
    pub weight_entries_resident: usize,
    /// What the three weight maps would occupy expanded over the full
    /// window, i.e. without the octant-symmetry reduction.
    pub weight_entries_expanded: usize,
}

impl StorageReport {
    /// Field plus expanded weight maps: 4x the cell count.
    pub fn total_expanded(&self) -> usize {
        self.field_cells + self.weight_entries_expanded
    }

    pub fn total_resident(&self) -> usize {
        self.field_cells + self.weight_entries_resident
    }
}

pub fn storage_report(field: &ShadowField, cache: &WeightCache3d) -> StorageReport {
    let n = field.geometry().len();
    StorageReport {
        field_cells: n,
        weight_entries_resident: 3 * cache.resident_entries(),
        weight_entries_expanded: 3 * n,
    }
}

#[derive(Clone, Copy)]
struct SendPtr(*mut f64);
// Octant interiors write disjoint cells and only read cells written either
// by the sequential seam pass or by their own task.
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

struct OctantCtx<'a> {
    field: SendPtr,
    fdims: [isize; 3],
    ll: [isize; 3],
    occ: &'a [f32],
    gdims: [isize; 3],
    lg: [isize; 3],
    wx: &'a [f64],
    wy: &'a [f64],
    wz: &'a [f64],
    wnx: isize,
    wnxy: isize,
    threshold: f64,
}

#[derive(Clone, Copy)]
struct OctantJob {
    signs: [isize; 3],
    ext: [isize; 3],
}

fn run_octant_interior(ctx: &OctantCtx<'_>, job: OctantJob) {
    let [sx, sy, sz] = job.signs;
    let [ex, ey, ez] = job.ext;
    if ex == 0 || ey == 0 || ez == 0 {
        return;
    }
    let fnx = ctx.fdims[0];
    let fnxy = ctx.fdims[0] * ctx.fdims[1];
    let gnx = ctx.gdims[0];
    let gnxy = ctx.gdims[0] * ctx.gdims[1];
    // Largest offset along each axis whose global cell is still in bounds;
    // beyond it the map reads as free. The light index is in bounds, so only
    // the upper cap matters per direction.
    let xcap = if sx > 0 { ctx.gdims[0] - 1 - ctx.lg[0] } else { ctx.lg[0] };
    let ycap = if sy > 0 { ctx.gdims[1] - 1 - ctx.lg[1] } else { ctx.lg[1] };
    let zcap = if sz > 0 { ctx.gdims[2] - 1 - ctx.lg[2] } else { ctx.lg[2] };

    let x_step = sx;
    let y_step = sy * fnx;
    let z_step = sz * fnxy;
    let f = ctx.field.0;
    for k in 1..=ez {
        let lz = ctx.ll[2] + sz * k;
        let gz = ctx.lg[2] + sz * k;
        for j in 1..=ey {
            let ly = ctx.ll[1] + sy * j;
            let gy = ctx.lg[1] + sy * j;
            let base_local = ctx.ll[0] + fnx * ly + fnxy * lz;
            let base_global = ctx.lg[0] + gnx * gy + gnxy * gz;
            let wbase = ctx.wnx * j + ctx.wnxy * k;
            let occ_cap = if k <= zcap && j <= ycap { xcap.min(ex) } else { 0 };
            // SAFETY: local indices stay inside the field (offsets bounded by
            // the extents that sized it), weight indices inside the cache
            // (covers() checked), and occupancy reads are gated by occ_cap.
            unsafe {
                for i in 1..=ex {
                    let li = base_local + sx * i;
                    let p = if i <= occ_cap {
                        *ctx.occ.get_unchecked((base_global + sx * i) as usize) as f64
                    } else {
                        0.0
                    };
                    let v = if p > ctx.threshold {
                        1.0 - p
                    } else {
                        let wi = (wbase + i) as usize;
                        let fx = *f.offset(li - x_step);
                        let fy = *f.offset(li - y_step);
                        let fz = *f.offset(li - z_step);
                        *ctx.wx.get_unchecked(wi) * fx
                            + *ctx.wy.get_unchecked(wi) * fy
                            + *ctx.wz.get_unchecked(wi) * fz
                    };
                    *f.offset(li) = v;
                }
            }
        }
    }
}

/// Rebuild the 3D field from the occupancy grid.
pub fn update_shadow_field(
    occ: &OccupancyGrid,
    light_world: WorldPoint,
    extents: FieldExtents,
    threshold: f64,
    cache: &WeightCache3d,
) -> Result<ShadowField> {
    if !cache.covers(extents.required_cache()) {
        return Err(Error::OutOfBounds(format!(
            "extents {:?} exceed cached weights {:?}",
            extents.required_cache(),
            cache.extents()
        )));
    }
    let mut field = ShadowField::shell(occ.geometry(), light_world, extents, threshold)?;
    let lg = field.light_index_global();
    let ll = field.light_index_local();

    // Light cell: stays 1 unless itself confidently occupied.
    let p = occ.prob_at(lg);
    let light_value = if p > threshold { 1.0 - p } else { 1.0 };
    field.set_value(
        [ll[0] as usize, ll[1] as usize, ll[2] as usize],
        light_value,
    );

    // Seam pass: axis lines, then the three coordinate planes through the
    // light. Everything here is a boundary case of the octant formula with
    // the degenerate weights baked into the cache.
    let geom = field.geometry().clone();
    let ext_of = |axis: usize, sign: i64| -> usize {
        if sign > 0 {
            extents.pos[axis]
        } else {
            extents.neg[axis]
        }
    };
    for axis in 0..3 {
        for sign in [1i64, -1] {
            for step in 1..=ext_of(axis, sign) as i64 {
                let mut local = ll;
                let mut global = lg;
                local[axis] += sign * step;
                global[axis] += sign * step;
                let p = occ.prob_at(global);
                let idx = [local[0] as usize, local[1] as usize, local[2] as usize];
                let v = if p > threshold {
                    1.0 - p
                } else {
                    let mut pred = local;
                    pred[axis] -= sign;
                    field.value([pred[0] as usize, pred[1] as usize, pred[2] as usize])
                };
                field.set_value(idx, v);
            }
        }
    }

    let (wx, wy, wz) = cache.slices();
    let (wnx, wnxy) = cache.strides();
    // (axis_a, axis_b, weight slice for a, for b, weight stride a, b)
    let planes: [(usize, usize, &[f64], &[f64], usize, usize); 3] = [
        (0, 1, wx, wy, 1, wnx),
        (0, 2, wx, wz, 1, wnxy),
        (1, 2, wy, wz, wnx, wnxy),
    ];
    for &(a, b, wa, wb, stride_a, stride_b) in &planes {
        for sa in [1i64, -1] {
            for sb in [1i64, -1] {
                let ea = ext_of(a, sa);
                let eb = ext_of(b, sb);
                for j in 1..=eb as i64 {
                    for i in 1..=ea as i64 {
                        let mut local = ll;
                        let mut global = lg;
                        local[a] += sa * i;
                        local[b] += sb * j;
                        global[a] += sa * i;
                        global[b] += sb * j;
                        let idx = [local[0] as usize, local[1] as usize, local[2] as usize];
                        let p = occ.prob_at(global);
                        let v = if p > threshold {
                            1.0 - p
                        } else {
                            let wi = stride_a * i as usize + stride_b * j as usize;
                            let mut pa = local;
                            pa[a] -= sa;
                            let mut pb = local;
                            pb[b] -= sb;
                            wa[wi] * field.value([pa[0] as usize, pa[1] as usize, pa[2] as usize])
                                + wb[wi]
                                    * field.value([pb[0] as usize, pb[1] as usize, pb[2] as usize])
                        };
                        field.set_value(idx, v);
                    }
                }
            }
        }
    }

    // Octant interiors: disjoint ownership, safe to run concurrently.
    let fdims = geom.dims();
    let gdims = occ.geometry().dims();
    let ctx = OctantCtx {
        field: SendPtr(field.values.as_mut_ptr()),
        fdims: [fdims[0] as isize, fdims[1] as isize, fdims[2] as isize],
        ll: [ll[0] as isize, ll[1] as isize, ll[2] as isize],
        occ: occ.values(),
        gdims: [gdims[0] as isize, gdims[1] as isize, gdims[2] as isize],
        lg: [lg[0] as isize, lg[1] as isize, lg[2] as isize],
        wx,
        wy,
        wz,
        wnx: wnx as isize,
        wnxy: wnxy as isize,
        threshold,
    };
    let mut jobs = Vec::with_capacity(8);
    for &sx in &[1isize, -1] {
        for &sy in &[1isize, -1] {
            for &sz in &[1isize, -1] {
                let job = OctantJob {
                    signs: [sx, sy, sz],
                    ext: [
                        ext_of(0, sx as i64) as isize,
                        ext_of(1, sy as i64) as isize,
                        ext_of(2, sz as i64) as isize,
                    ],
                };
                if job.ext.iter().all(|&e| e > 0) {
                    jobs.push(job);
                }
            }
        }
    }
    let threads = worker_threads().min(jobs.len().max(1));
    if threads <= 1 {
        for &job in &jobs {
            run_octant_interior(&ctx, job);
        }
    } else {
        std::thread::scope(|scope| {
            for t in 0..threads {
                let mine: Vec<OctantJob> =
                    jobs.iter().skip(t).step_by(threads).copied().collect();
                let ctx_ref = &ctx;
                scope.spawn(move || {
                    for job in mine {
                        run_octant_interior(ctx_ref, job);
                    }
                });
            }
        });
    }
    Ok(field)
}

/// Rebuild a 2D field (single z layer) from the occupancy grid.
///
/// The window is one cell thick; `extents` must have zero z components.
pub fn update_shadow_field_2d(
    occ: &OccupancyGrid,
    light_world: WorldPoint,
    extents: FieldExtents,
    threshold: f64,
    cache: &WeightCache2d,
) -> Result<ShadowField> {
    if extents.pos[2] != 0 || extents.neg[2] != 0 {
        return Err(Error::InvalidParameter(
            "2D update requires zero z extents".into(),
        ));
    }
    let required = extents.required_cache();
    if !cache.covers([required[0], required[1]]) {
        return Err(Error::OutOfBounds(format!(
            "extents {required:?} exceed cached weights {:?}",
            cache.extents()
        )));
    }
    let mut field = ShadowField::shell(occ.geometry(), light_world, extents, threshold)?;
    let lg = field.light_index_global();
    let ll = field.light_index_local();

    let p = occ.prob_at(lg);
    let light_value = if p > threshold { 1.0 - p } else { 1.0 };
    field.set_value(
        [ll[0] as usize, ll[1] as usize, ll[2] as usize],
        light_value,
    );

    let ext_of = |axis: usize, sign: i64| -> usize {
        if sign > 0 {
            extents.pos[axis]
        } else {
            extents.neg[axis]
        }
    };
    // Axis rays: the sole predecessor carries full weight.
    for axis in 0..2 {
        for sign in [1i64, -1] {
            for step in 1..=ext_of(axis, sign) as i64 {
                let mut local = ll;
                let mut global = lg;
                local[axis] += sign * step;
                global[axis] += sign * step;
                let p = occ.prob_at(global);
                let idx = [local[0] as usize, local[1] as usize, local[2] as usize];
                let v = if p > threshold {
                    1.0 - p
                } else {
                    let mut pred = local;
                    pred[axis] -= sign;
                    field.value([pred[0] as usize, pred[1] as usize, pred[2] as usize])
                };
                field.set_value(idx, v);
            }
        }
    }

    let (wx, wy) = cache.slices();
    let wnx = cache.stride();
    for sx in [1i64, -1] {
        for sy in [1i64, -1] {
            let ex = ext_of(0, sx);
            let ey = ext_of(1, sy);
            for j in 1..=ey as i64 {
                for i in 1..=ex as i64 {
                    let mut local = ll;
                    let mut global = lg;
                    local[0] += sx * i;
                    local[1] += sy * j;
                    global[0] += sx * i;
                    global[1] += sy * j;
                    let idx = [local[0] as usize, local[1] as usize, local[2] as usize];
                    let p = occ.prob_at(global);
                    let v = if p > threshold {
                        1.0 - p
                    } else {
                        let wi = j as usize * wnx + i as usize;
                        let fx = field.value([
                            (local[0] - sx) as usize,
                            local[1] as usize,
                            local[2] as usize,
                        ]);
                        let fy = field.value([
                            local[0] as usize,
                            (local[1] - sy) as usize,
                            local[2] as usize,
                        ]);
                        wx[wi] * fx + wy[wi] * fy
                    };
                    field.set_value(idx, v);
                }
            }
        }
    }
    Ok(field)
}

/// One extracted plane of a field, ready for image export.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSlice {
    pub axis: Axis,
    pub level_index: usize,
    pub level_world: f64,
    /// (fast, slow) dims in [`Axis::plane`] order.
    pub dims: [usize; 2],
    pub resolution: f64,
    /// World coordinates of slice cell (0, 0), (fast, slow).
    pub origin: [f64; 2],
    /// Row-major, fast axis fastest.
    pub values: Vec<f64>,
}
