//! Environment-independent angular weights for shadow-field propagation.
//!
//! For a cell at integer offset (x, y, z) from the light cell, the update
//! blends the three predecessor cells (one step toward the light along each
//! axis) with weights proportional to the angular measure of sight rays that
//! enter the cell through the corresponding face. The weights depend only on
//! the offset, never on the map, so one table per extents is computed up
//! front and reused for every field update.
//!
//! Geometry, anchored at the light-cell corner nearest the origin: `v_m`
//! points to the queried cell's vertex nearest the light and `v_x`, `v_y`,
//! `v_z` to that vertex shifted one cell along each axis. In 3D the weight of
//! the x-predecessor is the angle between `v_m` and the plane of `v_y`, `v_z`
//! divided by the sum of the three such plane angles; in 2D the two weights
//! are the complementary ratios of the corner angles. Angles are taken
//! unsigned so the ratios are valid in every octant.
//!
//! Degenerate offsets (a zero coordinate) lose the predecessors along the
//! zero axes; the surviving axes split the weight by the lower-dimensional
//! rule, e.g. offset (k, 0, 0) puts weight 1 on the x-predecessor. Offset
//! (0, 0, 0) is the light cell itself and carries no weights.
//!
//! Only the first octant is stored; lookups fold signs with a componentwise
//! absolute value. The final weight of each entry is stored as one minus the
//! floating-point sum of the others, which keeps the blend of an all-ones
//! neighborhood at exactly 1.0 — all-free maps produce an identically-1.0
//! field rather than one polluted by rounding.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::Error;
use crate::Result;

const MAGIC_3D: &[u8; 4] = b"SFW1";

/// Blend weights of the predecessor cells of one 3D offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredecessorWeights3 {
    pub from_x: f64,
    pub from_y: f64,
    pub from_z: f64,
}

/// Blend weights of the predecessor cells of one 2D offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredecessorWeights2 {
    pub from_x: f64,
    pub from_y: f64,
}

/// Result of a weight lookup: the light cell has no predecessors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetWeights<W> {
    LightCell,
    Predecessors(W),
}

/// Unsigned angle between two vectors.
fn angle2(ux: f64, uy: f64, vx: f64, vy: f64) -> f64 {
    let cross = ux * vy - uy * vx;
    let dot = ux * vx + uy * vy;
    cross.abs().atan2(dot)
}

/// 2D complementary-ratio weight of the first-axis predecessor for a
/// first-quadrant offset (u >= 1, v >= 1).
fn planar_first_axis_weight(u: usize, v: usize) -> f64 {
    let (u, v) = (u as f64, v as f64);
    // Corner vectors through the near vertex and its +1 shifts.
    let total = angle2(u + 1.0, v, u, v + 1.0);
    let toward_u = angle2(u, v + 1.0, u, v); // between v_v and v_m
    toward_u / total
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Unsigned angle between `v_m` and the plane with normal `n`.
fn plane_angle(v_m: [f64; 3], n: [f64; 3]) -> f64 {
    let s = (dot3(v_m, n) / (norm3(v_m) * norm3(n))).clamp(-1.0, 1.0);
    s.asin().abs()
}

/// Interior (all offsets >= 1) 3D weights.
fn interior_weights(x: usize, y: usize, z: usize) -> PredecessorWeights3 {
    let (xf, yf, zf) = (x as f64, y as f64, z as f64);
    let v_m = [xf, yf, zf];
    let v_x = [xf + 1.0, yf, zf];
    let v_y = [xf, yf + 1.0, zf];
    let v_z = [xf, yf, zf + 1.0];
    let n_xy = cross3(v_y, v_x);
    let n_xz = cross3(v_x, v_z);
    let n_yz = cross3(v_z, v_y);
    let a_xy = plane_angle(v_m, n_xy);
    let a_xz = plane_angle(v_m, n_xz);
    let a_yz = plane_angle(v_m, n_yz);
    let sum = a_xy + a_xz + a_yz;
    let from_x = a_yz / sum;
    let from_y = a_xz / sum;
    PredecessorWeights3 {
        from_x,
        from_y,
        from_z: 1.0 - (from_x + from_y),
    }
}

/// Weights for any first-octant offset, including degenerate ones.
fn octant_weights(x: usize, y: usize, z: usize) -> PredecessorWeights3 {
    match (x > 0, y > 0, z > 0) {
        (true, true, true) => interior_weights(x, y, z),
        (true, true, false) => {
            let from_x = planar_first_axis_weight(x, y);
            PredecessorWeights3 {
                from_x,
                from_y: 1.0 - from_x,
                from_z: 0.0,
            }
        }
        (true, false, true) => {
            let from_x = planar_first_axis_weight(x, z);
            PredecessorWeights3 {
                from_x,
                from_y: 0.0,
                from_z: 1.0 - from_x,
            }
        }
        (false, true, true) => {
            let from_y = planar_first_axis_weight(y, z);
            PredecessorWeights3 {
                from_x: 0.0,
                from_y,
                from_z: 1.0 - from_y,
            }
        }
        (true, false, false) => PredecessorWeights3 {
            from_x: 1.0,
            from_y: 0.0,
            from_z: 0.0,
        },
        (false, true, false) => PredecessorWeights3 {
            from_x: 0.0,
            from_y: 1.0,
            from_z: 0.0,
        },
        (false, false, true) => PredecessorWeights3 {
            from_x: 0.0,
            from_y: 0.0,
            from_z: 1.0,
        },
        (false, false, false) => PredecessorWeights3 {
            from_x: 0.0,
            from_y: 0.0,
            from_z: 0.0,
        },
    }
}

/// First-octant table of 3D predecessor weights, indexed by absolute offset.
#[derive(Debug, Clone)]
pub struct WeightCache3d {
    extents: [usize; 3],
    from_x: Vec<f64>,
    from_y: Vec<f64>,
    from_z: Vec<f64>,
}

impl WeightCache3d {
    /// Precompute weights for offsets up to `extents` (componentwise >= 1).
    pub fn new(extents: [usize; 3]) -> Result<Self> {
        if extents.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "weight extents must be >= 1 per axis, got {extents:?}"
            )));
        }
        let nx = extents[0] + 1;
        let ny = extents[1] + 1;
        let nz = extents[2] + 1;
        let len = nx
            .checked_mul(ny)
            .and_then(|p| p.checked_mul(nz))
            .ok_or_else(|| Error::InvalidParameter(format!("extents {extents:?} overflow")))?;

        let mut from_x = vec![0.0f64; len];
        let mut from_y = vec![0.0f64; len];
        let mut from_z = vec![0.0f64; len];

        // Entries are independent; split the z range across threads.
        let threads = crate::field::worker_threads().min(nz);
        let slab = len / nz;
        let chunk = nz.div_ceil(threads);
        std::thread::scope(|scope| {
            let mut rem_x = from_x.as_mut_slice();
            let mut rem_y = from_y.as_mut_slice();
            let mut rem_z = from_z.as_mut_slice();
            let mut z0 = 0usize;
            while z0 < nz {
                let zn = chunk.min(nz - z0);
                let (sx, tail_x) = rem_x.split_at_mut(zn * slab);
                let (sy, tail_y) = rem_y.split_at_mut(zn * slab);
                let (sz, tail_z) = rem_z.split_at_mut(zn * slab);
                rem_x = tail_x;
                rem_y = tail_y;
                rem_z = tail_z;
                let z_start = z0;
                scope.spawn(move || {
                    for dz in 0..zn {
                        for y in 0..ny {
                            for x in 0..nx {
                                let w = octant_weights(x, y, z_start + dz);
                                let i = dz * slab + y * nx + x;
                                sx[i] = w.from_x;
                                sy[i] = w.from_y;
                                sz[i] = w.from_z;
                            }
                        }
                    }
                });
                z0 += zn;
            }
        });

        Ok(Self {
            extents,
            from_x,
            from_y,
            from_z,
        })
    }

    pub fn extents(&self) -> [usize; 3] {
        self.extents
    }

    /// Number of stored entries (first octant only).
    pub fn resident_entries(&self) -> usize {
        self.from_x.len()
    }

    pub fn covers(&self, extents: [usize; 3]) -> bool {
        (0..3).all(|a| extents[a] <= self.extents[a])
    }

    #[inline]
    fn linear(&self, abs_offset: [usize; 3]) -> usize {
        abs_offset[0]
            + (self.extents[0] + 1) * (abs_offset[1] + (self.extents[1] + 1) * abs_offset[2])
    }

    /// Raw first-octant slices, for the field update's inner loop.
    pub(crate) fn slices(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.from_x, &self.from_y, &self.from_z)
    }

    pub(crate) fn strides(&self) -> (usize, usize) {
        (
            self.extents[0] + 1,
            (self.extents[0] + 1) * (self.extents[1] + 1),
        )
    }

    /// Weights at a signed offset. Octant symmetry is exact: the lookup uses
    /// the componentwise absolute offset.
    pub fn weights_at(&self, offset: [i64; 3]) -> Result<OffsetWeights<PredecessorWeights3>> {
        let mut abs = [0usize; 3];
        for a in 0..3 {
            let m = offset[a].unsigned_abs() as usize;
            if m > self.extents[a] {
                return Err(Error::OutOfBounds(format!(
                    "offset {offset:?} exceeds cached extents {:?}",
                    self.extents
                )));
            }
            abs[a] = m;
        }
        if abs == [0, 0, 0] {
            return Ok(OffsetWeights::LightCell);
        }
        let i = self.linear(abs);
        Ok(OffsetWeights::Predecessors(PredecessorWeights3 {
            from_x: self.from_x[i],
            from_y: self.from_y[i],
            from_z: self.from_z[i],
        }))
    }

    /// Persist as `SFW1`: extents, then (from_x, from_y, from_z) triples of
    /// 32-bit floats in first-octant row-major order.
    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC_3D)?;
        for e in self.extents {
            w.write_u32::<LittleEndian>(
                u32::try_from(e).map_err(|_| Error::FileFormat(format!("extent {e} exceeds u32")))?,
            )?;
        }
        for i in 0..self.from_x.len() {
            w.write_f32::<LittleEndian>(self.from_x[i] as f32)?;
            w.write_f32::<LittleEndian>(self.from_y[i] as f32)?;
            w.write_f32::<LittleEndian>(self.from_z[i] as f32)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Load a cache written by [`WeightCache3d::save`].
    ///
    /// The file stores 32-bit floats; the third weight is re-derived as one
    /// minus the sum of the first two so the exact-sum property survives the
    /// precision loss.
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|e| Error::FileFormat(format!("header too short: {e}")))?;
        if &magic != MAGIC_3D {
            return Err(Error::FileFormat(format!(
                "bad magic {magic:?}, expected {MAGIC_3D:?}"
            )));
        }
        let mut extents = [0usize; 3];
        for e in extents.iter_mut() {
            *e = r
                .read_u32::<LittleEndian>()
                .map_err(|e| Error::FileFormat(format!("truncated extents: {e}")))?
                as usize;
        }
        if extents.contains(&0) {
            return Err(Error::FileFormat(format!("invalid extents {extents:?}")));
        }
        let len = (extents[0] + 1) * (extents[1] + 1) * (extents[2] + 1);
        let mut from_x = vec![0.0f64; len];
        let mut from_y = vec![0.0f64; len];
        let mut from_z = vec![0.0f64; len];
        for i in 0..len {
            let x = r
                .read_f32::<LittleEndian>()
                .map_err(|e| Error::FileFormat(format!("truncated payload: {e}")))? as f64;
            let y = r
                .read_f32::<LittleEndian>()
                .map_err(|e| Error::FileFormat(format!("truncated payload: {e}")))? as f64;
            let z = r
                .read_f32::<LittleEndian>()
                .map_err(|e| Error::FileFormat(format!("truncated payload: {e}")))? as f64;
            from_x[i] = x;
            from_y[i] = y;
            from_z[i] = if z == 0.0 { 0.0 } else { 1.0 - (x + y) };
        }
        // The light-cell entry stays all-zero.
        from_x[0] = 0.0;
        from_y[0] = 0.0;
        from_z[0] = 0.0;
        Ok(Self {
            extents,
            from_x,
            from_y,
            from_z,
        })
    }
}

/// First-quadrant table of 2D predecessor weights.
#[derive(Debug, Clone)]
pub struct WeightCache2d {
    extents: [usize; 2],
    from_x: Vec<f64>,
    from_y: Vec<f64>,
}

impl WeightCache2d {
    pub fn new(extents: [usize; 2]) -> Result<Self> {
        if extents.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "weight extents must be >= 1 per axis, got {extents:?}"
            )));
        }
        let nx = extents[0] + 1;
        let ny = extents[1] + 1;
        let mut from_x = vec![0.0f64; nx * ny];
        let mut from_y = vec![0.0f64; nx * ny];
        for y in 0..ny {
            for x in 0..nx {
                let i = y * nx + x;
                let (wx, wy) = match (x > 0, y > 0) {
                    (true, true) => {
                        let wx = planar_first_axis_weight(x, y);
                        (wx, 1.0 - wx)
                    }
                    (true, false) => (1.0, 0.0),
                    (false, true) => (0.0, 1.0),
                    (false, false) => (0.0, 0.0),
                };
                from_x[i] = wx;
                from_y[i] = wy;
            }
        }
        Ok(Self {
            extents,
            from_x,
            from_y,
        })
    }

    pub fn extents(&self) -> [usize; 2] {
        self.extents
    }

    pub fn covers(&self, extents: [usize; 2]) -> bool {
        extents[0] <= self.extents[0] && extents[1] <= self.extents[1]
    }

    pub fn resident_entries(&self) -> usize {
        self.from_x.len()
    }

    pub(crate) fn slices(&self) -> (&[f64], &[f64]) {
        (&self.from_x, &self.from_y)
    }

    pub(crate) fn stride(&self) -> usize {
        self.extents[0] + 1
    }

    pub fn weights_at(&self, offset: [i64; 2]) -> Result<OffsetWeights<PredecessorWeights2>> {
        let mut abs = [0usize; 2];
        for a in 0..2 {
            let m = offset[a].unsigned_abs() as usize;
            if m > self.extents[a] {
                return Err(Error::OutOfBounds(format!(
                    "offset {offset:?} exceeds cached extents {:?}",
                    self.extents
                )));
            }
            abs[a] = m;
        }
        if abs == [0, 0] {
            return Ok(OffsetWeights::LightCell);
        }
        let i = abs[1] * (self.extents[0] + 1) + abs[0];
        Ok(OffsetWeights::Predecessors(PredecessorWeights2 {
            from_x: self.from_x[i],
            from_y: self.from_y[i],
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_3d_offsets_split_evenly() {
        let cache = WeightCache3d::new([6, 6, 6]).unwrap();
        for k in 1..=6i64 {
            match cache.weights_at([k, k, k]).unwrap() {
                OffsetWeights::Predecessors(w) => {
                    assert_relative_eq!(w.from_x, 1.0 / 3.0, epsilon = 1e-9);
                    assert_relative_eq!(w.from_y, 1.0 / 3.0, epsilon = 1e-9);
                    assert_relative_eq!(w.from_z, 1.0 / 3.0, epsilon = 1e-9);
                }
                OffsetWeights::LightCell => panic!("diagonal is not the light cell"),
            }
        }
    }

    #[test]
    fn near_axis_offset_dominated_by_x() {
        let cache = WeightCache3d::new([50, 2, 2]).unwrap();
        let OffsetWeights::Predecessors(w) = cache.weights_at([50, 1, 1]).unwrap() else {
            panic!()
        };
        assert!(w.from_x > 0.9, "from_x = {}", w.from_x);
    }

    #[test]
    fn normalization_and_range() {
        let cache = WeightCache3d::new([12, 9, 7]).unwrap();
        for z in 0..=7i64 {
            for y in 0..=9i64 {
                for x in 0..=12i64 {
                    if (x, y, z) == (0, 0, 0) {
                        continue;
                    }
                    let OffsetWeights::Predecessors(w) = cache.weights_at([x, y, z]).unwrap()
                    else {
                        panic!()
                    };
                    for v in [w.from_x, w.from_y, w.from_z] {
                        assert!((0.0..=1.0).contains(&v), "weight {v} at {x},{y},{z}");
                    }
                    assert!(
                        (w.from_x + w.from_y + w.from_z - 1.0).abs() < 1e-9,
                        "sum off at {x},{y},{z}"
                    );
                }
            }
        }
    }

    #[test]
    fn octant_reflection_is_exact() {
        let cache = WeightCache3d::new([5, 5, 5]).unwrap();
        let base = cache.weights_at([2, 1, 1]).unwrap();
        for signs in [
            [-1i64, 1, 1],
            [1, -1, 1],
            [1, 1, -1],
            [-1, -1, 1],
            [-1, -1, -1],
        ] {
            let mirrored = cache
                .weights_at([2 * signs[0], signs[1], signs[2]])
                .unwrap();
            assert_eq!(base, mirrored);
        }
    }

    #[test]
    fn light_cell_is_sentinel_and_overflow_errors() {
        let cache = WeightCache3d::new([4, 4, 4]).unwrap();
        assert_eq!(cache.weights_at([0, 0, 0]).unwrap(), OffsetWeights::LightCell);
        assert!(cache.weights_at([5, 0, 0]).is_err());
        assert!(cache.weights_at([0, -5, 0]).is_err());
    }

    #[test]
    fn on_axis_weight_collapses_to_single_predecessor() {
        let cache = WeightCache3d::new([4, 4, 4]).unwrap();
        let OffsetWeights::Predecessors(w) = cache.weights_at([3, 0, 0]).unwrap() else {
            panic!()
        };
        assert_eq!((w.from_x, w.from_y, w.from_z), (1.0, 0.0, 0.0));
        let OffsetWeights::Predecessors(w) = cache.weights_at([0, 0, 2]).unwrap() else {
            panic!()
        };
        assert_eq!((w.from_x, w.from_y, w.from_z), (0.0, 0.0, 1.0));
    }

    #[test]
    fn coordinate_plane_uses_planar_rule() {
        let cache = WeightCache3d::new([4, 4, 4]).unwrap();
        let OffsetWeights::Predecessors(w) = cache.weights_at([2, 1, 0]).unwrap() else {
            panic!()
        };
        assert_relative_eq!(w.from_x, 0.69395495, epsilon = 1e-6);
        assert_relative_eq!(w.from_y, 0.30604505, epsilon = 1e-6);
        assert_eq!(w.from_z, 0.0);
    }

    #[test]
    fn weights_2d_match_angle_ratios() {
        // Frozen from the corner-angle construction: v_m through (2,1) at
        // atan2(1,2), v_x through (3,1), v_y through (2,2).
        let cache = WeightCache2d::new([4, 4]).unwrap();
        let OffsetWeights::Predecessors(w) = cache.weights_at([2, 1]).unwrap() else {
            panic!()
        };
        assert_relative_eq!(w.from_x, 0.6939549523182871, epsilon = 1e-9);
        assert_relative_eq!(w.from_y, 0.3060450476817129, epsilon = 1e-9);

        // Swap symmetry.
        let OffsetWeights::Predecessors(m) = cache.weights_at([1, 2]).unwrap() else {
            panic!()
        };
        assert_relative_eq!(m.from_x, w.from_y, epsilon = 1e-12);
        assert_relative_eq!(m.from_y, w.from_x, epsilon = 1e-12);

        // Diagonal splits evenly.
        let OffsetWeights::Predecessors(d) = cache.weights_at([1, 1]).unwrap() else {
            panic!()
        };
        assert_relative_eq!(d.from_x, 0.5, epsilon = 1e-9);
        assert_relative_eq!(d.from_y, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn weights_2d_normalized_everywhere() {
        let cache = WeightCache2d::new([20, 20]).unwrap();
        for y in 0..=20i64 {
            for x in 0..=20i64 {
                if (x, y) == (0, 0) {
                    continue;
                }
                let OffsetWeights::Predecessors(w) = cache.weights_at([x, y]).unwrap() else {
                    panic!()
                };
                assert!((w.from_x + w.from_y - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn save_load_preserves_weights_to_f32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.sfw");
        let cache = WeightCache3d::new([6, 5, 4]).unwrap();
        cache.save(&path).unwrap();
        let loaded = WeightCache3d::load(&path).unwrap();
        assert_eq!(loaded.extents(), cache.extents());
        for z in 0..=4i64 {
            for y in 0..=5i64 {
                for x in 0..=6i64 {
                    if (x, y, z) == (0, 0, 0) {
                        continue;
                    }
                    let OffsetWeights::Predecessors(a) = cache.weights_at([x, y, z]).unwrap()
                    else {
                        panic!()
                    };
                    let OffsetWeights::Predecessors(b) = loaded.weights_at([x, y, z]).unwrap()
                    else {
                        panic!()
                    };
                    assert_relative_eq!(a.from_x, b.from_x, epsilon = 1e-6);
                    assert_relative_eq!(a.from_y, b.from_y, epsilon = 1e-6);
                    assert_relative_eq!(a.from_z, b.from_z, epsilon = 1e-6);
                    // Exact-sum property re-established on load.
                    let fsum = b.from_x + b.from_y;
                    if b.from_z != 0.0 {
                        assert_eq!(b.from_z, 1.0 - fsum);
                    }
                }
            }
        }
    }
}
