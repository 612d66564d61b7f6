//! Probabilistic occupancy grids.
//!
//! Cells store an occupancy probability in [0, 1] as 32-bit floats (matching
//! the on-disk format). Point-cloud ingestion maintains a parallel log-odds
//! array so repeated Bayesian updates stay well-conditioned:
//!
//! ```text
//! P(occupied) = 1 / (1 + exp(-log_odds))
//! ```
//!
//! Within one ingestion batch, hit/miss events are accumulated as integer
//! counts per cell before being folded into the log-odds sum, so ingesting a
//! permutation of the same point list produces a bit-identical grid.
//! Log-odds are clamped to ±10.
//!
//! Cells outside the grid read as free (probability 0). The shadow-field
//! update has to consult the map near the field borders, and unknown-as-free
//! keeps visibility optimistic there, consistent with the field's default
//! value of 1.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::Error;
use crate::geometry::{GridGeometry, WorldPoint};
use crate::raycast;
use crate::Result;

const MAGIC: &[u8; 4] = b"SFG1";
const LOG_ODDS_CLAMP: f64 = 10.0;

/// Parameters for one point-cloud ingestion batch.
#[derive(Debug, Clone)]
pub struct IngestParams {
    /// Log-odds increment applied to the endpoint cell of each return. Must
    /// be positive.
    pub hit_logodds: f64,
    /// Log-odds increment applied to cells traversed between the sensor and
    /// the endpoint (free-space carving). Must be negative.
    pub miss_logodds: f64,
    /// Returns farther than this from the sensor are skipped entirely.
    pub max_range: f64,
    /// World position of the sensor for this batch.
    pub sensor_origin: WorldPoint,
}

/// Counters reported by one ingestion batch.
#[derive(Debug, Clone, Copy, Default)]
pub struct IngestStats {
    pub points_used: usize,
    pub points_skipped: usize,
    pub hit_events: usize,
    pub miss_events: usize,
}

/// Dense occupancy grid with world registration.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    geometry: GridGeometry,
    values: Vec<f32>,
    log_odds: Option<Vec<f32>>,
}

impl PartialEq for OccupancyGrid {
    fn eq(&self, other: &Self) -> bool {
        // Log-odds are derived bookkeeping; equality is geometry + values.
        self.geometry == other.geometry && self.values == other.values
    }
}

fn logistic(log_odds: f64) -> f64 {
    1.0 / (1.0 + (-log_odds).exp())
}

fn logit_clamped(p: f64) -> f64 {
    if p <= 0.0 {
        -LOG_ODDS_CLAMP
    } else if p >= 1.0 {
        LOG_ODDS_CLAMP
    } else {
        (p / (1.0 - p)).ln().clamp(-LOG_ODDS_CLAMP, LOG_ODDS_CLAMP)
    }
}

impl OccupancyGrid {
    /// Create a grid with every cell set to `fill`.
    pub fn new(geometry: GridGeometry, fill: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fill) {
            return Err(Error::InvalidParameter(format!(
                "fill probability must be in [0, 1], got {fill}"
            )));
        }
        let len = geometry.len();
        Ok(Self {
            geometry,
            values: vec![fill as f32; len],
            log_odds: None,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Occupancy probability at an unbounded index; cells outside the grid
    /// are free.
    #[inline]
    pub fn prob_at(&self, idx: [i64; 3]) -> f64 {
        if self.geometry.contains(idx) {
            self.values[self
                .geometry
                .linear([idx[0] as usize, idx[1] as usize, idx[2] as usize])]
                as f64
        } else {
            0.0
        }
    }

    /// Occupancy probability at a world point (0 outside the grid).
    pub fn prob_at_world(&self, p: WorldPoint) -> f64 {
        self.prob_at(self.geometry.world_to_index_unbounded(p))
    }

    pub fn occupied_count(&self, threshold: f64) -> usize {
        self.values.iter().filter(|&&v| v as f64 > threshold).count()
    }

    /// Raise cells whose centers lie inside `[min, max]` to at least `p`.
    ///
    /// Portions of the box outside the grid are silently clipped; overlapping
    /// boxes combine with a max rule.
    pub fn add_box(&mut self, min: WorldPoint, max: WorldPoint, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "box probability must be in [0, 1], got {p}"
            )));
        }
        for a in 0..3 {
            if min[a] > max[a] {
                return Err(Error::InvalidParameter(format!(
                    "box min {min:?} exceeds max {max:?} on axis {a}"
                )));
            }
        }
        let dims = self.geometry.dims();
        let res = self.geometry.resolution();
        let origin = self.geometry.origin();
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            // Smallest / largest index whose center is inside the box.
            let l = ((min[a] - origin[a]) * res).ceil() as i64;
            let h = ((max[a] - origin[a]) * res).floor() as i64;
            if h < 0 || l >= dims[a] as i64 || l > h {
                return Ok(()); // no cell center inside
            }
            lo[a] = l.max(0) as usize;
            hi[a] = h.min(dims[a] as i64 - 1) as usize;
        }
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    let i = self.geometry.linear([x, y, z]);
                    if (p as f32) > self.values[i] {
                        self.values[i] = p as f32;
                        if let Some(lo_arr) = &mut self.log_odds {
                            lo_arr[i] = logit_clamped(p) as f32;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Fold one batch of range returns into the grid.
    ///
    /// Each return within `max_range` adds `hit_logodds` to its endpoint cell
    /// and `miss_logodds` to every cell traversed between the sensor and the
    /// endpoint (endpoint excluded). An empty point list leaves the grid
    /// untouched.
    pub fn ingest_points(&mut self, points: &[WorldPoint], params: &IngestParams) -> Result<IngestStats> {
        if !(params.hit_logodds > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hit_logodds must be > 0, got {}",
                params.hit_logodds
            )));
        }
        if !(params.miss_logodds < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "miss_logodds must be < 0, got {}",
                params.miss_logodds
            )));
        }
        let mut stats = IngestStats::default();
        if points.is_empty() {
            return Ok(stats);
        }
        if self.log_odds.is_none() {
            self.log_odds = Some(
                self.values
                    .iter()
                    .map(|&v| logit_clamped(v as f64) as f32)
                    .collect(),
            );
        }

        let geom = self.geometry.clone();
        let mut hits = vec![0u32; geom.len()];
        let mut misses = vec![0u32; geom.len()];
        for &p in points {
            if (p - params.sensor_origin).norm() > params.max_range {
                stats.points_skipped += 1;
                continue;
            }
            stats.points_used += 1;
            let end = geom.world_to_index_unbounded(p);
            for cell in raycast::traverse(&geom, params.sensor_origin, p) {
                if cell == end {
                    continue; // endpoint gets the hit update below
                }
                if geom.contains(cell) {
                    misses[geom.linear([cell[0] as usize, cell[1] as usize, cell[2] as usize])] += 1;
                    stats.miss_events += 1;
                }
            }
            if geom.contains(end) {
                hits[geom.linear([end[0] as usize, end[1] as usize, end[2] as usize])] += 1;
                stats.hit_events += 1;
            }
        }

        let log_odds = self.log_odds.as_mut().expect("materialized above");
        for i in 0..self.values.len() {
            if hits[i] == 0 && misses[i] == 0 {
                continue;
            }
            let delta =
                hits[i] as f64 * params.hit_logodds + misses[i] as f64 * params.miss_logodds;
            let updated =
                (log_odds[i] as f64 + delta).clamp(-LOG_ODDS_CLAMP, LOG_ODDS_CLAMP);
            log_odds[i] = updated as f32;
            self.values[i] = logistic(updated) as f32;
        }
        Ok(stats)
    }

    /// Write the grid in the binary `SFG1` format (little-endian).
    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        let dims = self.geometry.dims();
        for d in dims {
            w.write_u32::<LittleEndian>(u32::try_from(d).map_err(|_| {
                Error::FileFormat(format!("dimension {d} exceeds u32"))
            })?)?;
        }
        w.write_f64::<LittleEndian>(self.geometry.resolution())?;
        let origin = self.geometry.origin();
        for a in 0..3 {
            w.write_f64::<LittleEndian>(origin[a])?;
        }
        for &v in &self.values {
            w.write_f32::<LittleEndian>(v)?;
        }
        Ok(())
    }

    /// Read a grid written by [`OccupancyGrid::save`].
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
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
                .map_err(|e| Error::FileFormat(format!("truncated dims: {e}")))?
                as usize;
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
        let geometry = GridGeometry::new(
            dims,
            resolution,
            WorldPoint::new(origin[0], origin[1], origin[2]),
        )?;
        let mut values = vec![0.0f32; geometry.len()];
        for v in values.iter_mut() {
            *v = r
                .read_f32::<LittleEndian>()
                .map_err(|e| Error::FileFormat(format!("payload shorter than header dims: {e}")))?;
            if !v.is_finite() || !(0.0..=1.0).contains(v) {
                return Err(Error::FileFormat(format!(
                    "occupancy value {v} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            geometry,
            values,
            log_odds: None,
        })
    }
}

/// Parse an ASCII point cloud: one `x y z` triple per line, meters.
/// Lines starting with `#` and blank lines are ignored.
pub fn parse_points(text: &str) -> Result<Vec<WorldPoint>> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "line {}: expected 3 fields, found {}",
                lineno + 1,
                fields.len()
            )));
        }
        let mut coords = [0.0f64; 3];
        for (a, f) in fields.iter().enumerate() {
            coords[a] = f.parse::<f64>().map_err(|e| {
                Error::Parse(format!("line {}: bad number {f:?}: {e}", lineno + 1))
            })?;
        }
        points.push(WorldPoint::new(coords[0], coords[1], coords[2]));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geom(dims: [usize; 3]) -> GridGeometry {
        GridGeometry::new(dims, 1.0, WorldPoint::new(0.0, 0.0, 0.0)).unwrap()
    }

    #[test]
    fn uniform_fill() {
        let g = OccupancyGrid::new(geom([10, 10, 1]), 0.0).unwrap();
        assert_eq!(g.values().len(), 100);
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_scale_grid_allocates() {
        let geometry =
            GridGeometry::new([160, 160, 20], 10.0, WorldPoint::new(0.05, 0.05, 0.05)).unwrap();
        let g = OccupancyGrid::new(geometry, 0.0).unwrap();
        assert_eq!(g.values().len(), 512_000);
    }

    #[test]
    fn degenerate_dims_error() {
        assert!(GridGeometry::new([0, 5, 1], 1.0, WorldPoint::origin()).is_err());
    }

    #[test]
    fn box_single_cell() {
        let mut g = OccupancyGrid::new(geom([10, 10, 1]), 0.0).unwrap();
        // Cell (3, 4, 0) center is (3.0, 4.0, 0.0); this box contains only it.
        g.add_box(
            WorldPoint::new(2.8, 3.8, -0.2),
            WorldPoint::new(3.2, 4.2, 0.2),
            1.0,
        )
        .unwrap();
        assert_eq!(g.prob_at([3, 4, 0]), 1.0);
        assert_eq!(g.occupied_count(0.5), 1);
    }

    #[test]
    fn box_outside_grid_is_noop() {
        let mut g = OccupancyGrid::new(geom([10, 10, 1]), 0.2).unwrap();
        let before = g.clone();
        g.add_box(
            WorldPoint::new(100.0, 100.0, 0.0),
            WorldPoint::new(110.0, 110.0, 1.0),
            0.9,
        )
        .unwrap();
        assert_eq!(g, before);
    }

    #[test]
    fn overlapping_boxes_take_max() {
        let mut g = OccupancyGrid::new(geom([10, 10, 1]), 0.0).unwrap();
        g.add_box(WorldPoint::new(1.0, 1.0, 0.0), WorldPoint::new(5.0, 5.0, 0.0), 0.4)
            .unwrap();
        g.add_box(WorldPoint::new(3.0, 3.0, 0.0), WorldPoint::new(7.0, 7.0, 0.0), 0.9)
            .unwrap();
        assert_relative_eq!(g.prob_at([4, 4, 0]), 0.9, epsilon = 1e-7);
        assert_relative_eq!(g.prob_at([2, 2, 0]), 0.4, epsilon = 1e-7);
        // Re-adding a weaker box must not lower anything.
        g.add_box(WorldPoint::new(3.0, 3.0, 0.0), WorldPoint::new(7.0, 7.0, 0.0), 0.1)
            .unwrap();
        assert_relative_eq!(g.prob_at([4, 4, 0]), 0.9, epsilon = 1e-7);
    }

    #[test]
    fn single_hit_from_uniform_prior() {
        // Unknown prior 0.5 has log-odds 0; one hit of 0.85 lands at the
        // logistic of 0.85.
        let mut g = OccupancyGrid::new(geom([10, 1, 1]), 0.5).unwrap();
        let params = IngestParams {
            hit_logodds: 0.85,
            miss_logodds: -0.4,
            max_range: 100.0,
            sensor_origin: WorldPoint::new(0.0, 0.0, 0.0),
        };
        g.ingest_points(&[WorldPoint::new(7.0, 0.0, 0.0)], &params).unwrap();
        assert_relative_eq!(g.prob_at([7, 0, 0]), 0.700567, epsilon = 1e-5);
        // Cells between sensor and endpoint were carved free.
        assert!(g.prob_at([3, 0, 0]) < 0.5);
    }

    #[test]
    fn double_hit_accumulates() {
        let mut g = OccupancyGrid::new(geom([10, 1, 1]), 0.5).unwrap();
        let params = IngestParams {
            hit_logodds: 0.85,
            miss_logodds: -0.4,
            max_range: 100.0,
            sensor_origin: WorldPoint::new(0.0, 0.0, 0.0),
        };
        let pt = WorldPoint::new(7.0, 0.0, 0.0);
        g.ingest_points(&[pt, pt], &params).unwrap();
        assert_relative_eq!(g.prob_at([7, 0, 0]), 0.845535, epsilon = 1e-5);
    }

    #[test]
    fn zero_points_identity() {
        let mut g = OccupancyGrid::new(geom([5, 5, 1]), 0.3).unwrap();
        let before = g.clone();
        let params = IngestParams {
            hit_logodds: 0.85,
            miss_logodds: -0.4,
            max_range: 100.0,
            sensor_origin: WorldPoint::origin(),
        };
        g.ingest_points(&[], &params).unwrap();
        assert_eq!(g, before);
    }

    #[test]
    fn permutation_of_points_is_bit_identical() {
        let params = IngestParams {
            hit_logodds: 0.9,
            miss_logodds: -0.35,
            max_range: 100.0,
            sensor_origin: WorldPoint::new(0.1, 0.1, 0.1),
        };
        let pts = vec![
            WorldPoint::new(6.3, 2.1, 0.0),
            WorldPoint::new(1.2, 7.9, 0.0),
            WorldPoint::new(6.3, 2.1, 0.0),
            WorldPoint::new(4.4, 4.6, 0.0),
            WorldPoint::new(8.0, 8.0, 0.0),
        ];
        let mut rev: Vec<_> = pts.clone();
        rev.reverse();

        let mut a = OccupancyGrid::new(geom([10, 10, 1]), 0.5).unwrap();
        let mut b = OccupancyGrid::new(geom([10, 10, 1]), 0.5).unwrap();
        a.ingest_points(&pts, &params).unwrap();
        b.ingest_points(&rev, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn probabilities_stay_bounded_under_heavy_updates() {
        let mut g = OccupancyGrid::new(geom([4, 1, 1]), 0.5).unwrap();
        let params = IngestParams {
            hit_logodds: 2.0,
            miss_logodds: -2.0,
            max_range: 100.0,
            sensor_origin: WorldPoint::origin(),
        };
        let pt = WorldPoint::new(3.0, 0.0, 0.0);
        for _ in 0..50 {
            g.ingest_points(&[pt], &params).unwrap();
        }
        for &v in g.values() {
            assert!((0.0..=1.0).contains(&(v as f64)), "value {v} escaped [0,1]");
        }
        // Clamp at +10 log-odds.
        assert_relative_eq!(g.prob_at([3, 0, 0]), logistic(10.0), epsilon = 1e-6);
    }

    #[test]
    fn bad_logodds_signs_rejected() {
        let mut g = OccupancyGrid::new(geom([4, 1, 1]), 0.5).unwrap();
        let bad = IngestParams {
            hit_logodds: -0.1,
            miss_logodds: -0.4,
            max_range: 10.0,
            sensor_origin: WorldPoint::origin(),
        };
        assert!(g.ingest_points(&[WorldPoint::origin()], &bad).is_err());
    }

    #[test]
    fn save_load_round_trip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.sfg");
        let mut g = OccupancyGrid::new(
            GridGeometry::new([7, 5, 3], 4.0, WorldPoint::new(-1.0, 2.5, 0.125)).unwrap(),
            0.0,
        )
        .unwrap();
        g.add_box(WorldPoint::new(-0.5, 2.6, 0.2), WorldPoint::new(0.2, 3.0, 0.4), 0.77)
            .unwrap();
        let params = IngestParams {
            hit_logodds: 0.85,
            miss_logodds: -0.4,
            max_range: 10.0,
            sensor_origin: WorldPoint::new(-1.0, 2.5, 0.125),
        };
        g.ingest_points(&[WorldPoint::new(0.3, 3.2, 0.5)], &params).unwrap();

        g.save(&path).unwrap();
        let loaded = OccupancyGrid::load(&path).unwrap();
        assert_eq!(g, loaded);
        assert_eq!(g.values(), loaded.values()); // bit-exact payload
    }

    #[test]
    fn magic_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.sfg");
        std::fs::write(&path, b"NOPE0000000000000000000000000000").unwrap();
        match OccupancyGrid::load(&path) {
            Err(Error::FileFormat(msg)) => assert!(msg.contains("magic")),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_overflow_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("huge.sfg");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"SFG1");
        for _ in 0..3 {
            bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        }
        bytes.extend_from_slice(&1.0f64.to_le_bytes());
        for _ in 0..3 {
            bytes.extend_from_slice(&0.0f64.to_le_bytes());
        }
        std::fs::write(&path, &bytes).unwrap();
        match OccupancyGrid::load(&path) {
            Err(Error::InvalidGeometry(msg)) => assert!(msg.contains("overflow")),
            other => panic!("expected overflow rejection, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunc.sfg");
        let g = OccupancyGrid::new(geom([4, 4, 1]), 0.25).unwrap();
        g.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 6]).unwrap();
        assert!(matches!(
            OccupancyGrid::load(&path),
            Err(Error::FileFormat(_))
        ));
    }

    #[test]
    fn point_parsing() {
        let pts = parse_points("# header\n1 2 3\n\n 4.5  -6 0\n").unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1], WorldPoint::new(4.5, -6.0, 0.0));

        let err = parse_points("1 2 3\n1 2\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }
}
