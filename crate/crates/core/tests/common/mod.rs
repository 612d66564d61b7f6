//! Shared oracles for the integration suites: Monte-Carlo ray-entry
//! classification, fine-step marching, exact segment/box clipping, and
//! hard-shadow scene classifiers. Everything here is independent of the
//! implementation paths it validates.

// Each integration binary compiles its own copy and uses a subset.
#![allow(dead_code)]

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shadowfield::{GridGeometry, OccupancyGrid, ShadowField, WorldPoint};

/// Fraction of sight rays entering a first-octant cell through its x-, y-,
/// and z-predecessor faces. Rays originate at the light-cell corner the
/// weights are anchored to and are distributed uniformly in solid angle over
/// the cone subtending the target cell, which is the measure the angular
/// weights discretize. Sampling is by rejection from a bounding spherical
/// cap around the cell's central direction.
pub fn mc_entry_face_fractions_3d(offset: [usize; 3], rays: usize, seed: u64) -> [f64; 3] {
    assert!(offset.iter().all(|&c| c >= 1), "oracle needs interior offsets");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let near = [offset[0] as f64, offset[1] as f64, offset[2] as f64];

    // Bounding cap: max angle from the cell-center direction to any corner.
    let center = [near[0] + 0.5, near[1] + 0.5, near[2] + 0.5];
    let c_norm = (center[0] * center[0] + center[1] * center[1] + center[2] * center[2]).sqrt();
    let axis = [center[0] / c_norm, center[1] / c_norm, center[2] / c_norm];
    let mut cos_cap: f64 = 1.0;
    for corner in 0..8 {
        let p = [
            near[0] + (corner & 1) as f64,
            near[1] + ((corner >> 1) & 1) as f64,
            near[2] + ((corner >> 2) & 1) as f64,
        ];
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let cos = (p[0] * axis[0] + p[1] * axis[1] + p[2] * axis[2]) / n;
        cos_cap = cos_cap.min(cos);
    }
    cos_cap = (cos_cap - 1e-4).max(-1.0);

    // Orthonormal frame around the cap axis.
    let pick = if axis[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let mut u = [
        axis[1] * pick[2] - axis[2] * pick[1],
        axis[2] * pick[0] - axis[0] * pick[2],
        axis[0] * pick[1] - axis[1] * pick[0],
    ];
    let un = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    u = [u[0] / un, u[1] / un, u[2] / un];
    let v = [
        axis[1] * u[2] - axis[2] * u[1],
        axis[2] * u[0] - axis[0] * u[2],
        axis[0] * u[1] - axis[1] * u[0],
    ];

    let mut counts = [0usize; 3];
    let mut accepted = 0usize;
    let mut guard = 0usize;
    while accepted < rays {
        guard += 1;
        assert!(guard < rays * 1000, "cap rejection stalled for {offset:?}");
        // Uniform direction within the cap.
        let cos_t = 1.0 - rng.gen::<f64>() * (1.0 - cos_cap);
        let sin_t = (1.0 - cos_t * cos_t).sqrt();
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        let (sp, cp) = phi.sin_cos();
        let dir = [
            axis[0] * cos_t + (u[0] * cp + v[0] * sp) * sin_t,
            axis[1] * cos_t + (u[1] * cp + v[1] * sp) * sin_t,
            axis[2] * cos_t + (u[2] * cp + v[2] * sp) * sin_t,
        ];
        if dir.iter().any(|&d| d <= 0.0) {
            continue;
        }
        // Slab test against the unit cell at `near`.
        let mut t_enter = f64::NEG_INFINITY;
        let mut t_exit = f64::INFINITY;
        let mut entry_axis = 0;
        for a in 0..3 {
            let t_near = near[a] / dir[a];
            let t_far = (near[a] + 1.0) / dir[a];
            if t_near > t_enter {
                t_enter = t_near;
                entry_axis = a;
            }
            t_exit = t_exit.min(t_far);
        }
        if t_enter >= t_exit {
            continue; // inside the cap but missing the cell
        }
        counts[entry_axis] += 1;
        accepted += 1;
    }
    [
        counts[0] as f64 / rays as f64,
        counts[1] as f64 / rays as f64,
        counts[2] as f64 / rays as f64,
    ]
}

/// 2D variant: rays uniform in angle over the arc subtending the cell from
/// the light corner, classified by the corner direction.
pub fn mc_entry_face_fractions_2d(offset: [usize; 2], rays: usize, seed: u64) -> [f64; 2] {
    assert!(offset.iter().all(|&c| c >= 1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, y) = (offset[0] as f64, offset[1] as f64);
    // Rays through the cell sweep between the directions to (x+1, y) and
    // (x, y+1); those steeper than the near corner (x, y) cross the y = const
    // face first, the rest the x = const face.
    let lo = y.atan2(x + 1.0);
    let hi = (y + 1.0).atan2(x);
    let split = y.atan2(x);
    let mut count_x = 0usize;
    for _ in 0..rays {
        let theta = lo + rng.gen::<f64>() * (hi - lo);
        if theta > split {
            count_x += 1;
        }
    }
    let fx = count_x as f64 / rays as f64;
    [fx, 1.0 - fx]
}

/// Cells visited by sampling the segment at `steps_per_cell` points per cell
/// length, in order with consecutive duplicates removed.
pub fn marching_cells(
    geom: &GridGeometry,
    a: WorldPoint,
    b: WorldPoint,
    steps_per_cell: f64,
) -> Vec<[i64; 3]> {
    let len_cells = (b - a).norm() * geom.resolution();
    let steps = ((len_cells * steps_per_cell).ceil() as usize).max(1);
    let mut cells = Vec::new();
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let p = WorldPoint::new(
            a.x + (b.x - a.x) * t,
            a.y + (b.y - a.y) * t,
            a.z + (b.z - a.z) * t,
        );
        let c = geom.world_to_index_unbounded(p);
        if cells.last() != Some(&c) {
            cells.push(c);
        }
    }
    cells
}

/// Exact segment/cell overlap sets from per-cell slab clipping.
pub struct SlabSets {
    /// Cells whose closed box the segment touches at all (corner grazes
    /// included).
    pub touched: HashSet<[i64; 3]>,
    /// Cells the segment properly passes through (chord longer than 1e-9
    /// cell lengths).
    pub solid: HashSet<[i64; 3]>,
}

/// Chord length of the segment inside one cell, in cell units; negative if
/// they do not intersect.
pub fn chord_in_cell(geom: &GridGeometry, a: WorldPoint, b: WorldPoint, cell: [i64; 3]) -> f64 {
    let mut ua = geom.world_to_continuous(a);
    let mut ub = geom.world_to_continuous(b);
    for axis in 0..3 {
        ua[axis] += 0.5;
        ub[axis] += 0.5;
    }
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for axis in 0..3 {
        let d = ub[axis] - ua[axis];
        let lo = cell[axis] as f64;
        let hi = lo + 1.0;
        if d == 0.0 {
            if ua[axis] < lo || ua[axis] > hi {
                return -1.0;
            }
        } else {
            let mut ta = (lo - ua[axis]) / d;
            let mut tb = (hi - ua[axis]) / d;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 + 1e-12 {
                return -1.0;
            }
        }
    }
    let span = (t1 - t0).max(0.0);
    let len = ((ub[0] - ua[0]).powi(2) + (ub[1] - ua[1]).powi(2) + (ub[2] - ua[2]).powi(2)).sqrt();
    span * len
}

pub fn slab_cells(geom: &GridGeometry, a: WorldPoint, b: WorldPoint) -> SlabSets {
    let ca = geom.world_to_index_unbounded(a);
    let cb = geom.world_to_index_unbounded(b);
    let mut touched = HashSet::new();
    let mut solid = HashSet::new();
    for z in ca[2].min(cb[2]) - 1..=ca[2].max(cb[2]) + 1 {
        for y in ca[1].min(cb[1]) - 1..=ca[1].max(cb[1]) + 1 {
            for x in ca[0].min(cb[0]) - 1..=ca[0].max(cb[0]) + 1 {
                let chord = chord_in_cell(geom, a, b, [x, y, z]);
                if chord >= 0.0 {
                    touched.insert([x, y, z]);
                    if chord > 1e-9 {
                        solid.insert([x, y, z]);
                    }
                }
            }
        }
    }
    // Endpoint cells always count as passed through.
    solid.insert(ca);
    solid.insert(cb);
    touched.insert(ca);
    touched.insert(cb);
    SlabSets { touched, solid }
}

/// Visibility verdict from fine-step marching: blocked iff any sampled cell
/// strictly between the endpoint cells exceeds the threshold.
pub fn marching_visible(
    occ: &OccupancyGrid,
    a: WorldPoint,
    b: WorldPoint,
    threshold: f64,
    steps_per_cell: f64,
) -> bool {
    let geom = occ.geometry();
    let ca = geom.world_to_index_unbounded(a);
    let cb = geom.world_to_index_unbounded(b);
    for cell in marching_cells(geom, a, b, steps_per_cell) {
        if cell == ca || cell == cb {
            continue;
        }
        if occ.prob_at(cell) > threshold {
            return false;
        }
    }
    true
}

/// Minimum distance (in cell units) from the segment to the center of any
/// cell with occupancy above the threshold.
pub fn ray_clearance_cells(
    occ: &OccupancyGrid,
    a: WorldPoint,
    b: WorldPoint,
    threshold: f64,
) -> f64 {
    let geom = occ.geometry();
    let dims = geom.dims();
    let ab = b - a;
    let len2 = ab.norm_squared();
    let mut best = f64::INFINITY;
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                if occ.prob_at([x as i64, y as i64, z as i64]) <= threshold {
                    continue;
                }
                let c = geom.index_to_world([x as i64, y as i64, z as i64]);
                let t = if len2 == 0.0 {
                    0.0
                } else {
                    ((c - a).dot(&ab) / len2).clamp(0.0, 1.0)
                };
                let closest = WorldPoint::new(a.x + ab.x * t, a.y + ab.y * t, a.z + ab.z * t);
                best = best.min((c - closest).norm());
            }
        }
    }
    best * geom.resolution()
}

/// Depth of a cell inside the hard umbra: the smallest Chebyshev radius at
/// which a hard-visible cell appears (capped at `max_radius`).
pub fn umbra_depth(hard: &ShadowField, idx: [usize; 3], max_radius: usize) -> usize {
    let dims = hard.geometry().dims();
    for r in 1..=max_radius {
        let r = r as i64;
        let mut found_lit = false;
        'ring: for dz in -r..=r {
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != r && dims[2] > 1 {
                        continue;
                    }
                    if dims[2] == 1 && (dz != 0 || dx.abs().max(dy.abs()) != r) {
                        continue;
                    }
                    let x = idx[0] as i64 + dx;
                    let y = idx[1] as i64 + dy;
                    let z = idx[2] as i64 + dz;
                    if x < 0
                        || y < 0
                        || z < 0
                        || x as usize >= dims[0]
                        || y as usize >= dims[1]
                        || z as usize >= dims[2]
                    {
                        continue;
                    }
                    if hard.value([x as usize, y as usize, z as usize]) > 0.5 {
                        found_lit = true;
                        break 'ring;
                    }
                }
            }
        }
        if found_lit {
            return r as usize;
        }
    }
    max_radius + 1
}

/// True when the axis-aligned rectangle of cells spanned by the light cell
/// and `cell` contains no occupied cell: the blend recursion then never sees
/// an attenuated value, so the field there is exactly one.
pub fn cone_clear(
    occ: &OccupancyGrid,
    light: [i64; 3],
    cell: [i64; 3],
    threshold: f64,
) -> bool {
    let lo = [
        light[0].min(cell[0]),
        light[1].min(cell[1]),
        light[2].min(cell[2]),
    ];
    let hi = [
        light[0].max(cell[0]),
        light[1].max(cell[1]),
        light[2].max(cell[2]),
    ];
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                if occ.prob_at([x, y, z]) > threshold {
                    return false;
                }
            }
        }
    }
    true
}

/// The 100x100 single-obstacle comparison scene: a wide opaque block just
/// below the light, casting a full shadow wedge with penumbra fringes at
/// both sides. Obstacle boundaries stay within ~50 cells of the light,
/// where the blend's soft edge is still narrow.
pub fn comparison_scene() -> (OccupancyGrid, WorldPoint) {
    let geom = GridGeometry::new([100, 100, 1], 1.0, WorldPoint::new(0.0, 0.0, 0.0)).unwrap();
    let mut occ = OccupancyGrid::new(geom, 0.0).unwrap();
    occ.add_box(
        WorldPoint::new(6.0, 42.0, 0.0),
        WorldPoint::new(94.0, 53.0, 0.0),
        1.0,
    )
    .unwrap();
    (occ, WorldPoint::new(50.0, 55.0, 0.0))
}

/// Window spanning the entire occupancy grid around the light.
pub fn full_grid_extents(
    occ: &OccupancyGrid,
    light: WorldPoint,
) -> shadowfield::FieldExtents {
    let idx = occ.geometry().world_to_index(light).unwrap();
    let dims = occ.geometry().dims();
    shadowfield::FieldExtents {
        neg: idx,
        pos: [
            dims[0] - 1 - idx[0],
            dims[1] - 1 - idx[1],
            dims[2] - 1 - idx[2],
        ],
    }
}

/// Deterministic random point inside the grid's world volume.
pub fn random_point_in(geom: &GridGeometry, rng: &mut ChaCha8Rng) -> WorldPoint {
    let dims = geom.dims();
    let origin = geom.origin();
    let cell = geom.cell_size();
    WorldPoint::new(
        origin.x + (rng.gen::<f64>() * dims[0] as f64 - 0.5) * cell,
        origin.y + (rng.gen::<f64>() * dims[1] as f64 - 0.5) * cell,
        origin.z + (rng.gen::<f64>() * dims[2] as f64 - 0.5) * cell,
    )
}
