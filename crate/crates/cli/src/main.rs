//! Command-line surface for the shadow-field pipeline: point-cloud
//! ingestion, field building, slice export, soft-vs-hard comparison,
//! throughput benchmarking, and planner runs.
//!
//! All numeric flags take SI units (meters, seconds); grid indices never
//! appear on the command line. `SHADOWFIELD_THREADS` caps the parallelism of
//! field updates (default: hardware concurrency).

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use shadowfield::cost::{desired_orientation, quaternion_error_complement};
use shadowfield::planner::{self, Scenario};
use shadowfield::raycast;
use shadowfield::{
    pgm, update_shadow_field, update_shadow_field_2d, Axis, FieldExtents, GridGeometry,
    IngestParams, OccupancyGrid, ShadowField, WeightCache2d, WeightCache3d, WorldPoint,
};

#[derive(Parser)]
#[command(
    name = "shadowfield",
    version,
    about = "Probabilistic shadow fields over occupancy grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z — got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad component {p:?}: {e}"))?;
    }
    Ok(out)
}

fn parse_pair_or_single(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.len() {
        1 | 2 => {
            let mut out = [0.0; 2];
            for (i, p) in parts.iter().enumerate() {
                out[i] = p
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| format!("bad component {p:?}: {e}"))?;
            }
            Ok(out)
        }
        _ => Err(format!("expected one or two comma-separated values, got {s:?}")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build an occupancy grid from an ASCII point cloud (one "x y z" per line).
    Ingest {
        /// Point cloud file; lines starting with '#' are ignored.
        #[arg(long)]
        points: PathBuf,
        /// World minimum corner of the grid volume, meters.
        #[arg(long, value_parser = parse_triple)]
        min_corner: [f64; 3],
        /// Edge lengths of the grid volume, meters.
        #[arg(long, value_parser = parse_triple)]
        size: [f64; 3],
        /// Cells per meter.
        #[arg(long)]
        resolution: f64,
        /// Prior occupancy probability of every cell.
        #[arg(long, default_value_t = 0.5)]
        fill: f64,
        #[arg(long, default_value_t = 0.85)]
        hit_logodds: f64,
        #[arg(long, default_value_t = -0.4, allow_hyphen_values = true)]
        miss_logodds: f64,
        /// Returns farther than this are dropped, meters.
        #[arg(long, default_value_t = 100.0)]
        max_range: f64,
        /// Sensor position for free-space carving, meters.
        #[arg(long, value_parser = parse_triple, default_value = "0,0,0")]
        sensor: [f64; 3],
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a shadow field from a grid file.
    Field {
        #[arg(long)]
        grid: PathBuf,
        /// Light (target) position, meters.
        #[arg(long, value_parser = parse_triple)]
        light: [f64; 3],
        /// Window extents above the light, meters per axis.
        #[arg(long, value_parser = parse_triple)]
        extent_pos: [f64; 3],
        /// Window extents below the light, meters per axis.
        #[arg(long, value_parser = parse_triple)]
        extent_neg: [f64; 3],
        /// Occupancy confidence threshold.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Optional weight-cache file: loaded when it exists and covers the
        /// window, rebuilt and saved otherwise.
        #[arg(long)]
        weights_cache: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export one plane of a field as a binary PGM image.
    Slice {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value = "z")]
        axis: Axis,
        /// World coordinate of the plane along the slice axis, meters.
        #[arg(long)]
        level: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a soft-vs-hard visibility profile along a grid line as CSV.
    Compare {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, value_parser = parse_triple)]
        light: [f64; 3],
        #[arg(long, value_parser = parse_triple)]
        extent_pos: [f64; 3],
        #[arg(long, value_parser = parse_triple)]
        extent_neg: [f64; 3],
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Axis the profile runs along.
        #[arg(long)]
        axis: Axis,
        /// World coordinates of the remaining axes (one value for 2D grids).
        #[arg(long, value_parser = parse_pair_or_single)]
        fixed: [f64; 2],
        #[arg(long)]
        out: PathBuf,
    },
    /// Time full-field updates over cubic grids of the given side lengths.
    Bench {
        /// Comma-separated grid side lengths, cells.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the receding-horizon planner on a scenario file.
    Plan {
        /// Scenario JSON.
        #[arg(long)]
        scenario: PathBuf,
        /// Prefix for `<prefix>_traj.csv`, `<prefix>_log.csv`,
        /// `<prefix>_slice.pgm`.
        #[arg(long)]
        out_prefix: String,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest {
            points,
            min_corner,
            size,
            resolution,
            fill,
            hit_logodds,
            miss_logodds,
            max_range,
            sensor,
            out,
        } => {
            let text = std::fs::read_to_string(&points)
                .with_context(|| format!("reading {}", points.display()))?;
            let cloud = shadowfield::occupancy::parse_points(&text)?;
            let geometry = grid_from_extent(min_corner, size, resolution)?;
            let mut grid = OccupancyGrid::new(geometry, fill)?;
            let stats = grid.ingest_points(
                &cloud,
                &IngestParams {
                    hit_logodds,
                    miss_logodds,
                    max_range,
                    sensor_origin: WorldPoint::new(sensor[0], sensor[1], sensor[2]),
                },
            )?;
            grid.save(&out)?;
            let dims = grid.geometry().dims();
            println!(
                "cells: {} ({}x{}x{})",
                grid.geometry().len(),
                dims[0],
                dims[1],
                dims[2]
            );
            println!("points used: {} (skipped {})", stats.points_used, stats.points_skipped);
            println!("occupied cells (P > 0.5): {}", grid.occupied_count(0.5));
            println!("wrote {}", out.display());
        }
        Command::Field {
            grid,
            light,
            extent_pos,
            extent_neg,
            threshold,
            weights_cache,
            out,
        } => {
            let occ = OccupancyGrid::load(&grid)?;
            let light = WorldPoint::new(light[0], light[1], light[2]);
            let extents = extents_from_meters(&occ, extent_pos, extent_neg);
            let field = if occ.geometry().is_2d() && extents.required_cache()[2] == 0 {
                let req = extents.required_cache();
                let cache = WeightCache2d::new([req[0].max(1), req[1].max(1)])?;
                let t0 = Instant::now();
                let field = update_shadow_field_2d(&occ, light, extents, threshold, &cache)?;
                report_update(t0, &field);
                field
            } else {
                let cache = load_or_build_cache(weights_cache.as_deref(), extents)?;
                let t0 = Instant::now();
                let field = update_shadow_field(&occ, light, extents, threshold, &cache)?;
                report_update(t0, &field);
                field
            };
            println!("min field value: {}", field.min_value());
            field.save(&out)?;
            println!("wrote {}", out.display());
        }
        Command::Slice {
            field,
            axis,
            level,
            out,
        } => {
            let field = ShadowField::load(&field)?;
            let slice = field.slice(axis, level)?;
            let comments = vec![format!(
                "axis {:?} layer {} at {} m, {} x {} cells, {} cells/m",
                slice.axis,
                slice.level_index,
                slice.level_world,
                slice.dims[0],
                slice.dims[1],
                slice.resolution
            )];
            std::fs::write(&out, pgm::slice_to_pgm(&slice, &comments))?;
            println!("wrote {}", out.display());
        }
        Command::Compare {
            grid,
            light,
            extent_pos,
            extent_neg,
            threshold,
            axis,
            fixed,
            out,
        } => {
            let occ = OccupancyGrid::load(&grid)?;
            let light = WorldPoint::new(light[0], light[1], light[2]);
            let extents = extents_from_meters(&occ, extent_pos, extent_neg);
            let soft = if occ.geometry().is_2d() && extents.required_cache()[2] == 0 {
                let req = extents.required_cache();
                let cache = WeightCache2d::new([req[0].max(1), req[1].max(1)])?;
                update_shadow_field_2d(&occ, light, extents, threshold, &cache)?
            } else {
                let req = extents.required_cache();
                let cache =
                    WeightCache3d::new([req[0].max(1), req[1].max(1), req[2].max(1)])?;
                update_shadow_field(&occ, light, extents, threshold, &cache)?
            };
            let hard = raycast::hard_field(&occ, light, extents, threshold)?;
            let rows = raycast::compare_profile(&soft, &hard, axis, fixed)?;
            std::fs::write(&out, raycast::profile_to_csv(&rows))?;
            println!("wrote {} ({} rows)", out.display(), rows.len());
        }
        Command::Bench {
            sizes,
            repetitions,
            out,
        } => {
            if repetitions == 0 {
                bail!("repetitions must be >= 1");
            }
            if sizes.is_empty() {
                bail!("at least one size is required");
            }
            let mut csv = String::from("cells,mean_seconds,cells_per_sec\n");
            for side in &sizes {
                let side = *side;
                if side < 3 {
                    bail!("bench sides must be >= 3 cells, got {side}");
                }
                let res = 10.0;
                let geometry = GridGeometry::new(
                    [side, side, side],
                    res,
                    WorldPoint::new(0.0, 0.0, 0.0),
                )?;
                let occ = OccupancyGrid::new(geometry, 0.0)?;
                let half = (side - 1) / 2;
                let extents = FieldExtents {
                    neg: [half, half, half],
                    pos: [side - 1 - half, side - 1 - half, side - 1 - half],
                };
                let req = extents.required_cache();
                let cache = WeightCache3d::new(req)?;
                let light = occ
                    .geometry()
                    .index_to_world([half as i64, half as i64, half as i64]);
                // One warm-up pass, then timed repetitions.
                let field = update_shadow_field(&occ, light, extents, 0.5, &cache)?;
                let cells = field.geometry().len();
                let mut total = 0.0;
                for _ in 0..repetitions {
                    let t0 = Instant::now();
                    let f = update_shadow_field(&occ, light, extents, 0.5, &cache)?;
                    total += t0.elapsed().as_secs_f64();
                    std::hint::black_box(f.min_value());
                }
                let mean = total / repetitions as f64;
                let rate = cells as f64 / mean;
                println!("{cells} cells: {:.3} ms mean, {:.2e} cells/s", mean * 1e3, rate);
                csv.push_str(&format!("{cells},{mean},{rate}\n"));
            }
            match out {
                Some(path) => {
                    std::fs::write(&path, csv)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{csv}"),
            }
        }
        Command::Plan {
            scenario,
            out_prefix,
        } => {
            let scenario = Scenario::from_path(&scenario)?;
            let occ = scenario.build_occupancy()?;
            let cache = scenario.build_weight_cache()?;
            let field = std::sync::Arc::new(scenario.build_field(&occ, &cache)?);
            let result = planner::receding_horizon(&scenario, |_| field.clone())?;

            let traj_path = format!("{out_prefix}_traj.csv");
            let log_path = format!("{out_prefix}_log.csv");
            let slice_path = format!("{out_prefix}_slice.pgm");
            std::fs::write(&traj_path, planner::trajectory_to_csv(&result.executed))?;
            std::fs::write(&log_path, planner::logs_to_csv(&result.logs))?;

            let final_state = *result.executed.states.last().expect("executed states");
            let geom = field.geometry();
            let z_lo = geom.origin().z;
            let z_hi = z_lo + (geom.dims()[2] - 1) as f64 / geom.resolution();
            let level = final_state.position.z.clamp(z_lo, z_hi);
            let slice = field.slice(Axis::Z, level)?;
            let mut comments = vec![format!(
                "slice at z = {} m after {} receding-horizon steps",
                slice.level_world,
                result.logs.len()
            )];
            for s in &result.executed.states {
                comments.push(format!(
                    "path {} {} {} {} {}",
                    s.position.x, s.position.y, s.position.z, s.yaw, s.pitch
                ));
            }
            std::fs::write(&slice_path, pgm::slice_to_pgm(&slice, &comments))?;

            let last = result.logs.last().expect("at least one step");
            let roll = scenario.orientation.roll;
            let locked = desired_orientation(final_state.position, scenario.light_world(), roll)
                .map(|d| quaternion_error_complement(&final_state.pose(roll).orientation, &d))
                .unwrap_or(1.0);
            println!("steps executed: {}", result.logs.len());
            println!("final field value: {:.6}", last.field_value);
            println!("final error complement: {:.6}", locked);
            println!("wrote {traj_path}, {log_path}, {slice_path}");
        }
    }
    Ok(())
}

fn grid_from_extent(min_corner: [f64; 3], size: [f64; 3], resolution: f64) -> Result<GridGeometry> {
    if resolution <= 0.0 {
        bail!("resolution must be positive, got {resolution}");
    }
    let mut dims = [0usize; 3];
    for a in 0..3 {
        let cells = (size[a] * resolution).round() as i64;
        if cells < 1 {
            bail!("size[{a}] = {} m is under one cell", size[a]);
        }
        dims[a] = cells as usize;
    }
    let half = 0.5 / resolution;
    Ok(GridGeometry::new(
        dims,
        resolution,
        WorldPoint::new(min_corner[0] + half, min_corner[1] + half, min_corner[2] + half),
    )?)
}

fn extents_from_meters(occ: &OccupancyGrid, pos: [f64; 3], neg: [f64; 3]) -> FieldExtents {
    let res = occ.geometry().resolution();
    let cells = |m: f64| (m * res).round().max(0.0) as usize;
    FieldExtents {
        pos: [cells(pos[0]), cells(pos[1]), cells(pos[2])],
        neg: [cells(neg[0]), cells(neg[1]), cells(neg[2])],
    }
}

fn load_or_build_cache(
    path: Option<&std::path::Path>,
    extents: FieldExtents,
) -> Result<WeightCache3d> {
    let req = extents.required_cache();
    let req = [req[0].max(1), req[1].max(1), req[2].max(1)];
    if let Some(path) = path {
        if path.exists() {
            let cache = WeightCache3d::load(path)?;
            if cache.covers(req) {
                return Ok(cache);
            }
            eprintln!(
                "cache {} covers {:?}, need {:?}; rebuilding",
                path.display(),
                cache.extents(),
                req
            );
        }
        let cache = WeightCache3d::new(req)?;
        cache.save(path)?;
        return Ok(cache);
    }
    Ok(WeightCache3d::new(req)?)
}

fn report_update(t0: Instant, field: &ShadowField) {
    let dt = t0.elapsed().as_secs_f64();
    let cells = field.geometry().len();
    println!(
        "update: {:.3} ms for {} cells ({:.2e} cells/s)",
        dt * 1e3,
        cells,
        cells as f64 / dt
    );
}
