//! Receding-horizon trajectory optimization on a kinematic end-effector.
//!
//! The model is a single integrator on (x, y, z, yaw, pitch) with velocity
//! controls and a fixed roll; the end-effector Jacobian is the identity, and
//! an articulated model can replace [`EeState::pose`] without touching the
//! solver. Stage cost is control regularization plus the visibility barrier
//! and the orientation lock evaluated at the post-step state, with an
//! optional quadratic terminal goal.
//!
//! The solver is plain projected-gradient single shooting with a
//! backtracking line search: steps are accepted only on sufficient decrease,
//! so the returned trajectory never costs more than the warm start. Control
//! bounds are handled by projection (speed ball, per-axis angular rate box).
//!
//! The planner never reads occupancy: all scene information arrives through
//! the immutable field snapshot supplied per receding-horizon step, so a
//! mapping process can republish fields concurrently.

use std::path::Path;
use std::sync::Arc;

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::cost::{
    desired_orientation, orientation_cost_yp, quaternion_error_complement, visibility_cost,
    BarrierParams, OrientationParams, Pose,
};
use crate::error::Error;
use crate::field::{update_shadow_field, FieldExtents, ShadowField};
use crate::geometry::{GridGeometry, WorldPoint};
use crate::occupancy::OccupancyGrid;
use crate::weights::WeightCache3d;
use crate::Result;

/// Velocity command: [vx, vy, vz, yaw_rate, pitch_rate].
pub type Control = SVector<f64, 5>;

/// End-effector state on the planner's chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EeState {
    pub position: WorldPoint,
    pub yaw: f64,
    pub pitch: f64,
}

impl EeState {
    pub fn pose(&self, roll: f64) -> Pose {
        Pose {
            position: self.position,
            orientation: nalgebra::UnitQuaternion::from_euler_angles(roll, self.pitch, self.yaw),
        }
    }

    fn step(&self, u: &Control, dt: f64) -> EeState {
        EeState {
            position: WorldPoint::new(
                self.position.x + dt * u[0],
                self.position.y + dt * u[1],
                self.position.z + dt * u[2],
            ),
            yaw: self.yaw + dt * u[3],
            pitch: self.pitch + dt * u[4],
        }
    }
}

/// States and the controls that produced them; `states.len() == controls.len() + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<EeState>,
    pub controls: Vec<Control>,
}

// ---------------------------------------------------------------------------
// Scenario description (JSON)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// World minimum corner of the grid volume, meters.
    pub min_corner: [f64; 3],
    /// Edge lengths of the grid volume, meters.
    pub size: [f64; 3],
    /// Cells per meter.
    pub resolution: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    pub position: [f64; 3],
    #[serde(default)]
    pub yaw: f64,
    #[serde(default)]
    pub pitch: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSpec {
    pub steps: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    /// Euclidean bound on linear velocity, m/s.
    pub max_speed: f64,
    /// Per-axis bound on yaw/pitch rate, rad/s.
    pub max_angular_rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub weight: f64,
    pub target: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSpec {
    /// Control regularization (isotropic R).
    pub input: f64,
    /// Multiplier on the visibility barrier.
    pub visibility: f64,
    /// Multiplier on the orientation lock.
    pub orientation: f64,
    #[serde(default)]
    pub goal: Option<GoalSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrientationSpec {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub roll: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    /// Window extents above the light, meters per axis.
    pub extent_pos: [f64; 3],
    /// Window extents below the light, meters per axis.
    pub extent_neg: [f64; 3],
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub cost_tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            max_iters: 120,
            grad_tol: 1e-6,
            cost_tol: 1e-9,
        }
    }
}

/// Full description of one planning problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub grid: GridSpec,
    pub scene: Vec<BoxSpec>,
    pub light: [f64; 3],
    pub start: StartSpec,
    pub horizon: HorizonSpec,
    pub bounds: BoundsSpec,
    pub weights: WeightsSpec,
    pub barrier: BarrierSpec,
    pub orientation: OrientationSpec,
    pub field: FieldSpec,
    pub rh_steps: usize,
    #[serde(default)]
    pub solver: SolverSpec,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon.steps == 0 || !(self.horizon.dt > 0.0) {
            return Err(Error::Scenario(format!(
                "horizon must have steps >= 1 and dt > 0, got {} / {}",
                self.horizon.steps, self.horizon.dt
            )));
        }
        if !(self.bounds.max_speed > 0.0) || !(self.bounds.max_angular_rate > 0.0) {
            return Err(Error::Scenario("control bounds must be positive".into()));
        }
        self.barrier_params()?;
        self.orientation_params()?;
        if self.weights.input < 0.0 {
            return Err(Error::Scenario("weights.input must be >= 0".into()));
        }
        Ok(())
    }

    pub fn barrier_params(&self) -> Result<BarrierParams> {
        BarrierParams::new(self.barrier.delta, self.weights.visibility)
    }

    pub fn orientation_params(&self) -> Result<OrientationParams> {
        OrientationParams::new(
            self.orientation.alpha,
            self.orientation.beta,
            self.orientation.epsilon,
            self.orientation.roll,
            self.weights.orientation,
        )
    }

    pub fn light_world(&self) -> WorldPoint {
        WorldPoint::new(self.light[0], self.light[1], self.light[2])
    }

    pub fn start_state(&self) -> EeState {
        EeState {
            position: WorldPoint::new(
                self.start.position[0],
                self.start.position[1],
                self.start.position[2],
            ),
            yaw: self.start.yaw,
            pitch: self.start.pitch,
        }
    }

    pub fn grid_geometry(&self) -> Result<GridGeometry> {
        let res = self.grid.resolution;
        if !(res > 0.0) {
            return Err(Error::Scenario(format!("grid.resolution must be > 0, got {res}")));
        }
        let mut dims = [0usize; 3];
        let mut origin = [0.0f64; 3];
        for a in 0..3 {
            let cells = (self.grid.size[a] * res).round() as i64;
            if cells < 1 {
                return Err(Error::Scenario(format!(
                    "grid.size[{a}] = {} is under one cell",
                    self.grid.size[a]
                )));
            }
            dims[a] = cells as usize;
            origin[a] = self.grid.min_corner[a] + 0.5 / res;
        }
        GridGeometry::new(dims, res, WorldPoint::new(origin[0], origin[1], origin[2]))
    }

    /// Rasterize the scene boxes into a fresh occupancy grid.
    pub fn build_occupancy(&self) -> Result<OccupancyGrid> {
        let mut occ = OccupancyGrid::new(self.grid_geometry()?, 0.0)?;
        for b in &self.scene {
            occ.add_box(
                WorldPoint::new(b.min[0], b.min[1], b.min[2]),
                WorldPoint::new(b.max[0], b.max[1], b.max[2]),
                b.probability,
            )?;
        }
        Ok(occ)
    }

    pub fn field_extents(&self) -> Result<FieldExtents> {
        let res = self.grid.resolution;
        let to_cells = |m: f64| -> usize { (m * res).round().max(0.0) as usize };
        Ok(FieldExtents {
            pos: [
                to_cells(self.field.extent_pos[0]),
                to_cells(self.field.extent_pos[1]),
                to_cells(self.field.extent_pos[2]),
            ],
            neg: [
                to_cells(self.field.extent_neg[0]),
                to_cells(self.field.extent_neg[1]),
                to_cells(self.field.extent_neg[2]),
            ],
        })
    }

    /// Weight cache sized for this scenario's field window.
    pub fn build_weight_cache(&self) -> Result<WeightCache3d> {
        let req = self.field_extents()?.required_cache();
        WeightCache3d::new([req[0].max(1), req[1].max(1), req[2].max(1)])
    }

    pub fn build_field(&self, occ: &OccupancyGrid, cache: &WeightCache3d) -> Result<ShadowField> {
        update_shadow_field(
            occ,
            self.light_world(),
            self.field_extents()?,
            self.field.threshold,
            cache,
        )
    }
}

// ---------------------------------------------------------------------------
// Rollout and cost
// ---------------------------------------------------------------------------

/// Forward Euler rollout. Controls must respect the scenario bounds.
pub fn rollout(
    start: EeState,
    controls: &[Control],
    dt: f64,
    bounds: &BoundsSpec,
) -> Result<Trajectory> {
    const SLACK: f64 = 1e-9;
    for (k, u) in controls.iter().enumerate() {
        let speed = u.fixed_rows::<3>(0).norm();
        if speed > bounds.max_speed + SLACK
            || u[3].abs() > bounds.max_angular_rate + SLACK
            || u[4].abs() > bounds.max_angular_rate + SLACK
        {
            return Err(Error::InvalidParameter(format!(
                "control {k} violates bounds (speed {speed:.4}, rates {:.4}/{:.4})",
                u[3], u[4]
            )));
        }
    }
    Ok(rollout_unchecked(start, controls, dt))
}

fn rollout_unchecked(start: EeState, controls: &[Control], dt: f64) -> Trajectory {
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(start);
    for u in controls {
        let next = states.last().unwrap().step(u, dt);
        states.push(next);
    }
    Trajectory {
        states,
        controls: controls.to_vec(),
    }
}

/// Per-step cost terms, already scaled by dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCost {
    pub input: f64,
    pub visibility: f64,
    pub orientation: f64,
}

/// Cost of a trajectory with its per-term decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub total: f64,
    pub input: f64,
    pub visibility: f64,
    pub orientation: f64,
    pub goal: f64,
    pub per_step: Vec<StepCost>,
}

/// Everything needed to evaluate the stage cost against one field snapshot.
pub struct CostModel<'a> {
    pub dt: f64,
    pub input_weight: f64,
    pub barrier: BarrierParams,
    pub orientation: OrientationParams,
    pub light: WorldPoint,
    pub goal: Option<GoalSpec>,
    pub field: &'a ShadowField,
}

impl<'a> CostModel<'a> {
    pub fn new(scenario: &Scenario, field: &'a ShadowField) -> Result<Self> {
        Ok(Self {
            dt: scenario.horizon.dt,
            input_weight: scenario.weights.input,
            barrier: scenario.barrier_params()?,
            orientation: scenario.orientation_params()?,
            light: scenario.light_world(),
            goal: scenario.weights.goal.clone(),
            field: scenario_field_check(scenario, field)?,
        })
    }

    fn state_cost(&self, s: &EeState) -> (f64, f64) {
        let (vis, _) = visibility_cost(self.field, s.position, &self.barrier);
        let orient = orientation_cost_yp(s.position, s.yaw, s.pitch, self.light, &self.orientation);
        (vis, orient)
    }

    fn goal_cost(&self, s: &EeState) -> f64 {
        match &self.goal {
            Some(g) => {
                let d = s.position - WorldPoint::new(g.target[0], g.target[1], g.target[2]);
                g.weight * d.norm_squared()
            }
            None => 0.0,
        }
    }

    /// Gradient of the state-dependent stage cost on the (x,y,z,yaw,pitch)
    /// chart. The visibility part chains analytically through the
    /// interpolant; the orientation part uses central differences.
    fn state_cost_grad(&self, s: &EeState) -> SVector<f64, 5> {
        const H: f64 = 1e-6;
        let (_, vis_grad) = visibility_cost(self.field, s.position, &self.barrier);
        let mut g = SVector::<f64, 5>::zeros();
        g[0] = vis_grad.x;
        g[1] = vis_grad.y;
        g[2] = vis_grad.z;
        let eval = |s: &EeState| -> f64 {
            orientation_cost_yp(s.position, s.yaw, s.pitch, self.light, &self.orientation)
        };
        for a in 0..5 {
            let mut plus = *s;
            let mut minus = *s;
            match a {
                0 => {
                    plus.position.x += H;
                    minus.position.x -= H;
                }
                1 => {
                    plus.position.y += H;
                    minus.position.y -= H;
                }
                2 => {
                    plus.position.z += H;
                    minus.position.z -= H;
                }
                3 => {
                    plus.yaw += H;
                    minus.yaw -= H;
                }
                _ => {
                    plus.pitch += H;
                    minus.pitch -= H;
                }
            }
            g[a] += (eval(&plus) - eval(&minus)) / (2.0 * H);
        }
        g
    }

    fn goal_grad(&self, s: &EeState) -> SVector<f64, 5> {
        let mut g = SVector::<f64, 5>::zeros();
        if let Some(goal) = &self.goal {
            let d = s.position - WorldPoint::new(goal.target[0], goal.target[1], goal.target[2]);
            g[0] = 2.0 * goal.weight * d.x;
            g[1] = 2.0 * goal.weight * d.y;
            g[2] = 2.0 * goal.weight * d.z;
        }
        g
    }
}

fn scenario_field_check<'a>(
    _scenario: &Scenario,
    field: &'a ShadowField,
) -> Result<&'a ShadowField> {
    // Sampling clamps at the window boundary, so any published field is
    // usable; the hook exists to keep construction fallible and uniform.
    Ok(field)
}

/// Total cost with per-term breakdown; the breakdown sums to the total.
pub fn total_cost(traj: &Trajectory, model: &CostModel<'_>) -> CostReport {
    let dt = model.dt;
    let mut per_step = Vec::with_capacity(traj.controls.len());
    let mut input_sum = 0.0;
    let mut vis_sum = 0.0;
    let mut orient_sum = 0.0;
    for (k, u) in traj.controls.iter().enumerate() {
        let input = model.input_weight * u.norm_squared() * dt;
        let (vis, orient) = model.state_cost(&traj.states[k + 1]);
        let step = StepCost {
            input,
            visibility: vis * dt,
            orientation: orient * dt,
        };
        input_sum += step.input;
        vis_sum += step.visibility;
        orient_sum += step.orientation;
        per_step.push(step);
    }
    let goal = model.goal_cost(traj.states.last().expect("rollout has states"));
    CostReport {
        total: input_sum + vis_sum + orient_sum + goal,
        input: input_sum,
        visibility: vis_sum,
        orientation: orient_sum,
        goal,
        per_step,
    }
}

/// Shooting gradient of the total cost with respect to the control sequence.
pub fn cost_gradient(traj: &Trajectory, model: &CostModel<'_>) -> Vec<Control> {
    let dt = model.dt;
    let n = traj.controls.len();
    let mut grads = vec![Control::zeros(); n];
    let mut acc = model.goal_grad(traj.states.last().expect("rollout has states"));
    for k in (0..n).rev() {
        acc += dt * model.state_cost_grad(&traj.states[k + 1]);
        grads[k] = dt * (2.0 * model.input_weight * traj.controls[k] + acc);
    }
    grads
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientNorm,
    CostDecrease,
    MaxIterations,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub trajectory: Trajectory,
    pub cost: CostReport,
    pub iterations: usize,
    pub termination: Termination,
}

fn project(mut u: Control, bounds: &BoundsSpec) -> Control {
    let speed = u.fixed_rows::<3>(0).norm();
    if speed > bounds.max_speed {
        let scale = bounds.max_speed / speed;
        u[0] *= scale;
        u[1] *= scale;
        u[2] *= scale;
    }
    u[3] = u[3].clamp(-bounds.max_angular_rate, bounds.max_angular_rate);
    u[4] = u[4].clamp(-bounds.max_angular_rate, bounds.max_angular_rate);
    u
}

/// Solve the scenario's horizon from its start state.
pub fn solve(
    scenario: &Scenario,
    field: &ShadowField,
    warm_start: Option<&[Control]>,
) -> Result<SolveResult> {
    solve_from(scenario.start_state(), scenario, field, warm_start)
}

/// Solve the scenario's horizon from an arbitrary start state.
pub fn solve_from(
    start: EeState,
    scenario: &Scenario,
    field: &ShadowField,
    warm_start: Option<&[Control]>,
) -> Result<SolveResult> {
    let model = CostModel::new(scenario, field)?;
    let n = scenario.horizon.steps;
    let bounds = &scenario.bounds;
    let solver = &scenario.solver;

    let mut controls: Vec<Control> = match warm_start {
        Some(w) if w.len() == n => w.iter().map(|u| project(*u, bounds)).collect(),
        Some(w) => {
            return Err(Error::InvalidParameter(format!(
                "warm start has {} controls, horizon needs {n}",
                w.len()
            )))
        }
        None => vec![Control::zeros(); n],
    };

    let evaluate = |controls: &[Control]| -> Result<(Trajectory, CostReport)> {
        let traj = rollout_unchecked(start, controls, model.dt);
        let report = total_cost(&traj, &model);
        if !report.total.is_finite() {
            return Err(Error::NonFiniteCost);
        }
        Ok((traj, report))
    };

    let (mut traj, mut report) = evaluate(&controls)?;
    let mut alpha = 1.0f64;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    for _ in 0..solver.max_iters {
        iterations += 1;
        let grads = cost_gradient(&traj, &model);
        let grad_norm = grads.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
        if grad_norm < solver.grad_tol {
            termination = Termination::GradientNorm;
            break;
        }

        // Backtracking on the projected step; accept on sufficient decrease
        // relative to the actual displacement.
        let mut step = alpha;
        let mut accepted = None;
        while step >= 1e-14 {
            let candidate: Vec<Control> = controls
                .iter()
                .zip(&grads)
                .map(|(u, g)| project(u - step * g, bounds))
                .collect();
            let displacement: f64 = candidate
                .iter()
                .zip(&controls)
                .map(|(a, b)| (a - b).norm_squared())
                .sum();
            if displacement == 0.0 {
                break; // pinned at the bounds along -grad
            }
            let (cand_traj, cand_report) = evaluate(&candidate)?;
            if cand_report.total <= report.total - 1e-4 * displacement / step {
                accepted = Some((candidate, cand_traj, cand_report));
                break;
            }
            step *= 0.5;
        }

        match accepted {
            Some((new_controls, new_traj, new_report)) => {
                let improvement = report.total - new_report.total;
                controls = new_controls;
                traj = new_traj;
                report = new_report;
                alpha = (step * 2.0).min(1.0);
                if improvement < solver.cost_tol {
                    termination = Termination::CostDecrease;
                    break;
                }
            }
            None => {
                termination = Termination::Stalled;
                break;
            }
        }
    }

    Ok(SolveResult {
        trajectory: traj,
        cost: report,
        iterations,
        termination,
    })
}

// ---------------------------------------------------------------------------
// Receding horizon
// ---------------------------------------------------------------------------

/// One executed step of the receding-horizon loop.
#[derive(Debug, Clone, Copy)]
pub struct RhLogRow {
    pub step: usize,
    pub state: EeState,
    /// Field value at the executed state.
    pub field_value: f64,
    /// Orientation error complement at the executed state.
    pub error_complement: f64,
    pub cost_total: f64,
    pub cost_visibility: f64,
    pub cost_orientation: f64,
    pub cost_input: f64,
}

#[derive(Debug, Clone)]
pub struct RhResult {
    pub executed: Trajectory,
    pub logs: Vec<RhLogRow>,
}

/// Run `rh_steps` solve/apply cycles, warm-starting each solve with the
/// previous solution shifted one step. The provider supplies the field
/// snapshot for each step (a constant snapshot for static scenes).
pub fn receding_horizon<F>(scenario: &Scenario, mut field_provider: F) -> Result<RhResult>
where
    F: FnMut(usize) -> Arc<ShadowField>,
{
    let dt = scenario.horizon.dt;
    let roll = scenario.orientation.roll;
    let mut state = scenario.start_state();
    let mut warm: Option<Vec<Control>> = None;
    let mut executed_states = vec![state];
    let mut executed_controls = Vec::with_capacity(scenario.rh_steps);
    let mut logs = Vec::with_capacity(scenario.rh_steps);

    for step in 0..scenario.rh_steps {
        let field = field_provider(step);
        let sol = solve_from(state, scenario, &field, warm.as_deref())?;
        let u0 = sol.trajectory.controls[0];
        state = state.step(&u0, dt);
        executed_states.push(state);
        executed_controls.push(u0);

        let e_c = match desired_orientation(state.position, scenario.light_world(), roll) {
            Ok(desired) => {
                quaternion_error_complement(&state.pose(roll).orientation, &desired)
            }
            Err(_) => 1.0, // on top of the target: lock is undefined, count as held
        };
        logs.push(RhLogRow {
            step,
            state,
            field_value: field.sample(state.position),
            error_complement: e_c,
            cost_total: sol.cost.total,
            cost_visibility: sol.cost.visibility,
            cost_orientation: sol.cost.orientation,
            cost_input: sol.cost.input,
        });

        // Shift the horizon: drop the applied control, repeat the last.
        let mut shifted = sol.trajectory.controls.clone();
        shifted.remove(0);
        if let Some(last) = shifted.last().copied() {
            shifted.push(last);
        } else {
            shifted.push(Control::zeros());
        }
        warm = Some(shifted);
    }

    Ok(RhResult {
        executed: Trajectory {
            states: executed_states,
            controls: executed_controls,
        },
        logs,
    })
}

/// CSV log: `step,x,y,z,yaw,pitch,F,ec,cost_total,cost_vis,cost_orient,cost_input`.
pub fn logs_to_csv(logs: &[RhLogRow]) -> String {
    let mut out =
        String::from("step,x,y,z,yaw,pitch,F,ec,cost_total,cost_vis,cost_orient,cost_input\n");
    for row in logs {
        let s = &row.state;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.step,
            s.position.x,
            s.position.y,
            s.position.z,
            s.yaw,
            s.pitch,
            row.field_value,
            row.error_complement,
            row.cost_total,
            row.cost_visibility,
            row.cost_orientation,
            row.cost_input,
        ));
    }
    out
}

/// CSV trajectory: one row per state with the control applied at it (zeros
/// on the final state).
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::from("step,x,y,z,yaw,pitch,vx,vy,vz,vyaw,vpitch\n");
    for (k, s) in traj.states.iter().enumerate() {
        let u = traj.controls.get(k).copied().unwrap_or_else(Control::zeros);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            k, s.position.x, s.position.y, s.position.z, s.yaw, s.pitch, u[0], u[1], u[2], u[3],
            u[4],
        ));
    }
    out
}
