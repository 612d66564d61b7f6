//! Visibility and orientation cost terms.
//!
//! Visibility: the planner maximizes the log-likelihood of line of sight by
//! penalizing `-ln F(x)` along the trajectory. Sampled field values can reach
//! zero, so the log is replaced by a relaxed log barrier: the exact `-ln z`
//! above a relaxation threshold `delta` and a C1 quadratic extension below
//! it, which keeps shooting methods finite for any field value. A pleasant
//! side effect is obstacle repulsion: occupied cells carry near-zero field
//! values, so the barrier pushes trajectories out of them without a separate
//! collision term.
//!
//! Orientation: the camera boresight (body +x) is locked onto the target by
//! penalizing the complement of the normalized quaternion error between the
//! current orientation and the orientation that looks straight at the light.
//! The penalty is scaled by a logit of the error complement, floored at
//! `alpha / beta`, so the lock stiffens progressively as it engages and
//! sudden tracker jumps do not yank the whole-body solution.

use nalgebra::UnitQuaternion;

use crate::error::Error;
use crate::field::ShadowField;
use crate::geometry::{WorldPoint, WorldVector};
use crate::Result;

/// Relaxed log-barrier parameters.
#[derive(Debug, Clone, Copy)]
pub struct BarrierParams {
    /// Relaxation threshold in (0, 1): above it the barrier is exactly -ln z.
    pub delta: f64,
    /// Nonnegative multiplier on the visibility term.
    pub weight: f64,
}

impl BarrierParams {
    pub fn new(delta: f64, weight: f64) -> Result<Self> {
        if !(0.0 < delta && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "barrier delta must be in (0, 1), got {delta}"
            )));
        }
        if !(weight >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "barrier weight must be >= 0, got {weight}"
            )));
        }
        Ok(Self { delta, weight })
    }
}

/// Orientation-lock parameters.
#[derive(Debug, Clone, Copy)]
pub struct OrientationParams {
    /// Floor of the logit scaling, in (0, 1).
    pub alpha: f64,
    /// Nonzero divisor of the scaling.
    pub beta: f64,
    /// Positive multiplier inside the logit.
    pub epsilon: f64,
    /// Fixed roll angle of the camera frame; yaw and pitch are determined by
    /// the target direction.
    pub roll: f64,
    /// Nonnegative multiplier on the orientation term.
    pub weight: f64,
}

impl OrientationParams {
    pub fn new(alpha: f64, beta: f64, epsilon: f64, roll: f64, weight: f64) -> Result<Self> {
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be in (0, 1), got {alpha}"
            )));
        }
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be nonzero and finite, got {beta}"
            )));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be > 0, got {epsilon}"
            )));
        }
        if !(weight >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "orientation weight must be >= 0, got {weight}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            epsilon,
            roll,
            weight,
        })
    }
}

/// A camera-carrying frame: position plus unit orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: WorldPoint,
    pub orientation: UnitQuaternion<f64>,
}

/// Relaxed log barrier and its derivative.
///
/// `-ln z` for `z >= delta`; below, the quadratic extension
/// `0.5 * (((z - 2 delta) / delta)^2 - 1) - ln delta`. Value and derivative
/// are continuous at the switch.
pub fn relaxed_log_barrier(z: f64, delta: f64) -> (f64, f64) {
    if z >= delta {
        (-z.ln(), -1.0 / z)
    } else {
        let s = (z - 2.0 * delta) / delta;
        (0.5 * (s * s - 1.0) - delta.ln(), s / delta)
    }
}

/// Barrier applied to the sampled field at a world point, with the gradient
/// chained through the interpolant.
pub fn visibility_cost(
    field: &ShadowField,
    position: WorldPoint,
    params: &BarrierParams,
) -> (f64, WorldVector) {
    let (value, field_grad) = field.sample_with_gradient(position);
    let (b, db) = relaxed_log_barrier(value, params.delta);
    (params.weight * b, field_grad * (params.weight * db))
}

/// Orientation that points the body +x axis from `p_ee` at `p_light`, with
/// the requested roll about the boresight.
///
/// Yaw is `atan2(V_y, V_x)` and pitch `-atan2(V_z, sqrt(V_x^2 + V_y^2))` of
/// the target direction `V`; the quaternion composes yaw-pitch-roll (Z-Y-X
/// intrinsic).
pub fn desired_orientation(
    p_ee: WorldPoint,
    p_light: WorldPoint,
    roll: f64,
) -> Result<UnitQuaternion<f64>> {
    let v = p_light - p_ee;
    if v.norm() < 1e-12 {
        return Err(Error::InvalidParameter(
            "cannot orient toward a coincident target".into(),
        ));
    }
    let yaw = v.y.atan2(v.x);
    let pitch = -v.z.atan2((v.x * v.x + v.y * v.y).sqrt());
    Ok(UnitQuaternion::from_euler_angles(roll, pitch, yaw))
}

/// Complement of the normalized quaternion error: 1 at perfect alignment, 0
/// at a half-turn. The error is the geodesic rotation angle over pi, which is
/// invariant to quaternion sign flips.
pub fn quaternion_error_complement(
    current: &UnitQuaternion<f64>,
    desired: &UnitQuaternion<f64>,
) -> f64 {
    1.0 - current.angle_to(desired) / std::f64::consts::PI
}

const COMPLEMENT_CLAMP: f64 = 1e-6;

/// Progressive-lock scaling: `max(alpha, ln(eps * e / (1 - e))) / beta`,
/// with the complement clamped away from 0 and 1 so the logit stays finite.
pub fn gamma_scale(error_complement: f64, params: &OrientationParams) -> f64 {
    let e = error_complement.clamp(COMPLEMENT_CLAMP, 1.0 - COMPLEMENT_CLAMP);
    let logit = (params.epsilon * e / (1.0 - e)).ln();
    params.alpha.max(logit) / params.beta
}

/// Orientation-lock cost of a pose: `weight * gamma(e) * (1 - e)^2` where
/// `e` is the error complement against the target-locked orientation.
/// Zero iff the pose is perfectly locked.
pub fn orientation_cost(pose: &Pose, p_light: WorldPoint, params: &OrientationParams) -> f64 {
    let Ok(desired) = desired_orientation(pose.position, p_light, params.roll) else {
        // Sitting exactly on the target leaves the lock direction undefined;
        // the term vanishes rather than erroring inside an optimizer loop.
        return 0.0;
    };
    let e = quaternion_error_complement(&pose.orientation, &desired);
    let miss = 1.0 - e;
    params.weight * gamma_scale(e, params) * miss * miss
}

/// Orientation cost on the planner's (yaw, pitch) chart with fixed roll.
pub fn orientation_cost_yp(
    position: WorldPoint,
    yaw: f64,
    pitch: f64,
    p_light: WorldPoint,
    params: &OrientationParams,
) -> f64 {
    let pose = Pose {
        position,
        orientation: UnitQuaternion::from_euler_angles(params.roll, pitch, yaw),
    };
    orientation_cost(&pose, p_light, params)
}
