//! Redirection controller.
//!
//! The non-foveal view carries an uncommitted rotation `theta_offset`
//! (bounded by `theta_max`). It slews toward the rotation requested by
//! steer-to-center and is committed into the physical→virtual mapping in
//! discrete steps, only while perception is suppressed (blink or saccade)
//! or the foveal zone has just moved. A commit of `Δθ` rotates the mapping
//! about the user's physical position, so the user's virtual position does
//! not jump; a user holding their virtual heading then turns physically by
//! `-Δθ`.

use crate::geometry::{
    compose, signed_heading_error, Angle, Pose2, Rect, RigidTransform2, Vec2,
};
use crate::suppression::Window;
use serde::{Deserialize, Serialize};

/// Distance from the tracked-space center inside which steering is idle.
pub const STEER_DEAD_ZONE_M: f64 = 0.05;
/// Distance the user backs up toward the center in a Freeze-Backup reset.
pub const BACKUP_DISTANCE_M: f64 = 0.5;
/// Commits smaller than this are treated as no-ops.
const COMMIT_EPS_DEG: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControllerError {
    #[error("invalid controller config: {0}")]
    InvalidConfig(String),
    #[error("time step must be positive (got {0} ms)")]
    NonPositiveStep(f64),
    #[error("commit of {requested}° exceeds the per-commit cap of {cap}°")]
    CapExceeded { requested: f64, cap: f64 },
    #[error("user at ({0}, {1}) is outside the tracked space")]
    OutsideTrackedSpace(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gating {
    /// Commit only inside suppression windows or on foveal refresh.
    Strict,
    /// Additionally commit the slewed offset continuously between events.
    SmoothPlusSuppression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Steering {
    SteerToCenter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetPolicy {
    TwoToOne,
    FreezeTurn,
    FreezeBackup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    /// Largest rotation the non-foveal view may show, degrees.
    pub theta_max: f64,
    /// Slew rate of the non-foveal offset, degrees per second.
    pub smooth_rate: f64,
    pub per_commit_cap: f64,
    pub gating: Gating,
    pub steering: Steering,
    pub reset_policy: ResetPolicy,
    /// Meters the tracked space is shrunk by for bounds prediction.
    pub boundary_margin: f64,
    /// Seconds of look-ahead for bounds prediction.
    pub prediction_horizon: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            theta_max: 13.5,
            smooth_rate: 6.0,
            per_commit_cap: 5.0,
            gating: Gating::Strict,
            steering: Steering::SteerToCenter,
            reset_policy: ResetPolicy::TwoToOne,
            boundary_margin: 0.2,
            prediction_horizon: 0.5,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        let bad = |m: &str| Err(ControllerError::InvalidConfig(m.to_string()));
        if !(self.theta_max > 0.0 && self.theta_max < 180.0) {
            return bad("theta_max must lie in (0, 180)");
        }
        if !(self.per_commit_cap > 0.0 && self.per_commit_cap <= self.theta_max) {
            return bad("per_commit_cap must lie in (0, theta_max]");
        }
        if !(self.smooth_rate >= 0.0 && self.smooth_rate.is_finite()) {
            return bad("smooth_rate must be non-negative");
        }
        if !(self.boundary_margin >= 0.0 && self.prediction_horizon >= 0.0) {
            return bad("boundary_margin and prediction_horizon must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedirectionState {
    /// Physical→virtual mapping. Its rotation is the committed offset.
    pub mapping: RigidTransform2,
    /// Uncommitted rotation currently shown in the non-foveal view.
    pub theta_offset: Angle,
    /// User physical position at the last commit.
    pub anchor: Vec2,
    pub commits: u64,
    /// Running sum of |Δθ| over commits, degrees.
    pub total_abs_gain: f64,
    /// Start of the suppression window that received the last commit.
    pub last_window_start: Option<f64>,
}

impl Default for RedirectionState {
    fn default() -> Self {
        RedirectionState {
            mapping: RigidTransform2::IDENTITY,
            theta_offset: Angle::ZERO,
            anchor: Vec2::ZERO,
            commits: 0,
            total_abs_gain: 0.0,
            last_window_start: None,
        }
    }
}

impl RedirectionState {
    pub fn theta_acc(&self) -> Angle {
        self.mapping.rotation
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringTarget {
    pub target_heading: Angle,
    pub active: bool,
}

/// Heading from the user toward the center of the tracked space.
pub fn steer_to_center(pose: &Pose2, pts: &Rect) -> Result<SteeringTarget, ControllerError> {
    if !pts.contains(pose.position) {
        return Err(ControllerError::OutsideTrackedSpace(
            pose.position.x,
            pose.position.y,
        ));
    }
    let to_center = pts.center - pose.position;
    Ok(SteeringTarget {
        target_heading: to_center.heading(),
        active: to_center.norm() >= STEER_DEAD_ZONE_M,
    })
}

/// VE rotation that would bring the physical heading onto `target`.
pub fn required_redirection(pose: &Pose2, target: Angle) -> Angle {
    -signed_heading_error(pose.heading, target)
}

fn clamp_abs(v: f64, bound: f64) -> f64 {
    v.clamp(-bound, bound)
}

/// Advances the non-foveal offset by `dt_ms` and decides how much of it to
/// commit now. Does not touch the mapping; pass the result to
/// [`commit_rotation`].
pub fn schedule_gain(
    state: &mut RedirectionState,
    requested: Angle,
    now: f64,
    dt_ms: f64,
    windows: &[Window],
    gaze_moved: bool,
    cfg: &ControllerConfig,
) -> Result<Angle, ControllerError> {
    if !(dt_ms > 0.0) {
        return Err(ControllerError::NonPositiveStep(dt_ms));
    }
    let goal = clamp_abs(requested.degrees(), cfg.theta_max);
    let offset = state.theta_offset.degrees();
    let max_step = cfg.smooth_rate * dt_ms / 1000.0;
    let slewed = offset + clamp_abs(goal - offset, max_step);
    state.theta_offset = Angle::from_degrees(clamp_abs(slewed, cfg.theta_max));

    let window = windows.iter().find(|w| w.contains(now));
    let fresh_window = window.filter(|w| state.last_window_start != Some(w.start));
    let gate_open = match cfg.gating {
        Gating::Strict => gaze_moved || fresh_window.is_some(),
        Gating::SmoothPlusSuppression => true,
    };
    if !gate_open {
        return Ok(Angle::ZERO);
    }

    // Commit only the part of the offset that still points where steering
    // wants to go, so a commit never overshoots the requested heading.
    let offset = state.theta_offset.degrees();
    let req = requested.degrees();
    if offset == 0.0 || offset.signum() != req.signum() {
        return Ok(Angle::ZERO);
    }
    let amount = offset.abs().min(req.abs()).min(cfg.per_commit_cap);
    if amount < COMMIT_EPS_DEG {
        return Ok(Angle::ZERO);
    }
    if let Some(w) = window {
        state.last_window_start = Some(w.start);
    }
    Ok(Angle::from_degrees(amount * offset.signum()))
}

/// Folds `delta` into the mapping as a rotation about the user.
pub fn commit_rotation(
    state: &mut RedirectionState,
    delta: Angle,
    user_physical: Vec2,
    cfg: &ControllerConfig,
) -> Result<(), ControllerError> {
    if delta.abs() > cfg.per_commit_cap + 1e-12 {
        return Err(ControllerError::CapExceeded {
            requested: delta.degrees(),
            cap: cfg.per_commit_cap,
        });
    }
    if delta.degrees() == 0.0 {
        return Ok(());
    }
    rotate_mapping_about(state, user_physical, delta);
    let remaining = state.theta_offset.degrees() - delta.degrees();
    state.theta_offset = Angle::from_degrees(if remaining.signum() == state.theta_offset.degrees().signum() {
        remaining
    } else {
        0.0
    });
    state.anchor = user_physical;
    state.commits += 1;
    state.total_abs_gain += delta.abs();
    Ok(())
}

fn rotate_mapping_about(state: &mut RedirectionState, user_physical: Vec2, delta: Angle) {
    state.mapping = compose(
        &state.mapping,
        &RigidTransform2::rotation_about(user_physical, delta),
    );
}

/// Committed virtual pose. The uncommitted offset only affects rendering.
pub fn to_virtual(physical: &Pose2, state: &RedirectionState) -> Pose2 {
    state.mapping.apply_pose(*physical)
}

pub fn to_physical(virtual_pose: &Pose2, state: &RedirectionState) -> Pose2 {
    state.mapping.inverse().apply_pose(*virtual_pose)
}

/// True when the look-ahead point leaves the margin-shrunk tracked space.
pub fn predict_out_of_bounds(pose: &Pose2, speed: f64, pts: &Rect, cfg: &ControllerConfig) -> bool {
    let ahead = pose.position + pose.heading.unit() * (speed.max(0.0) * cfg.prediction_horizon);
    !pts.shrunk(cfg.boundary_margin).contains(ahead)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetOutcome {
    pub physical_heading_after: Angle,
    pub virtual_heading_after: Angle,
    pub resets_count: u32,
}

/// Re-orients (or repositions) the user while the virtual pose stays frozen.
/// Updates `physical` in place and rebuilds the mapping so that it carries
/// the new physical pose onto the unchanged virtual one.
pub fn perform_reset(
    physical: &mut Pose2,
    virtual_pose: &Pose2,
    state: &mut RedirectionState,
    pts: &Rect,
    policy: ResetPolicy,
    resets_count: &mut u32,
) -> ResetOutcome {
    match policy {
        ResetPolicy::TwoToOne => {
            // The user turns 180° while the scene turns 180° the other way.
            physical.heading = physical.heading + Angle::from_degrees(180.0);
        }
        ResetPolicy::FreezeTurn => {
            physical.heading = (pts.center - physical.position).heading();
        }
        ResetPolicy::FreezeBackup => {
            let to_center = pts.center - physical.position;
            let dist = to_center.norm();
            if dist > 0.0 {
                physical.position =
                    physical.position + to_center * (dist.min(BACKUP_DISTANCE_M) / dist);
            }
        }
    }
    state.mapping = RigidTransform2::between(physical, virtual_pose);
    *resets_count += 1;
    ResetOutcome {
        physical_heading_after: physical.heading,
        virtual_heading_after: virtual_pose.heading,
        resets_count: *resets_count,
    }
}

/// Per-episode controller: config, mapping state and reset bookkeeping.
#[derive(Debug, Clone)]
pub struct Controller {
    pub cfg: ControllerConfig,
    pub state: RedirectionState,
    pub resets: u32,
    /// Cleared after a reset until the prediction goes back in bounds.
    armed: bool,
}

impl Controller {
    pub fn new(cfg: ControllerConfig) -> Result<Self, ControllerError> {
        cfg.validate()?;
        Ok(Controller {
            cfg,
            state: RedirectionState::default(),
            resets: 0,
            armed: true,
        })
    }

    /// Steering request for the current physical pose, zero when idle.
    pub fn requested(&self, physical: &Pose2, pts: &Rect) -> Angle {
        match self.cfg.steering {
            Steering::SteerToCenter => match steer_to_center(physical, pts) {
                Ok(t) if t.active => required_redirection(physical, t.target_heading),
                _ => Angle::ZERO,
            },
        }
    }

    /// One scheduling step; returns the committed rotation (possibly zero).
    pub fn step(
        &mut self,
        physical: &Pose2,
        pts: &Rect,
        now: f64,
        dt_ms: f64,
        windows: &[Window],
        gaze_moved: bool,
    ) -> Result<Angle, ControllerError> {
        let requested = self.requested(physical, pts);
        let delta = schedule_gain(
            &mut self.state,
            requested,
            now,
            dt_ms,
            windows,
            gaze_moved,
            &self.cfg,
        )?;
        commit_rotation(&mut self.state, delta, physical.position, &self.cfg)?;
        Ok(delta)
    }

    /// Resets when the look-ahead leaves bounds and the trigger is armed.
    pub fn check_bounds(
        &mut self,
        physical: &mut Pose2,
        virtual_pose: &Pose2,
        speed: f64,
        pts: &Rect,
    ) -> Option<ResetOutcome> {
        let out = predict_out_of_bounds(physical, speed, pts, &self.cfg);
        if !out {
            self.armed = true;
            return None;
        }
        if !self.armed {
            return None;
        }
        self.armed = false;
        Some(perform_reset(
            physical,
            virtual_pose,
            &mut self.state,
            pts,
            self.cfg.reset_policy,
            &mut self.resets,
        ))
    }
}
