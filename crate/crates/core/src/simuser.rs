//! Simulated participant: a waypoint-following walker that holds its
//! virtual path, and a seeded eye model producing fixations, saccades and
//! blinks.

use crate::geometry::{signed_heading_error, Angle, Pose2, RigidTransform2, Vec2};
use crate::suppression::GazeSample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum SimUserError {
    #[error("invalid walker config: {0}")]
    InvalidWalker(String),
    #[error("invalid gaze model: {0}")]
    InvalidGaze(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("time step must be positive (got {0})")]
    NonPositiveStep(f64),
    #[error("path file: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkerConfig {
    /// Meters per second.
    pub speed: f64,
    /// Proportional heading gain toward the current waypoint, 1/s.
    pub heading_gain: f64,
    pub waypoint_radius: f64,
}

impl Default for WalkerConfig {
    fn default() -> Self {
        WalkerConfig {
            speed: DEFAULT_WALK_SPEED,
            heading_gain: 4.0,
            waypoint_radius: 0.3,
        }
    }
}

/// Default walking speed, m/s. Slow enough that the turning radius
/// produced by a 6°/s gain budget fits a 4 x 4 m space.
pub const DEFAULT_WALK_SPEED: f64 = 0.08;

impl WalkerConfig {
    pub fn validate(&self) -> Result<(), SimUserError> {
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(SimUserError::InvalidWalker("speed must be positive".into()));
        }
        if !(self.heading_gain > 0.0 && self.heading_gain.is_finite()) {
            return Err(SimUserError::InvalidWalker(
                "heading_gain must be positive".into(),
            ));
        }
        if !(self.waypoint_radius >= 0.0) {
            return Err(SimUserError::InvalidWalker(
                "waypoint_radius must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualPath {
    pub waypoints: Vec<Vec2>,
}

impl VirtualPath {
    pub fn new(waypoints: Vec<Vec2>) -> Result<Self, SimUserError> {
        if waypoints.len() < 2 {
            return Err(SimUserError::InvalidPath(
                "need at least two waypoints".into(),
            ));
        }
        if waypoints.iter().any(|w| !w.is_finite()) {
            return Err(SimUserError::InvalidPath("non-finite waypoint".into()));
        }
        if waypoints.windows(2).any(|p| p[0] == p[1]) {
            return Err(SimUserError::InvalidPath(
                "consecutive waypoints must differ".into(),
            ));
        }
        Ok(VirtualPath { waypoints })
    }

    /// Straight line of `length` meters from `start` along `heading`.
    pub fn straight(start: Vec2, heading: Angle, length: f64) -> Result<Self, SimUserError> {
        if !(length > 0.0) {
            return Err(SimUserError::InvalidPath("length must be positive".into()));
        }
        VirtualPath::new(vec![start, start + heading.unit() * length])
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|p| p[0].distance(p[1])).sum()
    }

    /// Reads an `x,y` CSV with a header row.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, SimUserError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut pts = Vec::new();
        for rec in rdr.deserialize::<(f64, f64)>() {
            let (x, y) = rec?;
            pts.push(Vec2::new(x, y));
        }
        VirtualPath::new(pts)
    }
}

/// Progress along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WalkerState {
    /// Index of the waypoint currently steered toward.
    pub target: usize,
    pub done: bool,
}

impl WalkerState {
    pub fn new() -> Self {
        WalkerState {
            target: 1,
            done: false,
        }
    }
}

/// Result of one walker step, in virtual coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerStep {
    pub heading: Angle,
    pub displacement: Vec2,
    /// Path exhausted; no motion was produced.
    pub complete: bool,
}

fn passed_end(pos: Vec2, from: Vec2, to: Vec2) -> bool {
    let seg = to - from;
    (pos - from).dot(seg) >= seg.dot(seg)
}

/// Advances the walker by `dt_s` seconds along `path` in virtual space.
pub fn step_walker(
    state: &mut WalkerState,
    virtual_pose: &Pose2,
    path: &VirtualPath,
    dt_s: f64,
    cfg: &WalkerConfig,
) -> Result<WalkerStep, SimUserError> {
    if !(dt_s > 0.0) {
        return Err(SimUserError::NonPositiveStep(dt_s));
    }
    let wps = &path.waypoints;
    let pos = virtual_pose.position;
    while !state.done {
        let last = state.target + 1 == wps.len();
        let reached = if last {
            passed_end(pos, wps[state.target - 1], wps[state.target])
        } else {
            pos.distance(wps[state.target]) <= cfg.waypoint_radius
        };
        if !reached {
            break;
        }
        if last {
            state.done = true;
        } else {
            state.target += 1;
        }
    }
    if state.done {
        return Ok(WalkerStep {
            heading: virtual_pose.heading,
            displacement: Vec2::ZERO,
            complete: true,
        });
    }
    let desired = (wps[state.target] - pos).heading();
    let err = signed_heading_error(virtual_pose.heading, desired).degrees();
    let turn = err * (cfg.heading_gain * dt_s).min(1.0);
    let heading = virtual_pose.heading + Angle::from_degrees(turn);
    Ok(WalkerStep {
        heading,
        displacement: heading.unit() * (cfg.speed * dt_s),
        complete: false,
    })
}

/// Physical displacement corresponding to a virtual one under the
/// physical→virtual `mapping`.
pub fn physical_displacement(mapping: &RigidTransform2, virtual_disp: Vec2) -> Vec2 {
    mapping.inverse().apply_vector(virtual_disp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GazeModelConfig {
    /// Blinks per minute.
    pub blink_rate: f64,
    /// Blink duration range, ms.
    pub blink_duration: (f64, f64),
    /// Fixation duration range, ms.
    pub fixation_duration: (f64, f64),
    /// Saccade duration range, ms.
    pub saccade_duration: (f64, f64),
    /// Degrees per second.
    pub saccade_peak_velocity: f64,
    /// Hz.
    pub sample_rate: f64,
    pub seed: u64,
}

impl Default for GazeModelConfig {
    fn default() -> Self {
        GazeModelConfig {
            blink_rate: 17.0,
            blink_duration: (100.0, 400.0),
            fixation_duration: (200.0, 800.0),
            saccade_duration: (20.0, 60.0),
            saccade_peak_velocity: 600.0,
            sample_rate: 120.0,
            seed: 0,
        }
    }
}

impl GazeModelConfig {
    pub fn validate(&self) -> Result<(), SimUserError> {
        let bad = |m: &str| Err(SimUserError::InvalidGaze(m.to_string()));
        let range_ok = |(lo, hi): (f64, f64)| lo > 0.0 && hi >= lo && hi.is_finite();
        if !(self.blink_rate >= 0.0 && self.blink_rate.is_finite()) {
            return bad("blink_rate must be non-negative");
        }
        if !(range_ok(self.blink_duration)
            && range_ok(self.fixation_duration)
            && range_ok(self.saccade_duration))
        {
            return bad("duration ranges must satisfy 0 < lo <= hi");
        }
        if !(self.saccade_peak_velocity > 0.0 && self.saccade_peak_velocity <= 900.0) {
            return bad("saccade_peak_velocity must lie in (0, 900]");
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return bad("sample_rate must be positive");
        }
        Ok(())
    }
}

const FIXATION_JITTER_DEG: f64 = 0.1;
const YAW_LIMIT_DEG: f64 = 40.0;
const PITCH_LIMIT_DEG: f64 = 25.0;

#[derive(Debug, Clone, Copy)]
enum EyeMode {
    Fixation {
        center: (f64, f64),
        until: f64,
    },
    Saccade {
        from: (f64, f64),
        /// Degrees per millisecond.
        velocity: (f64, f64),
        start: f64,
        until: f64,
    },
}

/// Seeded eye model. Blink onsets form a homogeneous Poisson process;
/// fixations alternate with constant-velocity saccades.
#[derive(Debug, Clone)]
pub struct GazeGenerator {
    cfg: GazeModelConfig,
    rng: ChaCha8Rng,
    next_index: u64,
    mode: EyeMode,
    next_blink: f64,
    blink: Option<(f64, f64)>,
    aim: Option<(f64, f64)>,
    pub blinks_started: u64,
    pub saccades_started: u64,
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

impl GazeGenerator {
    pub fn new(cfg: GazeModelConfig) -> Result<Self, SimUserError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let first_fix = uniform(&mut rng, cfg.fixation_duration);
        let mut g = GazeGenerator {
            cfg,
            rng,
            next_index: 0,
            mode: EyeMode::Fixation {
                center: (0.0, 0.0),
                until: first_fix,
            },
            next_blink: f64::INFINITY,
            blink: None,
            aim: None,
            blinks_started: 0,
            saccades_started: 0,
        };
        g.next_blink = g.blink_gap();
        Ok(g)
    }

    pub fn config(&self) -> &GazeModelConfig {
        &self.cfg
    }

    fn blink_gap(&mut self) -> f64 {
        if self.cfg.blink_rate <= 0.0 {
            return f64::INFINITY;
        }
        let per_ms = self.cfg.blink_rate / 60_000.0;
        Exp::new(per_ms)
            .expect("positive blink rate")
            .sample(&mut self.rng)
    }

    /// True when the next saccade has no direction assigned yet.
    pub fn wants_aim(&self) -> bool {
        self.aim.is_none()
    }

    /// Direction (head-relative yaw, pitch) for the next saccade.
    pub fn aim_at(&mut self, yaw: f64, pitch: f64) {
        self.aim = Some((yaw, pitch));
    }

    fn sample_period(&self) -> f64 {
        1000.0 / self.cfg.sample_rate
    }

    fn advance_eye(&mut self, t: f64) {
        loop {
            match self.mode {
                EyeMode::Fixation { center, until } if until <= t => {
                    let dur = uniform(&mut self.rng, self.cfg.saccade_duration);
                    let amp = self.cfg.saccade_peak_velocity * dur / 1000.0;
                    let aim = self.aim.take().unwrap_or_else(|| {
                        (
                            self.rng.random_range(-YAW_LIMIT_DEG..YAW_LIMIT_DEG),
                            self.rng.random_range(-PITCH_LIMIT_DEG..PITCH_LIMIT_DEG),
                        )
                    });
                    let mut dir = (aim.0 - center.0, aim.1 - center.1);
                    let land = |d: (f64, f64)| {
                        let n = d.0.hypot(d.1).max(1e-9);
                        (center.0 + d.0 / n * amp, center.1 + d.1 / n * amp)
                    };
                    let (ly, lp) = land(dir);
                    if ly.abs() > YAW_LIMIT_DEG || lp.abs() > PITCH_LIMIT_DEG || dir == (0.0, 0.0) {
                        dir = (-center.0, -center.1);
                        if dir == (0.0, 0.0) {
                            dir = (1.0, 0.0);
                        }
                    }
                    let n = dir.0.hypot(dir.1);
                    let speed = self.cfg.saccade_peak_velocity / 1000.0;
                    self.mode = EyeMode::Saccade {
                        from: center,
                        velocity: (dir.0 / n * speed, dir.1 / n * speed),
                        start: until,
                        until: until + dur,
                    };
                    self.saccades_started += 1;
                }
                EyeMode::Saccade {
                    from,
                    velocity,
                    start,
                    until,
                } if until <= t => {
                    let d = until - start;
                    let center = (from.0 + velocity.0 * d, from.1 + velocity.1 * d);
                    let fix = uniform(&mut self.rng, self.cfg.fixation_duration);
                    self.mode = EyeMode::Fixation {
                        center,
                        until: until + fix,
                    };
                }
                _ => break,
            }
        }
        while self.next_blink <= t {
            let onset = self.next_blink;
            let dur = uniform(&mut self.rng, self.cfg.blink_duration);
            self.blink = match self.blink {
                Some((s, e)) if onset < e => Some((s, e.max(onset + dur))),
                _ => Some((onset, onset + dur)),
            };
            self.blinks_started += 1;
            self.next_blink = onset + self.blink_gap();
        }
    }

    fn sample_at(&mut self, t: f64) -> GazeSample {
        self.advance_eye(t);
        let (yaw, pitch) = match self.mode {
            EyeMode::Fixation { center, .. } => {
                let j = FIXATION_JITTER_DEG;
                (
                    center.0 + self.rng.random_range(-j..j),
                    center.1 + self.rng.random_range(-j..j),
                )
            }
            EyeMode::Saccade {
                from,
                velocity,
                start,
                ..
            } => {
                let d = t - start;
                (from.0 + velocity.0 * d, from.1 + velocity.1 * d)
            }
        };
        let closed = matches!(self.blink, Some((s, e)) if s <= t && t < e);
        GazeSample {
            t,
            yaw,
            pitch,
            openness: if closed { 0.0 } else { 1.0 },
        }
    }

    /// All samples with timestamp `<= t_ms` not yet emitted.
    pub fn advance_to(&mut self, t_ms: f64) -> Vec<GazeSample> {
        let period = self.sample_period();
        let mut out = Vec::new();
        loop {
            let t = self.next_index as f64 * period;
            if t > t_ms + 1e-9 {
                break;
            }
            out.push(self.sample_at(t));
            self.next_index += 1;
        }
        out
    }

    /// Emits the next `dt_ms` of stream.
    pub fn gen_gaze(&mut self, dt_ms: f64) -> Result<Vec<GazeSample>, SimUserError> {
        if !(dt_ms > 0.0) {
            return Err(SimUserError::NonPositiveStep(dt_ms));
        }
        let now = self.next_index as f64 * self.sample_period();
        Ok(self.advance_to(now + dt_ms - self.sample_period()))
    }
}

/// A task target in the virtual world inside the user's field of view.
pub fn spawn_target(virtual_pose: &Pose2, fov_deg: f64, rng: &mut impl Rng) -> Vec2 {
    let half = (fov_deg.clamp(f64::MIN_POSITIVE, 360.0)) / 2.0;
    let bearing = virtual_pose.heading + Angle::from_degrees(rng.random_range(-half..=half));
    let range = rng.random_range(3.0..=15.0);
    virtual_pose.position + bearing.unit() * range
}
