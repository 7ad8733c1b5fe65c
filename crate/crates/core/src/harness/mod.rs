//! Episode orchestration, batch statistics and artifact export.

mod episode;
mod export;
mod stats;
mod svg;

pub use episode::{run_episode, Episode, Outcome};
pub use export::{export_metrics_json, export_trace_csv, read_trace_csv, write_trace_csv};
pub use stats::{compare_conditions, run_batch, BatchResult, Comparison, MetricStats, Summary};
pub use svg::{render_svg, svg_string};

use crate::controller::{ControllerConfig, ControllerError};
use crate::geometry::{Pose2, Rect};
use crate::simuser::{GazeModelConfig, SimUserError, WalkerConfig};
use crate::suppression::DetectorConfig;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid episode config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    SimUser(#[from] SimUserError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("trace csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed trace row {line}: {reason}")]
    MalformedTrace { line: u64, reason: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("empty trace")]
    EmptyTrace,
    #[error("need at least {need} episodes per summary (got {got})")]
    TooFewEpisodes { need: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Redirected,
    Baseline,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Redirected => "redirected",
            Condition::Baseline => "baseline",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    /// Walk a straight virtual line of `length` meters.
    StraightWalk { length: f64 },
    /// Stand still; no rotation for `baseline_s`, then rotate the scene at
    /// `rate` degrees per second for `rotation_s`.
    InSitu {
        baseline_s: f64,
        rotation_s: f64,
        rate: f64,
    },
    /// Follow the waypoints in an `x,y` CSV file.
    PathFile { path: PathBuf },
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::StraightWalk { length: 42.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub seed: u64,
    pub condition: Condition,
    pub scenario: Scenario,
    pub pts: Rect,
    pub controller: ControllerConfig,
    pub walker: WalkerConfig,
    /// The episode seed replaces `gaze.seed`.
    pub gaze: GazeModelConfig,
    pub detector: DetectorConfig,
    /// Tick length, ms.
    pub dt: f64,
    /// Simulated-time cap, seconds.
    pub max_duration_s: f64,
    /// Horizontal field of view used to place gaze targets, degrees.
    pub fov: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            seed: 0,
            condition: Condition::Redirected,
            scenario: Scenario::default(),
            pts: Rect::default(),
            controller: ControllerConfig::default(),
            walker: WalkerConfig::default(),
            gaze: GazeModelConfig::default(),
            detector: DetectorConfig::default(),
            dt: 1000.0 / 120.0,
            max_duration_s: 1800.0,
            fov: 110.0,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.max_duration_s > 0.0) {
            return bad("max_duration_s must be positive");
        }
        if !(self.fov > 0.0 && self.fov <= 360.0) {
            return bad("fov must lie in (0, 360]");
        }
        if self.pts.validate().is_err() {
            return bad("pts must be a finite, non-degenerate rectangle");
        }
        match &self.scenario {
            Scenario::StraightWalk { length } if !(*length > 0.0 && length.is_finite()) => {
                return bad("length must be positive")
            }
            Scenario::InSitu {
                baseline_s,
                rotation_s,
                rate,
            } if !(*baseline_s >= 0.0 && *rotation_s >= 0.0 && rate.is_finite()) => {
                return bad("in-situ durations must be non-negative")
            }
            _ => {}
        }
        self.controller.validate()?;
        self.walker.validate()?;
        self.gaze.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceEvent {
    None,
    Commit(f64),
    Blink,
    Saccade,
    ResetBegin,
    ResetEnd,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::None => Ok(()),
            TraceEvent::Commit(d) => write!(f, "commit:{d}"),
            TraceEvent::Blink => f.write_str("blink"),
            TraceEvent::Saccade => f.write_str("saccade"),
            TraceEvent::ResetBegin => f.write_str("reset_begin"),
            TraceEvent::ResetEnd => f.write_str("reset_end"),
        }
    }
}

impl std::str::FromStr for TraceEvent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "" => TraceEvent::None,
            "blink" => TraceEvent::Blink,
            "saccade" => TraceEvent::Saccade,
            "reset_begin" => TraceEvent::ResetBegin,
            "reset_end" => TraceEvent::ResetEnd,
            other => {
                let d = other
                    .strip_prefix("commit:")
                    .ok_or_else(|| format!("unknown event {other:?}"))?;
                TraceEvent::Commit(d.parse().map_err(|_| format!("bad commit angle {d:?}"))?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Milliseconds.
    pub t: f64,
    pub physical: Pose2,
    pub virtual_pose: Pose2,
    pub theta_acc: f64,
    pub theta_offset: f64,
    pub event: TraceEvent,
}

pub type Trace = Vec<TraceRecord>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub resets: u32,
    pub distance_pts: f64,
    pub distance_ve: f64,
    pub total_abs_gain: f64,
    pub commits: u64,
    /// Seconds.
    pub duration: f64,
    pub mean_gain_per_commit: f64,
    pub commits_per_second: f64,
}

impl Metrics {
    pub const NAMES: [&'static str; 8] = [
        "resets",
        "distance_pts",
        "distance_ve",
        "total_abs_gain",
        "commits",
        "duration",
        "mean_gain_per_commit",
        "commits_per_second",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.resets as f64,
            self.distance_pts,
            self.distance_ve,
            self.total_abs_gain,
            self.commits as f64,
            self.duration,
            self.mean_gain_per_commit,
            self.commits_per_second,
        ]
    }

    /// Metrics derived from a trace.
    pub fn from_trace(trace: &[TraceRecord]) -> Metrics {
        let arc = |f: fn(&TraceRecord) -> Pose2| -> f64 {
            trace
                .windows(2)
                .map(|p| f(&p[0]).position.distance(f(&p[1]).position))
                .sum()
        };
        let mut commits = 0u64;
        let mut gain = 0.0;
        let mut resets = 0u32;
        for r in trace {
            match r.event {
                TraceEvent::Commit(d) => {
                    commits += 1;
                    gain += d.abs();
                }
                TraceEvent::ResetBegin => resets += 1,
                _ => {}
            }
        }
        let duration = trace.last().map_or(0.0, |r| r.t / 1000.0);
        Metrics {
            resets,
            distance_pts: arc(|r| r.physical),
            distance_ve: arc(|r| r.virtual_pose),
            total_abs_gain: gain,
            commits,
            duration,
            mean_gain_per_commit: if commits > 0 { gain / commits as f64 } else { 0.0 },
            commits_per_second: if duration > 0.0 { commits as f64 / duration } else { 0.0 },
        }
    }
}
