//! Saccade and blink detection on gaze sample streams.
//!
//! Saccades are maximal runs of consecutive sample pairs whose angular
//! velocity exceeds a threshold; blinks are maximal runs of samples whose
//! eye openness is below a threshold. Durations are clamped to the
//! physiological ranges (saccade 20-200 ms, blink 100-400 ms): shorter runs
//! are dropped, longer ones truncated.
//!
//! The same run trackers drive both the batch functions and the online
//! detector used by the simulation loop, so the two never disagree.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::path::Path;

pub const SACCADE_MIN_MS: f64 = 20.0;
pub const SACCADE_MAX_MS: f64 = 200.0;
pub const BLINK_MIN_MS: f64 = 100.0;
pub const BLINK_MAX_MS: f64 = 400.0;

#[derive(Debug, thiserror::Error)]
pub enum SuppressionError {
    #[error("timestamps must strictly increase ({0} ms then {1} ms)")]
    NonIncreasingTime(f64, f64),
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    /// Milliseconds.
    pub t: f64,
    /// Gaze direction relative to the head, degrees.
    pub yaw: f64,
    pub pitch: f64,
    /// Eye openness in `[0, 1]`.
    pub openness: f64,
}

impl GazeSample {
    pub fn new(t: f64, yaw: f64, pitch: f64, openness: f64) -> Self {
        GazeSample {
            t,
            yaw,
            pitch,
            openness,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SuppressionKind {
    Blink,
    Saccade,
}

impl fmt::Display for SuppressionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SuppressionKind::Blink => "blink",
            SuppressionKind::Saccade => "saccade",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuppressionEvent {
    pub kind: SuppressionKind,
    pub t_start: f64,
    pub t_end: f64,
}

impl SuppressionEvent {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Degrees per second.
    pub saccade_velocity_threshold: f64,
    pub blink_openness_threshold: f64,
    /// Milliseconds added before each event.
    pub pre_margin: f64,
    /// Milliseconds added after each event.
    pub post_margin: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            saccade_velocity_threshold: 180.0,
            blink_openness_threshold: 0.1,
            pre_margin: 10.0,
            post_margin: 10.0,
        }
    }
}

/// Small-angle gaze speed between two samples, degrees per second.
pub fn angular_velocity(s0: &GazeSample, s1: &GazeSample) -> Result<f64, SuppressionError> {
    let dt = s1.t - s0.t;
    if !(dt > 0.0) {
        return Err(SuppressionError::NonIncreasingTime(s0.t, s1.t));
    }
    let d = (s1.yaw - s0.yaw).hypot(s1.pitch - s0.pitch);
    Ok(d / (dt / 1000.0))
}

/// Tracks the current above-threshold velocity run.
#[derive(Debug, Clone, Default)]
struct SaccadeRun {
    prev: Option<GazeSample>,
    start: Option<f64>,
    end: f64,
    announced: bool,
}

/// What a tracker reports after consuming one sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackerUpdate {
    /// Start time of a run that just reached its minimum duration.
    pub recognized: Option<f64>,
    /// A run that just closed and qualified.
    pub finished: Option<SuppressionEvent>,
}

impl SaccadeRun {
    fn push(&mut self, s: &GazeSample, threshold: f64) -> TrackerUpdate {
        let mut up = TrackerUpdate::default();
        let Some(prev) = self.prev.replace(*s) else {
            return up;
        };
        // Non-increasing timestamps are a stream defect; treat the pair as
        // stationary so the detector stays total.
        let v = angular_velocity(&prev, s).unwrap_or(0.0);
        if v > threshold {
            let start = *self.start.get_or_insert(prev.t);
            self.end = s.t;
            if !self.announced && self.end - start >= SACCADE_MIN_MS {
                self.announced = true;
                up.recognized = Some(start);
            }
        } else {
            up.finished = self.close();
        }
        up
    }

    fn close(&mut self) -> Option<SuppressionEvent> {
        let start = self.start.take()?;
        self.announced = false;
        let dur = self.end - start;
        (dur >= SACCADE_MIN_MS).then(|| SuppressionEvent {
            kind: SuppressionKind::Saccade,
            t_start: start,
            t_end: start + dur.min(SACCADE_MAX_MS),
        })
    }
}

/// Tracks the current closed-eye run. A blink spans from the first closed
/// sample to the first reopened sample.
#[derive(Debug, Clone, Default)]
struct BlinkRun {
    start: Option<f64>,
    last_closed: f64,
    announced: bool,
}

impl BlinkRun {
    fn push(&mut self, s: &GazeSample, threshold: f64) -> TrackerUpdate {
        let mut up = TrackerUpdate::default();
        if s.openness < threshold {
            let start = *self.start.get_or_insert(s.t);
            self.last_closed = s.t;
            if !self.announced && s.t - start >= BLINK_MIN_MS {
                self.announced = true;
                up.recognized = Some(start);
            }
        } else if let Some(start) = self.start {
            if !self.announced && s.t - start >= BLINK_MIN_MS {
                up.recognized = Some(start);
            }
            up.finished = self.close_at(s.t);
        }
        up
    }

    fn close_at(&mut self, t_end: f64) -> Option<SuppressionEvent> {
        let start = self.start.take()?;
        self.announced = false;
        let dur = t_end - start;
        (dur >= BLINK_MIN_MS).then(|| SuppressionEvent {
            kind: SuppressionKind::Blink,
            t_start: start,
            t_end: start + dur.min(BLINK_MAX_MS),
        })
    }

    fn flush(&mut self) -> Option<SuppressionEvent> {
        let end = self.last_closed;
        self.close_at(end)
    }
}

/// Incremental detector for live streams.
#[derive(Debug, Clone, Default)]
pub struct OnlineDetector {
    cfg: DetectorConfig,
    saccade: SaccadeRun,
    blink: BlinkRun,
}

/// Output of [`OnlineDetector::push`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectorUpdate {
    pub saccade: TrackerUpdate,
    pub blink: TrackerUpdate,
}

impl OnlineDetector {
    pub fn new(cfg: DetectorConfig) -> Self {
        OnlineDetector {
            cfg,
            ..Default::default()
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn push(&mut self, s: &GazeSample) -> DetectorUpdate {
        DetectorUpdate {
            saccade: self.saccade.push(s, self.cfg.saccade_velocity_threshold),
            blink: self.blink.push(s, self.cfg.blink_openness_threshold),
        }
    }

    /// Closes any run still open at end of stream.
    pub fn finish(&mut self) -> Vec<SuppressionEvent> {
        let mut out = Vec::new();
        out.extend(self.saccade.close());
        out.extend(self.blink.flush());
        out
    }
}

pub fn detect_saccades(stream: &[GazeSample], cfg: &DetectorConfig) -> Vec<SuppressionEvent> {
    let mut run = SaccadeRun::default();
    let mut out: Vec<_> = stream
        .iter()
        .filter_map(|s| run.push(s, cfg.saccade_velocity_threshold).finished)
        .collect();
    out.extend(run.close());
    out
}

pub fn detect_blinks(stream: &[GazeSample], cfg: &DetectorConfig) -> Vec<SuppressionEvent> {
    let mut run = BlinkRun::default();
    let mut out: Vec<_> = stream
        .iter()
        .filter_map(|s| run.push(s, cfg.blink_openness_threshold).finished)
        .collect();
    out.extend(run.flush());
    out
}

/// Both kinds, sorted by start time.
pub fn detect_all(stream: &[GazeSample], cfg: &DetectorConfig) -> Vec<SuppressionEvent> {
    let mut out = detect_saccades(stream, cfg);
    out.extend(detect_blinks(stream, cfg));
    out.sort_by(|a, b| a.t_start.total_cmp(&b.t_start).then(a.t_end.total_cmp(&b.t_end)));
    out
}

/// Closed interval in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

/// Margin-expanded, merged suppression intervals.
pub fn suppression_windows(events: &[SuppressionEvent], cfg: &DetectorConfig) -> Vec<Window> {
    let mut expanded: Vec<Window> = events
        .iter()
        .map(|e| Window {
            start: e.t_start - cfg.pre_margin,
            end: e.t_end + cfg.post_margin,
        })
        .collect();
    expanded.sort_by(|a, b| a.start.total_cmp(&b.start));
    let mut merged: Vec<Window> = Vec::with_capacity(expanded.len());
    for w in expanded {
        match merged.last_mut() {
            Some(last) if w.start <= last.end => last.end = last.end.max(w.end),
            _ => merged.push(w),
        }
    }
    merged
}

/// Reads `t_ms,yaw_deg,pitch_deg,openness`. Line numbers in errors are
/// 1-based and count the header.
pub fn read_gaze_csv(path: impl AsRef<Path>) -> Result<Vec<GazeSample>, SuppressionError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    let expected = ["t_ms", "yaw_deg", "pitch_deg", "openness"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(SuppressionError::MalformedRow {
            line: 1,
            reason: format!("expected header {}", expected.join(",")),
        });
    }
    let mut out: Vec<GazeSample> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| SuppressionError::MalformedRow {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |reason: String| SuppressionError::MalformedRow { line, reason };
        let mut vals = [0.0f64; 4];
        for (i, v) in vals.iter_mut().enumerate() {
            let field = rec.get(i).unwrap_or("");
            *v = field
                .parse()
                .map_err(|_| bad(format!("column {} is not a number: {field:?}", expected[i])))?;
            if !v.is_finite() {
                return Err(bad(format!("column {} is not finite", expected[i])));
            }
        }
        let s = GazeSample::new(vals[0], vals[1], vals[2], vals[3]);
        if !(0.0..=1.0).contains(&s.openness) {
            return Err(bad(format!("openness {} outside [0, 1]", s.openness)));
        }
        if let Some(prev) = out.last() {
            if s.t <= prev.t {
                return Err(bad(format!(
                    "timestamp {} does not exceed previous {}",
                    s.t, prev.t
                )));
            }
        }
        out.push(s);
    }
    Ok(out)
}

pub fn write_gaze_csv(path: impl AsRef<Path>, stream: &[GazeSample]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t_ms,yaw_deg,pitch_deg,openness")?;
    for s in stream {
        writeln!(w, "{},{},{},{}", s.t, s.yaw, s.pitch, s.openness)?;
    }
    w.flush()
}

/// Writes `kind,t_start_ms,t_end_ms`.
pub fn write_events_csv(
    path: impl AsRef<Path>,
    events: &[SuppressionEvent],
) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "kind,t_start_ms,t_end_ms")?;
    for e in events {
        writeln!(w, "{},{},{}", e.kind, e.t_start, e.t_end)?;
    }
    w.flush()
}
