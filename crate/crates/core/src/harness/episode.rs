use super::{Condition, EpisodeConfig, HarnessError, Metrics, Scenario, Trace, TraceEvent, TraceRecord};
use crate::controller::Controller;
use crate::geometry::{signed_heading_error, Angle, Pose2, RigidTransform2, Vec2};
use crate::simuser::{
    physical_displacement, spawn_target, step_walker, GazeGenerator, VirtualPath, WalkerState,
};
use crate::suppression::{suppression_windows, OnlineDetector, SuppressionEvent, SuppressionKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    TimedOut,
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub trace: Trace,
    pub metrics: Metrics,
    pub outcome: Outcome,
}

const TARGET_STREAM: u64 = 0x7461_7267_6574_7321;

/// Suppression events seen so far by the online detector.
#[derive(Default)]
struct EventLog {
    saccade_open: Option<f64>,
    blink_open: Option<f64>,
    closed: Vec<SuppressionEvent>,
}

impl EventLog {
    fn open_events(&self, now: f64) -> impl Iterator<Item = SuppressionEvent> + '_ {
        let mk = |kind, start: Option<f64>| {
            start.map(|t_start| SuppressionEvent {
                kind,
                t_start,
                t_end: now,
            })
        };
        mk(SuppressionKind::Saccade, self.saccade_open)
            .into_iter()
            .chain(mk(SuppressionKind::Blink, self.blink_open))
    }

    fn prune(&mut self, now: f64) {
        self.closed.retain(|e| e.t_end > now - 1000.0);
    }
}

struct Sim<'a> {
    cfg: &'a EpisodeConfig,
    ctrl: Controller,
    physical: Pose2,
    virtual_pose: Pose2,
    trace: Trace,
}

impl Sim<'_> {
    fn record(&mut self, t: f64, event: TraceEvent) {
        self.trace.push(TraceRecord {
            t,
            physical: self.physical,
            virtual_pose: self.virtual_pose,
            theta_acc: self.ctrl.state.theta_acc().degrees(),
            theta_offset: self.ctrl.state.theta_offset.degrees(),
            event,
        });
    }

    fn check_bounds(&mut self, t: f64) {
        let before = self.physical;
        let speed = self.cfg.walker.speed;
        if self
            .ctrl
            .check_bounds(&mut self.physical, &self.virtual_pose, speed, &self.cfg.pts)
            .is_some()
        {
            let after = self.physical;
            self.physical = before;
            self.record(t, TraceEvent::ResetBegin);
            self.physical = after;
            self.record(t, TraceEvent::ResetEnd);
        }
    }
}

/// Runs one episode at a fixed tick. Deterministic in `cfg`.
pub fn run_episode(cfg: &EpisodeConfig) -> Result<Episode, HarnessError> {
    cfg.validate()?;
    let path = match &cfg.scenario {
        Scenario::StraightWalk { length } => {
            Some(VirtualPath::straight(Vec2::ZERO, Angle::ZERO, *length)?)
        }
        Scenario::PathFile { path } => Some(VirtualPath::read_csv(path)?),
        Scenario::InSitu { .. } => None,
    };
    let physical = Pose2 {
        position: cfg.pts.center,
        heading: Angle::ZERO,
    };
    let virtual_pose = match &path {
        Some(p) => Pose2 {
            position: p.waypoints[0],
            heading: (p.waypoints[1] - p.waypoints[0]).heading(),
        },
        None => physical,
    };
    let mut ctrl = Controller::new(cfg.controller)?;
    ctrl.state.mapping = RigidTransform2::between(&physical, &virtual_pose);
    ctrl.state.anchor = physical.position;
    let mut sim = Sim {
        cfg,
        ctrl,
        physical,
        virtual_pose,
        trace: Vec::new(),
    };

    let mut gaze = GazeGenerator::new(crate::simuser::GazeModelConfig {
        seed: cfg.seed,
        ..cfg.gaze
    })?;
    let mut targets = ChaCha8Rng::seed_from_u64(cfg.seed ^ TARGET_STREAM);
    let mut detector = OnlineDetector::new(cfg.detector);
    let mut log = EventLog::default();
    let mut walker = WalkerState::new();
    let redirected = cfg.condition == Condition::Redirected;
    let cap_ms = cfg.max_duration_s * 1000.0;
    let dt = cfg.dt;
    let insitu_start = virtual_pose;

    let mut k: u64 = 0;
    let outcome = loop {
        let t = k as f64 * dt;

        if gaze.wants_aim() {
            let target = spawn_target(&sim.virtual_pose, cfg.fov, &mut targets);
            let bearing = (target - sim.virtual_pose.position).heading();
            let yaw = signed_heading_error(sim.virtual_pose.heading, bearing).degrees();
            gaze.aim_at(yaw, 0.0);
        }
        let mut gaze_moved = false;
        for s in gaze.advance_to(t) {
            let up = detector.push(&s);
            if let Some(start) = up.saccade.recognized {
                log.saccade_open = Some(start);
                gaze_moved = true;
                sim.record(t, TraceEvent::Saccade);
            }
            if let Some(ev) = up.saccade.finished {
                log.saccade_open = None;
                log.closed.push(ev);
            }
            if let Some(start) = up.blink.recognized {
                log.blink_open = Some(start);
                sim.record(t, TraceEvent::Blink);
            }
            if let Some(ev) = up.blink.finished {
                log.blink_open = None;
                log.closed.push(ev);
            }
        }
        log.prune(t);

        match &cfg.scenario {
            Scenario::InSitu {
                baseline_s,
                rotation_s,
                rate,
            } => {
                let elapsed = (t / 1000.0 - baseline_s).clamp(0.0, *rotation_s);
                if redirected {
                    let total = rate * elapsed;
                    let prev = sim.ctrl.state.theta_acc();
                    let acc = Angle::from_degrees(total);
                    let delta = acc - prev;
                    if delta.degrees() != 0.0 {
                        sim.virtual_pose = Pose2 {
                            position: insitu_start.position,
                            heading: insitu_start.heading + acc,
                        };
                        sim.ctrl.state.mapping = RigidTransform2::between(&sim.physical, &sim.virtual_pose);
                        sim.ctrl.state.commits += 1;
                        sim.ctrl.state.total_abs_gain += delta.abs();
                        sim.record(t, TraceEvent::Commit(delta.degrees()));
                    }
                }
                sim.record(t, TraceEvent::None);
                if t / 1000.0 >= baseline_s + rotation_s {
                    break super::Outcome::Completed;
                }
            }
            Scenario::StraightWalk { .. } | Scenario::PathFile { .. } => {
                let path = path.as_ref().expect("walking scenario has a path");
                if redirected {
                    let events: Vec<_> = log.closed.iter().copied().chain(log.open_events(t)).collect();
                    let windows = suppression_windows(&events, &cfg.detector);
                    let delta = sim.ctrl.step(&sim.physical, &cfg.pts, t, dt, &windows, gaze_moved)?;
                    if delta.degrees() != 0.0 {
                        sim.virtual_pose.heading = sim.virtual_pose.heading + delta;
                        sim.record(t, TraceEvent::Commit(delta.degrees()));
                    }
                }
                let step = step_walker(&mut walker, &sim.virtual_pose, path, dt / 1000.0, &cfg.walker)?;
                if step.complete {
                    sim.record(t, TraceEvent::None);
                    break super::Outcome::Completed;
                }
                sim.virtual_pose.heading = step.heading;
                sim.virtual_pose.position = sim.virtual_pose.position + step.displacement;
                let mapping = sim.ctrl.state.mapping;
                sim.physical.position =
                    sim.physical.position + physical_displacement(&mapping, step.displacement);
                sim.physical.heading = step.heading - mapping.rotation;
                sim.check_bounds(t);
                sim.record(t, TraceEvent::None);
            }
        }
        if t >= cap_ms {
            break super::Outcome::TimedOut;
        }
        k += 1;
    };

    let metrics = Metrics::from_trace(&sim.trace);
    Ok(Episode {
        trace: sim.trace,
        metrics,
        outcome,
    })
}
