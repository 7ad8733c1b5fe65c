//! Acceptance suite. Prints one PASS/FAIL line per criterion, then fails
//! if any criterion failed.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rdw_core::foveation::{build_mask, composite, zone_fractions, FoveationConfig, Image, SamplingRates, Zone};
use rdw_core::harness::{
    compare_conditions, run_batch, run_episode, Condition, Episode, EpisodeConfig, Outcome, Scenario, TraceEvent,
};
use rdw_core::simuser::{GazeGenerator, GazeModelConfig};
use rdw_core::suppression::{detect_all, DetectorConfig, GazeSample, SuppressionKind};
use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

type Verdict = Result<String, String>;

fn report(id: u32, title: &str, v: &Verdict) {
    let (tag, detail) = match v {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    // bypass the test harness capture so the lines always show
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {id} [{tag}] {title}: {detail}");
}

fn straight(length: f64, condition: Condition, seed: u64) -> EpisodeConfig {
    EpisodeConfig {
        seed,
        condition,
        scenario: Scenario::StraightWalk { length },
        ..Default::default()
    }
}

fn timed(cfg: &EpisodeConfig) -> (Episode, Duration) {
    let t0 = Instant::now();
    let ep = run_episode(cfg).expect("valid config");
    (ep, t0.elapsed())
}

fn in_situ() -> Verdict {
    let cfg = EpisodeConfig {
        scenario: Scenario::InSitu {
            baseline_s: 30.0,
            rotation_s: 30.0,
            rate: 6.0,
        },
        ..Default::default()
    };
    let (ep, took) = timed(&cfg);
    let acc = ep.trace.last().unwrap().theta_acc.abs();
    let detail = format!("final |theta_acc| = {acc} deg in {took:?}");
    if (acc - 180.0).abs() <= 1e-6 && took < Duration::from_secs(1) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn redirected_walk(runs: &[(Episode, Duration)]) -> Verdict {
    let ok42 = runs
        .iter()
        .filter(|(e, _)| e.outcome == Outcome::Completed && e.metrics.resets <= 2)
        .count();
    let slowest = runs.iter().map(|(_, d)| *d).max().unwrap();
    let (long, long_took) = timed(&straight(100.0, Condition::Redirected, 0));
    let detail = format!(
        "42 m: {ok42}/25 seeds with <= 2 resets; 100 m: {} resets, {:?}; slowest episode {slowest:?}, 100 m took {long_took:?}",
        long.metrics.resets, long.outcome
    );
    let pass = ok42 >= 20
        && long.outcome == Outcome::Completed
        && long.metrics.resets <= 4
        && slowest < Duration::from_secs(5)
        && long_took < Duration::from_secs(5);
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn baseline_contrast(redirected: &EpisodeConfig) -> Verdict {
    // longest straight leg inside the margin-shrunk space is its diagonal
    let side = 4.0 - 2.0 * redirected.controller.boundary_margin;
    let chord = (2.0 * side * side).sqrt();
    let min_resets = ((42.0 / chord).ceil() - 1.0) as u32;

    let base_cfg = EpisodeConfig {
        condition: Condition::Baseline,
        ..redirected.clone()
    };
    let base = run_batch(&base_cfg, 25, 1).unwrap();
    let red = run_batch(redirected, 25, 1).unwrap();
    let fewest = base.episodes.iter().map(|m| m.resets).min().unwrap();
    let cmp = compare_conditions(&base.summary, &red.summary).unwrap()["resets"];
    let detail = format!(
        "baseline min resets {fewest} (oracle >= {min_resets}); mean diff {:.2}, Welch t {}, dof {:.1}",
        cmp.mean_diff, cmp.welch_t, cmp.dof
    );
    if fewest >= min_resets && min_resets >= 8 && cmp.mean_diff >= 6.0 && cmp.welch_t > 5.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rate_statistics(runs: &[(Episode, Duration)]) -> Verdict {
    let n = runs.len() as f64;
    let gpc = runs.iter().map(|(e, _)| e.metrics.mean_gain_per_commit).sum::<f64>() / n;
    let cps = runs.iter().map(|(e, _)| e.metrics.commits_per_second).sum::<f64>() / n;
    let short_ve = runs
        .iter()
        .filter(|(e, _)| e.outcome == Outcome::Completed && e.metrics.distance_ve < 42.0)
        .count();
    let pts: Vec<String> = runs.iter().map(|(e, _)| format!("{:.1}", e.metrics.distance_pts)).collect();
    let detail = format!(
        "mean gain/commit {gpc:.3} deg, commits/s {cps:.3}, completed runs with VE < 42 m: {short_ve}; PTS distances [{}]",
        pts.join(" ")
    );
    if (1.6..=4.7).contains(&gpc) && (0.9..=2.6).contains(&cps) && short_ve == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cap_invariants(runs: &[(Episode, Duration)], cfg: &EpisodeConfig) -> Verdict {
    let mut records = 0usize;
    let mut violations = 0usize;
    for (e, _) in runs {
        for r in &e.trace {
            records += 1;
            if r.theta_offset.abs() > cfg.controller.theta_max {
                violations += 1;
            }
            if let TraceEvent::Commit(d) = r.event {
                if d.abs() > cfg.controller.per_commit_cap {
                    violations += 1;
                }
            }
        }
    }
    let detail = format!("{violations} violations over {records} trace records");
    if violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn zone_geometry() -> Verdict {
    let cfg = FoveationConfig::with_delta(60.0);
    let fov = zone_fractions(&cfg).foveal;
    let (w, h) = (1100usize, 1100usize);
    let mask = build_mask((550.0, 550.0), (w, h), &cfg).unwrap();
    let px_per_deg = w as f64 / cfg.total_fov;
    let r_in = 30.0 * px_per_deg;
    let r_out = 50.0 * px_per_deg;
    let disc = std::f64::consts::PI * r_in * r_in;
    let ring = std::f64::consts::PI * (r_out * r_out - r_in * r_in);
    let rest = (w * h) as f64 - disc - ring;
    let rel = |count: usize, area: f64| (count as f64 - area).abs() / area;
    let errs = [
        rel(mask.count(Zone::Foveal), disc),
        rel(mask.count(Zone::Transition), ring),
        rel(mask.count(Zone::Peripheral), rest),
    ];
    let detail = format!(
        "foveal fraction {fov:.4}; mask vs analytic area error {:.4}% / {:.4}% / {:.4}%",
        errs[0] * 100.0,
        errs[1] * 100.0,
        errs[2] * 100.0
    );
    if (fov - 0.5455).abs() <= 0.0005 && errs.iter().all(|e| *e < 0.01) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn image_strategy() -> impl Strategy<Value = Image> {
    (1usize..24, 1usize..24).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<[u8; 3]>(), w * h)
            .prop_map(move |px| Image::from_pixels(w, h, px).unwrap())
    })
}

fn blend_properties() -> Verdict {
    let mut runner = TestRunner::new(Config {
        cases: 64,
        failure_persistence: None,
        ..Config::default()
    });
    let mut checks = Vec::new();

    let r = runner.run(
        &(image_strategy(), 0.0..1.0f64, 0.0..1.0f64, 5.0..110.0f64),
        |(img, gx, gy, delta)| {
            let cfg = FoveationConfig {
                sampling: SamplingRates::FULL,
                ..FoveationConfig::with_delta(delta)
            };
            let gaze = (gx * (img.width - 1) as f64, gy * (img.height - 1) as f64);
            let mask = build_mask(gaze, (img.width, img.height), &cfg).unwrap();
            for y in 0..img.height {
                for x in 0..img.width {
                    prop_assert_eq!(mask.alpha(x, y) + mask.beta(x, y), 1.0);
                }
            }
            let out = composite(&img, &img, &mask, &cfg).unwrap();
            prop_assert_eq!(out, img);
            Ok(())
        },
    );
    checks.push(("alpha+beta and identity", r.map_err(|e| e.to_string())));

    let r = runner.run(
        &(any::<[u8; 3]>(), any::<[u8; 3]>(), 100usize..240, 0.2..0.8f64, 0.2..0.8f64, 10.0..60.0f64),
        |(f, n, w, gx, gy, delta)| {
            let h = w * 3 / 4;
            let cfg = FoveationConfig::with_delta(delta);
            let gaze = (gx * (w - 1) as f64, gy * (h - 1) as f64);
            let mask = build_mask(gaze, (w, h), &cfg).unwrap();
            let out = composite(&Image::new(w, h, f), &Image::new(w, h, n), &mask, &cfg).unwrap();
            let dpp = cfg.total_fov / w as f64;
            let ramp = cfg.delta_transition() / 2.0 - cfg.delta_foveal / 2.0;
            let bound = 255.0 * dpp / ramp + 1.0;
            let jump = |a: [u8; 3], b: [u8; 3]| (0..3).map(|c| (a[c] as f64 - b[c] as f64).abs()).fold(0.0, f64::max);
            for y in 0..h {
                for x in 0..w {
                    if x + 1 < w {
                        prop_assert!(jump(out.get(x, y), out.get(x + 1, y)) <= bound);
                    }
                    if y + 1 < h {
                        prop_assert!(jump(out.get(x, y), out.get(x, y + 1)) <= bound);
                    }
                }
            }
            Ok(())
        },
    );
    checks.push(("continuity across the ring", r.map_err(|e| e.to_string())));

    let failed: Vec<String> = checks
        .iter()
        .filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}")))
        .collect();
    if failed.is_empty() {
        Ok(format!("{} property groups x 64 cases hold", checks.len()))
    } else {
        Err(failed.join("; "))
    }
}

#[derive(Debug, Clone, Copy)]
struct Planted {
    kind: SuppressionKind,
    start: f64,
    dur: f64,
    velocity: f64,
}

/// 1 kHz stream with small fixation noise and planted events at least
/// 400 ms apart.
fn planted_stream(rng: &mut impl rand::Rng, count: usize) -> (Vec<GazeSample>, Vec<Planted>) {
    let mut events = Vec::new();
    let mut t = 300.0;
    for _ in 0..count {
        let ev = if rng.random_bool(0.5) {
            Planted {
                kind: SuppressionKind::Saccade,
                start: t,
                dur: rng.random_range(30..=150) as f64,
                velocity: rng.random_range(300.0..900.0),
            }
        } else {
            Planted {
                kind: SuppressionKind::Blink,
                start: t,
                dur: rng.random_range(100..=400) as f64,
                velocity: 0.0,
            }
        };
        t += ev.dur + rng.random_range(400..900) as f64;
        events.push(ev);
    }
    let end = t as usize;
    let mut yaw = 0.0;
    let mut samples = Vec::with_capacity(end);
    for ms in 0..end {
        let tf = ms as f64;
        let mut open = 1.0;
        let mut moving = None;
        for e in &events {
            if tf > e.start && tf <= e.start + e.dur {
                match e.kind {
                    SuppressionKind::Saccade => moving = Some(e.velocity),
                    SuppressionKind::Blink => {}
                }
            }
            if e.kind == SuppressionKind::Blink && tf >= e.start && tf < e.start + e.dur {
                open = 0.0;
            }
        }
        let noise = rng.random_range(-0.01..0.01);
        match moving {
            Some(v) => yaw += v / 1000.0,
            None => yaw += noise,
        }
        samples.push(GazeSample::new(tf, yaw, 0.0, open));
    }
    (samples, events)
}

fn detector_oracles() -> Verdict {
    use rand::{Rng, SeedableRng};
    let cfg = DetectorConfig::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let (mut planted_total, mut hits, mut extra) = (0usize, 0usize, 0usize);
    for _ in 0..20 {
        let (stream, planted) = planted_stream(&mut rng, 30);
        let found = detect_all(&stream, &cfg);
        planted_total += planted.len();
        let mut used = vec![false; found.len()];
        for p in &planted {
            let m = found.iter().enumerate().position(|(i, f)| {
                !used[i] && f.kind == p.kind && (f.t_start - p.start).abs() <= 1.0 + 1e-9
            });
            if let Some(i) = m {
                used[i] = true;
                hits += 1;
            }
        }
        extra += used.iter().filter(|u| !**u).count();
    }

    let mut quiet = 0usize;
    for seed in 0..20u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut yaw = 0.0;
        let stream: Vec<GazeSample> = (0..5000)
            .map(|ms| {
                // bounded random drift, under 50 deg/s
                yaw += rng.random_range(-0.045..0.045);
                GazeSample::new(ms as f64, yaw, 0.0, 1.0)
            })
            .collect();
        quiet += detect_all(&stream, &cfg).len();
    }

    let minutes = 200u64;
    let (mut generated, mut detected) = (0u64, 0usize);
    for seed in 0..minutes {
        let mut g = GazeGenerator::new(GazeModelConfig {
            seed,
            ..Default::default()
        })
        .unwrap();
        let stream = g.advance_to(60_000.0);
        generated += g.blinks_started;
        detected += detect_all(&stream, &cfg)
            .iter()
            .filter(|e| e.kind == SuppressionKind::Blink)
            .count();
    }
    let mean_generated = generated as f64 / minutes as f64;
    let mean_detected = detected as f64 / minutes as f64;

    let recall = hits as f64 / planted_total as f64;
    let precision = hits as f64 / (hits + extra) as f64;
    let detail = format!(
        "recall {recall:.3}, precision {precision:.3} over {planted_total} planted; {quiet} detections on noise; \
         blinks/min generated {mean_generated:.2}, detected {mean_detected:.2}"
    );
    if recall == 1.0 && precision == 1.0 && quiet == 0 && (15.0..=19.0).contains(&mean_generated) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for run in ["first", "second"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_rdw"))
            .args(["simulate", "--seed", "7", "--out", out.to_str().unwrap()])
            .output()
            .unwrap()
            .status;
        if !status.success() {
            return Err(format!("simulate exited with {status}"));
        }
        files.push(
            ["trace.csv", "metrics.json", "path.svg"].map(|f| std::fs::read(out.join(f)).unwrap_or_default()),
        );
    }
    let same = files[0] == files[1] && files[0].iter().all(|f| !f.is_empty());
    let detail = format!(
        "trace.csv {} bytes, metrics.json {} bytes, path.svg {} bytes",
        files[0][0].len(),
        files[0][1].len(),
        files[0][2].len()
    );
    if same {
        Ok(detail + ", identical")
    } else {
        Err(detail + ", differ")
    }
}

#[test]
fn acceptance() {
    let redirected = straight(42.0, Condition::Redirected, 0);
    let runs: Vec<(Episode, Duration)> = (0..25)
        .map(|seed| timed(&EpisodeConfig { seed, ..redirected.clone() }))
        .collect();

    let results = [
        (1, "in-situ rotation", in_situ()),
        (2, "redirected straight walk", redirected_walk(&runs)),
        (3, "baseline contrast", baseline_contrast(&redirected)),
        (4, "redirection-rate statistics", rate_statistics(&runs)),
        (5, "cap invariants", cap_invariants(&runs, &redirected)),
        (6, "zone geometry", zone_geometry()),
        (7, "blend properties", blend_properties()),
        (8, "detector oracles", detector_oracles()),
        (9, "determinism", determinism()),
    ];
    for (id, title, v) in &results {
        report(*id, title, v);
    }
    let failed: Vec<u32> = results.iter().filter(|r| r.2.is_err()).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
