#![allow(clippy::neg_cmp_op_on_partial_ord)]

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rdw_core::foveation::{build_mask, composite, zone_fractions, FoveationConfig, Image};
use rdw_core::harness::{
    compare_conditions, export_metrics_json, export_trace_csv, render_svg, run_batch, run_episode,
    Condition, EpisodeConfig, Outcome, Scenario,
};
use rdw_core::suppression::{detect_all, read_gaze_csv, write_events_csv, DetectorConfig};
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(name = "rdw", version, about = "Gaze-contingent redirected walking simulator and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write trace.csv, metrics.json and path.svg.
    Simulate(SimulateArgs),
    /// Run a batch of episodes and write summary.json.
    Batch(BatchArgs),
    /// Blend a foveal and a non-foveal render around a gaze point.
    Composite(CompositeArgs),
    /// Write the zone mask for a gaze point as PGM.
    Mask(MaskArgs),
    /// Detect saccades and blinks in a gaze CSV.
    Detect(DetectArgs),
    /// Tabulate zone fractions over a grid of foveal sizes and rotations.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ConditionArg {
    Redirected,
    Baseline,
}

impl From<ConditionArg> for Condition {
    fn from(c: ConditionArg) -> Self {
        match c {
            ConditionArg::Redirected => Condition::Redirected,
            ConditionArg::Baseline => Condition::Baseline,
        }
    }
}

#[derive(Args)]
struct EpisodeArgs {
    /// JSON episode config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    condition: Option<ConditionArg>,
    /// straight:LENGTH | insitu:BASELINE_S:ROTATION_S:RATE | path:FILE
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
}

impl EpisodeArgs {
    fn load(&self) -> Result<EpisodeConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("invalid config {}", p.display()))?
            }
            None => EpisodeConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(c) = self.condition {
            cfg.condition = c.into();
        }
        if let Some(s) = &self.scenario {
            cfg.scenario = s.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    episode: EpisodeArgs,
    #[arg(long, default_value = "rdw-out")]
    out: PathBuf,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    episode: EpisodeArgs,
    #[arg(long, default_value_t = 25)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed_stride: u64,
    /// Run both conditions and add Welch's t per metric.
    #[arg(long)]
    compare: bool,
    #[arg(long, default_value = "rdw-out")]
    out: PathBuf,
}

#[derive(Args)]
struct CompositeArgs {
    #[arg(long)]
    foveal: PathBuf,
    #[arg(long)]
    nonfoveal: PathBuf,
    /// Gaze point in pixels, X,Y.
    #[arg(long, value_parser = parse_point)]
    gaze: (f64, f64),
    #[arg(long, default_value_t = 60.0)]
    delta: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the zone mask as PGM.
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    #[arg(long, value_parser = parse_point)]
    gaze: (f64, f64),
    #[arg(long, default_value_t = 60.0)]
    delta: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    /// CSV with t_ms,yaw_deg,pitch_deg,openness.
    #[arg(long)]
    gaze: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "20:60:10", value_parser = parse_range)]
    delta_range: Grid,
    #[arg(long, default_value = "0:15:1", value_parser = parse_range)]
    theta_range: Grid,
    /// Largest rotation counted as within the cap, degrees.
    #[arg(long, default_value_t = 13.5)]
    theta_max: f64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let nums = |n: usize| -> Result<Vec<f64>, String> {
        let v: Vec<f64> = rest
            .split(':')
            .map(|x| x.parse::<f64>().map_err(|_| format!("not a number: {x:?}")))
            .collect::<Result<_, _>>()?;
        if v.len() != n {
            return Err(format!("{kind} takes {n} value(s)"));
        }
        Ok(v)
    };
    match kind {
        "straight" => Ok(Scenario::StraightWalk { length: nums(1)?[0] }),
        "insitu" => {
            let v = nums(3)?;
            Ok(Scenario::InSitu {
                baseline_s: v[0],
                rotation_s: v[1],
                rate: v[2],
            })
        }
        "path" if !rest.is_empty() => Ok(Scenario::PathFile { path: rest.into() }),
        _ => Err("expected straight:LENGTH, insitu:B:R:RATE or path:FILE".into()),
    }
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (x, y) = s.split_once(',').ok_or("expected X,Y")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("not a number: {v:?}"));
    Ok((p(x)?, p(y)?))
}

#[derive(Debug, Clone, PartialEq)]
struct Grid(Vec<f64>);

/// `start:stop:step`, stop included when it falls on the grid.
fn parse_range(s: &str) -> Result<Grid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|x| x.parse::<f64>().map_err(|_| format!("not a number: {x:?}")))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err("expected start:stop:step".into());
    };
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || start > stop {
        return Err(format!("empty range {s:?}"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok(Grid((0..count).map(|i| start + i as f64 * step).collect()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn simulate(args: &SimulateArgs) -> Result<u8> {
    let cfg = args.episode.load()?;
    let ep = run_episode(&cfg)?;
    create_dir(&args.out)?;
    export_trace_csv(&ep.trace, args.out.join("trace.csv"))?;
    export_metrics_json(&ep.metrics, args.out.join("metrics.json"))?;
    render_svg(&ep.trace, &cfg.pts, args.out.join("path.svg"))?;
    let m = &ep.metrics;
    println!(
        "{} seed {}: resets {} commits {} gain {:.2} deg, {:.2} m PTS / {:.2} m VE in {:.1} s",
        cfg.condition, cfg.seed, m.resets, m.commits, m.total_abs_gain, m.distance_pts, m.distance_ve, m.duration
    );
    if ep.outcome == Outcome::TimedOut {
        eprintln!("episode timed out after {} s", cfg.max_duration_s);
        return Ok(EXIT_TIMEOUT);
    }
    Ok(0)
}

fn batch(args: &BatchArgs) -> Result<u8> {
    if args.n == 0 {
        bail!("--n must be at least 1");
    }
    let cfg = args.episode.load()?;
    let conditions = if args.compare {
        vec![Condition::Redirected, Condition::Baseline]
    } else {
        vec![cfg.condition]
    };
    let mut report = serde_json::Map::new();
    let mut summaries = Vec::new();
    let mut timeouts = 0;
    for c in conditions {
        let res = run_batch(
            &EpisodeConfig {
                condition: c,
                ..cfg.clone()
            },
            args.n,
            args.seed_stride,
        )?;
        timeouts += res.summary.timeouts;
        report.insert(
            c.to_string(),
            json!({ "seeds": res.seeds, "summary": res.summary }),
        );
        summaries.push(res.summary);
    }
    if args.compare {
        let cmp = compare_conditions(&summaries[0], &summaries[1])?;
        report.insert("comparison".into(), json!({ "a": "redirected", "b": "baseline", "metrics": cmp }));
    }
    report.insert("sd".into(), json!("population"));
    create_dir(&args.out)?;
    let path = args.out.join("summary.json");
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    for s in &summaries {
        let r = s.metrics["resets"];
        println!("n {}: resets mean {:.2} sd {:.2}", s.n, r.mean, r.sd);
    }
    if timeouts > 0 {
        eprintln!("{timeouts} episode(s) timed out");
        return Ok(EXIT_TIMEOUT);
    }
    Ok(0)
}

fn foveation_cfg(delta: f64) -> Result<FoveationConfig> {
    let cfg = FoveationConfig::with_delta(delta);
    cfg.validate()?;
    Ok(cfg)
}

fn composite_cmd(args: &CompositeArgs) -> Result<u8> {
    let cfg = foveation_cfg(args.delta)?;
    let f = Image::read_ppm(&args.foveal).with_context(|| args.foveal.display().to_string())?;
    let n = Image::read_ppm(&args.nonfoveal).with_context(|| args.nonfoveal.display().to_string())?;
    let mask = build_mask(args.gaze, (f.width, f.height), &cfg)?;
    composite(&f, &n, &mask, &cfg)?.write_ppm(&args.out)?;
    if let Some(p) = &args.mask {
        mask.write_pgm(p)?;
    }
    Ok(0)
}

fn mask_cmd(args: &MaskArgs) -> Result<u8> {
    let cfg = foveation_cfg(args.delta)?;
    build_mask(args.gaze, (args.width, args.height), &cfg)?.write_pgm(&args.out)?;
    Ok(0)
}

fn detect(args: &DetectArgs) -> Result<u8> {
    let stream = read_gaze_csv(&args.gaze).with_context(|| args.gaze.display().to_string())?;
    let events = detect_all(&stream, &DetectorConfig::default());
    write_events_csv(&args.out, &events).with_context(|| format!("cannot write {}", args.out.display()))?;
    Ok(0)
}

fn sweep(args: &SweepArgs) -> Result<u8> {
    let mut out = String::from("delta_deg,theta_deg,foveal,transition,peripheral,within_cap\n");
    for &delta in &args.delta_range.0 {
        let fr = zone_fractions(&foveation_cfg(delta)?);
        for &theta in &args.theta_range.0 {
            out.push_str(&format!(
                "{delta},{theta},{:.4},{:.4},{:.4},{}\n",
                fr.foveal,
                fr.transition,
                fr.peripheral,
                theta <= args.theta_max
            ));
        }
    }
    let mut f = std::fs::File::create(&args.out)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    f.write_all(out.as_bytes())?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Batch(a) => batch(a),
        Command::Composite(a) => composite_cmd(a),
        Command::Mask(a) => mask_cmd(a),
        Command::Detect(a) => detect(a),
        Command::Sweep(a) => sweep(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
