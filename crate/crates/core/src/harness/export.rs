use super::{HarnessError, Metrics, TraceEvent, TraceRecord};
use crate::geometry::{Angle, Pose2, Vec2};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

const HEADER: [&str; 10] = [
    "t_ms", "px", "py", "ph_deg", "vx", "vy", "vh_deg", "theta_acc", "theta_offset", "event",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_trace_csv<W: Write>(out: W, trace: &[TraceRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in trace {
        w.write_record([
            r.t.to_string(),
            r.physical.position.x.to_string(),
            r.physical.position.y.to_string(),
            r.physical.heading.degrees().to_string(),
            r.virtual_pose.position.x.to_string(),
            r.virtual_pose.position.y.to_string(),
            r.virtual_pose.heading.degrees().to_string(),
            r.theta_acc.to_string(),
            r.theta_offset.to_string(),
            r.event.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn export_trace_csv(trace: &[TraceRecord], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let f = File::create(path).map_err(io_err(path))?;
    write_trace_csv(BufWriter::new(f), trace)
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |reason: String| HarnessError::MalformedTrace { line, reason };
        if rec.len() != HEADER.len() {
            return Err(bad(format!("expected {} fields, got {}", HEADER.len(), rec.len())));
        }
        let num = |i: usize| -> Result<f64, HarnessError> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| bad(format!("{}: not a number: {:?}", HEADER[i], &rec[i])))
        };
        let pose = |x, y, h| -> Result<Pose2, HarnessError> {
            Ok(Pose2 {
                position: Vec2::new(num(x)?, num(y)?),
                heading: Angle::from_degrees(num(h)?),
            })
        };
        out.push(TraceRecord {
            t: num(0)?,
            physical: pose(1, 2, 3)?,
            virtual_pose: pose(4, 5, 6)?,
            theta_acc: num(7)?,
            theta_offset: num(8)?,
            event: rec[9].parse::<TraceEvent>().map_err(bad)?,
        });
    }
    Ok(out)
}

pub fn export_metrics_json(metrics: &Metrics, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(metrics)?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}
