use super::{HarnessError, Metrics, TraceRecord};
use crate::geometry::{Rect, Vec2};
use std::fmt::Write as _;
use std::path::Path;

const PHYSICAL_COLOR: &str = "#ff8c00";
const VIRTUAL_COLOR: &str = "#1f4fff";
const PTS_COLOR: &str = "#00c8c8";

fn points(trace: &[TraceRecord], virtual_path: bool) -> Vec<Vec2> {
    trace
        .iter()
        .map(|r| {
            if virtual_path {
                r.virtual_pose.position
            } else {
                r.physical.position
            }
        })
        .collect()
}

fn polyline(out: &mut String, pts: &[Vec2], color: &str, stroke: f64) {
    let coords: Vec<String> = pts.iter().map(|p| format!("{:.4},{:.4}", p.x, -p.y)).collect();
    let _ = writeln!(
        out,
        r#"  <polyline fill="none" stroke="{color}" stroke-width="{stroke:.4}" points="{}"/>"#,
        coords.join(" ")
    );
}

/// SVG document with the physical path (orange), the virtual path (blue)
/// and the tracked space (cyan). World y points up.
pub fn svg_string(trace: &[TraceRecord], pts: &Rect) -> Result<String, HarnessError> {
    if trace.is_empty() {
        return Err(HarnessError::EmptyTrace);
    }
    let phys = points(trace, false);
    let virt = points(trace, true);
    let (lo, hi) = (pts.min(), pts.max());
    let (mut x0, mut y0, mut x1, mut y1) = (lo.x, lo.y, hi.x, hi.y);
    for p in phys.iter().chain(&virt) {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let pad = 0.05 * (x1 - x0).max(y1 - y0);
    let (vx, vy) = (x0 - pad, -y1 - pad);
    let (vw, vh) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
    let span = vw.max(vh);
    let stroke = span / 400.0;
    let font = span / 40.0;

    let m = Metrics::from_trace(trace);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{vx:.4} {vy:.4} {vw:.4} {vh:.4}" width="800" height="{:.0}">"#,
        800.0 * vh / vw
    );
    let _ = writeln!(
        out,
        r#"  <rect x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}" fill="none" stroke="{PTS_COLOR}" stroke-width="{:.4}"/>"#,
        lo.x,
        -hi.y,
        hi.x - lo.x,
        hi.y - lo.y,
        stroke * 1.5
    );
    polyline(&mut out, &virt, VIRTUAL_COLOR, stroke);
    polyline(&mut out, &phys, PHYSICAL_COLOR, stroke);
    let lines = [
        format!("resets: {}", m.resets),
        format!("distance PTS: {:.2} m", m.distance_pts),
        format!("distance VE: {:.2} m", m.distance_ve),
        format!("total gain: {:.2} deg", m.total_abs_gain),
    ];
    let _ = writeln!(
        out,
        r#"  <text x="{:.4}" y="{:.4}" font-family="sans-serif" font-size="{font:.4}">"#,
        vx + font,
        vy + 1.5 * font
    );
    for (i, l) in lines.iter().enumerate() {
        let dy = if i == 0 { 0.0 } else { 1.2 * font };
        let _ = writeln!(out, r#"    <tspan x="{:.4}" dy="{dy:.4}">{l}</tspan>"#, vx + font);
    }
    out.push_str("  </text>\n</svg>\n");
    Ok(out)
}

pub fn render_svg(trace: &[TraceRecord], pts: &Rect, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let text = svg_string(trace, pts)?;
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}
