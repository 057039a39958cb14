//! Minimal SVG emission for arrangements and route overlays.
//!
//! Stroke darkness grows with log(speed / floor), so fast lines print
//! dark and lines at the floor print light. WALK segments are dashed.

use crate::arrangement::ArrangementGraph;
use crate::geodesics::{Route, SegmentKind};
use crate::geometry::Disk;
use crate::line_process::LineSample;

const LIGHT: u8 = 214;

pub struct SvgOptions {
    pub width_px: u32,
    pub line_width: f64,
    pub route_width: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            width_px: 720,
            line_width: 0.004,
            route_width: 0.010,
        }
    }
}

fn gray(v: f64, v_floor: f64, v_max: f64) -> String {
    let t = if v_max > v_floor {
        ((v / v_floor).ln() / (v_max / v_floor).ln()).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let g = (LIGHT as f64 * (1.0 - t)) as u8;
    format!("rgb({g},{g},{g})")
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

/// Render the chords of a sample clipped to a disk, with optional route
/// overlays. The viewBox covers the clip disk with a small margin; the
/// y-axis is flipped to mathematical orientation.
pub fn render(
    sample: &LineSample,
    clip: &Disk,
    routes: &[&Route],
    opts: &SvgOptions,
) -> String {
    let m = 0.03 * clip.radius;
    let x0 = clip.center.x - clip.radius - m;
    let y0 = clip.center.y - clip.radius - m;
    let side = 2.0 * (clip.radius + m);
    let stroke_w = opts.line_width * clip.radius;
    let route_w = opts.route_width * clip.radius;

    let v_floor = sample.v_floor;
    let v_max = sample
        .lines
        .iter()
        .map(|ml| ml.v)
        .fold(v_floor, f64::max);

    let mut body = String::new();
    body.push_str(&format!(
        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"white\" stroke=\"rgb(190,190,190)\" stroke-width=\"{}\"/>\n",
        fmt(clip.center.x),
        fmt(clip.center.y),
        fmt(clip.radius),
        fmt(stroke_w)
    ));
    for ml in &sample.lines {
        if let Some((t0, t1)) = ml.line.chord_in_disk(clip) {
            let a = ml.line.point_at(t0);
            let b = ml.line.point_at(t1);
            body.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"{}\"/>\n",
                fmt(a.x),
                fmt(a.y),
                fmt(b.x),
                fmt(b.y),
                gray(ml.v, v_floor, v_max),
                fmt(stroke_w)
            ));
        }
    }
    for route in routes {
        for seg in &route.segments {
            let dash = match seg.kind {
                SegmentKind::Walk => format!(" stroke-dasharray=\"{}\"", fmt(3.0 * route_w)),
                SegmentKind::Line => String::new(),
            };
            body.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"rgb(178,34,34)\" stroke-width=\"{}\" stroke-linecap=\"round\"{}/>\n",
                fmt(seg.from.x),
                fmt(seg.from.y),
                fmt(seg.to.x),
                fmt(seg.to.y),
                fmt(route_w),
                dash
            ));
        }
        if let (Some(a), Some(b)) = (route.start(), route.end()) {
            for p in [a, b] {
                body.push_str(&format!(
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"rgb(178,34,34)\"/>\n",
                    fmt(p.x),
                    fmt(p.y),
                    fmt(1.6 * route_w)
                ));
            }
        }
    }

    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{w}\" viewBox=\"{} {} {} {}\">\n<g transform=\"translate(0,{}) scale(1,-1)\">\n{body}</g>\n</svg>\n",
        fmt(x0),
        fmt(y0),
        fmt(side),
        fmt(side),
        fmt(2.0 * y0 + side),
        w = opts.width_px,
    )
}

/// Render an arrangement graph (edges colored by speed), mainly for
/// debugging fixtures.
pub fn render_graph(graph: &ArrangementGraph, opts: &SvgOptions) -> String {
    let clip = graph.clip;
    let m = 0.03 * clip.radius;
    let x0 = clip.center.x - clip.radius - m;
    let y0 = clip.center.y - clip.radius - m;
    let side = 2.0 * (clip.radius + m);
    let stroke_w = opts.line_width * clip.radius;
    let v_floor = graph
        .lines()
        .iter()
        .map(|ml| ml.v)
        .fold(f64::INFINITY, f64::min)
        .min(1.0);
    let v_max = graph.lines().iter().map(|ml| ml.v).fold(v_floor, f64::max);
    let mut body = String::new();
    for e in &graph.edges {
        let a = graph.vertices[e.u].point;
        let b = graph.vertices[e.v].point;
        let dash = if e.line.is_none() {
            format!(" stroke-dasharray=\"{}\"", fmt(3.0 * stroke_w))
        } else {
            String::new()
        };
        body.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"{}\"{}/>\n",
            fmt(a.x),
            fmt(a.y),
            fmt(b.x),
            fmt(b.y),
            gray(e.speed, v_floor, v_max),
            fmt(stroke_w),
            dash
        ));
    }
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{w}\" viewBox=\"{} {} {} {}\">\n<g transform=\"translate(0,{}) scale(1,-1)\">\n{body}</g>\n</svg>\n",
        fmt(x0),
        fmt(y0),
        fmt(side),
        fmt(side),
        fmt(2.0 * y0 + side),
        w = opts.width_px,
    )
}

/// Structural well-formedness check used by tests and the CLI: every
/// `<line>` endpoint must sit inside the declared viewBox and the tag
/// structure must balance.
pub fn check_well_formed(svg: &str) -> Result<(), String> {
    if !svg.starts_with("<?xml") {
        return Err("missing XML declaration".into());
    }
    if svg.matches("<svg").count() != 1 || svg.matches("</svg>").count() != 1 {
        return Err("unbalanced svg element".into());
    }
    if svg.matches("<g").count() != svg.matches("</g>").count() {
        return Err("unbalanced groups".into());
    }
    let vb: Vec<f64> = svg
        .split("viewBox=\"")
        .nth(1)
        .and_then(|rest| rest.split('"').next())
        .ok_or("missing viewBox")?
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if vb.len() != 4 {
        return Err("viewBox needs 4 numbers".into());
    }
    let (x0, y0, w, h) = (vb[0], vb[1], vb[2], vb[3]);
    let tol = 1e-6 * w.max(h);
    for piece in svg.split("<line ").skip(1) {
        let tag = piece.split("/>").next().ok_or("unterminated line tag")?;
        let attr = |name: &str| -> Result<f64, String> {
            tag.split(&format!("{name}=\""))
                .nth(1)
                .and_then(|rest| rest.split('"').next())
                .ok_or(format!("missing {name}"))?
                .parse::<f64>()
                .map_err(|e| e.to_string())
        };
        for (xk, yk) in [("x1", "y1"), ("x2", "y2")] {
            let x = attr(xk)?;
            let y = attr(yk)?;
            if x < x0 - tol || x > x0 + w + tol || y < y0 - tol || y > y0 + h + tol {
                return Err(format!("point ({x}, {y}) escapes the viewBox"));
            }
        }
    }
    Ok(())
}
