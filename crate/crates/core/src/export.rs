//! Presentation exports: CSV tables and static SVG plots.

use std::fmt::Write;

use crate::action::Trajectory;
use crate::kepler::KeplerDrive;

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,y\n");
    for (t, y) in traj.times().zip(&traj.values) {
        let _ = writeln!(out, "{t},{y}");
    }
    out
}

/// `t, x(t), ẋ(t)` on `[from, to]`; `ẋ` is left empty at collisions.
pub fn drive_csv(drive: &KeplerDrive, from: f64, to: f64, step: f64) -> String {
    let mut out = String::from("t,x,xdot\n");
    let count = ((to - from) / step + 1e-9).floor() as usize;
    for k in 0..=count {
        let t = from + k as f64 * step;
        let x = drive.x(t);
        match drive.xdot(t) {
            Ok(v) => {
                let _ = writeln!(out, "{t},{x},{v}");
            }
            Err(_) => {
                let _ = writeln!(out, "{t},{x},");
            }
        }
    }
    out
}

/// One polyline of a plot.
pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

impl<'a> Series<'a> {
    pub fn from_trajectory(label: &'a str, color: &'a str, traj: &Trajectory) -> Self {
        Self {
            label,
            color,
            points: traj.times().zip(traj.values.iter().copied()).collect(),
        }
    }
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const PAD: f64 = 40.0;

/// Line plot of `series` with a zero axis and ticks at the integers.
pub fn svg_plot(title: &str, series: &[Series<'_>]) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * PAD);
    let sy = |y: f64| HEIGHT - PAD - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{}" y1="{:.2}" x2="{}" y2="{:.2}" stroke="gray" stroke-width="0.5"/>"#,
        PAD,
        sy(0.0),
        WIDTH - PAD,
        sy(0.0)
    );
    let mut n = x0.ceil() as i64;
    while (n as f64) <= x1 {
        let x = sx(n as f64);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="gray" stroke-width="0.5"/>"#,
            sy(0.0) - 3.0,
            sy(0.0) + 3.0
        );
        n += 1;
    }
    for (k, s) in series.iter().enumerate() {
        let mut path = String::new();
        for &(x, y) in &s.points {
            let _ = write!(path, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
            s.color,
            path.trim_end()
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{}">{}</text>"#,
            PAD + 10.0,
            PAD + 14.0 * (k as f64 + 1.0),
            s.color,
            escape(s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
