//! Minimal SVG plots: time series polylines and scatter plots.

use std::fmt::Write;

use opinion_core::dynamics::Trajectory;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
const MAX_POINTS: usize = 1500;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (mut x0, mut x1) = bounds(xs);
        let (mut y0, mut y1) = bounds(ys);
        if x1 <= x0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 <= y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        Self {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

fn header(out: &mut String, frame: &Frame, title: &str, xlabel: &str, ylabel: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = write!(
        out,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    if frame.y0 < 0.0 && frame.y1 > 0.0 {
        let y = frame.py(0.0);
        let _ = write!(out, r##"<line x1="{l}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="#bbbbbb"/>"##);
    }
    let _ = write!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, MARGIN / 2.0, escape(title));
    let _ = write!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(xlabel));
    let _ = write!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(ylabel)
    );
    for (v, x, anchor) in [(frame.x0, l, "start"), (frame.x1, r, "end")] {
        let _ = write!(out, r#"<text x="{x}" y="{}" text-anchor="{anchor}">{v:.3}</text>"#, b + 16.0);
    }
    for (v, y) in [(frame.y0, b), (frame.y1, t + 10.0)] {
        let _ = write!(out, r#"<text x="{}" y="{y}" text-anchor="end">{v:.3}</text>"#, l - 4.0);
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One polyline per agent.
pub fn time_series(traj: &Trajectory, title: &str) -> String {
    let stride = traj.samples.len().div_ceil(MAX_POINTS).max(1);
    let picked: Vec<_> = traj
        .samples
        .iter()
        .enumerate()
        .filter(|(k, _)| k % stride == 0 || *k + 1 == traj.samples.len())
        .map(|(_, s)| s)
        .collect();
    let frame = Frame::fit(
        picked.iter().map(|s| s.t),
        picked.iter().flat_map(|s| s.x.iter().copied()),
    );
    let mut out = String::new();
    header(&mut out, &frame, title, "t", "x_i");
    let n = picked.first().map(|s| s.x.len()).unwrap_or(0);
    for i in 0..n {
        let _ = write!(out, r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points=""#, PALETTE[i % PALETTE.len()]);
        for s in &picked {
            let _ = write!(out, "{:.2},{:.2} ", frame.px(s.t), frame.py(s.x[i]));
        }
        out.push_str("\"/>");
    }
    for ev in &traj.events {
        let x = frame.px(ev.t);
        let _ = write!(
            out,
            r##"<line x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{}" stroke="#444444" stroke-dasharray="4 3"/>"##,
            HEIGHT - MARGIN
        );
    }
    out.push_str("</svg>\n");
    out
}

/// A labelled point series.
pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Scatter plot with one colour per series.
pub fn scatter(series: &[Series], title: &str, xlabel: &str, ylabel: &str) -> String {
    let frame = Frame::fit(
        series.iter().flat_map(|s| s.points.iter().map(|p| p.0)),
        series.iter().flat_map(|s| s.points.iter().map(|p| p.1)),
    );
    let mut out = String::new();
    header(&mut out, &frame, title, xlabel, ylabel);
    for (j, s) in series.iter().enumerate() {
        let colour = PALETTE[j % PALETTE.len()];
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                let _ = write!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{colour}"/>"#, frame.px(x), frame.py(y));
            }
        }
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 16.0 * (j as f64 + 1.0),
            escape(s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_is_well_formed() {
        let s = scatter(
            &[Series {
                label: "a<b",
                points: vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, -1.0)],
            }],
            "t",
            "u",
            "p",
        );
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains("a&lt;b"));
    }
}
