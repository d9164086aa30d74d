use std::fmt::Write as _;

use crate::error::{CliError, CliResult};
use crate::fmt::fmt_g;

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 44.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

pub type Pt = (f64, f64);

#[derive(Debug, Clone)]
pub enum Plot {
    /// Points colored by group.
    Scatter { points: Vec<Pt>, groups: Option<Vec<usize>> },
    /// Named polylines.
    Lines { series: Vec<(String, Vec<Pt>)> },
    /// A loss curve with its minimizer marked.
    CurveArgmin { points: Vec<Pt>, argmin: usize },
    /// One polyline per path over a faint background sample.
    Trajectories { paths: Vec<Vec<Pt>>, background: Vec<Pt> },
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit<'a>(pts: impl Iterator<Item = &'a Pt>) -> Option<Self> {
        let mut f = Frame { x0: f64::INFINITY, x1: f64::NEG_INFINITY, y0: f64::INFINITY, y1: f64::NEG_INFINITY };
        for &(x, y) in pts.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if !f.x0.is_finite() {
            return None;
        }
        if f.x1 - f.x0 < 1e-12 {
            f.x0 -= 0.5;
            f.x1 += 0.5;
        }
        if f.y1 - f.y0 < 1e-12 {
            f.y0 -= 0.5;
            f.y1 += 0.5;
        }
        Some(f)
    }

    fn map(&self, (x, y): Pt) -> (String, String) {
        let px = MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN);
        let py = H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN);
        (fmt_g(px, 6), fmt_g(py, 6))
    }

    fn polyline(&self, pts: &[Pt], color: &str) -> String {
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|p| {
                let (x, y) = self.map(*p);
                format!("{x},{y}")
            })
            .collect();
        format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n", coords.join(" "))
    }

    fn circle(&self, p: Pt, r: f64, color: &str, opacity: f64) -> String {
        let (x, y) = self.map(p);
        format!("<circle cx=\"{x}\" cy=\"{y}\" r=\"{}\" fill=\"{color}\" fill-opacity=\"{}\"/>\n", fmt_g(r, 6), fmt_g(opacity, 6))
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Standalone SVG 1.1. Identical inputs give identical bytes.
pub fn render(plot: &Plot, title: &str) -> CliResult<String> {
    let all: Vec<Pt> = match plot {
        Plot::Scatter { points, .. } | Plot::CurveArgmin { points, .. } => points.clone(),
        Plot::Lines { series } => series.iter().flat_map(|(_, p)| p.iter().copied()).collect(),
        Plot::Trajectories { paths, background } => paths.iter().flatten().chain(background).copied().collect(),
    };
    let frame = Frame::fit(all.iter()).ok_or_else(|| CliError::validation("nothing finite to plot"))?;
    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>",
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        escape(title)
    );
    let label = |x: f64, y: f64, anchor: &str, v: f64| {
        format!(
            "<text x=\"{x}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"{anchor}\">{}</text>\n",
            fmt_g(v, 6)
        )
    };
    s += &label(MARGIN, H - MARGIN + 14.0, "start", frame.x0);
    s += &label(W - MARGIN, H - MARGIN + 14.0, "end", frame.x1);
    s += &label(MARGIN - 4.0, H - MARGIN, "end", frame.y0);
    s += &label(MARGIN - 4.0, MARGIN + 8.0, "end", frame.y1);
    match plot {
        Plot::Scatter { points, groups } => {
            for (i, p) in points.iter().enumerate() {
                let g = groups.as_ref().map_or(0, |g| g[i]);
                s += &frame.circle(*p, 2.5, PALETTE[g % PALETTE.len()], 0.8);
            }
        }
        Plot::Lines { series } => {
            for (i, (name, pts)) in series.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                s += &frame.polyline(pts, color);
                let _ = writeln!(
                    s,
                    "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"{color}\">{}</text>",
                    MARGIN + 6.0,
                    MARGIN + 14.0 + 12.0 * i as f64,
                    escape(name)
                );
            }
        }
        Plot::CurveArgmin { points, argmin } => {
            s += &frame.polyline(points, PALETTE[0]);
            s += &frame.circle(points[*argmin], 4.0, PALETTE[1], 1.0);
        }
        Plot::Trajectories { paths, background } => {
            for p in background {
                s += &frame.circle(*p, 1.5, "#999", 0.5);
            }
            for (i, path) in paths.iter().enumerate() {
                s += &frame.polyline(path, PALETTE[i % PALETTE.len()]);
            }
        }
    }
    s += "</svg>\n";
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_counts() {
        let one = render(&Plot::Scatter { points: vec![(1.0, 2.0)], groups: None }, "p").unwrap();
        assert_eq!(one.matches("<circle").count(), 1);
        let paths: Vec<Vec<Pt>> = (0..3).map(|q| (0..5).map(|s| (s as f64, q as f64 * s as f64)).collect()).collect();
        let t = render(&Plot::Trajectories { paths, background: vec![] }, "t").unwrap();
        assert_eq!(t.matches("<polyline").count(), 3);
    }

    #[test]
    fn deterministic() {
        let plot = Plot::CurveArgmin { points: vec![(0.1, 3.0), (0.2, 1.0), (0.4, 2.0)], argmin: 1 };
        assert_eq!(render(&plot, "c").unwrap(), render(&plot, "c").unwrap());
    }
}
