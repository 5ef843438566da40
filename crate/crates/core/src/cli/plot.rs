//! Static SVG plots of an analysis channel with its fiducial markers, plus a
//! CSV of the plotted points.
//!
//! Long signals are decimated by a uniform stride so that at most
//! `max_points` samples reach the polyline: sample `i` is kept when
//! `i % stride == 0`, with `stride = ceil(n / max_points)`. Markers are
//! placed at their exact sample positions regardless of decimation.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fiducial::FiducialSet;

pub const DEFAULT_MAX_POINTS: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub title: String,
    pub max_points: usize,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            title: String::new(),
            max_points: DEFAULT_MAX_POINTS,
            width: 1200.0,
            height: 320.0,
        }
    }
}

const MARGIN: f64 = 30.0;

pub fn decimation_stride(n: usize, max_points: usize) -> usize {
    n.div_ceil(max_points.max(1)).max(1)
}

/// Sample indices that make it into the polyline.
pub fn plotted_indices(n: usize, max_points: usize) -> Vec<usize> {
    (0..n).step_by(decimation_stride(n, max_points)).collect()
}

struct Frame {
    n: usize,
    lo: f64,
    hi: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn x(&self, i: usize) -> f64 {
        let span = (self.n.max(2) - 1) as f64;
        MARGIN + (self.w - 2.0 * MARGIN) * i as f64 / span
    }

    fn y(&self, v: f64) -> f64 {
        MARGIN + (self.h - 2.0 * MARGIN) * (self.hi - v) / (self.hi - self.lo)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(out: &mut String, frame: &Frame, values: &[f64], idx: &[usize], class: &str, stroke: &str) {
    let _ = write!(out, "<polyline class=\"{class}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1\" points=\"");
    for (k, &i) in idx.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{:.2},{:.2}", frame.x(i), frame.y(values[i]));
    }
    out.push_str("\"/>\n");
}

/// Render the plot. Q, S and P markers are drawn only where present; P only
/// when it passed the prominence test.
pub fn render_svg(
    signal: &[f64],
    beats: &[FiducialSet],
    baseline: Option<&[f64]>,
    opts: &PlotOptions,
) -> Result<String> {
    if signal.is_empty() {
        return Err(Error::Config("cannot plot an empty record".into()));
    }
    if baseline.is_some_and(|b| b.len() != signal.len()) {
        return Err(Error::Config("baseline length differs from signal".into()));
    }
    if let Some(b) = beats.iter().find(|b| b.r >= signal.len()) {
        return Err(Error::Config(format!("R marker {} outside signal", b.r)));
    }
    let all = signal.iter().chain(baseline.unwrap_or(&[]));
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let frame = Frame {
        n: signal.len(),
        lo,
        hi,
        w: opts.width,
        h: opts.height,
    };
    let idx = plotted_indices(signal.len(), opts.max_points);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = opts.width,
        h = opts.height
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    if !opts.title.is_empty() {
        let _ = writeln!(s, "<text x=\"{MARGIN}\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">{}</text>", escape(&opts.title));
    }
    polyline(&mut s, &frame, signal, &idx, "signal", "black");
    if let Some(b) = baseline {
        polyline(&mut s, &frame, b, &idx, "baseline", "#1f77b4");
    }
    let mut marker = |i: usize, class: &str, colour: &str| {
        let _ = writeln!(
            s,
            "<circle class=\"{class}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{colour}\"/>",
            frame.x(i),
            frame.y(signal[i])
        );
    };
    for b in beats {
        marker(b.r, "r-peak", "#d62728");
        if let Some(q) = b.q {
            marker(q, "q-point", "#2ca02c");
        }
        if let Some(sp) = b.s {
            marker(sp, "s-point", "#9467bd");
        }
        if let (Some(p), true) = (b.p, b.p_present) {
            marker(p, "p-wave", "#ff7f0e");
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// The decimated points as `index,time_s,mv` rows, with a `baseline`
/// column when a baseline is given.
pub fn points_csv(signal: &[f64], fs: f64, baseline: Option<&[f64]>, max_points: usize) -> String {
    let mut s = String::from("index,time_s,mv");
    if baseline.is_some() {
        s.push_str(",baseline");
    }
    s.push('\n');
    for i in plotted_indices(signal.len(), max_points) {
        let _ = write!(s, "{i},{},{}", i as f64 / fs, signal[i]);
        if let Some(b) = baseline {
            let _ = write!(s, ",{}", b[i]);
        }
        s.push('\n');
    }
    s
}

/// Write `svg_path` and a companion CSV next to it (same stem, `.csv`).
/// Returns the CSV path.
pub fn emit_plot(
    signal: &[f64],
    fs: f64,
    beats: &[FiducialSet],
    baseline: Option<&[f64]>,
    opts: &PlotOptions,
    svg_path: &Path,
) -> Result<PathBuf> {
    let svg = render_svg(signal, beats, baseline, opts)?;
    let csv_path = svg_path.with_extension("csv");
    fs::write(svg_path, svg).map_err(|e| Error::io(svg_path, e))?;
    fs::write(&csv_path, points_csv(signal, fs, baseline, opts.max_points)).map_err(|e| Error::io(&csv_path, e))?;
    Ok(csv_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beat(r: usize) -> FiducialSet {
        FiducialSet {
            r,
            q: Some(r - 2),
            s: Some(r + 2),
            p: None,
            p_present: false,
        }
    }

    #[test]
    fn three_beats_three_r_markers() {
        let sig: Vec<f64> = (0..300).map(|i| ((i % 100) as f64 - 50.0).abs()).collect();
        let svg = render_svg(&sig, &[beat(50), beat(150), beat(250)], None, &PlotOptions::default()).unwrap();
        assert_eq!(svg.matches("class=\"r-peak\"").count(), 3);
        assert_eq!(svg.matches("class=\"q-point\"").count(), 3);
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn no_beats_polyline_only() {
        let svg = render_svg(&[0.0, 1.0, 0.5], &[], None, &PlotOptions::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(!svg.contains("<circle"));
    }

    #[test]
    fn identity_when_short() {
        let sig = [0.25, -0.5, 1.0];
        let csv = points_csv(&sig, 2.0, None, 5000);
        let mv: Vec<f64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
        assert_eq!(mv, sig);
    }

    #[test]
    fn stride_caps_point_count() {
        assert_eq!(plotted_indices(12_001, 5000).len(), 4001);
        assert_eq!(decimation_stride(12_001, 5000), 3);
        assert!(plotted_indices(10_000, 5000).len() <= 5000);
    }

    #[test]
    fn empty_signal_rejected() {
        assert!(render_svg(&[], &[], None, &PlotOptions::default()).is_err());
    }

    #[test]
    fn baseline_adds_second_trace() {
        let sig = [0.0, 1.0, 0.0];
        let svg = render_svg(&sig, &[], Some(&[0.1, 0.1, 0.1]), &PlotOptions::default()).unwrap();
        assert!(svg.contains("class=\"baseline\""));
    }
}
