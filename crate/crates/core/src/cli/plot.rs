//! Static SVG rendering of CSV artifacts. Output depends only on the input
//! bytes: fixed canvas, fixed font stack, fixed number formatting.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{read_columns, read_events_csv};
use crate::trajectories::{JumpEvent, JumpKind};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const FONT: &str = "font-family=\"DejaVu Sans, Arial, sans-serif\" font-size=\"12\"";

struct Frame {
    left: f64,
    top: f64,
    w: f64,
    h: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.h - (y - self.y.0) / (self.y.1 - self.y.0) * self.h
    }
}

fn range(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

struct Svg {
    body: String,
}

impl Svg {
    fn new() -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        let _ = writeln!(body, "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
        Self { body }
    }

    fn axes(&mut self, f: &Frame, xlabel: &str, ylabel: &str) {
        let b = &mut self.body;
        let _ = writeln!(b, "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>", f.left, f.top, f.w, f.h);
        for t in nice_ticks(f.x.0, f.x.1) {
            let x = f.px(t);
            let y = f.top + f.h;
            let _ = writeln!(b, "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", y + 5.0);
            let _ = writeln!(b, "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {FONT}>{}</text>", y + 18.0, fmt_tick(t));
        }
        for t in nice_ticks(f.y.0, f.y.1) {
            let y = f.py(t);
            let _ = writeln!(b, "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>", f.left - 5.0, f.left);
            let _ = writeln!(b, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" {FONT}>{}</text>", f.left - 8.0, y + 4.0, fmt_tick(t));
        }
        let _ = writeln!(b, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" {FONT}>{xlabel}</text>", f.left + f.w / 2.0, f.top + f.h + 36.0);
        let (lx, ly) = (f.left - 48.0, f.top + f.h / 2.0);
        let _ = writeln!(b, "<text x=\"{lx:.2}\" y=\"{ly:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 {lx:.2} {ly:.2})\" {FONT}>{ylabel}</text>");
    }

    fn polyline(&mut self, f: &Frame, xs: &[f64], ys: &[f64], colour: &str) {
        let mut pts = String::new();
        for (x, y) in xs.iter().zip(ys) {
            if x.is_finite() && y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", f.px(*x), f.py(*y));
            }
        }
        let _ = writeln!(self.body, "<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.2\"/>", pts.trim_end());
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn frame(top: f64, h: f64, x: (f64, f64), y: (f64, f64)) -> Frame {
    Frame { left: 80.0, top, w: WIDTH - 110.0, h, x, y }
}

fn correlation_plot(header: &[String], cols: &[Vec<f64>]) -> String {
    let (tau, v) = (&cols[0], &cols[1]);
    let is_h = header[1] == "h";
    let mut yr = range(v);
    if is_h {
        yr = (yr.0.min(-0.1), yr.1.max(2.1));
    }
    let f = frame(30.0, HEIGHT - 90.0, range(tau), yr);
    let mut s = Svg::new();
    if is_h {
        let (y_top, y_bot) = (f.py(2.0), f.py(0.0));
        let _ = writeln!(
            s.body,
            "<rect x=\"{:.2}\" y=\"{y_top:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#d9d9d9\" fill-opacity=\"0.6\"/>",
            f.left,
            f.w,
            y_bot - y_top
        );
    }
    if f.x.0 < 0.0 && f.x.1 > 0.0 {
        let x = f.px(0.0);
        let _ = writeln!(s.body, "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>", f.top, f.top + f.h);
    }
    let neg: Vec<usize> = (0..tau.len()).filter(|&i| tau[i] <= 0.0).collect();
    let pos: Vec<usize> = (0..tau.len()).filter(|&i| tau[i] >= 0.0).collect();
    for (idx, colour) in [(neg, "#1f77b4"), (pos, "#d62728")] {
        let xs: Vec<f64> = idx.iter().map(|&i| tau[i]).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
        s.polyline(&f, &xs, &ys, colour);
    }
    s.axes(&f, "κτ", &header[1]);
    s.finish()
}

fn line_plot(header: &[String], cols: &[Vec<f64>]) -> String {
    let f = frame(30.0, HEIGHT - 90.0, range(&cols[0]), range(&cols[1]));
    let mut s = Svg::new();
    s.polyline(&f, &cols[0], &cols[1], "#1f77b4");
    s.axes(&f, &header[0], &header[1]);
    s.finish()
}

fn colour_ramp(u: f64) -> String {
    // blue → white → red
    let u = u.clamp(0.0, 1.0);
    let (r, g, b) = if u < 0.5 {
        let k = u / 0.5;
        (40.0 + 215.0 * k, 70.0 + 185.0 * k, 200.0 + 55.0 * k)
    } else {
        let k = (u - 0.5) / 0.5;
        (255.0 - 55.0 * k, 255.0 - 205.0 * k, 255.0 - 215.0 * k)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Filled contour with ten bands, symmetric about `W = 0`.
fn wigner_plot(cols: &[Vec<f64>]) -> Result<String> {
    let (xs, ys, w) = (&cols[0], &cols[1], &cols[2]);
    let nx = (1..xs.len()).find(|&i| ys[i] != ys[0]).unwrap_or(xs.len());
    if nx < 2 || xs.len() % nx != 0 {
        return Err(Error::Artifact("Wigner CSV is not a rectangular grid".into()));
    }
    let ny = xs.len() / nx;
    let side = HEIGHT - 90.0;
    let f = Frame { left: 80.0, top: 30.0, w: side, h: side, x: (xs[0], xs[nx - 1]), y: (ys[0], ys[xs.len() - 1]) };
    let wmax = w.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let bands = 10.0;
    let mut s = Svg::new();
    let dx = (f.x.1 - f.x.0) / (nx - 1) as f64;
    let dy = (f.y.1 - f.y.0) / (ny - 1) as f64;
    for iy in 0..ny {
        for ix in 0..nx {
            let v = w[iy * nx + ix];
            let level = ((v / wmax + 1.0) / 2.0 * bands).floor().min(bands - 1.0);
            let u = (level + 0.5) / bands;
            let x0 = f.px(xs[ix] - dx / 2.0).max(f.left);
            let x1 = f.px(xs[ix] + dx / 2.0).min(f.left + f.w);
            let y0 = f.py(ys[iy * nx] + dy / 2.0).max(f.top);
            let y1 = f.py(ys[iy * nx] - dy / 2.0).min(f.top + f.h);
            let _ = writeln!(s.body, "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>", x1 - x0, y1 - y0, colour_ramp(u));
        }
    }
    s.axes(&f, "x", "y");
    let _ = writeln!(s.body, "<text x=\"{:.2}\" y=\"{:.2}\" {FONT}>max |W| = {:.4}</text>", f.left + f.w + 20.0, f.top + 14.0, wmax);
    Ok(s.finish())
}

fn trajectory_plot(cols: &[Vec<f64>], events: &[JumpEvent]) -> String {
    let t = &cols[0];
    let panel = (HEIGHT - 110.0) / 2.0;
    let top = frame(30.0, panel, range(t), range(&cols[2]));
    let bottom = frame(30.0 + panel + 50.0, panel, range(t), range(&cols[3]));
    let mut s = Svg::new();
    s.polyline(&top, t, &cols[2], "#1f77b4");
    s.polyline(&bottom, t, &cols[3], "#2ca02c");
    for e in events {
        if e.time < top.x.0 || e.time > top.x.1 {
            continue;
        }
        let x = top.px(e.time);
        match e.kind {
            JumpKind::Spontaneous => {
                let y = top.top + 8.0;
                let _ = writeln!(
                    s.body,
                    "<polygon points=\"{x:.2},{:.2} {:.2},{y:.2} {x:.2},{:.2} {:.2},{y:.2}\" fill=\"#d62728\"/>",
                    y - 5.0,
                    x + 4.0,
                    y + 5.0,
                    x - 4.0
                );
            }
            JumpKind::Apd => {
                let _ = writeln!(s.body, "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"1.5\"/>", top.top, top.top + 14.0);
            }
        }
    }
    s.axes(&top, "κt", "⟨a†a⟩_REC");
    s.axes(&bottom, "κt", "⟨A_θ⟩_REC");
    s.finish()
}

/// Renders a CSV artifact to `dst`. Trajectory tables pick up jump markers
/// from a sibling `<stem>_events.csv`.
pub fn render_plot(src: &Path, dst: &Path) -> Result<()> {
    let (header, cols) = read_columns(File::open(src)?)?;
    if cols.first().is_none_or(|c| c.is_empty()) {
        return Err(Error::Artifact(format!("{} has no rows", src.display())));
    }
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let svg = match h.as_slice() {
        ["tau", "h" | "g2", ..] => correlation_plot(&header, &cols),
        ["x", "y", "w"] => wigner_plot(&cols)?,
        ["t", "delta_omega", "n_cond", "A_cond", "I_theta"] => {
            let stem = src.file_stem().and_then(|s| s.to_str()).unwrap_or("");
            let ev_path = src.with_file_name(format!("{stem}_events.csv"));
            let events = if ev_path.exists() { read_events_csv(File::open(ev_path)?)? } else { Vec::new() };
            trajectory_plot(&cols, &events)
        }
        [_, _, ..] => line_plot(&header, &cols),
        _ => return Err(Error::Artifact(format!("cannot plot {} with header {header:?}", src.display()))),
    };
    fs::write(dst, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_the_range() {
        let t = nice_ticks(-4.2, 4.2);
        assert_eq!(t, vec![-4.0, -2.0, 0.0, 2.0, 4.0]);
        assert_eq!(fmt_tick(0.5), "0.5");
        assert_eq!(colour_ramp(0.5), "#ffffff");
    }

    #[test]
    fn rendering_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("h.csv");
        fs::write(&src, "tau,h\n-1,1.2\n0,-0.3\n1,1.1\n").unwrap();
        let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
        render_plot(&src, &a).unwrap();
        render_plot(&src, &b).unwrap();
        let text = fs::read_to_string(&a).unwrap();
        assert_eq!(text, fs::read_to_string(&b).unwrap());
        assert!(text.contains("#d9d9d9"));
        fs::write(&src, "tau,h\n").unwrap();
        assert!(matches!(render_plot(&src, &a), Err(Error::Artifact(_))));
    }
}
