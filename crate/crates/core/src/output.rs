//! CSV tables and dependency-free SVG plots.
//!
//! Numbers are written with Rust's locale-independent `{:e}` formatting at
//! fixed precision, so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::Result;
use crate::geometry::ParticleBoundary;
use crate::shape_optim::AscentTrajectory;
use crate::sweep::{Peak, SweepPoint};

pub const SWEEP_HEADER: &str =
    "wavelength_nm,re_alpha,im_alpha,abs_alpha,re_z,im_z,dominant_mode_index,dominant_mode_lambda";
pub const REFLECTION_HEADER: &str = "wavelength_nm,re_r,im_r,abs_r";
/// Radial Fourier modes logged per component in trajectory files.
pub const TRAJECTORY_MODES: usize = 8;

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn timestamp_line() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated at unix time {secs}\n")
}

/// Sweep table with peaks appended as comment lines.
pub fn sweep_csv(points: &[SweepPoint], peaks: &[Peak], timestamp: bool) -> String {
    let mut s = String::new();
    if timestamp {
        s.push_str(&timestamp_line());
    }
    s.push_str(SWEEP_HEADER);
    s.push('\n');
    for p in points {
        match p {
            Ok(r) => {
                let a = r.alpha_inf;
                let z = r.impedance_z();
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    num(r.wavelength_nm),
                    num(a.re),
                    num(a.im),
                    num(a.norm()),
                    num(z.re),
                    num(z.im),
                    r.dominant_mode_index,
                    num(r.dominant_mode_lambda)
                );
            }
            Err((wl, _)) => {
                let _ = writeln!(s, "{},NaN,NaN,NaN,NaN,NaN,-1,NaN", num(*wl));
            }
        }
    }
    for p in points {
        if let Err((wl, e)) = p {
            let _ = writeln!(s, "# error wavelength_nm={} message={}", num(*wl), e);
        }
    }
    for p in peaks {
        let _ = writeln!(
            s,
            "# peak wavelength_nm={} abs_alpha={} prominence={} dominant_mode_index={} dominant_mode_lambda={}",
            num(p.wavelength_nm),
            num(p.value),
            num(p.prominence),
            p.dominant_mode_index,
            num(p.dominant_mode_lambda)
        );
    }
    s
}

pub fn reflection_csv(rows: &[(f64, Option<Complex64>)], timestamp: bool) -> String {
    let mut s = String::new();
    if timestamp {
        s.push_str(&timestamp_line());
    }
    s.push_str(REFLECTION_HEADER);
    s.push('\n');
    for &(wl, r) in rows {
        match r {
            Some(r) => {
                let _ = writeln!(s, "{},{},{},{}", num(wl), num(r.re), num(r.im), num(r.norm()));
            }
            None => {
                let _ = writeln!(s, "{},NaN,NaN,NaN", num(wl));
            }
        }
    }
    s
}

/// Trajectory table: iteration, J, gradient norm, step size, `α∞`, and the
/// radial Fourier description (centroid, cosine/sine coefficients) of each
/// component.
pub fn trajectory_csv(traj: &AscentTrajectory, timestamp: bool) -> String {
    let mut s = String::new();
    if timestamp {
        s.push_str(&timestamp_line());
    }
    let ncomp = traj.records[0].boundary.n_components();
    s.push_str("iteration,j,gradient_norm,step_size,re_alpha,im_alpha");
    for c in 0..ncomp {
        let _ = write!(s, ",c{c}_cx,c{c}_cy,c{c}_a0");
        for m in 1..=TRAJECTORY_MODES {
            let _ = write!(s, ",c{c}_a{m},c{c}_b{m}");
        }
    }
    s.push('\n');
    for r in &traj.records {
        let _ = write!(
            s,
            "{},{},{},{},{},{}",
            r.iteration,
            num(r.j),
            num(r.gradient_norm),
            num(r.step_size),
            num(r.alpha_inf.re),
            num(r.alpha_inf.im)
        );
        for curve in r.boundary.curves() {
            for v in curve.radial_fourier(TRAJECTORY_MODES) {
                let _ = write!(s, ",{}", num(v));
            }
        }
        s.push('\n');
    }
    let _ = writeln!(s, "# status {}", traj.status.as_str());
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(contents.as_bytes())?;
    f.flush()?;
    Ok(())
}

/// A polyline series for [`line_plot`].
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 55.0); // left, right, top, bottom

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 6);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line plot with axes, ticks and a legend.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0 < x1) {
        x0 = if x0.is_finite() { x0 - 1.0 } else { 0.0 };
        x1 = x0 + 2.0;
    }
    if !(y0 < y1) {
        y0 = if y0.is_finite() { y0 - 1.0 } else { 0.0 };
        y1 = y0 + 2.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let (l, r, t, b) = MARGIN;
    let pw = WIDTH - l - r;
    let ph = HEIGHT - t - b;
    let sx = |x: f64| l + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| t + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(s, r#"<rect x="{l}" y="{t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for x in ticks(x0, x1) {
        let px = sx(x);
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, t + ph, t + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, t + ph + 18.0, tick_label(x));
    }
    for y in ticks(y0, y1) {
        let py = sy(y);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(s, r##"<line x1="{l}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/>"##, l + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, l - 8.0, py + 4.0, tick_label(y));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, l + pw / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        t + ph / 2.0,
        t + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut segment = Vec::new();
        let flush = |seg: &mut Vec<String>, s: &mut String| {
            if seg.len() > 1 {
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, seg.join(" "));
            }
            seg.clear();
        };
        for &(x, y) in &ser.points {
            if x.is_finite() && y.is_finite() {
                segment.push(format!("{:.2},{:.2}", sx(x), sy(y)));
            } else {
                flush(&mut segment, &mut s);
            }
        }
        flush(&mut segment, &mut s);
        let ly = t + 16.0 + 16.0 * i as f64;
        let lx = l + pw - 150.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

/// Boundaries drawn in the unit cell `[−½, ½] × [0, 1]` (extended upward if needed).
pub fn boundary_plot(title: &str, shapes: &[(&str, &ParticleBoundary)]) -> String {
    let top = shapes
        .iter()
        .flat_map(|(_, b)| b.nodes().iter().map(|n| n.point.x2))
        .fold(1.0f64, f64::max);
    let size = 460.0;
    let (ox, oy) = (40.0, 40.0);
    let scale = size / top.max(1.0);
    let sx = |x: f64| ox + (x + 0.5) * scale;
    let sy = |y: f64| oy + (top - y) * scale;
    let mut s = String::new();
    let w = size + 2.0 * ox + 140.0;
    let h = top * scale + 2.0 * oy;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, ox + scale / 2.0, escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#888888" stroke-dasharray="4 3"/>"##,
        sx(-0.5),
        sy(top),
        scale,
        top * scale
    );
    let _ = writeln!(s, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="3"/>"#, sx(-0.5), sy(0.0), sx(0.5), sy(0.0));
    for (i, (label, b)) in shapes.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for curve in b.curves() {
            let pts: Vec<String> = curve.points().iter().map(|p| format!("{:.2},{:.2}", sx(p[0]), sy(p[1]))).collect();
            let _ = writeln!(s, r#"<polygon fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        }
        let ly = oy + 16.0 * i as f64;
        let lx = ox + scale + 16.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(label));
    }
    s.push_str("</svg>\n");
    s
}
