//! Static SVG plots with no external assets and no timestamps.

use crate::error::{CliError, CliResult};
use fracwick_core::ito::ConvergenceTable;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    LogLog,
    Heatmap,
}

/// Data accepted by [`emit_plot`].
#[derive(Debug, Clone, Copy)]
pub enum PlotData<'a> {
    Convergence(&'a ConvergenceTable),
    /// Row-major square matrix.
    Matrix { values: &'a [f64], dim: usize },
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 40.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

fn num(x: f64) -> String {
    format!("{x:.2}")
}

fn label(x: f64) -> String {
    format!("{x:.3e}")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="25" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Log–log plot of RMS residual against grid size with the least-squares line.
pub fn render_loglog(table: &ConvergenceTable, title: &str) -> CliResult<String> {
    let pts: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.rms_residual > 0.0)
        .map(|r| ((r.n as f64).log10(), r.rms_residual.log10()))
        .collect();
    if pts.is_empty() {
        return Err(CliError::Plot("no positive data to plot on log axes".into()));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad = |a: f64, b: f64| if b - a < 1e-9 { (a - 0.5, b + 0.5) } else { (a - 0.08 * (b - a), b + 0.08 * (b - a)) };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    header(&mut s, title);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for r in &table.rows {
        let x = (r.n as f64).log10();
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(px(x)),
            num(H - BOTTOM + 18.0),
            r.n
        );
    }
    for k in 0..=4 {
        let y = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(LEFT - 6.0),
            num(py(y) + 4.0),
            label(10f64.powf(y))
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">grid size n (log scale)</text>"#,
        W / 2.0,
        H - 25.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">RMS residual (log scale)</text>"#,
        H / 2.0,
        H / 2.0
    );
    if let Some(slope) = table.slope {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let fit = |x: f64| my + slope * (x - mx);
        let (a, b) = (pts[0].0, pts[pts.len() - 1].0);
        let _ = writeln!(
            s,
            r#"<line class="fit" x1="{}" y1="{}" x2="{}" y2="{}" stroke="firebrick" stroke-width="1.5"/>"#,
            num(px(a)),
            num(py(fit(a))),
            num(px(b)),
            num(py(fit(b)))
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" fill="firebrick">fitted slope = {slope:.4}</text>"#,
            num(W - RIGHT - 8.0),
            num(TOP + 18.0)
        );
    }
    for &(x, y) in &pts {
        let _ = writeln!(
            s,
            r#"<circle class="marker" cx="{}" cy="{}" r="4" fill="steelblue"/>"#,
            num(px(x)),
            num(py(y))
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Blue–white–red colour for `u` in `[0, 1]`.
fn colour(u: f64) -> String {
    let u = u.clamp(0.0, 1.0);
    let (r, g, b) = if u < 0.5 {
        let v = u / 0.5;
        (59.0 + v * 196.0, 76.0 + v * 179.0, 192.0 + v * 63.0)
    } else {
        let v = (u - 0.5) / 0.5;
        (255.0 - v * 75.0, 255.0 - v * 251.0, 255.0 - v * 217.0)
    };
    format!("rgb({},{},{})", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Heatmap of a square matrix with a colour legend.
pub fn render_heatmap(values: &[f64], dim: usize, title: &str) -> CliResult<String> {
    if dim == 0 || values.len() != dim * dim {
        return Err(CliError::Plot(format!("heatmap needs a non-empty {dim}x{dim} matrix, got {} values", values.len())));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let side = (H - TOP - BOTTOM).min(W - LEFT - RIGHT - 120.0);
    let cell = side / dim as f64;
    let mut s = String::new();
    header(&mut s, title);
    for i in 0..dim {
        for j in 0..dim {
            let v = values[i * dim + j];
            let _ = writeln!(
                s,
                r#"<rect class="cell" x="{}" y="{}" width="{}" height="{}" fill="{}"><title>({i},{j}) {}</title></rect>"#,
                num(LEFT + j as f64 * cell),
                num(TOP + i as f64 * cell),
                num(cell),
                num(cell),
                colour((v - lo) / span),
                label(v)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">column index j</text>"#,
        num(LEFT + side / 2.0),
        num(TOP + side + 30.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">row index i</text>"#,
        num(LEFT - 20.0),
        num(TOP + side / 2.0),
        num(LEFT - 20.0),
        num(TOP + side / 2.0)
    );
    // legend
    let lx = LEFT + side + 40.0;
    let steps = 20;
    let lh = side / steps as f64;
    for k in 0..steps {
        let u = 1.0 - (k as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            s,
            r#"<rect class="legend" x="{}" y="{}" width="20" height="{}" fill="{}"/>"#,
            num(lx),
            num(TOP + k as f64 * lh),
            num(lh + 0.5),
            colour(u)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, num(lx + 26.0), num(TOP + 10.0), label(hi));
    let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, num(lx + 26.0), num(TOP + side), label(lo));
    let _ = writeln!(s, r#"<text x="{}" y="{}">value</text>"#, num(lx), num(TOP - 8.0));
    s.push_str("</svg>\n");
    Ok(s)
}

/// Renders `data` as `kind` and writes it to `path`. Empty data is an error and
/// leaves no file behind.
pub fn emit_plot(data: PlotData<'_>, kind: PlotKind, path: &Path, title: &str) -> CliResult<()> {
    let svg = match (data, kind) {
        (PlotData::Convergence(t), PlotKind::LogLog) => {
            if t.rows.is_empty() {
                return Err(CliError::Plot("empty convergence table".into()));
            }
            render_loglog(t, title)?
        }
        (PlotData::Matrix { values, dim }, PlotKind::Heatmap) => render_heatmap(values, dim, title)?,
        _ => return Err(CliError::Plot(format!("{kind:?} cannot show this data"))),
    };
    std::fs::write(path, svg)?;
    Ok(())
}
