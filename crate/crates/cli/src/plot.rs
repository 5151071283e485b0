//! Minimal SVG line charts, written as raw path data.

use std::fmt::Write;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: &str, color: &'static str, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.to_string(),
            color,
            points,
        }
    }
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Draw with equal x and y scales (orbit projections).
    pub equal_axes: bool,
}

impl Panel {
    pub fn new(title: &str, x_label: &str, y_label: &str, series: Vec<Series>) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            series,
            equal_axes: false,
        }
    }
}

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round step close to `span / 5` from the 1-2-5 sequence.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64, step: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        let decimals = (-step.log10().floor()).max(0.0) as usize;
        format!("{v:.decimals$}")
    }
}

fn bounds(points: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = points
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn draw_panel(out: &mut String, panel: &Panel, top: f64) {
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_HEIGHT - MARGIN_T - MARGIN_B;
    let (x0, y0) = (MARGIN_L, top + MARGIN_T);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">{}</text>"#,
        x0 + plot_w / 2.0,
        top + 18.0,
        escape(&panel.title)
    );
    let xs = bounds(panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let ys = bounds(panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let (Some((mut xmin, mut xmax)), Some((mut ymin, mut ymax))) = (xs, ys) else {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">no data</text>"#,
            x0 + plot_w / 2.0,
            y0 + plot_h / 2.0
        );
        return;
    };
    if panel.equal_axes {
        let (cx, cy) = ((xmin + xmax) / 2.0, (ymin + ymax) / 2.0);
        let half = ((xmax - xmin) / plot_w).max((ymax - ymin) / plot_h) / 2.0 * 1.05;
        (xmin, xmax) = (cx - half * plot_w, cx + half * plot_w);
        (ymin, ymax) = (cy - half * plot_h, cy + half * plot_h);
    }
    let sx = |x: f64| x0 + (x - xmin) / (xmax - xmin) * plot_w;
    let sy = |y: f64| y0 + plot_h - (y - ymin) / (ymax - ymin) * plot_h;

    let _ = writeln!(
        out,
        r##"<rect x="{x0:.1}" y="{y0:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#444"/>"##
    );
    let xstep = tick_step(xmax - xmin);
    let mut t = (xmin / xstep).ceil() * xstep;
    while t <= xmax {
        let px = sx(t);
        let _ = writeln!(
            out,
            r##"<line x1="{px:.1}" y1="{y0:.1}" x2="{px:.1}" y2="{:.1}" stroke="#ddd"/><text x="{px:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"##,
            y0 + plot_h,
            y0 + plot_h + 14.0,
            fmt_tick(t, xstep)
        );
        t += xstep;
    }
    let ystep = tick_step(ymax - ymin);
    let mut t = (ymin / ystep).ceil() * ystep;
    while t <= ymax {
        let py = sy(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"##,
            x0 + plot_w,
            x0 - 4.0,
            py + 3.0,
            fmt_tick(t, ystep)
        );
        t += ystep;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
        x0 + plot_w / 2.0,
        top + PANEL_HEIGHT - 8.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(16,{:.1}) rotate(-90)" font-size="12" text-anchor="middle">{}</text>"#,
        y0 + plot_h / 2.0,
        escape(&panel.y_label)
    );

    for (k, s) in panel.series.iter().enumerate() {
        let mut d = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            let _ = write!(d, "{}{:.2},{:.2}", if pen_down { " L" } else { " M" }, sx(x), sy(y));
            pen_down = true;
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="1"/>"#,
            d.trim_start(),
            s.color
        );
        if panel.series.len() > 1 {
            let ly = y0 + 12.0 + 14.0 * k as f64;
            let lx = x0 + plot_w - 120.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{ly:.1}" font-size="11">{}</text>"#,
                ly - 4.0,
                lx + 18.0,
                ly - 4.0,
                s.color,
                lx + 22.0,
                escape(&s.label)
            );
        }
    }
}

/// Vertically stacked panels in one SVG document.
pub fn render(panels: &[Panel]) -> String {
    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, p) in panels.iter().enumerate() {
        draw_panel(&mut out, p, PANEL_HEIGHT * k as f64);
    }
    out.push_str("</svg>\n");
    out
}
