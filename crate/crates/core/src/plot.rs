//! Minimal SVG output: line plots with optional log axes and raster heatmaps.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 440.0;
const ML: f64 = 80.0;
const MR: f64 = 150.0;
const MT: f64 = 40.0;
const MB: f64 = 60.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub dashed: bool,
    /// Per-point marker colours; falls back to `color`.
    pub marker_colors: Option<Vec<String>>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, color: &str) -> Self {
        Self {
            label: label.into(),
            points,
            color: color.to_string(),
            dashed: false,
            marker_colors: None,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: impl Into<String>, xlabel: impl Into<String>, ylabel: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            xlabel: xlabel.into(),
            ylabel: ylabel.into(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    /// Reference line `y = c x^slope` through the first point of `anchor`.
    pub fn reference_slope(mut self, anchor: &[(f64, f64)], slope: f64) -> Self {
        if let (Some(&(x0, y0)), Some(&(x1, _))) = (anchor.first(), anchor.last()) {
            let c = y0 / x0.powf(slope);
            let pts = vec![(x0, 0.5 * y0), (x1, 0.5 * c * x1.powf(slope))];
            self.series
                .push(Series::new(format!("slope {slope}"), pts, "#999999").dashed());
        }
        self
    }

    fn tx(&self, v: f64) -> Option<f64> {
        if self.log_x {
            (v > 0.0).then(|| v.log10())
        } else {
            Some(v)
        }
    }

    fn ty(&self, v: f64) -> Option<f64> {
        if self.log_y {
            (v > 0.0).then(|| v.log10())
        } else {
            v.is_finite().then_some(v)
        }
    }

    pub fn render(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter_map(|&(x, y)| Some((self.tx(x)?, self.ty(y)?)))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad_y = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad_y, y1 + pad_y);
        let pw = W - ML - MR;
        let ph = H - MT - MB;
        let sx = |x: f64| ML + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MT + ph - (y - y0) / (y1 - y0) * ph;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            ML + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let lx = if self.log_x { 10f64.powf(fx) } else { fx };
            let ly = if self.log_y { 10f64.powf(fy) } else { fy };
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                sx(fx),
                MT + ph + 18.0,
                tick(lx)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                ML - 6.0,
                sy(fy) + 4.0,
                tick(ly)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            ML + pw / 2.0,
            H - 18.0,
            escape(&self.xlabel)
        );
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            MT + ph / 2.0,
            MT + ph / 2.0,
            escape(&self.ylabel)
        );

        for (k, s) in self.series.iter().enumerate() {
            let mapped: Vec<(usize, f64, f64)> = s
                .points
                .iter()
                .enumerate()
                .filter_map(|(i, &(x, y))| Some((i, sx(self.tx(x)?), sy(self.ty(y)?))))
                .filter(|(_, x, y)| x.is_finite() && y.is_finite())
                .collect();
            if mapped.len() > 1 {
                let path: Vec<String> = mapped.iter().map(|(_, x, y)| format!("{x:.2},{y:.2}")).collect();
                let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
                let _ = writeln!(
                    svg,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                    path.join(" "),
                    s.color
                );
            }
            if !s.dashed {
                for &(i, x, y) in &mapped {
                    let c = s
                        .marker_colors
                        .as_ref()
                        .and_then(|m| m.get(i))
                        .unwrap_or(&s.color);
                    let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{c}"/>"#);
                }
            }
            let ly = MT + 14.0 + 18.0 * k as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                W - MR + 10.0,
                W - MR + 30.0,
                s.color,
                W - MR + 35.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Heatmap of a raster of `nx x ny` cells covering `[lo, hi]`; `None` cells are
/// left blank. Values map linearly onto a blue-to-red scale.
pub fn heatmap(title: &str, values: &[Option<f64>], nx: usize, ny: usize, lo: (f64, f64), hi: (f64, f64)) -> String {
    let size = 480.0;
    let (vmin, vmax) = values
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };
    let cw = size / nx as f64;
    let ch = size / ny as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">"#,
        size + 40.0,
        size + 70.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{} [{:.4}, {:.4}] on [{:.2},{:.2}]x[{:.2},{:.2}]</text>"#,
        size / 2.0 + 20.0,
        escape(title),
        vmin,
        vmax,
        lo.0,
        hi.0,
        lo.1,
        hi.1
    );
    for j in 0..ny {
        for i in 0..nx {
            if let Some(v) = values[j * nx + i] {
                let s = (v - vmin) / span;
                let r = (255.0 * s) as u8;
                let b = (255.0 * (1.0 - s)) as u8;
                let _ = writeln!(
                    svg,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({r},64,{b})"/>"#,
                    20.0 + i as f64 * cw,
                    40.0 + (ny - 1 - j) as f64 * ch,
                    cw + 0.05,
                    ch + 0.05
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}
