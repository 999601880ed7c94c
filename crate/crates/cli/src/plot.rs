//! Minimal static SVG charts: line charts on linear or logarithmic axes and
//! bar charts with error bars.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    /// Draw point markers in addition to connecting lines.
    pub markers: bool,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone)]
pub struct Bar {
    pub label: String,
    pub value: f64,
    pub error: f64,
    /// Optional reference value drawn as a marker on the bar.
    pub reference: Option<f64>,
}

/// Maps data coordinates on one axis to pixels.
struct Axis {
    scale: Scale,
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Axis {
    fn new(scale: Scale, values: impl Iterator<Item = f64>, p0: f64, p1: f64) -> Self {
        let (mut lo, mut hi) = values
            .filter(|v| v.is_finite() && (scale == Scale::Linear || *v > 0.0))
            .map(|v| if scale == Scale::Log { v.log10() } else { v })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 * (1.0 + lo.abs()) {
            lo -= 0.5;
            hi += 0.5;
        } else if scale == Scale::Linear {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        } else {
            lo = lo.floor();
            hi = hi.ceil();
        }
        Self { scale, lo, hi, p0, p1 }
    }

    fn raw(&self, v: f64) -> Option<f64> {
        match self.scale {
            Scale::Linear => v.is_finite().then_some(v),
            Scale::Log => (v > 0.0 && v.is_finite()).then(|| v.log10()),
        }
    }

    fn px(&self, v: f64) -> Option<f64> {
        self.raw(v).map(|r| self.p0 + (r - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0))
    }

    /// Tick positions in data units with their labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        match self.scale {
            Scale::Log => (self.lo as i32..=self.hi as i32).map(|e| (10f64.powi(e), format!("1e{e}"))).collect(),
            Scale::Linear => (0..=4)
                .map(|i| {
                    let v = self.lo + (self.hi - self.lo) * f64::from(i) / 4.0;
                    (v, format!("{v:.3}"))
                })
                .collect(),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn frame(out: &mut String, x: &Axis, y: &Axis, x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(out, r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    for (v, label) in x.ticks() {
        if let Some(p) = x.px(v) {
            let _ = writeln!(out, r#"<line x1="{p:.1}" y1="{y0:.1}" x2="{p:.1}" y2="{:.1}" stroke="black"/>"#, y0 + 5.0);
            let _ = writeln!(out, r#"<text x="{p:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#, y0 + 18.0);
        }
    }
    for (v, label) in y.ticks() {
        if let Some(p) = y.px(v) {
            let _ = writeln!(out, r#"<line x1="{:.1}" y1="{p:.1}" x2="{x0:.1}" y2="{p:.1}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#, x0 - 8.0, p + 4.0);
        }
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 14.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

/// Renders a line chart; points that cannot be shown on a log axis are skipped.
pub fn line_chart(chart: &LineChart) -> String {
    let all = || chart.series.iter().flat_map(|s| s.points.iter().copied());
    let x = Axis::new(chart.x_scale, all().map(|p| p.0), LEFT, WIDTH - RIGHT);
    let y = Axis::new(chart.y_scale, all().map(|p| p.1), HEIGHT - BOTTOM, TOP);
    let mut out = String::new();
    header(&mut out, &chart.title);
    frame(&mut out, &x, &y, &chart.x_label, &chart.y_label);
    for (i, s) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s.points.iter().filter_map(|&(a, b)| Some((x.px(a)?, y.px(b)?))).collect();
        let path: Vec<String> = pts.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
        if chart.markers {
            for (a, b) in &pts {
                let _ = writeln!(out, r#"<circle cx="{a:.2}" cy="{b:.2}" r="3" fill="{color}"/>"#);
            }
        }
        let ly = TOP + 16.0 + 16.0 * i as f64;
        let _ = writeln!(out, r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#, WIDTH - RIGHT - 150.0, WIDTH - RIGHT - 130.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, WIDTH - RIGHT - 125.0, ly + 4.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

/// Renders bars with symmetric error bars and optional reference markers.
pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar]) -> String {
    let extent = bars.iter().flat_map(|b| [b.value - b.error, b.value + b.error, b.reference.unwrap_or(0.0), 0.0]);
    let y = Axis::new(Scale::Linear, extent, HEIGHT - BOTTOM, TOP);
    let x = Axis { scale: Scale::Linear, lo: 0.0, hi: bars.len().max(1) as f64, p0: LEFT, p1: WIDTH - RIGHT };
    let mut out = String::new();
    header(&mut out, title);
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(out, r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    for (v, label) in y.ticks() {
        if let Some(p) = y.px(v) {
            let _ = writeln!(out, r#"<line x1="{:.1}" y1="{p:.1}" x2="{x0:.1}" y2="{p:.1}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#, x0 - 8.0, p + 4.0);
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
    let zero = y.px(0.0).unwrap_or(y0);
    let slot = (x1 - x0) / bars.len().max(1) as f64;
    for (i, b) in bars.iter().enumerate() {
        let left = x.px(i as f64).unwrap_or(x0) + 0.15 * slot;
        let width = 0.7 * slot;
        let center = left + width / 2.0;
        let top = y.px(b.value).unwrap_or(zero);
        let _ = writeln!(
            out,
            r##"<rect x="{left:.2}" y="{:.2}" width="{width:.2}" height="{:.2}" fill="#9ecae1" stroke="#1f77b4"/>"##,
            top.min(zero),
            (top - zero).abs()
        );
        if b.error > 0.0 {
            if let (Some(lo), Some(hi)) = (y.px(b.value - b.error), y.px(b.value + b.error)) {
                let cap = 0.15 * width;
                let _ = writeln!(out, r#"<line x1="{center:.2}" y1="{lo:.2}" x2="{center:.2}" y2="{hi:.2}" stroke="black"/>"#);
                for p in [lo, hi] {
                    let _ = writeln!(out, r#"<line x1="{:.2}" y1="{p:.2}" x2="{:.2}" y2="{p:.2}" stroke="black"/>"#, center - cap, center + cap);
                }
            }
        }
        if let Some(r) = b.reference.and_then(|r| y.px(r)) {
            let _ = writeln!(out, r##"<circle cx="{center:.2}" cy="{r:.2}" r="3.5" fill="#d62728"/>"##);
        }
        let _ = writeln!(out, r#"<text x="{center:.2}" y="{:.1}" text-anchor="middle">{}</text>"#, y0 + 18.0, escape(&b.label));
    }
    out.push_str("</svg>\n");
    out
}
