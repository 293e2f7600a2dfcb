//! Static SVG figures: training score curves and knot/smoothed overlays.

use std::fmt::Write;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Trailing-window mean and population standard deviation at every index.
pub fn rolling_mean_std(values: &[f64], window: usize) -> Vec<(f64, f64)> {
    let window = window.max(1);
    (0..values.len())
        .map(|i| {
            let w = &values[i.saturating_sub(window - 1)..=i];
            let n = w.len() as f64;
            let mean = w.iter().sum::<f64>() / n;
            let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .collect()
}

/// Maps data coordinates into one plotting rectangle.
#[derive(Debug, Clone, Copy)]
struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(left: f64, top: f64, width: f64, height: f64, xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        Self {
            left,
            top,
            width,
            height,
            x: padded_range(xs),
            y: padded_range(ys),
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    fn axes(&self, svg: &mut String, title: &str, x_label: &str, y_label: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        let _ = write!(
            svg,
            r##"<rect x="{l:.1}" y="{t:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#444"/>"##
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
            l + w / 2.0,
            t - 8.0,
            escape(title)
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
            l + w / 2.0,
            t + h + 32.0,
            escape(x_label)
        );
        let _ = write!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
            l - 42.0,
            t + h / 2.0,
            l - 42.0,
            t + h / 2.0,
            escape(y_label)
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let _ = write!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
                self.px(xv),
                t + h + 14.0,
                tick(xv)
            );
            let _ = write!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#,
                l - 4.0,
                self.py(yv) + 3.0,
                tick(yv)
            );
        }
    }

    fn points(&self, pts: &[(f64, f64)]) -> String {
        pts.iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn padded_range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif"><rect width="100%" height="100%" fill="white"/>{body}</svg>
"#
    )
}

/// Score per episode as a sliding-window mean line over a shaded one-sigma band.
pub fn score_curve_svg(scores: &[f64], window: usize) -> String {
    let stats = rolling_mean_std(scores, window);
    let upper: Vec<(f64, f64)> = stats.iter().enumerate().map(|(i, (m, s))| (i as f64, m + s)).collect();
    let lower: Vec<(f64, f64)> = stats.iter().enumerate().map(|(i, (m, s))| (i as f64, m - s)).collect();
    let mean: Vec<(f64, f64)> = stats.iter().enumerate().map(|(i, (m, _))| (i as f64, *m)).collect();
    let frame = Frame::new(
        70.0,
        40.0,
        620.0,
        320.0,
        mean.iter().map(|p| p.0),
        upper.iter().chain(&lower).map(|p| p.1),
    );
    let mut body = String::new();
    frame.axes(&mut body, &format!("Training score ({window}-episode window)"), "episode", "score");
    if !stats.is_empty() {
        let band: Vec<(f64, f64)> = upper.iter().chain(lower.iter().rev()).copied().collect();
        let _ = write!(
            body,
            r##"<polygon class="band" points="{}" fill="#1f77b4" fill-opacity="0.25" stroke="none"/>"##,
            frame.points(&band)
        );
        let _ = write!(
            body,
            r##"<polyline class="mean" points="{}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"##,
            frame.points(&mean)
        );
    }
    document(760.0, 410.0, &body)
}

/// One curve drawn as a line through `curve` with dots at `knots`.
#[derive(Debug, Clone, Default)]
pub struct Series {
    pub label: String,
    pub knots: Vec<(f64, f64)>,
    pub curve: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Panels laid out in a grid, knots as dots and smoothed curves as lines.
pub fn overlay_svg(panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1);
    let (pw, ph, mx, my) = (340.0, 220.0, 80.0, 70.0);
    let rows = panels.len().div_ceil(columns).max(1);
    let mut body = String::new();
    for (n, panel) in panels.iter().enumerate() {
        let left = mx + (n % columns) as f64 * (pw + mx);
        let top = my / 2.0 + (n / columns) as f64 * (ph + my);
        let all = || panel.series.iter().flat_map(|s| s.knots.iter().chain(&s.curve));
        let frame = Frame::new(left, top, pw, ph, all().map(|p| p.0), all().map(|p| p.1));
        frame.axes(&mut body, &panel.title, &panel.x_label, &panel.y_label);
        for (k, s) in panel.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            if !s.curve.is_empty() {
                let _ = write!(
                    body,
                    r#"<polyline class="smoothed" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    frame.points(&s.curve)
                );
            }
            for &(x, y) in &s.knots {
                let _ = write!(
                    body,
                    r#"<circle class="knot" cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                    frame.px(x),
                    frame.py(y)
                );
            }
            if !s.label.is_empty() {
                let _ = write!(
                    body,
                    r#"<text x="{:.1}" y="{:.1}" font-size="10" fill="{color}">{}</text>"#,
                    left + pw - 60.0,
                    top + 14.0 + 12.0 * k as f64,
                    escape(&s.label)
                );
            }
        }
    }
    document(columns as f64 * (pw + mx) + 20.0, rows as f64 * (ph + my) + 10.0, &body)
}
