use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// One labelled curve: `(x, mean, half_width)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, f64)>,
}

/// A group of bars sharing one category label.
#[derive(Debug, Clone, PartialEq)]
pub struct BarGroup {
    pub label: String,
    /// `(mean, half_width)` per bar, in legend order.
    pub bars: Vec<(f64, f64)>,
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        (W - RIGHT + LEFT) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (W - RIGHT + LEFT) / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
}

fn axes(out: &mut String, f: &Frame, x_ticks: bool) {
    let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        out,
        r#"<path d="M{l},{t} L{l},{b} L{r},{b}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let y = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let py = f.py(y);
        let _ = writeln!(
            out,
            r##"<line x1="{l}" y1="{py:.1}" x2="{r}" y2="{py:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"##,
            l - 6.0,
            py + 4.0,
            y
        );
        if x_ticks {
            let x = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
                f.px(x),
                b + 16.0,
                format_tick(x)
            );
        }
    }
}

fn format_tick(x: f64) -> String {
    if (x - x.round()).abs() < 1e-9 {
        format!("{}", x.round() as i64)
    } else {
        format!("{x:.2}")
    }
}

fn legend(out: &mut String, labels: &[&str]) {
    for (i, label) in labels.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = W - RIGHT + 15.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            y - 10.0,
            PALETTE[i % PALETTE.len()],
            x + 18.0,
            y,
            escape(label)
        );
    }
}

/// Mean curves with shaded confidence bands.
pub fn line_chart(series: &[Series], title: &str, x_label: &str, y_label: &str) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut xl, mut xh, mut yl, mut yh) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, m, h) in pts {
        xl = xl.min(x);
        xh = xh.max(x);
        yl = yl.min(m - h);
        yh = yh.max(m + h);
    }
    let (x0, x1) = if xh - xl < 1e-12 { range(xl, xh) } else { (xl, xh) };
    let (y0, y1) = range(yl, yh);
    let f = Frame { x0, x1, y0, y1 };
    let mut out = String::new();
    header(&mut out, title, x_label, y_label);
    axes(&mut out, &f, true);
    for (i, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let colour = PALETTE[i % PALETTE.len()];
        let mut band = String::new();
        for &(x, m, h) in &s.points {
            let _ = write!(band, "{:.2},{:.2} ", f.px(x), f.py(m + h));
        }
        for &(x, m, h) in s.points.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", f.px(x), f.py(m - h));
        }
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#,
            band.trim_end()
        );
        let line: Vec<String> = s
            .points
            .iter()
            .map(|&(x, m, _)| format!("{:.2},{:.2}", f.px(x), f.py(m)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
    }
    let labels: Vec<&str> = series.iter().map(|s| s.label.as_str()).collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

/// Grouped bars with error whiskers; zero is always on the axis.
pub fn bar_chart(groups: &[BarGroup], legend_labels: &[&str], title: &str, x_label: &str, y_label: &str) -> String {
    let (mut yl, mut yh) = (0.0f64, 0.0f64);
    for g in groups {
        for &(m, h) in &g.bars {
            yl = yl.min(m - h);
            yh = yh.max(m + h);
        }
    }
    let (y0, y1) = range(yl, yh);
    let f = Frame {
        x0: 0.0,
        x1: groups.len().max(1) as f64,
        y0,
        y1,
    };
    let mut out = String::new();
    header(&mut out, title, x_label, y_label);
    axes(&mut out, &f, false);
    let zero = f.py(0.0);
    let _ = writeln!(
        out,
        r#"<line x1="{LEFT}" y1="{zero:.1}" x2="{}" y2="{zero:.1}" stroke="black"/>"#,
        W - RIGHT
    );
    for (gi, g) in groups.iter().enumerate() {
        let k = g.bars.len().max(1) as f64;
        let slot = (f.px(1.0) - f.px(0.0)) * 0.8 / k;
        let start = f.px(gi as f64) + (f.px(1.0) - f.px(0.0)) * 0.1;
        for (bi, &(m, h)) in g.bars.iter().enumerate() {
            let x = start + slot * bi as f64;
            let (top, bottom) = (f.py(m.max(0.0)), f.py(m.min(0.0)));
            let colour = PALETTE[bi % PALETTE.len()];
            let cx = x + slot / 2.0;
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{colour}"/>"#,
                slot * 0.9,
                (bottom - top).max(0.5)
            );
            let _ = writeln!(
                out,
                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
                f.py(m + h),
                f.py(m - h)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            f.px(gi as f64 + 0.5),
            H - BOTTOM + 16.0,
            escape(&g.label)
        );
    }
    legend(&mut out, legend_labels);
    out.push_str("</svg>\n");
    out
}

pub fn write_svg(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
