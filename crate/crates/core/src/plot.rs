//! Deterministic hand-written SVG charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const PANEL_HEIGHT: f64 = 240.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn header(out: &mut String, height: f64) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">",
        w = fmt(WIDTH),
        h = fmt(height)
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
}

/// Stacked line panels sharing a legend; each series is one polyline.
pub fn line_chart(panels: &[Panel]) -> String {
    let mut out = String::new();
    header(&mut out, PANEL_HEIGHT * panels.len().max(1) as f64);
    for (p, panel) in panels.iter().enumerate() {
        let top = p as f64 * PANEL_HEIGHT;
        let (x0, x1) = bounds(panel.series.iter().flat_map(|s| s.points.iter().map(|pt| pt.0)));
        let (y0, y1) = bounds(panel.series.iter().flat_map(|s| s.points.iter().map(|pt| pt.1)));
        let plot_w = WIDTH - 2.0 * MARGIN;
        let plot_h = PANEL_HEIGHT - 2.0 * MARGIN;
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| top + MARGIN + plot_h - (y - y0) / (y1 - y0) * plot_h;
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"13\">{}</text>",
            fmt(MARGIN),
            fmt(top + MARGIN - 16.0),
            escape(&panel.title)
        );
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>",
            fmt(MARGIN),
            fmt(top + MARGIN),
            fmt(plot_w),
            fmt(plot_h)
        );
        for (label, y) in [(y0, sy(y0)), (y1, sy(y1))] {
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
                fmt(MARGIN - 4.0),
                fmt(y + 4.0),
                format_tick(label)
            );
        }
        for (label, x) in [(x0, sx(x0)), (x1, sx(x1))] {
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                fmt(x),
                fmt(top + MARGIN + plot_h + 14.0),
                format_tick(label)
            );
        }
        for (i, s) in panel.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{},{}", fmt(sx(x)), fmt(sy(y))))
                .collect();
            let _ = writeln!(
                out,
                "<polyline data-series=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                escape(&s.name),
                pts.join(" ")
            );
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>",
                fmt(WIDTH - MARGIN - 120.0),
                fmt(top + MARGIN + 14.0 * (i as f64 + 1.0)),
                escape(&s.name)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

fn format_tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Horizontal bars sorted by descending value (ties keep input order).
pub fn bar_chart(title: &str, bars: &[(String, f64)]) -> String {
    let mut sorted: Vec<&(String, f64)> = bars.iter().collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1));
    let row = 22.0;
    let height = 2.0 * MARGIN + row * sorted.len() as f64;
    let mut out = String::new();
    header(&mut out, height);
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-size=\"13\">{}</text>",
        fmt(MARGIN),
        fmt(MARGIN - 16.0),
        escape(title)
    );
    let max = sorted.iter().map(|b| b.1).fold(0.0, f64::max);
    let label_w = 150.0;
    let plot_w = WIDTH - 2.0 * MARGIN - label_w;
    for (i, (label, value)) in sorted.iter().enumerate() {
        let y = MARGIN + row * i as f64;
        let w = if max > 0.0 { value / max * plot_w } else { 0.0 };
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            fmt(MARGIN + label_w - 6.0),
            fmt(y + 14.0),
            escape(label)
        );
        let _ = writeln!(
            out,
            "<rect data-bar=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
            escape(label),
            fmt(MARGIN + label_w),
            fmt(y + 3.0),
            fmt(w),
            fmt(row - 6.0),
            PALETTE[0]
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\">{}</text>",
            fmt(MARGIN + label_w + w + 4.0),
            fmt(y + 14.0),
            format_tick(*value)
        );
    }
    out.push_str("</svg>\n");
    out
}
