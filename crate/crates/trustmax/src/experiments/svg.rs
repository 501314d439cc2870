//! Hand-rolled SVG line charts for the budget curves. Just axes, ticks,
//! polylines and a legend; deliberately not a charting library.

use std::fmt::Write as _;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct ChartOptions {
    pub title: String,
    pub x_label: String,
    /// Left axis, used by the main series.
    pub y_label: String,
    /// Right axis, used by the dashed series (ignored when there are none).
    pub y2_label: String,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 70.0;
const MARGIN_T: f64 = 48.0;
const MARGIN_B: f64 = 52.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];
const RIGHT_COLOR: &str = "#555555";
const GRID_COLOR: &str = "#eeeeee";

#[derive(Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn over<I: Iterator<Item = f64>>(values: I) -> Range {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Range { lo: 0.0, hi: 1.0 };
        }
        if lo == hi {
            return Range {
                lo: lo - 1.0,
                hi: hi + 1.0,
            };
        }
        let pad = 0.05 * (hi - lo);
        Range {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn to_pixel(self, v: f64, out_lo: f64, out_hi: f64) -> f64 {
        out_lo + (v - self.lo) / (self.hi - self.lo) * (out_hi - out_lo)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v.abs() < 1e-12 {
        return "0".to_string();
    }
    let mut t = if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.4}")
    };
    if t.contains('.') {
        while t.ends_with('0') {
            t.pop();
        }
        if t.ends_with('.') {
            t.pop();
        }
    }
    t
}

/// Render left-axis series as solid lines and right-axis series as dashed
/// ones, with point markers so single-budget charts still show data.
pub fn line_chart(opts: &ChartOptions, left: &[Series], right: &[Series]) -> String {
    let x_range = Range::over(
        left.iter()
            .chain(right.iter())
            .flat_map(|s| s.points.iter().map(|p| p.0)),
    );
    let y_range = Range::over(left.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let y2_range = Range::over(right.iter().flat_map(|s| s.points.iter().map(|p| p.1)));

    let x_px = |v: f64| x_range.to_pixel(v, MARGIN_L, WIDTH - MARGIN_R);
    let y_px = |v: f64| y_range.to_pixel(v, HEIGHT - MARGIN_B, MARGIN_T);
    let y2_px = |v: f64| y2_range.to_pixel(v, HEIGHT - MARGIN_B, MARGIN_T);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&opts.title)
    );

    // Grid and tick labels.
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = x_range.lo + f * (x_range.hi - x_range.lo);
        let x = x_px(xv);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{GRID_COLOR}"/>"#,
            MARGIN_T,
            HEIGHT - MARGIN_B
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_B + 16.0,
            tick_label(xv)
        );

        let yv = y_range.lo + f * (y_range.hi - y_range.lo);
        let y = y_px(yv);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{GRID_COLOR}"/>"#,
            MARGIN_L,
            WIDTH - MARGIN_R
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            y + 4.0,
            tick_label(yv)
        );

        if !right.is_empty() {
            let yv2 = y2_range.lo + f * (y2_range.hi - y2_range.lo);
            let y2 = y2_px(yv2);
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="start" fill="{RIGHT_COLOR}">{}</text>"#,
                WIDTH - MARGIN_R + 6.0,
                y2 + 4.0,
                tick_label(yv2)
            );
        }
    }

    // Axes.
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        MARGIN_L,
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    );
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        MARGIN_L,
        MARGIN_T,
        MARGIN_L,
        HEIGHT - MARGIN_B
    );
    if !right.is_empty() {
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{RIGHT_COLOR}"/>"#,
            WIDTH - MARGIN_R,
            MARGIN_T,
            WIDTH - MARGIN_R,
            HEIGHT - MARGIN_B
        );
    }

    // Axis labels.
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0,
        escape(&opts.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&opts.y_label)
    );
    if !right.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" fill="{RIGHT_COLOR}" transform="rotate(90 {:.2} {:.2})">{}</text>"#,
            WIDTH - 14.0,
            HEIGHT / 2.0,
            WIDTH - 14.0,
            HEIGHT / 2.0,
            escape(&opts.y2_label)
        );
    }

    // Series.
    for (i, series) in left.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        draw_series(&mut out, series, color, false, &x_px, &y_px);
    }
    for series in right {
        draw_series(&mut out, series, RIGHT_COLOR, true, &x_px, &y2_px);
    }

    // Legend in the top-left corner of the plot area.
    let mut ly = MARGIN_T + 14.0;
    for (i, series) in left.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        legend_row(&mut out, &series.label, color, false, ly);
        ly += 16.0;
    }
    for series in right {
        legend_row(&mut out, &series.label, RIGHT_COLOR, true, ly);
        ly += 16.0;
    }

    out.push_str("</svg>\n");
    out
}

fn draw_series(
    out: &mut String,
    series: &Series,
    color: &str,
    dashed: bool,
    x_px: &dyn Fn(f64) -> f64,
    y_px: &dyn Fn(f64) -> f64,
) {
    let dash = if dashed {
        r#" stroke-dasharray="6 4""#
    } else {
        ""
    };
    if series.points.len() > 1 {
        let coords: Vec<String> = series
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", x_px(x), y_px(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            coords.join(" ")
        );
    }
    for &(x, y) in &series.points {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
            x_px(x),
            y_px(y)
        );
    }
}

fn legend_row(out: &mut String, label: &str, color: &str, dashed: bool, y: f64) {
    let x = MARGIN_L + 10.0;
    let dash = if dashed {
        r#" stroke-dasharray="6 4""#
    } else {
        ""
    };
    let _ = writeln!(
        out,
        r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
        y - 4.0,
        x + 22.0,
        y - 4.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{y:.2}">{}</text>"#,
        x + 28.0,
        escape(label)
    );
}
