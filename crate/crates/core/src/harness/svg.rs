//! Minimal self-contained SVG line charts with shaded confidence bands.
//!
//! No plotting dependency: the charts are simple enough (mean curves plus
//! CI bands plus a legend) that direct string assembly keeps the artifacts
//! deterministic.

use std::fmt::Write as _;

use super::sweep::MethodCurve;

const PALETTE: [&str; 7] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
];

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

/// One named series with optional band.
pub struct Series<'a> {
    pub name: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub lo: Option<&'a [f64]>,
    pub hi: Option<&'a [f64]>,
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1e6 {
        format!("{:.1}M", v / 1e6)
    } else if v.abs() >= 1e3 {
        format!("{:.0}k", v / 1e3)
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Renders a multi-series line chart (x linear, y linear).
pub fn line_chart(series: &[Series<'_>], title: &str, x_label: &str, y_label: &str) -> String {
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &x in s.x {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
        }
        for &y in s.y.iter().chain(s.lo.unwrap_or(&[])).chain(s.hi.unwrap_or(&[])) {
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
    }
    if !y_min.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_max - x_min < 1e-12 {
        x_max = x_min + 1.0;
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
    }
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        title
    )
    .unwrap();

    // Axes with five ticks each.
    for i in 0..=5 {
        let fx = x_min + (x_max - x_min) * i as f64 / 5.0;
        let px = sx(fx);
        writeln!(
            out,
            r##"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="#dddddd"/>"##,
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{px:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            MARGIN_TOP + plot_h + 18.0,
            fmt_tick(fx)
        )
        .unwrap();
        let fy = y_min + (y_max - y_min) * i as f64 / 5.0;
        let py = sy(fy);
        writeln!(
            out,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#dddddd"/>"##,
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            py + 4.0,
            fmt_tick(fy)
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        x_label
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="18" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        y_label
    )
    .unwrap();

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let (Some(lo), Some(hi)) = (s.lo, s.hi) {
            let mut band = String::new();
            for (j, (&x, &l)) in s.x.iter().zip(lo).enumerate() {
                let prefix = if j == 0 { "M" } else { "L" };
                write!(band, "{prefix}{:.1},{:.1} ", sx(x), sy(l)).unwrap();
            }
            for (&x, &h) in s.x.iter().zip(hi).rev() {
                write!(band, "L{:.1},{:.1} ", sx(x), sy(h)).unwrap();
            }
            writeln!(out, r#"<path d="{band}Z" fill="{color}" opacity="0.15"/>"#).unwrap();
        }
        let mut line = String::new();
        for (j, (&x, &y)) in s.x.iter().zip(s.y).enumerate() {
            let prefix = if j == 0 { "M" } else { "L" };
            write!(line, "{prefix}{:.1},{:.1} ", sx(x), sy(y)).unwrap();
        }
        writeln!(
            out,
            r#"<path d="{line}" fill="none" stroke="{color}" stroke-width="1.8"/>"#
        )
        .unwrap();
        let ly = MARGIN_TOP + 16.0 + 20.0 * i as f64;
        writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="3"/>"#,
            WIDTH - MARGIN_RIGHT + 12.0,
            WIDTH - MARGIN_RIGHT + 36.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            WIDTH - MARGIN_RIGHT + 42.0,
            ly + 4.0,
            s.name
        )
        .unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    out
}

/// Success-rate curves for a sweep's methods.
pub fn success_curves_svg(curves: &[MethodCurve], title: &str) -> String {
    let xs: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| c.grid.iter().map(|&g| g as f64).collect())
        .collect();
    let series: Vec<Series<'_>> = curves
        .iter()
        .zip(&xs)
        .map(|(c, x)| Series {
            name: &c.method,
            x,
            y: &c.mean,
            lo: Some(&c.lo),
            hi: Some(&c.hi),
        })
        .collect();
    line_chart(&series, title, "environment steps", "mean success rate")
}
