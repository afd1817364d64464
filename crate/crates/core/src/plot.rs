//! Log-scale BLER charts as standalone SVG.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_Y: f64 = 40.0;
const COLOURS: [&str; 8] = [
    "#1f77b4", "#d62728", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Deserialize)]
struct Point {
    epsilon: f64,
    bler: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Reads the `epsilon` and `bler` columns of a CSV; other columns are ignored.
pub fn read_series(path: &Path) -> Result<Series> {
    let mut reader = csv::Reader::from_path(path)?;
    let points = reader
        .deserialize::<Point>()
        .map(|r| r.map(|p| (p.epsilon, p.bler)))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if points.is_empty() {
        return Err(Error::Parse(format!("{}: no data rows", path.display())));
    }
    if let Some(p) = points
        .iter()
        .find(|p| !p.0.is_finite() || !(0.0..=1.0).contains(&p.1))
    {
        return Err(Error::Parse(format!(
            "{}: invalid point {p:?}",
            path.display()
        )));
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Series { label, points })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders the series; zero BLER points are drawn on the bottom axis.
pub fn render_svg(series: &[Series]) -> Result<String> {
    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .collect();
    if all.is_empty() {
        return Err(Error::InvalidParameter("nothing to plot".into()));
    }
    let (mut x0, mut x1) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.0), b.max(p.0))
        });
    if x1 - x0 < 1e-12 {
        x0 -= 0.01;
        x1 += 0.01;
    }
    let positive = all.iter().map(|p| p.1).filter(|&b| b > 0.0);
    let min_pos = positive.clone().fold(f64::INFINITY, f64::min);
    let max_pos = positive.fold(0.0f64, f64::max);
    let (d0, d1) = if min_pos.is_finite() {
        (
            min_pos.log10().floor(),
            max_pos.log10().ceil().max(min_pos.log10().floor() + 1.0),
        )
    } else {
        (-6.0, 0.0)
    };
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| {
        let d = if y > 0.0 { y.log10().max(d0) } else { d0 };
        MARGIN_Y + (d1 - d) / (d1 - d0) * plot_h
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_Y}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for d in (d0 as i32)..=(d1 as i32) {
        let y = py(10f64.powi(d));
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ccc" stroke-dasharray="2,3"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"##,
            MARGIN_LEFT + plot_w,
            MARGIN_LEFT - 6.0,
            y + 4.0
        );
    }
    for i in 0..=4 {
        let x = x0 + (x1 - x0) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x:.3}</text>"#,
            px(x),
            MARGIN_Y + plot_h + 16.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">epsilon</text><text x="14" y="{:.2}" transform="rotate(-90 14 {:.2})" text-anchor="middle">BLER</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 6.0,
        MARGIN_Y + plot_h / 2.0,
        MARGIN_Y + plot_h / 2.0
    );

    for (k, s) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let mut pts = s.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<g class="series" data-label="{}">"#,
            escape(&s.label)
        );
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        for &(x, y) in &pts {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#,
                px(x),
                py(y)
            );
        }
        let ly = MARGIN_Y + 14.0 + 16.0 * k as f64;
        let lx = MARGIN_LEFT + plot_w + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{colour}" stroke-width="2"/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0,
            lx + 24.0,
            escape(&s.label)
        );
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Reads every CSV and writes the chart to `out`. Nothing is written when
/// any input is malformed.
pub fn emit_plot(csvs: &[PathBuf], out: &Path) -> Result<()> {
    if csvs.is_empty() {
        return Err(Error::InvalidParameter("no input files".into()));
    }
    let series = csvs
        .iter()
        .map(|p| read_series(p))
        .collect::<Result<Vec<_>>>()?;
    std::fs::write(out, render_svg(&series)?)?;
    Ok(())
}
