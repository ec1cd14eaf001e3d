//! Convergence plots rendered straight from the summary CSV.
//!
//! The SVG shows, per solver, the mean distance to the target on a log
//! y-axis with a one-standard-deviation band. Everything plotted comes from
//! the summary file; nothing is recomputed.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct SummarySeries {
    pub solver: String,
    /// `(t, mean, std)` rows.
    pub points: Vec<(usize, f64, f64)>,
}

pub fn parse_summary_csv(text: &str) -> Result<Vec<SummarySeries>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("solver,t,mean_dist,std_dist,n_seeds") => {}
        other => {
            return Err(Error::InvalidArgument(format!(
                "bad summary header: {other:?}"
            )))
        }
    }
    let mut series: Vec<SummarySeries> = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::InvalidArgument(format!("bad summary row {line:?}")));
        }
        let t: usize = fields[1]
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("bad t: {e}")))?;
        let mean: f64 = fields[2]
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("bad mean: {e}")))?;
        let std: f64 = fields[3]
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("bad std: {e}")))?;
        match series.iter_mut().find(|s| s.solver == fields[0]) {
            Some(s) => s.points.push((t, mean, std)),
            None => series.push(SummarySeries {
                solver: fields[0].to_string(),
                points: vec![(t, mean, std)],
            }),
        }
    }
    Ok(series)
}

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 540.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;
const FLOOR: f64 = 1e-16;

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn log10_clamped(v: f64) -> f64 {
    v.max(FLOOR).log10()
}

pub fn render_convergence_svg(series: &[SummarySeries], title: &str) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0
    );

    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">no data</text>"#,
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
        svg.push_str("</svg>\n");
        return svg;
    }

    let t_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .max()
        .unwrap_or(1) as f64;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for &(_, mean, std) in &s.points {
            y_min = y_min.min(log10_clamped((mean - std).max(FLOOR)));
            y_max = y_max.max(log10_clamped(mean + std));
        }
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        y_min = -1.0;
        y_max = 1.0;
    }
    if (y_max - y_min).abs() < 1e-9 {
        y_min -= 1.0;
        y_max += 1.0;
    }

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_of = |t: f64| MARGIN_L + (t - 1.0) / (t_max - 1.0).max(1.0) * plot_w;
    let y_of = |log_v: f64| MARGIN_T + (y_max - log_v) / (y_max - y_min) * plot_h;

    // Axes.
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"#
    );
    // Y ticks at integer powers of ten.
    let lo = y_min.floor() as i64;
    let hi = y_max.ceil() as i64;
    let mut exp = lo;
    while exp <= hi {
        let y = y_of(exp as f64);
        if y >= MARGIN_T - 1.0 && y <= MARGIN_T + plot_h + 1.0 {
            let _ = writeln!(
                svg,
                r#"<line x1="{MARGIN_L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"#,
                MARGIN_L + plot_w
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">1e{exp}</text>"#,
                MARGIN_L - 6.0,
                y + 4.0
            );
        }
        exp += 1;
    }
    // X ticks: five evenly spaced.
    for i in 0..=4 {
        let t = 1.0 + (t_max - 1.0) * i as f64 / 4.0;
        let x = x_of(t);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.0}</text>"#,
            MARGIN_T + plot_h + 18.0,
            t
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">iteration</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 14.0
    );

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        // Band: mean +/- std, clamped at the floor.
        let mut band = String::new();
        for &(t, mean, std) in &s.points {
            let _ = write!(band, "{:.2},{:.2} ", x_of(t as f64), y_of(log10_clamped(mean + std)));
        }
        for &(t, mean, std) in s.points.iter().rev() {
            let _ = write!(
                band,
                "{:.2},{:.2} ",
                x_of(t as f64),
                y_of(log10_clamped((mean - std).max(FLOOR)))
            );
        }
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{color}" opacity="0.15"/>"#,
            band.trim_end()
        );
        // Mean line.
        let mut line = String::new();
        for &(t, mean, _) in &s.points {
            let _ = write!(line, "{:.2},{:.2} ", x_of(t as f64), y_of(log10_clamped(mean)));
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            line.trim_end()
        );
        // Legend entry.
        let ly = MARGIN_T + 16.0 + 18.0 * idx as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            MARGIN_L + plot_w - 130.0,
            MARGIN_L + plot_w - 100.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            MARGIN_L + plot_w - 92.0,
            ly + 4.0,
            s.solver
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Parses the summary file and writes the SVG next to it.
pub fn write_convergence_svg(summary_csv: &Path, out: &Path, title: &str) -> Result<()> {
    let text = std::fs::read_to_string(summary_csv)?;
    let series = parse_summary_csv(&text)?;
    let svg = render_convergence_svg(&series, title);
    super::write_atomic(out, svg.as_bytes())
}
