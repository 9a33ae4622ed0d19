//! Standalone SVG line charts of diagnostic series.

use std::fmt::Write as _;

use geoflow_core::DiagnosticSeries;

use crate::error::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Chart of `columns` against `t`. Rows where a column is empty are skipped.
pub fn render_svg(csv: &str, columns: &[String]) -> Result<String, CliError> {
    let series = DiagnosticSeries::from_csv(csv).map_err(|e| CliError::Config(format!("csv: {e}")))?;
    if series.is_empty() {
        return Err(CliError::Config("csv: the series has no rows".into()));
    }
    if columns.is_empty() {
        return Err(CliError::Config("cols: name at least one column".into()));
    }
    let mut lines = Vec::new();
    for c in columns {
        let pts = series.points(c).ok_or_else(|| {
            CliError::Config(format!(
                "cols: no column `{c}`; the series has {}",
                series.columns().join(", ")
            ))
        })?;
        let pts: Vec<(f64, f64)> = pts.into_iter().filter(|(t, v)| t.is_finite() && v.is_finite()).collect();
        if pts.is_empty() {
            return Err(CliError::Config(format!("cols: column `{c}` has no finite values")));
        }
        lines.push((c.as_str(), pts));
    }

    let all = lines.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = padded(y0, y1);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<g stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b}"/></g>"#,
        b = TOP + ph,
        r = LEFT + pw
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{b5}" stroke="black"/><text x="{px:.2}" y="{bt}" text-anchor="middle">{}</text>"#,
            tick(xv),
            b = TOP + ph,
            b5 = TOP + ph + 5.0,
            bt = TOP + ph + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{l5}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{lt}" y="{py4:.2}" text-anchor="end">{}</text>"#,
            tick(yv),
            l5 = LEFT - 5.0,
            lt = LEFT - 8.0,
            py4 = py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let ylabel = escape(&columns.join(", "));
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 18 {cy:.2})">{ylabel}</text>"#,
        cy = TOP + ph / 2.0
    );
    for (i, (name, pts)) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{:.3},{:.3}", sx(*x), sy(*y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline data-column="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            escape(name),
            coords.join(" ")
        );
    }
    if lines.len() > 1 {
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(svg, r#"<g class="legend">"#);
        for (i, (name, _)) in lines.iter().enumerate() {
            let y = TOP + 10.0 + 20.0 * i as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                PALETTE[i % PALETTE.len()],
                lx + 26.0,
                y + 4.0,
                escape(name)
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
