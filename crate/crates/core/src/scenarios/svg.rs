//! Minimal static SVG plots.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 48.0;

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, xlabel: &str, x0: f64, x1: f64) {
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let _ = writeln!(s, r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>"#, H - PAD);
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="11">{x0:.2}</text>"#,
        H - PAD + 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{x1:.2}</text>"#,
        W - PAD,
        H - PAD + 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 10.0,
        escape(xlabel)
    );
}

/// Histogram bars (normalized densities) with an optional reference curve.
pub fn histogram(title: &str, xlabel: &str, edges: &[f64], density: &[f64], curve: Option<(&[f64], &[f64])>) -> String {
    let mut s = header(title);
    let (x0, x1) = (edges[0], edges[edges.len() - 1]);
    let ymax = density
        .iter()
        .copied()
        .chain(curve.iter().flat_map(|(_, y)| y.iter().copied()))
        .fold(0.0, f64::max)
        .max(1e-300);
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - y / ymax * (H - 2.0 * PAD);
    axes(&mut s, xlabel, x0, x1);
    for (i, &d) in density.iter().enumerate() {
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#7aa6d6"/>"##,
            sx(edges[i]),
            sy(d),
            (sx(edges[i + 1]) - sx(edges[i])).max(0.5),
            (H - PAD - sy(d)).max(0.0)
        );
    }
    if let Some((xs, ys)) = curve {
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .filter(|(x, _)| **x >= x0 && **x <= x1)
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="1.5"/>"##,
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Polylines in a fixed box.
pub fn paths(title: &str, xlabel: &str, bounds: [f64; 4], lines: &[Vec<(f64, f64)>]) -> String {
    let mut s = header(title);
    let [x0, x1, y0, y1] = bounds;
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    axes(&mut s, xlabel, x0, x1);
    for line in lines {
        let pts: Vec<String> = line.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#2c3e50" stroke-width="0.6" stroke-opacity="0.7"/>"##,
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Heat table of magnitudes with row/column labels.
pub fn heat_table(title: &str, labels: &[String], values: &[Vec<f64>]) -> String {
    let mut s = header(title);
    let n = labels.len().max(1);
    let cell = ((H - 2.0 * PAD - 20.0) / n as f64).min((W - 2.0 * PAD - 80.0) / n as f64);
    let vmax = values.iter().flatten().copied().fold(0.0, f64::max).max(1e-300);
    let left = PAD + 80.0;
    let top = PAD + 10.0;
    for (i, row) in values.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            left - 6.0,
            top + (i as f64 + 0.6) * cell,
            escape(&labels[i])
        );
        for (j, &v) in row.iter().enumerate() {
            let shade = (255.0 * (1.0 - v / vmax)).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="rgb(255,{shade},{shade})" stroke="gray"/>"#,
                left + j as f64 * cell,
                top + i as f64 * cell
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="monospace" font-size="10" text-anchor="middle">{v:.3}</text>"#,
                left + (j as f64 + 0.5) * cell,
                top + (i as f64 + 0.55) * cell
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
