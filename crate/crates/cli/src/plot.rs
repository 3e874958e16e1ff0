//! Minimal log-log SVG plot of error against mesh size.

use std::fmt::Write;

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn decade_ticks(lo: f64, hi: f64) -> Vec<f64> {
    (lo.log10().floor() as i32..=hi.log10().ceil() as i32).map(|e| 10f64.powi(e)).collect()
}

/// Renders the series on log axes together with an `O(h^2)` guide through
/// the last point of the first series.
pub fn loglog_svg(title: &str, series: &[Series]) -> String {
    let all: Vec<(f64, f64)> =
        series.iter().flat_map(|s| s.points.iter().copied()).filter(|(x, y)| *x > 0.0 && *y > 0.0).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (x, y) in &all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if all.is_empty() {
        (x0, x1, y0, y1) = (0.1, 1.0, 0.1, 1.0);
    }
    let guide = series.first().and_then(|s| s.points.last().copied()).filter(|(x, y)| *x > 0.0 && *y > 0.0);
    if let Some((gx, gy)) = guide {
        y1 = y1.max(gy * (x1 / gx).powi(2));
    }
    let (lx0, lx1) = (x0.log10() - 0.05, x1.log10() + 0.05);
    let (ly0, ly1) = (y0.log10() - 0.1, y1.log10() + 0.1);
    let px = |x: f64| MARGIN + (x.log10() - lx0) / (lx1 - lx0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y.log10() - ly0) / (ly1 - ly0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#, WIDTH / 2.0);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    for t in decade_ticks(10f64.powf(lx0), 10f64.powf(lx1)) {
        if (lx0..=lx1).contains(&t.log10()) {
            let x = px(t);
            let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{bottom}" stroke="#ddd"/>"##);
            let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{t:.0e}</text>"#, bottom + 16.0);
        }
    }
    for t in decade_ticks(10f64.powf(ly0), 10f64.powf(ly1)) {
        if (ly0..=ly1).contains(&t.log10()) {
            let y = py(t);
            let _ = writeln!(svg, r##"<line x1="{left}" y1="{y:.2}" x2="{right}" y2="{y:.2}" stroke="#ddd"/>"##);
            let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{t:.0e}</text>"#, left - 4.0, y + 4.0);
        }
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">h</text>"#, WIDTH / 2.0, HEIGHT - 16.0);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">error</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    let mut legend = Vec::new();
    if let Some((gx, gy)) = guide {
        let (a, b) = ((x0, gy * (x0 / gx).powi(2)), (x1, gy * (x1 / gx).powi(2)));
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
            px(a.0),
            py(a.1),
            px(b.0),
            py(b.1)
        );
        legend.push(("slope 2", "gray"));
    }
    for s in series {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0)
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#, pts.join(" "), s.color);
        for p in &pts {
            let (cx, cy) = p.split_once(',').unwrap();
            let _ = writeln!(svg, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{}"/>"#, s.color);
        }
        legend.push((s.label, s.color));
    }
    for (i, (label, color)) in legend.iter().enumerate() {
        let y = top + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{label}</text>"#,
            right - 110.0,
            right - 90.0,
            right - 84.0,
            y + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_series_and_guide() {
        let s = Series { label: "L2", color: "blue", points: vec![(0.4, 1e-2), (0.2, 2.5e-3), (0.1, 6.25e-4)] };
        let svg = loglog_svg("sphere", &[s]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("slope 2"));
        assert!(svg.contains("<polyline"));
        assert_eq!(svg.matches("<circle").count(), 3);
    }
}
