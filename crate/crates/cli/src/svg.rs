//! Minimal SVG scatter of true against recovered spectral points.

use std::fmt::Write;

use prony::problem::PlotData;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 48.0;

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.1).max(1e-3);
    (lo - pad, hi + pad)
}

pub fn scatter(data: &PlotData) -> String {
    let all = || data.truth.iter().chain(&data.recovered);
    let (x0, x1) = bounds(all().map(|p| p.0));
    let (y0, y1) = bounds(all().map(|p| p.1));
    let span = SIZE - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * span;
    let sy = |y: f64| SIZE - MARGIN - (y - y0) / (y1 - y0) * span;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ =
        writeln!(s, r#"<rect x="{MARGIN}" y="{MARGIN}" width="{span}" height="{span}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{} recovery</text>"#, SIZE / 2.0, data.kind);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, SIZE / 2.0, SIZE - 12.0, data.x_label);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">{1}</text>"#,
        SIZE / 2.0,
        data.y_label
    );
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}">{x0:.3}</text>"#, SIZE - MARGIN + 14.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{x1:.3}</text>"#, SIZE - MARGIN, SIZE - MARGIN + 14.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y0:.3}</text>"#, MARGIN - 4.0, SIZE - MARGIN);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.3}</text>"#, MARGIN - 4.0, MARGIN + 10.0);
    for &(x, y) in &data.truth {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="7" fill="none" stroke="steelblue" stroke-width="2"/>"#,
            sx(x),
            sy(y)
        );
    }
    for &(x, y) in &data.recovered {
        let (cx, cy) = (sx(x), sy(y));
        let _ = writeln!(
            s,
            r#"<path d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}" stroke="crimson" stroke-width="2"/>"#,
            cx - 4.0,
            cy - 4.0,
            cx + 4.0,
            cy + 4.0,
            cx - 4.0,
            cy + 4.0,
            cx + 4.0,
            cy - 4.0
        );
    }
    let _ =
        writeln!(s, r#"<circle cx="{}" cy="30" r="5" fill="none" stroke="steelblue" stroke-width="2"/>"#, SIZE - 150.0);
    let _ = writeln!(s, r#"<text x="{}" y="34">truth</text>"#, SIZE - 140.0);
    let _ = writeln!(s, r#"<text x="{}" y="34" fill="crimson">x recovered</text>"#, SIZE - 95.0);
    s.push_str("</svg>\n");
    s
}
