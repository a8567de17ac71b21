//! Minimal SVG plots: polylines in data coordinates plus two axes.

use std::fmt::Write as _;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 50.0;

pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub lines: Vec<Vec<(f64, f64)>>,
}

fn bounds(lines: &[Vec<(f64, f64)>]) -> (f64, f64, f64, f64) {
    let pts = lines.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (-1.0, 1.0, -1.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        let w = (hi - lo).max(1e-12 * lo.abs().max(1.0));
        (lo - 0.05 * w, hi + 0.05 * w)
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    (x0, x1, y0, y1)
}

impl Plot<'_> {
    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = bounds(&self.lines);
        let inner = SIZE - 2.0 * MARGIN;
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * inner;
        let sy = |y: f64| SIZE - MARGIN - (y - y0) / (y1 - y0) * inner;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="25" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            SIZE / 2.0,
            self.title
        );
        // axes through zero when it is in range, otherwise along the frame edge
        let ax = if (x0..=x1).contains(&0.0) { sx(0.0) } else { MARGIN };
        let ay = if (y0..=y1).contains(&0.0) { sy(0.0) } else { SIZE - MARGIN };
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN}" y1="{ay:.2}" x2="{}" y2="{ay:.2}" stroke="black"/>"#,
            SIZE - MARGIN
        );
        let _ = writeln!(
            s,
            r#"<line x1="{ax:.2}" y1="{MARGIN}" x2="{ax:.2}" y2="{}" stroke="black"/>"#,
            SIZE - MARGIN
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="end">{}</text>"#,
            SIZE - MARGIN,
            SIZE - MARGIN / 3.0,
            self.x_label
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14">{}</text>"#,
            MARGIN / 4.0,
            MARGIN - 8.0,
            self.y_label
        );
        let _ = writeln!(
            s,
            r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="10">[{x0:.3e}, {x1:.3e}] x [{y0:.3e}, {y1:.3e}]</text>"#,
            SIZE - 8.0
        );
        for line in &self.lines {
            if line.is_empty() {
                continue;
            }
            s.push_str(r#"<polyline fill="none" stroke="steelblue" stroke-width="0.5" points=""#);
            for (i, &(x, y)) in line.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{:.2},{:.2}", sx(x), sy(y));
            }
            s.push_str("\"/>\n");
        }
        s.push_str("</svg>\n");
        s
    }
}
