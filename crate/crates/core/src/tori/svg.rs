//! Section portraits as standalone SVG.

use std::fmt::Write;

/// A named set of points drawn as a closed polyline or as dots.
pub struct Layer<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: &'a [[f64; 2]],
    pub closed: bool,
}

/// Renders the layers in `(r, z)` coordinates with a margin and a legend.
pub fn portrait(title: &str, layers: &[Layer<'_>]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 640.0;
    const PAD: f64 = 40.0;
    let all = layers.iter().flat_map(|l| l.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let k = (W - 2.0 * PAD) / span;
    let px = |p: &[f64; 2]| (PAD + (p[0] - x0) * k, H - PAD - (p[1] - y0) * k);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{PAD}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    for (i, l) in layers.iter().enumerate() {
        if l.closed {
            let pts: Vec<String> = l
                .points
                .iter()
                .map(|p| {
                    let (a, b) = px(p);
                    format!("{a:.2},{b:.2}")
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                pts.join(" "),
                l.color
            );
        } else {
            for p in l.points {
                let (a, b) = px(p);
                let _ = writeln!(s, r#"<circle cx="{a:.2}" cy="{b:.2}" r="1.5" fill="{}"/>"#, l.color);
            }
        }
        let ly = H - PAD + 14.0;
        let lx = PAD + 160.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{lx}" y="{ly}" font-family="sans-serif" font-size="12" fill="{}">{}</text>"#,
            l.color,
            escape(l.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
