use std::fmt::Write;

use super::PrCurve;

const WIDTH: f64 = 520.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// Precision (y) against recall (x) for each named curve.
pub fn render_pr_curves(curves: &[(&str, &PrCurve)]) -> String {
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x = |r: f64| MARGIN + r * plot_w;
    let y = |p: f64| HEIGHT - MARGIN - p * plot_h;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for i in 0..=10 {
        let v = i as f64 / 10.0;
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#e5e5e5"/>"##,
            x(0.0),
            y(v),
            x(1.0),
            y(v)
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#e5e5e5"/>"##,
            x(v),
            y(0.0),
            x(v),
            y(1.0)
        );
        if i % 2 == 0 {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text>"#,
                x(v),
                y(0.0) + 18.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
                x(0.0) - 6.0,
                y(v) + 4.0
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<rect x="{:.1}" y="{:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="black"/>"#,
        x(0.0),
        y(1.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Recall</text>"#,
        x(0.5),
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">Precision</text>"#,
        y(0.5),
        y(0.5)
    );
    for (i, (name, curve)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        if let Some(first) = curve.points.first() {
            let _ = write!(d, "M{:.2},{:.2}", x(0.0), y(first.precision));
        }
        for p in &curve.points {
            let _ = write!(d, " L{:.2},{:.2}", x(p.recall), y(p.precision));
        }
        let _ = writeln!(
            s,
            r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.6"/>"#
        );
        let ly = y(0.0) - 14.0 - 16.0 * (curves.len() - 1 - i) as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            x(0.04),
            x(0.1)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{} (AUC {:.3})</text>"#,
            x(0.12),
            ly + 4.0,
            escape(name),
            curve.auc
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::pr_curve;

    #[test]
    fn one_path_per_curve() {
        let a = pr_curve(&[0.9, 0.5, 0.1], &[true, false, true]).unwrap();
        let svg = render_pr_curves(&[("a", &a), ("b<c", &a)]);
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("b&lt;c"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
