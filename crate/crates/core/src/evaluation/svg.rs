use std::fmt::Write;

use super::RocCurve;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Standalone SVG with unit axes and one polyline per labelled curve.
pub fn render_roc_svg(title: &str, curves: &[(String, &RocCurve)]) -> String {
    let width = SIZE + 2.0 * MARGIN + 160.0;
    let height = SIZE + 2.0 * MARGIN;
    let px = |x: f64| MARGIN + x * SIZE;
    let py = |y: f64| MARGIN + (1.0 - y) * SIZE;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        px(0.5),
        MARGIN / 2.0,
        escape(title)
    );
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="#ddd"/><line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#ddd"/>"##,
            x = px(t),
            y = py(t),
            x0 = px(0.0),
            x1 = px(1.0),
            y0 = py(0.0),
            y1 = py(1.0),
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{t:.1}</text><text x="{}" y="{}" text-anchor="end">{t:.1}</text>"#,
            px(t),
            py(0.0) + 18.0,
            px(0.0) - 6.0,
            py(t) + 4.0,
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#,
        px(0.0),
        py(1.0)
    );
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-dasharray="4 4"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">False positive rate</text>"#,
        px(0.5),
        height - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">True positive rate</text>"#,
        py(0.5),
        py(0.5)
    );
    for (i, (label, curve)) in curves.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.fpr), py(p.tpr)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN + 10.0 + 18.0 * i as f64;
        let lx = px(1.0) + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{} ({:.3})</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(label),
            curve.auc
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::roc_auc;

    #[test]
    fn one_polyline_per_curve() {
        let a = roc_auc(&[0.9, 0.1, 0.5], &[1, 0, 1]).unwrap();
        let b = roc_auc(&[0.2, 0.8, 0.5], &[1, 0, 1]).unwrap();
        let svg = render_roc_svg("p<1>", &[("LR raw".into(), &a), ("LR emb".into(), &b)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("p&lt;1&gt;"));
        assert!(svg.contains("False positive rate"));
    }
}
