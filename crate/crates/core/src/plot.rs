//! Minimal hand-written SVG: mesh drawings, metric histograms and log-log
//! convergence plots.

use std::fmt::Write as _;

use crate::mesh::PolyMesh;
use crate::metrics::{QualityReport, METRIC_NAMES};

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
}

/// Blue-to-red ramp for a value in `[0, 1]`.
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t) as u8;
    let b = (255.0 * (1.0 - t)) as u8;
    format!("rgb({r},{},{b})", 80 + (95.0 * (1.0 - (2.0 * t - 1.0).abs())) as u8)
}

/// Element outlines, optionally filled by one value per element in
/// `[0, 1]`.
pub fn mesh_svg(mesh: &PolyMesh, values: Option<&[f64]>, size: f64) -> String {
    let (lo, hi) = mesh.bounding_box();
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
    let pad = 10.0;
    let scale = (size - 2.0 * pad) / span;
    let mut s = header(size, size);
    for (e, l) in mesh.elements().iter().enumerate() {
        let pts: Vec<String> = l
            .iter()
            .map(|&i| {
                let p = mesh.vertices()[i];
                format!("{:.3},{:.3}", pad + (p.x - lo.x) * scale, size - pad - (p.y - lo.y) * scale)
            })
            .collect();
        let fill = values.and_then(|v| v.get(e)).map_or_else(|| "none".to_string(), |&t| ramp(t));
        let _ = writeln!(
            s,
            "<polygon points=\"{}\" fill=\"{fill}\" stroke=\"black\" stroke-width=\"0.5\"/>",
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One bar chart per metric, laid out in a 3 x 2 grid.
pub fn histogram_svg(report: &QualityReport) -> String {
    let (pw, ph) = (260.0, 180.0);
    let mut s = header(3.0 * pw, 2.0 * ph);
    for (k, (name, summary)) in METRIC_NAMES.iter().zip(&report.summaries).enumerate() {
        let (ox, oy) = ((k % 3) as f64 * pw, (k / 3) as f64 * ph);
        let (left, bottom, width, height) = (ox + 30.0, oy + ph - 30.0, pw - 45.0, ph - 60.0);
        let max = summary.histogram.iter().copied().max().unwrap_or(0).max(1) as f64;
        let bw = width / summary.histogram.len() as f64;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" font-family=\"sans-serif\">{name} (median {:.3})</text>",
            left,
            oy + 20.0,
            summary.median
        );
        for (b, &c) in summary.histogram.iter().enumerate() {
            let bh = height * c as f64 / max;
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                left + b as f64 * bw,
                bottom - bh,
                bw * 0.9,
                bh,
                PALETTE[0]
            );
        }
        let _ = writeln!(
            s,
            "<line x1=\"{left}\" y1=\"{bottom}\" x2=\"{:.1}\" y2=\"{bottom}\" stroke=\"black\"/>",
            left + width
        );
        for t in [0.0, 0.5, 1.0] {
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"middle\">{t}</text>",
                left + t * width,
                bottom + 14.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// A named polyline of `(x, y)` points, both positive.
pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Log-log line plot with decade ticks.
pub fn loglog_svg(series: &[Series<'_>], x_label: &str, y_label: &str) -> String {
    let (w, h) = (560.0, 420.0);
    let (left, right, top, bottom) = (70.0, w - 20.0, 20.0, h - 50.0);
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0 > 0.0 && p.1 > 0.0);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        y0 = y0.min(y.log10());
        y1 = y1.max(y.log10());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let sx = |x: f64| left + (x.log10() - x0) / (x1 - x0) * (right - left);
    let sy = |y: f64| bottom - (y.log10() - y0) / (y1 - y0) * (bottom - top);
    let mut s = header(w, h);
    let _ = writeln!(
        s,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        right - left,
        bottom - top
    );
    for d in x0 as i32..=x1 as i32 {
        let x = sx(10f64.powi(d));
        let _ = writeln!(s, "<line x1=\"{x:.1}\" y1=\"{top}\" x2=\"{x:.1}\" y2=\"{bottom}\" stroke=\"#ddd\"/>");
        let _ = writeln!(
            s,
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"middle\">1e{d}</text>",
            bottom + 15.0
        );
    }
    for d in y0 as i32..=y1 as i32 {
        let y = sy(10f64.powi(d));
        let _ = writeln!(s, "<line x1=\"{left}\" y1=\"{y:.1}\" x2=\"{right}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>");
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"end\">1e{d}</text>",
            left - 5.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" font-family=\"sans-serif\" text-anchor=\"middle\">{x_label}</text>",
        0.5 * (left + right),
        h - 12.0
    );
    let _ = writeln!(
        s,
        "<text x=\"15\" y=\"{:.1}\" font-size=\"13\" font-family=\"sans-serif\" text-anchor=\"middle\" transform=\"rotate(-90 15 {:.1})\">{y_label}</text>",
        0.5 * (top + bottom),
        0.5 * (top + bottom)
    );
    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0 > 0.0 && p.1 > 0.0)
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
            path.join(" ")
        );
        for p in &path {
            let (cx, cy) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(s, "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"3\" fill=\"{color}\"/>");
        }
        let ly = top + 18.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            right - 130.0,
            right - 110.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" font-family=\"sans-serif\">{}</text>",
            right - 105.0,
            ly + 4.0,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_triangle_grid;
    use crate::metrics::quality_report;

    #[test]
    fn documents_are_well_formed() {
        let m = generate_triangle_grid(2).unwrap();
        let svg = mesh_svg(&m, Some(&[0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 0.5, 0.5]), 300.0);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polygon").count(), 8);
        let h = histogram_svg(&quality_report(&m));
        assert_eq!(h.matches("<rect").count(), 1 + 6 * 20);
        let l = loglog_svg(&[Series { label: "mp", points: vec![(10.0, 0.5), (40.0, 0.25)] }], "dofs", "error");
        assert_eq!(l.matches("<circle").count(), 2);
        assert!(l.contains(">mp</text>"));
    }
}
