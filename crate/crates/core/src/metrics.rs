//! Scale-invariant element quality metrics, each in `[0, 1]`.
//!
//! | name | definition |
//! |------|------------|
//! | UF   | element diameter over mesh size |
//! | CR   | inscribed radius over half the diameter |
//! | APR  | `4π·area / perimeter²` |
//! | MA   | smallest inner angle over π |
//! | ER   | shortest over longest edge |
//! | NPD  | smallest vertex distance over the diameter |

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::geometry::Polygon;
use crate::mesh::PolyMesh;

pub const METRIC_NAMES: [&str; 6] = ["UF", "CR", "APR", "MA", "ER", "NPD"];

/// Default histogram resolution on `[0, 1]`.
pub const DEFAULT_BINS: usize = 20;

pub fn uniformity_factor(mesh: &PolyMesh) -> Vec<f64> {
    let diams: Vec<f64> = mesh.polygons().iter().map(Polygon::diameter).collect();
    let h = diams.iter().copied().fold(0.0, f64::max);
    diams.into_iter().map(|d| d / h).collect()
}

pub fn circle_ratio(p: &Polygon) -> f64 {
    p.inscribed_radius() / (0.5 * p.diameter())
}

pub fn area_perimeter_ratio(p: &Polygon) -> f64 {
    4.0 * PI * p.area() / p.perimeter().powi(2)
}

pub fn min_angle(p: &Polygon) -> f64 {
    p.min_inner_angle() / PI
}

pub fn edge_ratio(p: &Polygon) -> f64 {
    let l = p.edge_lengths();
    let lo = l.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = l.iter().copied().fold(0.0, f64::max);
    lo / hi
}

pub fn normalized_point_distance(p: &Polygon) -> f64 {
    let v = p.vertices();
    let mut best = f64::INFINITY;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            best = best.min(v[i].dist(v[j]));
        }
    }
    best / p.diameter()
}

/// The five per-polygon metrics (all but UF) in [`METRIC_NAMES`] order.
pub fn shape_metrics(p: &Polygon) -> [f64; 5] {
    [circle_ratio(p), area_perimeter_ratio(p), min_angle(p), edge_ratio(p), normalized_point_distance(p)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    /// Counts per uniform bin on `[0, 1]`; 1.0 falls in the last bin.
    pub histogram: Vec<usize>,
    pub median: f64,
    pub mean: f64,
}

impl MetricSummary {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let mut histogram = vec![0; bins.max(1)];
        for &v in values {
            let b = ((v * histogram.len() as f64) as usize).min(histogram.len() - 1);
            histogram[b] += 1;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = match n {
            0 => f64::NAN,
            _ if n % 2 == 1 => sorted[n / 2],
            _ => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
        };
        let mean = values.iter().sum::<f64>() / n as f64;
        Self { histogram, median, mean }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    /// Per element: UF, CR, APR, MA, ER, NPD.
    pub elements: Vec<[f64; 6]>,
    /// One summary per metric, in [`METRIC_NAMES`] order.
    pub summaries: Vec<MetricSummary>,
}

impl QualityReport {
    pub fn metric(&self, k: usize) -> Vec<f64> {
        self.elements.iter().map(|e| e[k]).collect()
    }

    pub fn median(&self, name: &str) -> Option<f64> {
        METRIC_NAMES.iter().position(|&n| n == name).map(|k| self.summaries[k].median)
    }

    /// One row per element: `element,UF,CR,APR,MA,ER,NPD`.
    pub fn to_csv(&self) -> String {
        let mut s = format!("element,{}\n", METRIC_NAMES.join(","));
        for (i, e) in self.elements.iter().enumerate() {
            let _ = write!(s, "{i}");
            for v in e {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    /// Per metric: median, mean and the histogram counts.
    pub fn summary_csv(&self) -> String {
        let bins = self.summaries.first().map_or(0, |s| s.histogram.len());
        let mut s = String::from("metric,median,mean");
        for b in 0..bins {
            let _ = write!(s, ",bin{b}");
        }
        s.push('\n');
        for (name, m) in METRIC_NAMES.iter().zip(&self.summaries) {
            let _ = write!(s, "{name},{},{}", m.median, m.mean);
            for c in &m.histogram {
                let _ = write!(s, ",{c}");
            }
            s.push('\n');
        }
        s
    }
}

pub fn quality_report(mesh: &PolyMesh) -> QualityReport {
    quality_report_with_bins(mesh, DEFAULT_BINS)
}

pub fn quality_report_with_bins(mesh: &PolyMesh, bins: usize) -> QualityReport {
    let uf = uniformity_factor(mesh);
    let shape: Vec<[f64; 5]> = mesh.polygons().par_iter().map(shape_metrics).collect();
    let elements: Vec<[f64; 6]> = uf.iter().zip(&shape).map(|(&u, s)| [u, s[0], s[1], s[2], s[3], s[4]]).collect();
    let summaries =
        (0..6).map(|k| MetricSummary::new(&elements.iter().map(|e| e[k]).collect::<Vec<_>>(), bins)).collect();
    QualityReport { elements, summaries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::mesh::generate_triangle_grid;

    fn poly(v: &[(f64, f64)]) -> Polygon {
        Polygon::new(v.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    fn square() -> Polygon {
        poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    }

    fn split_square() -> Polygon {
        poly(&[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    }

    fn equilateral() -> Polygon {
        Polygon::regular(3, Point2::new(0.0, 0.0), 1.0 / 3f64.sqrt(), 0.0).unwrap()
    }

    #[test]
    fn circle_ratio_examples() {
        assert!((circle_ratio(&square()) - 0.5 / (2f64.sqrt() / 2.0)).abs() < 2e-3);
        assert!((circle_ratio(&equilateral()) - (1.0 / (2.0 * 3f64.sqrt())) / 0.5).abs() < 2e-3);
        let thin = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.1), (0.0, 0.1)]);
        assert!((circle_ratio(&thin) - 0.05 / (1.01f64.sqrt() / 2.0)).abs() < 2e-3);
    }

    #[test]
    fn area_perimeter_examples() {
        assert!((area_perimeter_ratio(&square()) - PI / 4.0).abs() < 1e-15);
        let hex = Polygon::regular(6, Point2::new(0.0, 0.0), 1.0, 0.0).unwrap();
        assert!((area_perimeter_ratio(&hex) - PI * 3f64.sqrt() / 6.0).abs() < 1e-14);
        let thin = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.01), (0.0, 0.01)]);
        let expect = 4.0 * PI * 0.01 / (2.02f64 * 2.02);
        assert!((area_perimeter_ratio(&thin) - expect).abs() < 1e-15);
        assert!((expect - 0.0308).abs() < 1e-4);
    }

    #[test]
    fn angle_edge_and_distance_examples() {
        assert!((min_angle(&square()) - 0.5).abs() < 1e-15);
        assert!((min_angle(&equilateral()) - 1.0 / 3.0).abs() < 1e-14);
        assert!((min_angle(&poly(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])) - 0.25).abs() < 1e-15);
        assert_eq!(edge_ratio(&square()), 1.0);
        assert_eq!(edge_ratio(&split_square()), 0.5);
        assert!((normalized_point_distance(&square()) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((normalized_point_distance(&split_square()) - 0.5 / 2f64.sqrt()).abs() < 1e-15);
        assert!((normalized_point_distance(&equilateral()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tiny_edge_regular_polygon() {
        // hexagon with an extra vertex cutting off 1% of one edge
        let hex = Polygon::regular(6, Point2::new(0.0, 0.0), 1.0, 0.0).unwrap();
        let mut v = hex.vertices().to_vec();
        v.insert(1, v[0].lerp(v[1], 0.01));
        let p = Polygon::new(v).unwrap();
        assert!((edge_ratio(&p) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn report_on_congruent_grid_is_point_mass() {
        let m = generate_triangle_grid(3).unwrap();
        let r = quality_report(&m);
        assert_eq!(r.elements.len(), 18);
        for s in &r.summaries {
            assert_eq!(s.histogram.iter().filter(|&&c| c > 0).count(), 1);
            assert_eq!(s.histogram.iter().sum::<usize>(), 18);
        }
        assert!((r.median("UF").unwrap() - 1.0).abs() < 1e-15);
        assert!(r.to_csv().starts_with("element,UF,CR,APR,MA,ER,NPD\n0,"));
        assert_eq!(r.summary_csv().lines().count(), 7);
    }

    #[test]
    fn uniformity_of_mixed_mesh() {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.5, 0.0),
            Point2::new(1.5, 0.5),
            Point2::new(1.0, 0.5),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let m = PolyMesh::new(v, vec![vec![0, 1, 4, 5, 6], vec![1, 2, 3, 4]]).unwrap();
        assert_eq!(uniformity_factor(&m), vec![1.0, 0.5]);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(MetricSummary::new(&[0.1, 0.9, 0.5], 4).median, 0.5);
        let s = MetricSummary::new(&[0.2, 0.4, 1.0, 0.0], 4);
        assert!((s.median - 0.3).abs() < 1e-15);
        assert_eq!(s.histogram, vec![2, 1, 0, 1]);
    }
}
