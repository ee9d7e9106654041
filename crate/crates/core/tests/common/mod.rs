//! Generators and brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use polyrefine::cnn::{ConvLayer, Tensor3};
use polyrefine::{Point2, Polygon};
use rand::Rng;

/// A random star-shaped polygon around a random center: 3 to 10 corners
/// at sorted, well-spread angles, radii in `[r_min, 1]`, up to 3 aligned vertices on
/// random edges, then a random scale.
pub fn random_polygon<R: Rng>(rng: &mut R, r_min: f64) -> Polygon {
    let n = rng.gen_range(3..=10);
    let gap = 0.25 * std::f64::consts::TAU / n as f64;
    let mut angles: Vec<f64>;
    loop {
        angles = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let wrap = angles[0] + std::f64::consts::TAU - angles[n - 1];
        // gaps below a half turn keep the center inside, so the loop is simple
        let ok = |g: f64| g > gap && g < 0.9 * std::f64::consts::PI;
        if angles.windows(2).all(|w| ok(w[1] - w[0])) && ok(wrap) {
            break;
        }
    }
    let center = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let scale = 10f64.powf(rng.gen_range(-2.0..1.0));
    let mut v: Vec<Point2> = angles
        .iter()
        .map(|&a| {
            let r = rng.gen_range(r_min..=1.0) * scale;
            Point2::new(center.x + r * a.cos(), center.y + r * a.sin())
        })
        .collect();
    for _ in 0..rng.gen_range(0..=3) {
        let i = rng.gen_range(0..v.len());
        let j = (i + 1) % v.len();
        let t = rng.gen_range(0.2..0.8);
        v.insert(i + 1, v[i].lerp(v[j], t));
    }
    Polygon::new(v).expect("star-shaped polygons are simple")
}

/// Winding number of `poly` around `q`, summing signed angles.
pub fn winding_number(poly: &Polygon, q: Point2) -> f64 {
    let v = poly.vertices();
    let mut total = 0.0;
    for i in 0..v.len() {
        let (a, b) = (v[i] - q, v[(i + 1) % v.len()] - q);
        total += a.cross(b).atan2(a.dot(b));
    }
    total / std::f64::consts::TAU
}

fn inside(poly: &Polygon, q: Point2) -> bool {
    winding_number(poly, q).abs() > 0.5
}

fn near_boundary(poly: &Polygon, q: Point2, margin: f64) -> bool {
    let v = poly.vertices();
    (0..v.len()).any(|i| {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        let t = ((q - a).dot(b - a) / (b - a).dot(b - a)).clamp(0.0, 1.0);
        q.dist(a.lerp(b, t)) < margin
    })
}

/// Checks `children` against `parent` on a grid of sample points: each
/// sample clearly inside the parent lies in exactly one child and samples
/// outside lie in none. Samples near any boundary are skipped.
pub fn grid_partition_check(parent: &Polygon, children: &[Polygon], samples: usize) -> Result<(), String> {
    let (lo, hi) = parent.bounding_box();
    let margin = 1e-7 * parent.diameter();
    for i in 0..samples {
        for j in 0..samples {
            // irrational offsets keep samples off structured lines
            let q = Point2::new(
                lo.x + (hi.x - lo.x) * ((i as f64 + 0.5 + 0.1234567) / samples as f64).min(1.0),
                lo.y + (hi.y - lo.y) * ((j as f64 + 0.5 - 0.0765432) / samples as f64).max(0.0),
            );
            if near_boundary(parent, q, margin) || children.iter().any(|c| near_boundary(c, q, margin)) {
                continue;
            }
            let hits = children.iter().filter(|c| inside(c, q)).count();
            let expect = usize::from(inside(parent, q));
            if hits != expect {
                return Err(format!("sample {q:?} lies in {hits} children, expected {expect}"));
            }
        }
    }
    Ok(())
}

pub fn area_defect(parent: &Polygon, children: &[Polygon]) -> f64 {
    (children.iter().map(Polygon::area).sum::<f64>() - parent.area()).abs() / parent.area()
}

/// Quadruple-loop convolution with zero padding.
pub fn conv_oracle(x: &Tensor3, layer: &ConvLayer) -> Tensor3 {
    let k = layer.half_width as isize;
    let mut out = Tensor3::zeros(x.rows(), x.cols(), layer.out_channels);
    for o in 0..layer.out_channels {
        for i in 0..x.rows() as isize {
            for j in 0..x.cols() as isize {
                let mut s = layer.bias[o];
                for c in 0..x.channels() {
                    for p in -k..=k {
                        for q in -k..=k {
                            let (r, cc) = (i + p, j + q);
                            if (0..x.rows() as isize).contains(&r) && (0..x.cols() as isize).contains(&cc) {
                                s += layer.weight(o, c, (p + k) as usize, (q + k) as usize)
                                    * x.get(r as usize, cc as usize, c);
                            }
                        }
                    }
                }
                out.set(i as usize, j as usize, o, s);
            }
        }
    }
    out
}

/// 2x2 max pooling with stride 2; windows hanging over an odd border see
/// zero padding.
pub fn pool_oracle(x: &Tensor3) -> Tensor3 {
    let (r, c) = (x.rows().div_ceil(2), x.cols().div_ceil(2));
    let mut out = Tensor3::zeros(r, c, x.channels());
    for ch in 0..x.channels() {
        for i in 0..r {
            for j in 0..c {
                let mut m = f64::NEG_INFINITY;
                for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let (y, z) = (2 * i + a, 2 * j + b);
                    let v = if y < x.rows() && z < x.cols() { x.get(y, z, ch) } else { 0.0 };
                    m = m.max(v);
                }
                out.set(i, j, ch, m);
            }
        }
    }
    out
}

/// Softmax from the definition, with the maximum shifted out.
pub fn softmax_oracle(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

pub fn random_tensor<R: Rng>(rng: &mut R, rows: usize, cols: usize, channels: usize) -> Tensor3 {
    let data = (0..rows * cols * channels).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor3::from_channel_major(rows, cols, channels, data).expect("consistent shape")
}
