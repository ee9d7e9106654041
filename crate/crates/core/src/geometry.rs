//! 2D geometric kernel for simple polygons.
//!
//! Polygons are stored as counter-clockwise vertex loops. Aligned vertices
//! (a vertex lying on the straight segment joining its neighbours) are
//! allowed and kept: refinement produces them as hanging nodes.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Relative tolerance for collinearity and containment tests; multiplied by
/// the polygon diameter.
pub const REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    /// `self + t (other - self)`.
    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(self.x + t * (other.x - self.x), self.y + t * (other.y - self.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Orientation of `c` relative to the directed line `a -> b` (twice the
/// signed triangle area).
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t))
}

/// Closed segments `[a, b]` and `[c, d]` share at least one point.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    // rounded orientations of collinear but disjoint segments can look like
    // a proper crossing; their boxes are disjoint
    if a.x.max(b.x) < c.x.min(d.x)
        || c.x.max(d.x) < a.x.min(b.x)
        || a.y.max(b.y) < c.y.min(d.y)
        || c.y.max(d.y) < a.y.min(b.y)
    {
        return false;
    }
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Point2, q: Point2, r: Point2, o: f64| {
        o == 0.0 && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

/// Segments cross at a single point interior to both, with a relative
/// tolerance `tol` (in length units) below which touching is not a crossing.
pub fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2, tol: f64) -> bool {
    let lab = a.dist(b);
    let lcd = c.dist(d);
    if lab == 0.0 || lcd == 0.0 {
        return false;
    }
    // signed distances of each endpoint from the other segment's line
    let d1 = orient(c, d, a) / lcd;
    let d2 = orient(c, d, b) / lcd;
    let d3 = orient(a, b, c) / lab;
    let d4 = orient(a, b, d) / lab;
    ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))
}

/// Shoelace sum taken about the first vertex, so small polygons far from
/// the origin keep their precision.
fn signed_area_of(vertices: &[Point2]) -> f64 {
    let Some(&o) = vertices.first() else { return 0.0 };
    let s: f64 = vertices.windows(2).map(|w| (w[0] - o).cross(w[1] - o)).sum();
    0.5 * s
}

/// A simple polygon with counter-clockwise vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    /// Builds a polygon, reversing clockwise input. Fails on fewer than three
    /// vertices, non-finite coordinates, repeated consecutive vertices, zero
    /// area or self-intersection.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidPolygon(format!("{n} vertices, need at least 3")));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidPolygon(format!("vertex {i} is not finite")));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::InvalidPolygon(format!("vertex {i} repeated")));
            }
        }
        let area = signed_area_of(&vertices);
        let diam = diameter_of(&vertices);
        if area.abs() <= (REL_TOL * diam) * (REL_TOL * diam) || area.is_nan() {
            return Err(Error::InvalidPolygon("zero area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let poly = Self { vertices };
        if let Some((i, j)) = poly.first_self_intersection() {
            return Err(Error::InvalidPolygon(format!("edges {i} and {j} intersect")));
        }
        Ok(poly)
    }

    /// Regular polygon with `n` vertices on the circle of radius `radius`
    /// around `center`, first vertex at angle `phase`.
    pub fn regular(n: usize, center: Point2, radius: f64, phase: f64) -> Result<Self> {
        let vertices = (0..n)
            .map(|k| {
                let t = phase + 2.0 * PI * k as f64 / n as f64;
                Point2::new(center.x + radius * t.cos(), center.y + radius * t.sin())
            })
            .collect();
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point2> {
        self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i % self.vertices.len()]
    }

    /// Edges as `(start, end)` pairs; edge `i` runs from vertex `i` to `i + 1`.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Arithmetic mean of the vertices (not the area centroid).
    pub fn centroid(&self) -> Point2 {
        let n = self.vertices.len() as f64;
        let s = self.vertices.iter().fold(Point2::default(), |acc, &p| acc + p);
        Point2::new(s.x / n, s.y / n)
    }

    /// First moment centroid of the enclosed region.
    pub fn area_centroid(&self) -> Point2 {
        let n = self.vertices.len();
        let o = self.vertices[0];
        let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = self.vertices[i] - o;
            let q = self.vertices[(i + 1) % n] - o;
            let w = p.cross(q);
            a += w;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point2::new(o.x + cx / (3.0 * a), o.y + cy / (3.0 * a))
    }

    pub fn area(&self) -> f64 {
        signed_area_of(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    /// Largest distance between two vertices.
    pub fn diameter(&self) -> f64 {
        diameter_of(&self.vertices)
    }

    /// Absolute geometric tolerance for this polygon.
    pub fn tolerance(&self) -> f64 {
        REL_TOL * self.diameter()
    }

    pub fn edge_midpoints(&self) -> Vec<Point2> {
        self.edges().map(|(a, b)| a.midpoint(b)).collect()
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.edges().map(|(a, b)| a.dist(b)).collect()
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    pub fn boundary_distance(&self, q: Point2) -> f64 {
        self.edges().map(|(a, b)| point_segment_distance(q, a, b)).fold(f64::INFINITY, f64::min)
    }

    /// Even-odd crossing test, ignoring the boundary.
    fn crossing_parity(&self, q: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > q.y) != (b.y > q.y) {
                let x = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if q.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Point containment; points within the tolerance of the boundary count
    /// as inside.
    pub fn contains(&self, q: Point2) -> bool {
        self.boundary_distance(q) <= self.tolerance() || self.crossing_parity(q)
    }

    /// Containment that excludes a band of width `margin` around the
    /// boundary.
    pub fn contains_strictly(&self, q: Point2, margin: f64) -> bool {
        self.crossing_parity(q) && self.boundary_distance(q) > margin
    }

    /// Every turn is non-negative up to the relative tolerance; aligned
    /// vertices do not break convexity.
    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[(i + n - 1) % n];
            let b = self.vertices[i];
            let c = self.vertices[(i + 1) % n];
            let (u, v) = (b - a, c - b);
            u.cross(v) >= -REL_TOL * u.norm() * v.norm()
        })
    }

    /// Interior angle at each vertex in radians, in `(0, 2π)`; aligned
    /// vertices give π.
    pub fn inner_angles(&self) -> Vec<f64> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[(i + n - 1) % n];
                let b = self.vertices[i];
                let c = self.vertices[(i + 1) % n];
                let (u, v) = (b - a, c - b);
                PI - u.cross(v).atan2(u.dot(v))
            })
            .collect()
    }

    pub fn min_inner_angle(&self) -> f64 {
        self.inner_angles().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Radius of the largest inscribed disc.
    ///
    /// Maximises the distance to the boundary: a 32x32 grid over the
    /// bounding box seeds a compass search (16 directions, step halving)
    /// that runs for 40 contractions. Accurate to well below 1e-3 of the
    /// diameter on convex and mildly non-convex shapes.
    pub fn inscribed_radius(&self) -> f64 {
        const GRID: usize = 32;
        const ITERS: usize = 40;
        const SEEDS: usize = 4;
        let (lo, hi) = self.bounding_box();
        let (w, h) = (hi.x - lo.x, hi.y - lo.y);
        let value = |q: Point2| {
            if self.crossing_parity(q) {
                self.boundary_distance(q)
            } else {
                0.0
            }
        };

        let mut seeds: Vec<(f64, Point2)> = Vec::with_capacity(GRID * GRID);
        for i in 0..GRID {
            for j in 0..GRID {
                let q =
                    Point2::new(lo.x + w * (i as f64 + 0.5) / GRID as f64, lo.y + h * (j as f64 + 0.5) / GRID as f64);
                let v = value(q);
                if v > 0.0 {
                    seeds.push((v, q));
                }
            }
        }
        if seeds.is_empty() {
            // thinner than the grid spacing: fall back to the centroid
            seeds.push((value(self.area_centroid()), self.area_centroid()));
        }
        seeds.sort_by(|a, b| b.0.total_cmp(&a.0));
        seeds.truncate(SEEDS);

        let dirs: Vec<Point2> = (0..16)
            .map(|k| {
                let t = PI * k as f64 / 8.0;
                Point2::new(t.cos(), t.sin())
            })
            .collect();
        let mut best = 0.0f64;
        for (mut fval, mut q) in seeds {
            let mut step = w.max(h) / GRID as f64;
            for _ in 0..ITERS {
                let mut moved = false;
                for &d in &dirs {
                    let cand = q + d * step;
                    let v = value(cand);
                    if v > fval {
                        fval = v;
                        q = cand;
                        moved = true;
                    }
                }
                if !moved {
                    step *= 0.5;
                }
            }
            best = best.max(fval);
        }
        best
    }

    /// Returns a translated, rotated and uniformly scaled copy.
    pub fn transformed(&self, scale: f64, angle: f64, shift: Point2) -> Result<Polygon> {
        let (s, c) = angle.sin_cos();
        Polygon::new(
            self.vertices
                .iter()
                .map(|p| Point2::new(scale * (c * p.x - s * p.y) + shift.x, scale * (s * p.x + c * p.y) + shift.y))
                .collect(),
        )
    }

    fn first_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = (self.vertices[j], self.vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Some((i, j));
                }
            }
        }
        // adjacent edges may only share their common vertex
        for i in 0..n {
            let a = self.vertices[(i + n - 1) % n];
            let b = self.vertices[i];
            let c = self.vertices[(i + 1) % n];
            if orient(a, b, c) == 0.0 && (a - b).dot(c - b) > 0.0 {
                return Some(((i + n - 1) % n, i));
            }
        }
        None
    }
}

fn diameter_of(vertices: &[Point2]) -> f64 {
    let mut d = 0.0f64;
    for (i, p) in vertices.iter().enumerate() {
        for q in &vertices[i + 1..] {
            d = d.max(p.dist(*q));
        }
    }
    d
}
