//! Single-element refinement strategies.
//!
//! Every strategy returns the children of one polygon together with the
//! points it created on the parent's boundary, so a mesh can insert them as
//! hanging nodes into neighbouring elements. [`refine`] wraps the strategies
//! with the bisection fallback used when a strategy cannot produce a valid
//! partition.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cnn::Network;
use crate::error::{Error, Result};
use crate::geometry::{orient, segments_cross, Point2, Polygon, REL_TOL};
use crate::raster::{rasterize, BinaryImage};

/// Anything that assigns a shape label (a reference vertex count) to a
/// polygon.
pub trait Classifier: Sync {
    fn classify(&self, polygon: &Polygon) -> Result<usize>;

    fn classify_all(&self, polygons: &[Polygon]) -> Result<Vec<usize>> {
        polygons.iter().map(|p| self.classify(p)).collect()
    }
}

impl Classifier for Network {
    fn classify(&self, polygon: &Polygon) -> Result<usize> {
        Network::classify(self, polygon)
    }

    fn classify_all(&self, polygons: &[Polygon]) -> Result<Vec<usize>> {
        let images: Vec<BinaryImage> = polygons.par_iter().map(rasterize).collect::<Result<_>>()?;
        let refs: Vec<&BinaryImage> = images.iter().collect();
        Ok(self.classify_images(&refs))
    }
}

/// Returns the same label for every polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedLabel(pub usize);

impl Classifier for FixedLabel {
    fn classify(&self, _: &Polygon) -> Result<usize> {
        Ok(self.0)
    }
}

/// Adapts a closure into a [`Classifier`].
pub struct LabelFn<F>(pub F);

impl<F: Fn(&Polygon) -> usize + Sync> Classifier for LabelFn<F> {
    fn classify(&self, polygon: &Polygon) -> Result<usize> {
        Ok((self.0)(polygon))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Mp,
    CnnMp,
    CnnRp,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Mp, Strategy::CnnMp, Strategy::CnnRp];

    pub fn needs_classifier(self) -> bool {
        self != Strategy::Mp
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Mp => "mp",
            Strategy::CnnMp => "cnn-mp",
            Strategy::CnnRp => "cnn-rp",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mp" => Ok(Strategy::Mp),
            "cnn-mp" => Ok(Strategy::CnnMp),
            "cnn-rp" => Ok(Strategy::CnnRp),
            _ => Err(Error::InvalidArgument(format!("unknown strategy '{s}' (expected mp, cnn-mp or cnn-rp)"))),
        }
    }
}

/// How a refinement point is picked among the boundary candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Proximity {
    /// Closest to the approximating polygon's edge midpoint; ties go to the
    /// candidate closer to the centroid.
    #[default]
    NearestThenCentroid,
    /// Smallest sum of the distances to the edge midpoint and the centroid.
    DistanceSum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    /// Inner-polygon vertex position on the centroid-to-refinement-point
    /// segment, for labels of five and more.
    pub rho: f64,
    pub proximity: Proximity,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { rho: 0.5, proximity: Proximity::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyUsed {
    Mp,
    CnnMp,
    CnnRp,
    FallbackBisect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementResult {
    pub children: Vec<Polygon>,
    /// Points created on the parent's boundary that were not parent
    /// vertices.
    pub new_boundary_points: Vec<Point2>,
    pub strategy_used: StrategyUsed,
}

/// Boundary of a polygon with its edge midpoints interleaved: position `2i`
/// is vertex `i`, position `2i + 1` the midpoint of edge `i`.
struct Boundary<'a> {
    poly: &'a Polygon,
}

impl<'a> Boundary<'a> {
    fn new(poly: &'a Polygon) -> Self {
        Self { poly }
    }

    fn len(&self) -> usize {
        2 * self.poly.len()
    }

    fn point(&self, pos: usize) -> Point2 {
        let n = self.poly.len();
        let i = pos / 2;
        if pos % 2 == 0 {
            self.poly.vertex(i)
        } else {
            self.poly.vertex(i).midpoint(self.poly.vertex((i + 1) % n))
        }
    }

    /// Boundary walk from `a` to `b` (inclusive, counter-clockwise) that
    /// keeps the endpoints and the vertices in between.
    fn chain(&self, a: usize, b: usize) -> Vec<Point2> {
        let m = self.len();
        let mut out = vec![self.point(a)];
        let mut q = (a + 1) % m;
        while q != b {
            if q % 2 == 0 {
                out.push(self.point(q));
            }
            q = (q + 1) % m;
        }
        out.push(self.point(b));
        out
    }

    fn new_points(&self, positions: &[usize]) -> Vec<Point2> {
        positions.iter().filter(|&&p| p % 2 == 1).map(|&p| self.point(p)).collect()
    }

    /// Position of a point that coincides with a vertex or edge midpoint.
    fn locate(&self, q: Point2) -> Option<usize> {
        let tol = self.poly.tolerance();
        (0..self.len()).find(|&pos| self.point(pos).dist(q) <= tol)
    }
}

/// Vertex-average centroid if it lies strictly inside the polygon.
fn interior_centroid(p: &Polygon) -> Result<Point2> {
    let c = p.centroid();
    if p.contains_strictly(c, p.tolerance()) {
        Ok(c)
    } else {
        Err(Error::NotStarShaped)
    }
}

fn build_children(loops: Vec<Vec<Point2>>) -> Result<Vec<Polygon>> {
    loops
        .into_iter()
        .map(|l| {
            if signed_area(&l) <= 0.0 {
                return Err(Error::InvalidPartition("child with non-positive orientation".into()));
            }
            Polygon::new(l).map_err(|e| Error::InvalidPartition(e.to_string()))
        })
        .collect()
}

fn signed_area(v: &[Point2]) -> f64 {
    let Some(&o) = v.first() else { return 0.0 };
    0.5 * v.windows(2).map(|w| (w[0] - o).cross(w[1] - o)).sum::<f64>()
}

fn finish(
    parent: &Polygon,
    children: Vec<Polygon>,
    new_points: Vec<Point2>,
    used: StrategyUsed,
) -> Result<RefinementResult> {
    if !validate_partition(parent, &children) {
        return Err(Error::InvalidPartition(format!("{used:?} children do not partition the parent")));
    }
    Ok(RefinementResult { children, new_boundary_points: new_points, strategy_used: used })
}

/// Plain mid-point refinement: one quadrilateral per vertex, joining the
/// vertex, its two edge midpoints and the centroid.
pub fn refine_mp(p: &Polygon) -> Result<RefinementResult> {
    let c = interior_centroid(p)?;
    let b = Boundary::new(p);
    let m = b.len();
    let loops = (0..p.len()).map(|i| vec![p.vertex(i), b.point(2 * i + 1), c, b.point((2 * i + m - 1) % m)]).collect();
    let children = build_children(loops)?;
    finish(p, children, p.edge_midpoints(), StrategyUsed::Mp)
}

fn pairwise_distances(pts: &[Point2]) -> Vec<Vec<f64>> {
    pts.iter().map(|a| pts.iter().map(|b| a.dist(*b)).collect()).collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

const MAX_ENUMERATED_SUBSETS: f64 = 2e6;

/// Indices (increasing) of the `k`-subset maximizing the sum of pairwise
/// distances. Exhaustive for moderate sizes; otherwise greedy growth
/// followed by single-swap improvement.
fn representative_indices(pts: &[Point2], k: usize) -> Vec<usize> {
    let n = pts.len();
    if n <= k {
        return (0..n).collect();
    }
    let d = pairwise_distances(pts);
    if binomial(n, k) <= MAX_ENUMERATED_SUBSETS {
        let mut best = (f64::NEG_INFINITY, Vec::new());
        let mut chosen = Vec::with_capacity(k);
        enumerate_subsets(&d, k, 0, 0.0, &mut chosen, &mut best);
        return best.1;
    }
    greedy_subset(&d, k)
}

fn enumerate_subsets(
    d: &[Vec<f64>],
    k: usize,
    start: usize,
    sum: f64,
    chosen: &mut Vec<usize>,
    best: &mut (f64, Vec<usize>),
) {
    if chosen.len() == k {
        // strict improvement with slack, so near-ties keep the first subset
        if best.1.is_empty() || sum > best.0 + 1e-12 * best.0.abs() {
            *best = (sum, chosen.clone());
        }
        return;
    }
    let need = k - chosen.len();
    for i in start..=d.len() - need {
        let add: f64 = chosen.iter().map(|&j| d[i][j]).sum();
        chosen.push(i);
        enumerate_subsets(d, k, i + 1, sum + add, chosen, best);
        chosen.pop();
    }
}

fn greedy_subset(d: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = d.len();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let (mut bi, mut bj) = (0, 1);
    for i in 0..n {
        for j in i + 1..n {
            if d[i][j] > d[bi][bj] {
                (bi, bj) = (i, j);
            }
        }
    }
    chosen.extend([bi, bj]);
    while chosen.len() < k {
        let next = (0..n)
            .filter(|i| !chosen.contains(i))
            .max_by(|&a, &b| {
                let sa: f64 = chosen.iter().map(|&j| d[a][j]).sum();
                let sb: f64 = chosen.iter().map(|&j| d[b][j]).sum();
                sa.total_cmp(&sb).then(b.cmp(&a))
            })
            .expect("k < n leaves a candidate");
        chosen.push(next);
    }
    let total = |s: &[usize]| -> f64 { s.iter().flat_map(|&a| s.iter().map(move |&b| d[a][b])).sum() };
    let mut current = total(&chosen);
    loop {
        let mut improved = false;
        for slot in 0..k {
            for cand in 0..n {
                if chosen.contains(&cand) {
                    continue;
                }
                let old = chosen[slot];
                chosen[slot] = cand;
                let t = total(&chosen);
                if t > current * (1.0 + 1e-12) {
                    current = t;
                    improved = true;
                } else {
                    chosen[slot] = old;
                }
            }
        }
        if !improved {
            break;
        }
    }
    chosen.sort_unstable();
    chosen
}

/// The `label` vertices of `p` maximizing the sum of pairwise distances, in
/// counter-clockwise order. Polygons with at most `label` vertices return
/// all of them.
pub fn select_representative_vertices(p: &Polygon, label: usize) -> Vec<Point2> {
    representative_indices(p.vertices(), label).into_iter().map(|i| p.vertex(i)).collect()
}

fn refinement_positions(p: &Polygon, label: usize, proximity: Proximity) -> Vec<usize> {
    let b = Boundary::new(p);
    let reps = select_representative_vertices(p, label.max(3));
    let c = p.centroid();
    let tol = p.tolerance();
    let k = reps.len();
    let mut positions: Vec<usize> = (0..k)
        .map(|i| {
            let target = reps[i].midpoint(reps[(i + 1) % k]);
            let mut best = 0;
            let mut best_score = (f64::INFINITY, f64::INFINITY);
            for pos in 0..b.len() {
                let x = b.point(pos);
                let (dm, dc) = (x.dist(target), x.dist(c));
                let score = match proximity {
                    Proximity::NearestThenCentroid => (dm, dc),
                    Proximity::DistanceSum => (dm + dc, dm),
                };
                let better =
                    score.0 < best_score.0 - tol || (score.0 <= best_score.0 + tol && score.1 < best_score.1 - tol);
                if better {
                    best = pos;
                    best_score = score;
                }
            }
            best
        })
        .collect();
    positions.sort_unstable();
    positions.dedup();
    positions
}

/// Boundary points standing in for the edge midpoints of the approximating
/// `label`-gon, in counter-clockwise order starting nearest vertex 0.
pub fn refinement_points(p: &Polygon, label: usize, proximity: Proximity) -> Vec<Point2> {
    let b = Boundary::new(p);
    refinement_positions(p, label, proximity).into_iter().map(|pos| b.point(pos)).collect()
}

fn fan(p: &Polygon, positions: &[usize], c: Point2) -> Vec<Vec<Point2>> {
    let b = Boundary::new(p);
    let k = positions.len();
    (0..k)
        .map(|j| {
            let mut l = b.chain(positions[j], positions[(j + 1) % k]);
            l.push(c);
            l
        })
        .collect()
}

fn positions_of(p: &Polygon, pts: &[Point2]) -> Result<Vec<usize>> {
    let b = Boundary::new(p);
    let mut out = pts
        .iter()
        .map(|&q| b.locate(q).ok_or_else(|| Error::InvalidArgument("point is not a vertex or edge midpoint".into())))
        .collect::<Result<Vec<_>>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// CNN-MP with a known label: the refinement points are joined to the
/// centroid, each child following the boundary between two consecutive
/// refinement points.
pub fn refine_cnn_mp_with_label(p: &Polygon, label: usize, opts: &RefineOptions) -> Result<RefinementResult> {
    let c = interior_centroid(p)?;
    let positions = refinement_positions(p, label, opts.proximity);
    if positions.len() < 2 {
        return Err(Error::InvalidPartition("fewer than two refinement points".into()));
    }
    let children = build_children(fan(p, &positions, c))?;
    finish(p, children, Boundary::new(p).new_points(&positions), StrategyUsed::CnnMp)
}

pub fn refine_cnn_mp(p: &Polygon, classifier: &dyn Classifier, opts: &RefineOptions) -> Result<RefinementResult> {
    refine_cnn_mp_with_label(p, classifier.classify(p)?, opts)
}

fn triangle_loops(p: &Polygon, positions: &[usize]) -> Vec<Vec<Point2>> {
    let b = Boundary::new(p);
    let mut loops: Vec<Vec<Point2>> = (0..3).map(|j| b.chain(positions[j], positions[(j + 1) % 3])).collect();
    loops.push(positions.iter().map(|&q| b.point(q)).collect());
    loops
}

/// Triangle template: three corner pieces cut off by the chords between the
/// refinement points, plus the medial piece.
pub fn template_triangle(p: &Polygon, pts: &[Point2]) -> Result<RefinementResult> {
    let positions = positions_of(p, pts)?;
    if positions.len() != 3 {
        return Err(Error::InvalidArgument(format!("triangle template needs 3 points, got {}", positions.len())));
    }
    let children = build_children(triangle_loops(p, &positions))?;
    finish(p, children, Boundary::new(p).new_points(&positions), StrategyUsed::CnnRp)
}

fn regular_loops(p: &Polygon, positions: &[usize], c: Point2, rho: f64) -> Vec<Vec<Point2>> {
    let b = Boundary::new(p);
    let k = positions.len();
    let inner: Vec<Point2> = positions.iter().map(|&q| c.lerp(b.point(q), rho)).collect();
    let mut loops: Vec<Vec<Point2>> = (0..k)
        .map(|j| {
            let next = (j + 1) % k;
            let mut l = b.chain(positions[j], positions[next]);
            l.extend([inner[next], inner[j]]);
            l
        })
        .collect();
    loops.push(inner);
    loops
}

/// Reference-polygon template for five or more refinement points: an inner
/// polygon scaled by `rho` towards the centroid, ringed by one piece per
/// outer vertex.
pub fn template_regular(p: &Polygon, pts: &[Point2], rho: f64) -> Result<RefinementResult> {
    let c = interior_centroid(p)?;
    let positions = positions_of(p, pts)?;
    if positions.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "regular template needs at least 5 points, got {}",
            positions.len()
        )));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
    }
    let children = build_children(regular_loops(p, &positions, c, rho))?;
    finish(p, children, Boundary::new(p).new_points(&positions), StrategyUsed::CnnRp)
}

/// CNN-RP with a known label. The template follows the number of distinct
/// refinement points, which is the label unless the polygon has fewer
/// vertices or two refinement points coincide.
pub fn refine_cnn_rp_with_label(p: &Polygon, label: usize, opts: &RefineOptions) -> Result<RefinementResult> {
    let c = interior_centroid(p)?;
    let positions = refinement_positions(p, label, opts.proximity);
    let loops = match positions.len() {
        0..=2 => return Err(Error::InvalidPartition("fewer than three refinement points".into())),
        3 => triangle_loops(p, &positions),
        4 => fan(p, &positions, c),
        _ => {
            if !(opts.rho > 0.0 && opts.rho < 1.0) {
                return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {}", opts.rho)));
            }
            regular_loops(p, &positions, c, opts.rho)
        }
    };
    let children = build_children(loops)?;
    finish(p, children, Boundary::new(p).new_points(&positions), StrategyUsed::CnnRp)
}

pub fn refine_cnn_rp(p: &Polygon, classifier: &dyn Classifier, opts: &RefineOptions) -> Result<RefinementResult> {
    refine_cnn_rp_with_label(p, classifier.classify(p)?, opts)
}

/// Splits along the interior diagonal that maximizes the smaller of the two
/// areas. Vertex-to-vertex diagonals are preferred; when none exists (a
/// plain triangle) one endpoint may be an edge midpoint.
pub fn fallback_bisect(p: &Polygon) -> Result<RefinementResult> {
    let b = Boundary::new(p);
    let m = b.len();
    let area = p.area();
    for allow_midpoint in [false, true] {
        let mut best: Option<(f64, Vec<Polygon>, Vec<usize>)> = None;
        for a in 0..m {
            for c in a + 1..m {
                let odd = (a % 2) + (c % 2);
                if (!allow_midpoint && odd > 0) || odd > 1 {
                    continue;
                }
                let pa = b.point(a);
                let pc = b.point(c);
                if !p.contains_strictly(pa.midpoint(pc), p.tolerance()) {
                    continue;
                }
                let left = b.chain(a, c);
                let right = b.chain(c, a);
                // boundary neighbours leave a two-point chain
                if left.len() < 3 || right.len() < 3 {
                    continue;
                }
                let (al, ar) = (signed_area(&left), signed_area(&right));
                let floor = REL_TOL * area;
                if al <= floor || ar <= floor {
                    continue;
                }
                let Ok(children) = build_children(vec![left, right]) else { continue };
                let score = al.min(ar);
                if best.as_ref().is_none_or(|(s, _, _)| score > *s * (1.0 + 1e-12)) {
                    best = Some((score, children, vec![a, c]));
                }
            }
        }
        if let Some((_, children, ends)) = best {
            if validate_partition(p, &children) {
                return Ok(RefinementResult {
                    children,
                    new_boundary_points: b.new_points(&ends),
                    strategy_used: StrategyUsed::FallbackBisect,
                });
            }
        }
    }
    Err(Error::InvalidPartition("no interior diagonal".into()))
}

/// Applies `strategy` with a known label (ignored by MP), bisecting instead
/// when the strategy cannot produce a valid partition.
pub fn refine_with_label(
    p: &Polygon,
    strategy: Strategy,
    label: usize,
    opts: &RefineOptions,
) -> Result<RefinementResult> {
    let attempt = match strategy {
        Strategy::Mp => refine_mp(p),
        Strategy::CnnMp => refine_cnn_mp_with_label(p, label, opts),
        Strategy::CnnRp => refine_cnn_rp_with_label(p, label, opts),
    };
    match attempt {
        Ok(r) => Ok(r),
        Err(Error::InvalidArgument(msg)) => Err(Error::InvalidArgument(msg)),
        Err(_) => fallback_bisect(p),
    }
}

/// Classifies (when the strategy needs it) and refines `p`.
pub fn refine(
    p: &Polygon,
    strategy: Strategy,
    classifier: Option<&dyn Classifier>,
    opts: &RefineOptions,
) -> Result<RefinementResult> {
    let label = match (strategy.needs_classifier(), classifier) {
        (false, _) => p.len(),
        (true, Some(c)) => c.classify(p)?,
        (true, None) => return Err(Error::InvalidArgument(format!("strategy {strategy} needs a classifier"))),
    };
    refine_with_label(p, strategy, label, opts)
}

/// Checks that `children` tile `parent`: each child is a counter-clockwise
/// simple polygon inside the parent, no child edge crosses another child's
/// edge or the parent boundary, and the areas add up to the parent's area
/// within 1e-10 relative.
pub fn validate_partition(parent: &Polygon, children: &[Polygon]) -> bool {
    if children.is_empty() {
        return false;
    }
    let area = parent.area();
    let total: f64 = children.iter().map(Polygon::area).sum();
    if (total - area).abs() > 1e-10 * area {
        return false;
    }
    let tol = parent.tolerance();
    for ch in children {
        if signed_area(ch.vertices()) <= 0.0 {
            return false;
        }
        if !ch.vertices().iter().all(|&v| parent.contains(v)) || !parent.contains(interior_point(ch)) {
            return false;
        }
        if !ch.edges().all(|(a, b)| parent.contains(a.midpoint(b))) {
            return false;
        }
        for (a, b) in ch.edges() {
            if parent.edges().any(|(c, d)| segments_cross(a, b, c, d, tol)) {
                return false;
            }
        }
    }
    for (i, ci) in children.iter().enumerate() {
        for cj in &children[i + 1..] {
            let (lo_i, hi_i) = ci.bounding_box();
            let (lo_j, hi_j) = cj.bounding_box();
            if lo_i.x > hi_j.x + tol || lo_j.x > hi_i.x + tol || lo_i.y > hi_j.y + tol || lo_j.y > hi_i.y + tol {
                continue;
            }
            for (a, b) in ci.edges() {
                if cj.edges().any(|(c, d)| segments_cross(a, b, c, d, tol)) {
                    return false;
                }
            }
        }
    }
    true
}

/// A point strictly inside `p`: the centroid of its first ear, which is
/// inside even when the vertex average is not.
pub(crate) fn interior_point(p: &Polygon) -> Point2 {
    let v = p.vertices();
    let n = v.len();
    for i in 0..n {
        let (a, b, c) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
        if orient(a, b, c) <= 0.0 {
            continue;
        }
        let blocked = (0..n).any(|j| {
            let q = v[j];
            j != i
                && j != (i + 1) % n
                && j != (i + n - 1) % n
                && orient(a, b, q) >= 0.0
                && orient(b, c, q) >= 0.0
                && orient(c, a, q) >= 0.0
        });
        if !blocked {
            return Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
        }
    }
    p.area_centroid()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn pt(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn poly(v: &[(f64, f64)]) -> Polygon {
        Polygon::new(v.iter().map(|&(x, y)| pt(x, y)).collect()).unwrap()
    }

    fn unit_square() -> Polygon {
        poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    }

    fn split_square() -> Polygon {
        poly(&[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    }

    fn areas(r: &RefinementResult) -> Vec<f64> {
        r.children.iter().map(Polygon::area).collect()
    }

    fn same_children(a: &RefinementResult, b: &RefinementResult) -> bool {
        let key = |p: &Polygon| {
            let mut v: Vec<(u64, u64)> = p.vertices().iter().map(|q| (q.x.to_bits(), q.y.to_bits())).collect();
            v.sort_unstable();
            v
        };
        let mut ka: Vec<_> = a.children.iter().map(key).collect();
        let mut kb: Vec<_> = b.children.iter().map(key).collect();
        ka.sort();
        kb.sort();
        ka == kb
    }

    /// Brute-force subset search over bitmasks.
    fn oracle_subset(pts: &[Point2], k: usize) -> Vec<Point2> {
        let n = pts.len();
        let mut best = (f64::NEG_INFINITY, 0u32);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let s: f64 = idx.iter().flat_map(|&i| idx.iter().map(move |&j| pts[i].dist(pts[j]))).sum();
            if s > best.0 + 1e-9 {
                best = (s, mask);
            }
        }
        (0..n).filter(|i| best.1 & (1 << i) != 0).map(|i| pts[i]).collect()
    }

    #[test]
    fn mp_square_gives_four_half_squares() {
        let r = refine_mp(&unit_square()).unwrap();
        assert_eq!(r.children.len(), 4);
        for ch in &r.children {
            assert!((ch.area() - 0.25).abs() < 1e-15);
            let (lo, hi) = ch.bounding_box();
            assert_eq!((hi.x - lo.x, hi.y - lo.y), (0.5, 0.5));
        }
        assert_eq!(r.new_boundary_points.len(), 4);
        assert_eq!(r.strategy_used, StrategyUsed::Mp);
    }

    #[test]
    fn mp_triangle_and_pentagon() {
        let r = refine_mp(&poly(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])).unwrap();
        assert_eq!(r.children.len(), 3);
        for a in areas(&r) {
            assert!((a - 1.0 / 6.0).abs() < 1e-15);
        }
        let pent = Polygon::regular(5, pt(0.0, 0.0), 1.0, 0.3).unwrap();
        assert_eq!(refine_mp(&pent).unwrap().children.len(), 5);
    }

    #[test]
    fn mp_rejects_centroid_outside() {
        // thin C shape whose vertex average falls in the notch
        let c = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.1), (0.1, 0.1), (0.1, 0.9), (1.0, 0.9), (1.0, 1.0), (0.0, 1.0)]);
        assert!(matches!(refine_mp(&c), Err(Error::NotStarShaped)));
        let r = refine(&c, Strategy::Mp, None, &RefineOptions::default()).unwrap();
        assert_eq!(r.strategy_used, StrategyUsed::FallbackBisect);
        assert_eq!(r.children.len(), 2);
    }

    #[test]
    fn representative_vertices_match_enumeration() {
        let sq = split_square();
        let reps = select_representative_vertices(&sq, 4);
        assert_eq!(reps, oracle_subset(sq.vertices(), 4));
        assert_eq!(reps, vec![pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)]);

        let tri = Polygon::regular(3, pt(0.0, 0.0), 1.0, 0.0).unwrap();
        let mut v = Vec::new();
        for (a, b) in tri.edges() {
            v.push(a);
            v.push(a.midpoint(b));
        }
        let hexlike = Polygon::new(v).unwrap();
        let reps = select_representative_vertices(&hexlike, 3);
        assert_eq!(reps, oracle_subset(hexlike.vertices(), 3));
        assert_eq!(reps, tri.vertices().to_vec());

        let pent = Polygon::regular(5, pt(2.0, 1.0), 1.0, 0.0).unwrap();
        assert_eq!(select_representative_vertices(&pent, 5), pent.vertices().to_vec());
        assert_eq!(select_representative_vertices(&pent, 7), pent.vertices().to_vec());
    }

    #[test]
    fn greedy_matches_enumeration_on_small_inputs() {
        let p = Polygon::regular(11, pt(0.0, 0.0), 1.0, 0.1).unwrap();
        let pts: Vec<Point2> =
            p.vertices().iter().enumerate().map(|(i, q)| *q * (1.0 + 0.05 * (i as f64).sin())).collect();
        let d = pairwise_distances(&pts);
        let mut best = (f64::NEG_INFINITY, Vec::new());
        enumerate_subsets(&d, 4, 0, 0.0, &mut Vec::new(), &mut best);
        let total = |s: &[usize]| -> f64 { s.iter().map(|&a| s.iter().map(|&b| d[a][b]).sum::<f64>()).sum() };
        assert!(total(&greedy_subset(&d, 4)) >= 0.99 * total(&best.1));
    }

    #[test]
    fn refinement_points_of_split_square() {
        let pts = refinement_points(&split_square(), 4, Proximity::NearestThenCentroid);
        assert_eq!(pts, vec![pt(0.5, 0.0), pt(1.0, 0.5), pt(0.5, 1.0), pt(0.0, 0.5)]);
    }

    #[test]
    fn refinement_points_of_regular_polygon_are_midpoints() {
        for n in 3..=7 {
            let p = Polygon::regular(n, pt(0.3, -0.2), 2.0, 0.4).unwrap();
            assert_eq!(refinement_points(&p, n, Proximity::NearestThenCentroid), p.edge_midpoints());
            assert_eq!(refinement_points(&p, n, Proximity::DistanceSum), p.edge_midpoints());
        }
    }

    #[test]
    fn refinement_points_of_distorted_quad_lie_on_boundary() {
        let p = poly(&[(0.0, 0.0), (0.6, 0.05), (1.0, 0.0), (1.1, 0.7), (0.45, 1.0), (0.05, 0.8)]);
        let pts = refinement_points(&p, 4, Proximity::NearestThenCentroid);
        assert_eq!(pts.len(), 4);
        for q in pts {
            assert!(p.boundary_distance(q) < 1e-15);
        }
    }

    #[test]
    fn cnn_mp_coincides_with_mp_when_label_matches() {
        let opts = RefineOptions::default();
        let sq = unit_square();
        assert!(same_children(&refine_cnn_mp_with_label(&sq, 4, &opts).unwrap(), &refine_mp(&sq).unwrap()));
        let hex = Polygon::regular(6, pt(0.0, 0.0), 1.0, 0.2).unwrap();
        assert!(same_children(&refine_cnn_mp_with_label(&hex, 6, &opts).unwrap(), &refine_mp(&hex).unwrap()));
    }

    #[test]
    fn cnn_mp_ignores_aligned_vertex() {
        let opts = RefineOptions::default();
        let p = split_square();
        assert_eq!(refine_mp(&p).unwrap().children.len(), 5);
        let r = refine_cnn_mp(&p, &FixedLabel(4), &opts).unwrap();
        assert_eq!(r.children.len(), 4);
        assert!((areas(&r).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // the stored vertex is reused, so only three new boundary points
        assert_eq!(r.new_boundary_points.len(), 3);
    }

    #[test]
    fn square_like_pentagon_refined_as_quad() {
        let p = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.95), (0.95, 1.0), (0.0, 1.0)]);
        let r = refine_cnn_mp(&p, &FixedLabel(4), &RefineOptions::default()).unwrap();
        assert_eq!(r.children.len(), 4);
        assert!(validate_partition(&p, &r.children));
    }

    #[test]
    fn triangle_template() {
        let eq = Polygon::regular(3, pt(0.0, 0.0), 1.0, 0.0).unwrap();
        let r = template_triangle(&eq, &eq.edge_midpoints()).unwrap();
        assert_eq!(r.children.len(), 4);
        for a in areas(&r) {
            assert!((a - eq.area() / 4.0).abs() < 1e-14);
        }
        let right = poly(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let r = template_triangle(&right, &right.edge_midpoints()).unwrap();
        for a in areas(&r) {
            assert!((a - 0.125).abs() < 1e-15);
        }
        // the medial child is similar to the parent: edges halved
        let medial = &r.children[3];
        let mut le: Vec<f64> = medial.edge_lengths();
        let mut lp: Vec<f64> = right.edge_lengths();
        le.sort_by(f64::total_cmp);
        lp.sort_by(f64::total_cmp);
        for (a, b) in le.iter().zip(&lp) {
            assert!((a * 2.0 - b).abs() < 1e-15);
        }
    }

    #[test]
    fn regular_template_child_counts() {
        for n in [5, 6, 8] {
            let p = Polygon::regular(n, pt(0.0, 0.0), 1.0, 0.0).unwrap();
            let r = template_regular(&p, &p.edge_midpoints(), 0.5).unwrap();
            assert_eq!(r.children.len(), n + 1);
            let outer: Vec<usize> = r.children[..n].iter().map(Polygon::len).collect();
            assert_eq!(outer, vec![5; n]);
            assert_eq!(r.children[n].len(), n);
        }
    }

    #[test]
    fn cnn_rp_child_counts_by_label() {
        let opts = RefineOptions::default();
        for (label, expect) in [(3, 4), (4, 4), (5, 6), (6, 7)] {
            let p = Polygon::regular(label, pt(1.0, 1.0), 0.5, 0.7).unwrap();
            let r = refine_cnn_rp_with_label(&p, label, &opts).unwrap();
            assert_eq!(r.children.len(), expect, "label {label}");
            assert_eq!(r.strategy_used, StrategyUsed::CnnRp);
        }
        // label larger than the vertex count is clamped
        let r = refine_cnn_rp_with_label(&unit_square(), 6, &opts).unwrap();
        assert_eq!(r.children.len(), 4);
    }

    #[test]
    fn cnn_rp_square_three_times_gives_64() {
        let opts = RefineOptions::default();
        let mut elems = vec![unit_square()];
        for _ in 0..3 {
            elems = elems.iter().flat_map(|p| refine_cnn_rp(p, &FixedLabel(4), &opts).unwrap().children).collect();
        }
        assert_eq!(elems.len(), 64);
    }

    /// Every non-adjacent vertex pair, its validity by sampling and its
    /// shoelace area split.
    fn oracle_best_diagonal(p: &Polygon) -> (Point2, Point2, f64) {
        let v = p.vertices();
        let n = v.len();
        let mut best = (v[0], v[0], f64::NEG_INFINITY);
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let inside = (1..20).all(|s| p.contains_strictly(v[i].lerp(v[j], s as f64 / 20.0), 1e-9));
                if !inside {
                    continue;
                }
                let left: Vec<Point2> = v[i..=j].to_vec();
                let a = signed_area(&left);
                let m = a.min(p.area() - a);
                if m > best.2 {
                    best = (v[i], v[j], m);
                }
            }
        }
        best
    }

    #[test]
    fn bisect_examples() {
        let r = fallback_bisect(&unit_square()).unwrap();
        assert_eq!(r.children.len(), 2);
        assert!(r.children.iter().all(|c| c.len() == 3 && (c.area() - 0.5).abs() < 1e-15));

        let l = poly(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]);
        let (a, b, m) = oracle_best_diagonal(&l);
        assert_eq!((a, b, m), (pt(0.0, 0.0), pt(1.0, 1.0), 1.5));
        let r = fallback_bisect(&l).unwrap();
        assert_eq!(areas(&r), vec![1.5, 1.5]);
        assert!(r.children[0].vertices().contains(&a) && r.children[0].vertices().contains(&b));
        assert!(r.new_boundary_points.is_empty());

        let tri = poly(&[(0.0, 0.0), (3.0, 0.0), (1.0, 2.0)]);
        let r = fallback_bisect(&tri).unwrap();
        assert_eq!(r.children.len(), 2);
        assert!((r.children[0].area() - r.children[1].area()).abs() < 1e-14);
        assert_eq!(r.new_boundary_points.len(), 1);
    }

    #[test]
    fn validate_rejects_overlap_and_gaps() {
        let sq = unit_square();
        let halves = vec![
            poly(&[(0.0, 0.0), (0.5, 0.0), (0.5, 1.0), (0.0, 1.0)]),
            poly(&[(0.5, 0.0), (1.0, 0.0), (1.0, 1.0), (0.5, 1.0)]),
        ];
        assert!(validate_partition(&sq, &halves));
        assert!(!validate_partition(&sq, &halves[..1]));
        let overlapping = vec![
            poly(&[(0.0, 0.0), (0.6, 0.0), (0.6, 1.0), (0.0, 1.0)]),
            poly(&[(0.4, 0.0), (1.0, 0.0), (1.0, 1.0), (0.4, 1.0)]),
            poly(&[(0.0, 0.0), (0.1, 0.0), (0.0, 0.1)]),
        ];
        assert!(!validate_partition(&sq, &overlapping));
        let outside =
            vec![poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]), poly(&[(1.0, 0.0), (2.0, 0.0), (1.0, 0.01)])];
        assert!(!validate_partition(&sq, &outside));
    }

    #[test]
    fn strategies_are_translation_and_scale_equivariant() {
        let opts = RefineOptions::default();
        let p = poly(&[(0.0, 0.0), (0.6, 0.05), (1.0, 0.0), (1.1, 0.7), (0.45, 1.0), (0.05, 0.8)]);
        let q = p.transformed(2.0, 0.0, pt(3.0, -1.0)).unwrap();
        for s in Strategy::ALL {
            let a = refine_with_label(&p, s, 4, &opts).unwrap();
            let b = refine_with_label(&q, s, 4, &opts).unwrap();
            assert_eq!(a.children.len(), b.children.len());
            for (x, y) in a.children.iter().zip(&b.children) {
                assert!((x.area() * 4.0 - y.area()).abs() < 1e-12);
            }
        }
        let r = q.transformed(1.0, PI / 3.0, pt(0.0, 0.0)).unwrap();
        assert_eq!(refine_with_label(&r, Strategy::Mp, 4, &opts).unwrap().children.len(), 6);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert!("bisect".parse::<Strategy>().is_err());
    }
}
