//! Polygonal meshes with edge adjacency, hanging-node propagation and the
//! initial grids used for refinement experiments.
//!
//! Elements are counter-clockwise loops of vertex indices. A hanging node
//! created by refining one element is inserted into the neighbour's loop as
//! an aligned vertex, so every interior segment always has exactly two
//! incident elements.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Point2, Polygon};
use crate::refine::{refine_with_label, Classifier, RefineOptions, RefinementResult, Strategy};

type EdgeKey = (usize, usize);

fn key(a: usize, b: usize) -> EdgeKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyMesh {
    vertices: Vec<Point2>,
    elements: Vec<Vec<usize>>,
    /// Undirected segment to incident elements.
    adjacency: HashMap<EdgeKey, Vec<usize>>,
}

/// Element indices selected for refinement, sorted and unique.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkSet(Vec<usize>);

impl MarkSet {
    pub fn all(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn from_indices(mut idx: Vec<usize>) -> Self {
        idx.sort_unstable();
        idx.dedup();
        Self(idx)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }
}

impl PolyMesh {
    /// Builds a mesh from vertex coordinates and counter-clockwise loops.
    pub fn new(vertices: Vec<Point2>, elements: Vec<Vec<usize>>) -> Result<Self> {
        for (e, l) in elements.iter().enumerate() {
            if l.len() < 3 {
                return Err(Error::Mesh { element: e, reason: format!("{} vertices", l.len()) });
            }
            if let Some(&i) = l.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::Mesh { element: e, reason: format!("vertex index {i} out of range") });
            }
        }
        let mut mesh = Self { vertices, elements, adjacency: HashMap::new() };
        for e in 0..mesh.elements.len() {
            let p = mesh.element_polygon_checked(e)?;
            if p.vertices() != mesh.loop_points(e).as_slice() {
                return Err(Error::Mesh { element: e, reason: "loop is clockwise".into() });
            }
        }
        mesh.rebuild_adjacency();
        if let Some((k, inc)) = mesh.adjacency.iter().find(|(_, inc)| inc.len() > 2) {
            return Err(Error::Mesh {
                element: inc[0],
                reason: format!("segment {k:?} shared by {} elements", inc.len()),
            });
        }
        Ok(mesh)
    }

    /// Builds a conforming mesh from polygons: coincident vertices (within
    /// `tol`) are merged and vertices lying on another element's edge are
    /// inserted into that edge.
    pub fn from_polygons(polys: &[Polygon], tol: f64) -> Result<Self> {
        let mut vertices: Vec<Point2> = Vec::new();
        let mut lookup = |q: Point2| -> usize {
            if let Some(i) = vertices.iter().position(|v| v.dist(q) <= tol) {
                return i;
            }
            vertices.push(q);
            vertices.len() - 1
        };
        let mut elements = Vec::with_capacity(polys.len());
        for p in polys {
            let mut l: Vec<usize> = p.vertices().iter().map(|&q| lookup(q)).collect();
            l.dedup();
            while l.len() > 1 && l.first() == l.last() {
                l.pop();
            }
            elements.push(l);
        }
        // insert vertices sitting on edges of other elements
        for l in &mut elements {
            let mut out = Vec::with_capacity(l.len());
            for i in 0..l.len() {
                let (a, b) = (l[i], l[(i + 1) % l.len()]);
                out.push(a);
                let (pa, pb) = (vertices[a], vertices[b]);
                let mut on: Vec<(f64, usize)> = (0..vertices.len())
                    .filter(|&v| v != a && v != b && point_segment_distance(vertices[v], pa, pb) <= tol)
                    .map(|v| ((vertices[v] - pa).dot(pb - pa), v))
                    .collect();
                on.sort_by(|x, y| x.0.total_cmp(&y.0));
                out.extend(on.into_iter().map(|(_, v)| v));
            }
            *l = out;
        }
        Self::new(vertices, elements)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Incident elements of every undirected segment.
    pub fn adjacency(&self) -> &HashMap<(usize, usize), Vec<usize>> {
        &self.adjacency
    }

    fn loop_points(&self, e: usize) -> Vec<Point2> {
        self.elements[e].iter().map(|&i| self.vertices[i]).collect()
    }

    fn element_polygon_checked(&self, e: usize) -> Result<Polygon> {
        Polygon::new(self.loop_points(e)).map_err(|err| Error::Mesh { element: e, reason: err.to_string() })
    }

    pub fn element_polygon(&self, e: usize) -> Polygon {
        self.element_polygon_checked(e).expect("mesh elements are valid polygons")
    }

    pub fn polygons(&self) -> Vec<Polygon> {
        (0..self.elements.len()).map(|e| self.element_polygon(e)).collect()
    }

    /// Mesh size: the largest element diameter.
    pub fn mesh_size(&self) -> f64 {
        self.polygons().iter().map(Polygon::diameter).fold(0.0, f64::max)
    }

    pub fn area(&self) -> f64 {
        self.polygons().iter().map(Polygon::area).sum()
    }

    /// Elements sharing a segment with `e`.
    pub fn neighbors(&self, e: usize) -> Vec<usize> {
        let l = &self.elements[e];
        let mut out: Vec<usize> = (0..l.len())
            .flat_map(|i| self.adjacency[&key(l[i], l[(i + 1) % l.len()])].iter().copied())
            .filter(|&n| n != e)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn rebuild_adjacency(&mut self) {
        self.adjacency.clear();
        for e in 0..self.elements.len() {
            self.add_edges(e);
        }
    }

    fn add_edges(&mut self, e: usize) {
        let l = &self.elements[e];
        for i in 0..l.len() {
            self.adjacency.entry(key(l[i], l[(i + 1) % l.len()])).or_default().push(e);
        }
    }

    fn remove_edges(&mut self, e: usize) {
        let l = &self.elements[e];
        for i in 0..l.len() {
            let k = key(l[i], l[(i + 1) % l.len()]);
            if let Some(inc) = self.adjacency.get_mut(&k) {
                inc.retain(|&x| x != e);
                if inc.is_empty() {
                    self.adjacency.remove(&k);
                }
            }
        }
    }

    /// Checks the mesh invariants: valid counter-clockwise elements, no
    /// segment with more than two elements, and single-element segments
    /// only on the boundary of the bounding box (meshes cover rectangles).
    pub fn validate(&self) -> Result<()> {
        for e in 0..self.elements.len() {
            self.element_polygon_checked(e)?;
        }
        let (lo, hi) = self.bounding_box();
        let tol = 1e-9 * (hi.x - lo.x).max(hi.y - lo.y);
        let on_box = |p: Point2| {
            (p.x - lo.x).abs() <= tol
                || (p.x - hi.x).abs() <= tol
                || (p.y - lo.y).abs() <= tol
                || (p.y - hi.y).abs() <= tol
        };
        for (&(a, b), inc) in &self.adjacency {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let boundary = on_box(pa) && on_box(pb) && on_box(pa.midpoint(pb));
            let ok = match inc.len() {
                1 => boundary,
                2 => true,
                _ => false,
            };
            if !ok {
                return Err(Error::Mesh {
                    element: inc[0],
                    reason: format!("segment ({a}, {b}) has {} incident elements", inc.len()),
                });
            }
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for l in &self.elements {
            for &i in l {
                let p = self.vertices[i];
                lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        (lo, hi)
    }

    /// Replaces element `e` by the children of `result`, adding new
    /// vertices and inserting boundary points into neighbouring loops.
    fn apply_refinement(&mut self, e: usize, result: &RefinementResult, tol: f64) -> Result<Vec<usize>> {
        let parent = self.elements[e].clone();
        let n = parent.len();
        let mut fresh: Vec<usize> = Vec::new();
        let mut inserts: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n];
        let mut child_loops = Vec::with_capacity(result.children.len());
        for child in &result.children {
            let mut l = Vec::with_capacity(child.len());
            for &q in child.vertices() {
                let id = if let Some(&v) = parent.iter().find(|&&v| self.vertices[v].dist(q) <= tol) {
                    v
                } else if let Some(&v) = fresh.iter().find(|&&v| self.vertices[v].dist(q) <= tol) {
                    v
                } else if let Some(i) = (0..n).find(|&i| {
                    point_segment_distance(q, self.vertices[parent[i]], self.vertices[parent[(i + 1) % n]]) <= tol
                }) {
                    let (a, b) = (self.vertices[parent[i]], self.vertices[parent[(i + 1) % n]]);
                    let t = (q - a).dot(b - a) / (b - a).dot(b - a);
                    self.vertices.push(a.lerp(b, t));
                    let v = self.vertices.len() - 1;
                    fresh.push(v);
                    inserts[i].push((t, v));
                    v
                } else {
                    self.vertices.push(q);
                    fresh.push(self.vertices.len() - 1);
                    self.vertices.len() - 1
                };
                l.push(id);
            }
            child_loops.push(l);
        }

        self.remove_edges(e);
        for (i, ins) in inserts.iter_mut().enumerate() {
            if ins.is_empty() {
                continue;
            }
            ins.sort_by(|x, y| x.0.total_cmp(&y.0));
            let (a, b) = (parent[i], parent[(i + 1) % n]);
            let Some(&nb) = self.adjacency.get(&key(a, b)).and_then(|inc| inc.first()) else { continue };
            // the neighbour runs b -> a, so insert in decreasing t
            let l = &self.elements[nb];
            let m = l.len();
            let j = (0..m)
                .find(|&j| l[j] == b && l[(j + 1) % m] == a)
                .ok_or_else(|| Error::Mesh { element: nb, reason: format!("segment ({b}, {a}) not in loop") })?;
            self.remove_edges(nb);
            let l = &mut self.elements[nb];
            for (off, &(_, v)) in ins.iter().rev().enumerate() {
                l.insert(j + 1 + off, v);
            }
            self.add_edges(nb);
        }

        let mut ids = Vec::with_capacity(child_loops.len());
        for (k, l) in child_loops.into_iter().enumerate() {
            let id = if k == 0 {
                self.elements[e] = l;
                e
            } else {
                self.elements.push(l);
                self.elements.len() - 1
            };
            self.add_edges(id);
            ids.push(id);
        }
        Ok(ids)
    }

    /// Refines the marked elements one after another in index order. Each
    /// element is refined with its loop at that moment, so hanging nodes
    /// inserted by earlier elements of the same pass take part (this is
    /// what makes plain MP multiply elements along shared edges). Labels
    /// are computed for all marked elements up front; aligned vertices do
    /// not change the rasterized image.
    ///
    /// The first child keeps the parent's index, the others are appended.
    pub fn refine(
        &self,
        marks: &MarkSet,
        strategy: Strategy,
        classifier: Option<&dyn Classifier>,
        opts: &RefineOptions,
    ) -> Result<PolyMesh> {
        if let Some(&bad) = marks.indices().iter().find(|&&i| i >= self.elements.len()) {
            return Err(Error::InvalidArgument(format!("marked element {bad} out of range")));
        }
        let labels = if strategy.needs_classifier() {
            let c =
                classifier.ok_or_else(|| Error::InvalidArgument(format!("strategy {strategy} needs a classifier")))?;
            let polys: Vec<Polygon> = marks.indices().iter().map(|&e| self.element_polygon(e)).collect();
            c.classify_all(&polys)?
        } else {
            marks.indices().iter().map(|&e| self.elements[e].len()).collect()
        };
        let tol = 1e-9 * self.mesh_size();
        let mut out = self.clone();
        for (&e, &label) in marks.indices().iter().zip(&labels) {
            let p = out.element_polygon_checked(e)?;
            let result = refine_with_label(&p, strategy, label, opts)
                .map_err(|err| Error::Mesh { element: e, reason: err.to_string() })?;
            out.apply_refinement(e, &result, tol)?;
        }
        Ok(out)
    }

    /// Refines every element `passes` times.
    pub fn refine_uniform(
        &self,
        passes: usize,
        strategy: Strategy,
        classifier: Option<&dyn Classifier>,
        opts: &RefineOptions,
    ) -> Result<PolyMesh> {
        let mut m = self.clone();
        for _ in 0..passes {
            m = m.refine(&MarkSet::all(m.num_elements()), strategy, classifier, opts)?;
        }
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("POLYMESH 1\n{} {}\n", self.vertices.len(), self.elements.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:?} {:?}", v.x, v.y);
        }
        for l in &self.elements {
            let _ = write!(s, "{}", l.len());
            for i in l {
                let _ = write!(s, " {i}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |reason: String| Error::format("mesh file", reason);
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some("POLYMESH 1") {
            return Err(bad("missing 'POLYMESH 1' header".into()));
        }
        let counts: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing counts".into()))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("bad count '{t}'"))))
            .collect::<Result<_>>()?;
        let [nv, ne] = counts[..] else { return Err(bad("expected '<vertices> <elements>'".into())) };
        let mut vertices = Vec::with_capacity(nv);
        for k in 0..nv {
            let line = lines.next().ok_or_else(|| bad(format!("missing vertex {k}")))?;
            let xy: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(format!("bad coordinate '{t}'"))))
                .collect::<Result<_>>()?;
            let [x, y] = xy[..] else { return Err(bad(format!("vertex {k} needs two coordinates"))) };
            vertices.push(Point2::new(x, y));
        }
        let mut elements = Vec::with_capacity(ne);
        for k in 0..ne {
            let line = lines.next().ok_or_else(|| bad(format!("missing element {k}")))?;
            let idx: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad(format!("bad index '{t}'"))))
                .collect::<Result<_>>()?;
            if idx.is_empty() || idx[0] != idx.len() - 1 {
                return Err(bad(format!("element {k}: count does not match indices")));
            }
            elements.push(idx[1..].to_vec());
        }
        if lines.next().is_some() {
            return Err(bad("trailing content".into()));
        }
        Self::new(vertices, elements)
    }
}

pub fn save_mesh(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, mesh.to_text())?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<PolyMesh> {
    PolyMesh::from_text(&fs::read_to_string(path)?)
}

/// The `⌈r·N⌉` elements with the largest error (ties to the lower index).
pub fn mark_fixed_fraction(errors: &[f64], r: f64) -> Result<MarkSet> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction must lie in (0, 1], got {r}")));
    }
    let n = errors.len();
    // guard against 0.3 * 10 = 3.0000000000000004
    let count = ((r * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| errors[b].total_cmp(&errors[a]).then(a.cmp(&b)));
    order.truncate(count.min(n));
    Ok(MarkSet::from_indices(order))
}

fn unit_square() -> Polygon {
    Polygon::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)])
        .expect("unit square")
}

/// `n x n` squares of the unit square, each cut along its lower-left to
/// upper-right diagonal: `2n²` triangles.
pub fn generate_triangle_grid(n: usize) -> Result<PolyMesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid needs at least one cell".into()));
    }
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point2::new(i as f64 * h, j as f64 * h));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut elements = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            elements.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolyMesh::new(vertices, elements)
}

/// Keeps the part of a convex polygon on the side of `normal · x <= offset`.
fn clip_half_plane(poly: &[Point2], normal: Point2, offset: f64) -> Vec<Point2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (fa, fb) = (normal.dot(a) - offset, normal.dot(b) - offset);
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            out.push(a.lerp(b, fa / (fa - fb)));
        }
    }
    out
}

/// Voronoi cells of `seeds` clipped to the unit square.
pub fn voronoi_cells(seeds: &[Point2]) -> Vec<Vec<Point2>> {
    seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut cell = unit_square().into_vertices();
            for (j, &t) in seeds.iter().enumerate() {
                if i != j {
                    let normal = t - s;
                    cell = clip_half_plane(&cell, normal, normal.dot(s.midpoint(t)));
                }
            }
            cell
        })
        .collect()
}

fn seeds(n: usize, seed: u64) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Point2::new(rng.gen::<f64>(), rng.gen::<f64>())).collect()
}

fn mesh_from_cells(cells: Vec<Vec<Point2>>) -> Result<PolyMesh> {
    let polys: Vec<Polygon> = cells
        .into_iter()
        .map(|mut c| {
            c.dedup_by(|a, b| a.dist(*b) <= 1e-12);
            Polygon::new(c)
        })
        .collect::<Result<_>>()?;
    PolyMesh::from_polygons(&polys, 1e-9)
}

/// Voronoi mesh of `n_seeds` uniformly random seeds in the unit square.
pub fn generate_voronoi_grid(n_seeds: usize, seed: u64) -> Result<PolyMesh> {
    if n_seeds == 0 {
        return Err(Error::InvalidArgument("need at least one seed".into()));
    }
    mesh_from_cells(voronoi_cells(&seeds(n_seeds, seed)))
}

/// Voronoi mesh after `lloyd_iters` Lloyd steps, each moving every seed to
/// the area centroid of its cell.
pub fn generate_smoothed_voronoi_grid(n_seeds: usize, lloyd_iters: usize, seed: u64) -> Result<PolyMesh> {
    if n_seeds == 0 {
        return Err(Error::InvalidArgument("need at least one seed".into()));
    }
    let mut s = seeds(n_seeds, seed);
    for _ in 0..lloyd_iters {
        s = voronoi_cells(&s).into_iter().map(|c| Polygon::new(c).map(|p| p.area_centroid())).collect::<Result<_>>()?;
    }
    mesh_from_cells(voronoi_cells(&s))
}

/// Running-bond brickwork on four rows (3, 4, 3 and 4 bricks, the offset
/// rows ending in half bricks) whose horizontal joints zig-zag: 14
/// conforming elements, the full bricks being non-convex chevrons.
pub fn generate_nonconvex_grid() -> Result<PolyMesh> {
    brickwork(4)
}

/// The brick pattern of [`generate_nonconvex_grid`] on `rows` rows of
/// `1.5 rows` half-brick steps; `rows` is even.
fn brickwork(rows: usize) -> Result<PolyMesh> {
    let steps = 3 * rows / 2;
    let dent = 0.16 / rows as f64;
    // joint k sampled at x = j / steps
    let joint = |k: usize, j: usize| -> Point2 {
        let x = j as f64 / steps as f64;
        let y = k as f64 / rows as f64;
        if k == 0 || k == rows || j == 0 || j == steps {
            Point2::new(x, y)
        } else {
            Point2::new(x, y + if j % 2 == 0 { dent } else { -dent })
        }
    };
    let even: Vec<usize> = (0..=steps).step_by(2).collect();
    let odd: Vec<usize> = std::iter::once(0).chain((1..steps).step_by(2)).chain([steps]).collect();
    let mut polys = Vec::new();
    for k in 0..rows {
        let cuts = if k % 2 == 0 { &even } else { &odd };
        for w in cuts.windows(2) {
            let mut v: Vec<Point2> = (w[0]..=w[1]).map(|j| joint(k, j)).collect();
            v.extend((w[0]..=w[1]).rev().map(|j| joint(k + 1, j)));
            polys.push(Polygon::new(v)?);
        }
    }
    PolyMesh::from_polygons(&polys, 1e-12)
}

/// The four coarse grids used for the refinement experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialGrid {
    /// 32 triangles.
    Triangles,
    /// 9 Voronoi cells.
    Voronoi,
    /// 10 Lloyd-smoothed Voronoi cells.
    SmoothedVoronoi,
    /// 14 chevron bricks.
    NonConvex,
}

impl InitialGrid {
    pub const ALL: [InitialGrid; 4] =
        [InitialGrid::Triangles, InitialGrid::Voronoi, InitialGrid::SmoothedVoronoi, InitialGrid::NonConvex];

    pub fn generate(self) -> Result<PolyMesh> {
        match self {
            InitialGrid::Triangles => generate_triangle_grid(4),
            InitialGrid::Voronoi => generate_voronoi_grid(9, 1),
            InitialGrid::SmoothedVoronoi => generate_smoothed_voronoi_grid(10, 20, 1),
            InitialGrid::NonConvex => generate_nonconvex_grid(),
        }
    }

    /// A finer grid of the same family, the starting point for adaptive
    /// studies: 128 triangles, 36 Voronoi cells, 40 smoothed cells or 52
    /// bricks.
    pub fn generate_fine(self) -> Result<PolyMesh> {
        match self {
            InitialGrid::Triangles => generate_triangle_grid(8),
            InitialGrid::Voronoi => generate_voronoi_grid(36, 1),
            InitialGrid::SmoothedVoronoi => generate_smoothed_voronoi_grid(40, 20, 1),
            InitialGrid::NonConvex => brickwork(8),
        }
    }
}

impl fmt::Display for InitialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitialGrid::Triangles => "triangles",
            InitialGrid::Voronoi => "voronoi",
            InitialGrid::SmoothedVoronoi => "smoothed-voronoi",
            InitialGrid::NonConvex => "nonconvex",
        })
    }
}

impl FromStr for InitialGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InitialGrid::ALL.into_iter().find(|g| g.to_string() == s).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown grid '{s}' (expected triangles, voronoi, smoothed-voronoi or nonconvex)"
            ))
        })
    }
}
