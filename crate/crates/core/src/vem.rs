//! Lowest-order virtual element method for `-Δu = f` on polygonal meshes,
//! with manufactured solutions and a refinement-driven convergence study.
//!
//! Degrees of freedom are the mesh vertices. The element stiffness is the
//! usual consistency term built from the projection `Π∇` onto linear
//! functions, plus the identity ("dofi-dofi") stabilization of its
//! complement.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{orient, Point2, Polygon};
use crate::mesh::{mark_fixed_fraction, MarkSet, PolyMesh};
use crate::refine::{Classifier, RefineOptions, Strategy};

type ScalarFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(Point2) -> (f64, f64) + Send + Sync>;

/// An exact solution with its gradient and the forcing `f = -Δu`. The
/// solution also provides the Dirichlet data.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub u: ScalarFn,
    pub grad: VectorFn,
    pub f: ScalarFn,
}

impl fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedCase").field("name", &self.name).finish_non_exhaustive()
    }
}

impl ManufacturedCase {
    /// `u = sin(πx) sin(πy)`.
    pub fn sine() -> Self {
        use std::f64::consts::PI;
        Self {
            name: "sine".into(),
            u: Arc::new(|p| (PI * p.x).sin() * (PI * p.y).sin()),
            grad: Arc::new(|p| (PI * (PI * p.x).cos() * (PI * p.y).sin(), PI * (PI * p.x).sin() * (PI * p.y).cos())),
            f: Arc::new(|p| 2.0 * PI * PI * (PI * p.x).sin() * (PI * p.y).sin()),
        }
    }

    /// `u = (1 - e^{-10x})(x - 1) sin(πy)`, with a boundary layer at `x = 0`.
    pub fn layer() -> Self {
        use std::f64::consts::PI;
        let g = |x: f64| (1.0 - (-10.0 * x).exp()) * (x - 1.0);
        let dg = |x: f64| 10.0 * (-10.0 * x).exp() * (x - 1.0) + 1.0 - (-10.0 * x).exp();
        let ddg = |x: f64| (-10.0 * x).exp() * (120.0 - 100.0 * x);
        Self {
            name: "layer".into(),
            u: Arc::new(move |p| g(p.x) * (PI * p.y).sin()),
            grad: Arc::new(move |p| (dg(p.x) * (PI * p.y).sin(), PI * g(p.x) * (PI * p.y).cos())),
            f: Arc::new(move |p| (PI * PI * g(p.x) - ddg(p.x)) * (PI * p.y).sin()),
        }
    }

    /// `u = a + b x + c y`, harmonic, for patch tests.
    pub fn linear(a: f64, b: f64, c: f64) -> Self {
        Self {
            name: "linear".into(),
            u: Arc::new(move |p| a + b * p.x + c * p.y),
            grad: Arc::new(move |_| (b, c)),
            f: Arc::new(|_| 0.0),
        }
    }
}

/// Names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseName {
    Sine,
    Layer,
}

impl CaseName {
    pub fn case(self) -> ManufacturedCase {
        match self {
            CaseName::Sine => ManufacturedCase::sine(),
            CaseName::Layer => ManufacturedCase::layer(),
        }
    }
}

impl FromStr for CaseName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sine" => Ok(CaseName::Sine),
            "layer" => Ok(CaseName::Layer),
            _ => Err(Error::InvalidArgument(format!("unknown case '{s}' (expected sine or layer)"))),
        }
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseName::Sine => "sine",
            CaseName::Layer => "layer",
        })
    }
}

/// Projection data of one element: `pi_star` maps vertex values to the
/// coefficients of the projected linear function in the scaled monomials
/// `1, (x - xc)/h, (y - yc)/h`.
struct Projection {
    n: usize,
    h: f64,
    pi_star: [Vec<f64>; 3],
    g: [[f64; 3]; 3],
    d: Vec<[f64; 3]>,
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if !det.is_finite() || det.abs() < 1e-300 {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, d) = ((i + 1) % 3, (i + 2) % 3);
            *v = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) / det;
        }
    }
    Some(inv)
}

fn projection(p: &Polygon) -> Result<Projection> {
    let v = p.vertices();
    let n = v.len();
    let xc = p.centroid();
    let h = p.diameter();
    if !(p.area() > 0.0 && h > 0.0) {
        return Err(Error::DegenerateInput);
    }
    let d: Vec<[f64; 3]> = v.iter().map(|q| [1.0, (q.x - xc.x) / h, (q.y - xc.y) / h]).collect();
    // length-weighted outward normals of each edge
    let nl: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let e = v[(i + 1) % n] - v[i];
            (e.y, -e.x)
        })
        .collect();
    let mut b = [vec![1.0 / n as f64; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let prev = nl[(i + n - 1) % n];
        b[1][i] = 0.5 * (prev.0 + nl[i].0) / h;
        b[2][i] = 0.5 * (prev.1 + nl[i].1) / h;
    }
    let mut g = [[0.0; 3]; 3];
    for (a, row) in g.iter_mut().enumerate() {
        for (c, gv) in row.iter_mut().enumerate() {
            *gv = (0..n).map(|i| b[a][i] * d[i][c]).sum();
        }
    }
    let gi = invert3(&g).ok_or(Error::DegenerateInput)?;
    let pi_star = std::array::from_fn(|a| (0..n).map(|i| (0..3).map(|c| gi[a][c] * b[c][i]).sum()).collect());
    Ok(Projection { n, h, pi_star, g, d })
}

/// Element stiffness matrix (row-major `n x n`).
pub fn local_stiffness(p: &Polygon) -> Result<Vec<Vec<f64>>> {
    let pr = projection(p)?;
    let n = pr.n;
    let mut k = vec![vec![0.0; n]; n];
    // consistency: Π*ᵀ G̃ Π*, G̃ being G without its constant row
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for a in 1..3 {
                for c in 0..3 {
                    s += pr.pi_star[a][i] * pr.g[a][c] * pr.pi_star[c][j];
                }
            }
            k[i][j] = s;
        }
    }
    // stabilization: (I - Π)ᵀ (I - Π) with Π = D Π*
    let proj: Vec<Vec<f64>> =
        (0..n).map(|r| (0..n).map(|c| (0..3).map(|a| pr.d[r][a] * pr.pi_star[a][c]).sum()).collect()).collect();
    let comp: Vec<Vec<f64>> =
        (0..n).map(|r| (0..n).map(|c| f64::from(u8::from(r == c)) - proj[r][c]).collect()).collect();
    for i in 0..n {
        for j in 0..n {
            k[i][j] += (0..n).map(|r| comp[r][i] * comp[r][j]).sum::<f64>();
        }
    }
    Ok(k)
}

/// Constant gradient of `Π∇ u_h` on an element from its vertex values.
pub fn projected_gradient(p: &Polygon, values: &[f64]) -> Result<(f64, f64)> {
    let pr = projection(p)?;
    let dot = |row: &[f64]| row.iter().zip(values).map(|(a, b)| a * b).sum::<f64>();
    Ok((dot(&pr.pi_star[1]) / pr.h, dot(&pr.pi_star[2]) / pr.h))
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut rows: Vec<usize> = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().expect("non-empty") += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let s = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        s.binary_search(&c).map_or(0.0, |k| self.vals[self.row_ptr[r] + k])
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            y[r] = self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&c, v)| v * x[c]).sum();
        }
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                worst = worst.max((self.vals[k] - self.get(self.cols[k], r)).abs());
            }
        }
        worst
    }
}

/// Global stiffness over all vertices, before boundary conditions.
pub fn assemble_stiffness(mesh: &PolyMesh) -> Result<CsrMatrix> {
    let locals = local_matrices(mesh)?;
    let mut t = Vec::new();
    for (l, k) in mesh.elements().iter().zip(&locals) {
        for (i, &gi) in l.iter().enumerate() {
            for (j, &gj) in l.iter().enumerate() {
                t.push((gi, gj, k[i][j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(mesh.num_vertices(), t))
}

fn local_matrices(mesh: &PolyMesh) -> Result<Vec<Vec<Vec<f64>>>> {
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            local_stiffness(&mesh.element_polygon(e)).map_err(|err| Error::Mesh { element: e, reason: err.to_string() })
        })
        .collect()
}

/// Vertices on segments with a single incident element.
pub fn boundary_vertices(mesh: &PolyMesh) -> Vec<bool> {
    let mut on = vec![false; mesh.num_vertices()];
    for (&(a, b), inc) in mesh.adjacency() {
        if inc.len() == 1 {
            on[a] = true;
            on[b] = true;
        }
    }
    on
}

/// The system for the interior vertices after eliminating the Dirichlet
/// values, plus the data needed to rebuild a full vertex vector.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Global vertex of each unknown.
    pub unknowns: Vec<usize>,
    /// Dirichlet value per vertex (ignored for interior vertices).
    pub boundary_values: Vec<f64>,
}

impl LinearSystem {
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.boundary_values.clone();
        for (&g, &v) in self.unknowns.iter().zip(x) {
            full[g] = v;
        }
        full
    }
}

/// Assembles stiffness and load; Dirichlet data are the exact solution's
/// boundary values. The load puts `f(c)·|P|/n` on each of the `n` vertices
/// of element `P`, `c` being the vertex average.
pub fn assemble(mesh: &PolyMesh, case: &ManufacturedCase) -> Result<LinearSystem> {
    let locals = local_matrices(mesh)?;
    let nv = mesh.num_vertices();
    let boundary = boundary_vertices(mesh);
    let mut index = vec![usize::MAX; nv];
    let mut unknowns = Vec::new();
    for v in 0..nv {
        if !boundary[v] {
            index[v] = unknowns.len();
            unknowns.push(v);
        }
    }
    let boundary_values: Vec<f64> =
        mesh.vertices().iter().zip(&boundary).map(|(&p, &b)| if b { (case.u)(p) } else { 0.0 }).collect();
    let mut rhs = vec![0.0; unknowns.len()];
    let mut t = Vec::new();
    for (e, (l, k)) in mesh.elements().iter().zip(&locals).enumerate() {
        let p = mesh.element_polygon(e);
        let load = (case.f)(p.centroid()) * p.area() / l.len() as f64;
        for (i, &gi) in l.iter().enumerate() {
            let ri = index[gi];
            if ri == usize::MAX {
                continue;
            }
            rhs[ri] += load;
            for (j, &gj) in l.iter().enumerate() {
                match index[gj] {
                    usize::MAX => rhs[ri] -= k[i][j] * boundary_values[gj],
                    rj => t.push((ri, rj, k[i][j])),
                }
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(unknowns.len(), t);
    Ok(LinearSystem { matrix, rhs, unknowns, boundary_values })
}

/// Jacobi-preconditioned conjugate gradients to relative residual `1e-10`.
pub fn solve(system: &LinearSystem) -> Result<Vec<f64>> {
    let a = &system.matrix;
    let b = &system.rhs;
    let n = a.n;
    let mut x = vec![0.0; n];
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0 || bnorm == 0.0 {
        return Ok(x);
    }
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Solver(format!("non-positive diagonal at unknown {i}")));
    }
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let max_iter = 10 * n + 1000;
    for _ in 0..max_iter {
        a.mul(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::Solver("matrix is not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-10 * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!("no convergence in {max_iter} iterations")))
}

/// Assembles and solves; returns the value at every vertex.
pub fn solve_case(mesh: &PolyMesh, case: &ManufacturedCase) -> Result<Vec<f64>> {
    let sys = assemble(mesh, case)?;
    let x = solve(&sys)?;
    Ok(sys.expand(&x))
}

// degree-4 rule on the reference triangle: (barycentric a, b, b) orbits
const QUAD_ORBITS: [(f64, f64, f64); 2] = [
    (0.108_103_018_168_070, 0.445_948_490_915_965, 0.223_381_589_678_011),
    (0.816_847_572_980_459, 0.091_576_213_509_771, 0.109_951_743_655_322),
];

fn triangle_integral(a: Point2, b: Point2, c: Point2, f: &dyn Fn(Point2) -> f64) -> f64 {
    let area = 0.5 * orient(a, b, c);
    let mut s = 0.0;
    for &(l0, l1, w) in &QUAD_ORBITS {
        for (x, y, z) in [(l0, l1, l1), (l1, l0, l1), (l1, l1, l0)] {
            s += w * f(Point2::new(x * a.x + y * b.x + z * c.x, x * a.y + y * b.y + z * c.y));
        }
    }
    s * area
}

/// Triangles covering the polygon: a fan from the vertex average when every
/// fan triangle is positively oriented, ear clipping otherwise.
pub fn triangulate(p: &Polygon) -> Vec<[Point2; 3]> {
    let v = p.vertices();
    let n = v.len();
    let c = p.centroid();
    if (0..n).all(|i| orient(c, v[i], v[(i + 1) % n]) > 0.0) {
        return (0..n).map(|i| [c, v[i], v[(i + 1) % n]]).collect();
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut tris = Vec::with_capacity(n - 2);
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&k| {
            let (a, b, d) = (v[idx[(k + m - 1) % m]], v[idx[k]], v[idx[(k + 1) % m]]);
            orient(a, b, d) > 0.0
                && idx.iter().all(|&j| {
                    let q = v[j];
                    q == a
                        || q == b
                        || q == d
                        || !(orient(a, b, q) >= 0.0 && orient(b, d, q) >= 0.0 && orient(d, a, q) >= 0.0)
                })
        });
        // aligned vertices form no ear; drop one to make progress
        let k = ear.unwrap_or_else(|| {
            let turn = |k: usize| orient(v[idx[(k + m - 1) % m]], v[idx[k]], v[idx[(k + 1) % m]]).abs();
            (0..m).min_by(|&a, &b| turn(a).total_cmp(&turn(b))).expect("non-empty")
        });
        if ear.is_some() {
            tris.push([v[idx[(k + m - 1) % m]], v[idx[k]], v[idx[(k + 1) % m]]]);
        }
        idx.remove(k);
    }
    tris.push([v[idx[0]], v[idx[1]], v[idx[2]]]);
    tris
}

/// `∫_P f` with the degree-4 rule on [`triangulate`].
pub fn integrate(p: &Polygon, f: &dyn Fn(Point2) -> f64) -> f64 {
    triangulate(p).iter().map(|t| triangle_integral(t[0], t[1], t[2], f)).sum()
}

/// Per element `‖Π∇u_h - ∇u‖²_{L²(P)}`.
pub fn local_errors(mesh: &PolyMesh, solution: &[f64], case: &ManufacturedCase) -> Result<Vec<f64>> {
    if solution.len() != mesh.num_vertices() {
        return Err(Error::InvalidArgument(format!("{} values for {} vertices", solution.len(), mesh.num_vertices())));
    }
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let p = mesh.element_polygon(e);
            let vals: Vec<f64> = mesh.elements()[e].iter().map(|&i| solution[i]).collect();
            let (gx, gy) = projected_gradient(&p, &vals)?;
            Ok(integrate(&p, &|q| {
                let (ux, uy) = (case.grad)(q);
                (gx - ux).powi(2) + (gy - uy).powi(2)
            }))
        })
        .collect()
}

/// Broken H¹ seminorm error `(Σ_P ‖Π∇u_h - ∇u‖²)^{1/2}`.
pub fn h1_error(mesh: &PolyMesh, solution: &[f64], case: &ManufacturedCase) -> Result<f64> {
    Ok(local_errors(mesh, solution, case)?.iter().sum::<f64>().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceStep {
    pub step: usize,
    pub dofs: usize,
    pub elements: usize,
    pub h: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceRecord {
    pub steps: Vec<ConvergenceStep>,
}

impl ConvergenceRecord {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,dofs,h,error\n");
        for r in &self.steps {
            let _ = writeln!(s, "{},{},{},{}", r.step, r.dofs, r.h, r.error);
        }
        s
    }

    /// Log-log slope of error against DoFs between the last two steps.
    pub fn final_slope(&self) -> Option<f64> {
        let n = self.steps.len();
        if n < 2 {
            return None;
        }
        let (a, b) = (&self.steps[n - 2], &self.steps[n - 1]);
        Some((b.error.ln() - a.error.ln()) / ((b.dofs as f64).ln() - (a.dofs as f64).ln()))
    }

    /// Error at `dofs` by log-log interpolation between recorded steps;
    /// `None` outside the recorded range.
    pub fn error_at(&self, dofs: f64) -> Option<f64> {
        self.steps.windows(2).find_map(|w| {
            let (a, b) = (w[0].dofs as f64, w[1].dofs as f64);
            if dofs < a.min(b) || dofs > a.max(b) {
                return None;
            }
            if a == b {
                return Some(w[0].error.min(w[1].error));
            }
            let t = (dofs.ln() - a.ln()) / (b.ln() - a.ln());
            Some((w[0].error.ln() + t * (w[1].error.ln() - w[0].error.ln())).exp())
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub strategy: Strategy,
    /// Fraction of elements refined per step; 1 refines uniformly.
    pub fraction: f64,
    /// Number of solves; the mesh is refined between consecutive solves.
    pub steps: usize,
    pub options: RefineOptions,
}

/// Solve, measure, mark the fraction with the largest local error, refine;
/// repeated `cfg.steps` times.
pub fn convergence_study(
    initial: &PolyMesh,
    case: &ManufacturedCase,
    classifier: Option<&dyn Classifier>,
    cfg: &StudyConfig,
) -> Result<ConvergenceRecord> {
    if cfg.steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    let mut mesh = initial.clone();
    let mut record = ConvergenceRecord::default();
    for step in 0..cfg.steps {
        let u = solve_case(&mesh, case)?;
        let local = local_errors(&mesh, &u, case)?;
        record.steps.push(ConvergenceStep {
            step,
            dofs: mesh.num_vertices(),
            elements: mesh.num_elements(),
            h: mesh.mesh_size(),
            error: local.iter().sum::<f64>().sqrt(),
        });
        if step + 1 < cfg.steps {
            let marks = if cfg.fraction >= 1.0 {
                MarkSet::all(mesh.num_elements())
            } else {
                mark_fixed_fraction(&local, cfg.fraction)?
            };
            mesh = mesh.refine(&marks, cfg.strategy, classifier, &cfg.options)?;
        }
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_nonconvex_grid, generate_triangle_grid, generate_voronoi_grid};

    fn poly(v: &[(f64, f64)]) -> Polygon {
        Polygon::new(v.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    fn energy(k: &[Vec<f64>], v: &[f64]) -> f64 {
        (0..v.len()).map(|i| (0..v.len()).map(|j| v[i] * k[i][j] * v[j]).sum::<f64>()).sum()
    }

    #[test]
    fn square_reproduces_linear_energy() {
        let p = poly(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let k = local_stiffness(&p).unwrap();
        let ux: Vec<f64> = p.vertices().iter().map(|q| q.x).collect();
        assert!((energy(&k, &ux) - 1.0).abs() < 1e-12);
        for row in &k {
            assert!(row.iter().sum::<f64>().abs() < 1e-13);
        }
        for i in 0..4 {
            for j in 0..4 {
                assert!((k[i][j] - k[j][i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn equilateral_triangle_energy() {
        let p = Polygon::regular(3, Point2::new(0.2, 0.1), 1.0 / 3f64.sqrt(), 0.4).unwrap();
        let k = local_stiffness(&p).unwrap();
        let uy: Vec<f64> = p.vertices().iter().map(|q| q.y).collect();
        assert!((energy(&k, &uy) - p.area()).abs() < 1e-12);
    }

    #[test]
    fn stabilization_is_positive_off_constants() {
        let p = poly(&[(0.0, 0.0), (1.0, 0.0), (1.3, 0.6), (0.5, 1.0), (0.5, 0.5), (-0.1, 0.7)]);
        let k = local_stiffness(&p).unwrap();
        let v = [0.3, -1.0, 0.2, 0.9, -0.4, 0.0];
        let mean = v.iter().sum::<f64>() / 6.0;
        let w: Vec<f64> = v.iter().map(|x| x - mean).collect();
        assert!(energy(&k, &w) > 0.0);
    }

    #[test]
    fn quadrature_is_exact_for_quartics() {
        let p = poly(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]);
        // ∫ x^4 over the L-shape: [0,2]x[0,1] + [0,1]x[1,2]
        let exact = 32.0 / 5.0 + 1.0 / 5.0;
        assert!((integrate(&p, &|q| q.x.powi(4)) - exact).abs() < 1e-12);
        assert!((integrate(&p, &|_| 1.0) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn patch_test_on_generated_meshes() {
        let case = ManufacturedCase::linear(0.5, 1.0, -2.0);
        for m in [
            generate_triangle_grid(3).unwrap(),
            generate_voronoi_grid(12, 4).unwrap(),
            generate_nonconvex_grid().unwrap(),
        ] {
            let u = solve_case(&m, &case).unwrap();
            for (q, v) in m.vertices().iter().zip(&u) {
                assert!((v - (case.u)(*q)).abs() < 1e-9);
            }
            assert!(h1_error(&m, &u, &case).unwrap() < 1e-10);
        }
    }

    #[test]
    fn zero_solution_has_zero_error() {
        let m = generate_triangle_grid(2).unwrap();
        let zero = ManufacturedCase::linear(0.0, 0.0, 0.0);
        assert_eq!(h1_error(&m, &vec![0.0; m.num_vertices()], &zero).unwrap(), 0.0);
    }

    #[test]
    fn global_matrix_symmetric() {
        let m = generate_voronoi_grid(20, 5).unwrap();
        assert!(assemble_stiffness(&m).unwrap().asymmetry() < 1e-12);
    }

    #[test]
    fn sine_error_halves_with_h() {
        let case = ManufacturedCase::sine();
        let e: Vec<f64> = [8, 16]
            .iter()
            .map(|&n| {
                let m = generate_triangle_grid(n).unwrap();
                h1_error(&m, &solve_case(&m, &case).unwrap(), &case).unwrap()
            })
            .collect();
        let ratio = e[0] / e[1];
        assert!((ratio - 2.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn layer_forcing_matches_laplacian() {
        let c = ManufacturedCase::layer();
        let p = Point2::new(0.3, 0.4);
        let h = 1e-4;
        let u = |x: f64, y: f64| (c.u)(Point2::new(x, y));
        let lap = (u(p.x + h, p.y) + u(p.x - h, p.y) + u(p.x, p.y + h) + u(p.x, p.y - h) - 4.0 * u(p.x, p.y)) / (h * h);
        assert!(((c.f)(p) + lap).abs() < 1e-5 * (c.f)(p).abs().max(1.0));
        let (gx, gy) = (c.grad)(p);
        assert!((gx - (u(p.x + h, p.y) - u(p.x - h, p.y)) / (2.0 * h)).abs() < 1e-6);
        assert!((gy - (u(p.x, p.y + h) - u(p.x, p.y - h)) / (2.0 * h)).abs() < 1e-6);
        assert_eq!((c.u)(Point2::new(0.0, 0.7)), 0.0);
        assert_eq!((c.u)(Point2::new(1.0, 0.7)), 0.0);
    }

    #[test]
    fn record_slope_and_interpolation() {
        let rec = ConvergenceRecord {
            steps: vec![
                ConvergenceStep { step: 0, dofs: 100, elements: 1, h: 1.0, error: 1.0 },
                ConvergenceStep { step: 1, dofs: 400, elements: 1, h: 0.5, error: 0.5 },
            ],
        };
        assert!((rec.final_slope().unwrap() + 0.5).abs() < 1e-15);
        assert!((rec.error_at(200.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(rec.error_at(1000.0), None);
        assert!(rec.to_csv().starts_with("step,dofs,h,error\n0,100,1,1\n"));
    }
}
