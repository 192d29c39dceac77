//! Structured grid, nodal fields, and per-cell calculus.
//!
//! The reference body is the rectangle `[0, lx] x [0, ly]`, meshed by
//! `nx x ny` bilinear quadrilateral cells. Nodal fields are stored
//! row-major (x fastest); gradients are evaluated at cell centers with
//! one quadrature point per cell, which is exact for affine fields.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Mat2, Vec2};
use crate::params::DISTORTION_DET_FLOOR;

/// Uniform rectangular grid: `nx x ny` cells over `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        let g = Grid { nx, ny, lx, ly };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::ShapeMismatch(format!(
                "grid needs at least one cell per axis, got {} x {}",
                self.nx, self.ny
            )));
        }
        if !(self.lx.is_finite() && self.lx > 0.0 && self.ly.is_finite() && self.ly > 0.0) {
            return Err(Error::ShapeMismatch(format!(
                "grid extents must be positive, got {} x {}",
                self.lx, self.ly
            )));
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.nx && j <= self.ny);
        j * (self.nx + 1) + i
    }

    pub fn node_coords(&self, idx: usize) -> (usize, usize) {
        (idx % (self.nx + 1), idx / (self.nx + 1))
    }

    pub fn node_pos(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(i as f64 * self.hx(), j as f64 * self.hy())
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn cell_coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    /// Corner node indices of cell `(i, j)` in the order
    /// `(i,j), (i+1,j), (i,j+1), (i+1,j+1)`.
    pub fn cell_corners(&self, i: usize, j: usize) -> [usize; 4] {
        [
            self.node_index(i, j),
            self.node_index(i + 1, j),
            self.node_index(i, j + 1),
            self.node_index(i + 1, j + 1),
        ]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            (i as f64 + 0.5) * self.hx(),
            (j as f64 + 0.5) * self.hy(),
        )
    }

    pub fn is_boundary_node(&self, idx: usize) -> bool {
        let (i, j) = self.node_coords(idx);
        i == 0 || i == self.nx || j == 0 || j == self.ny
    }

    /// Boundary node indices in counterclockwise loop order, starting at
    /// the origin corner. Each node appears once.
    pub fn boundary_loop(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * (self.nx + self.ny));
        for i in 0..self.nx {
            out.push(self.node_index(i, 0));
        }
        for j in 0..self.ny {
            out.push(self.node_index(self.nx, j));
        }
        for i in (1..=self.nx).rev() {
            out.push(self.node_index(i, self.ny));
        }
        for j in (1..=self.ny).rev() {
            out.push(self.node_index(0, j));
        }
        out
    }
}

/// Gradient of the four bilinear shape functions at the cell center,
/// in the corner order of [`Grid::cell_corners`].
pub fn shape_gradients_center(grid: &Grid) -> [Vec2; 4] {
    let gx = 1.0 / (2.0 * grid.hx());
    let gy = 1.0 / (2.0 * grid.hy());
    [
        Vec2::new(-gx, -gy),
        Vec2::new(gx, -gy),
        Vec2::new(-gx, gy),
        Vec2::new(gx, gy),
    ]
}

/// A vector-valued nodal field (two components per node).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVectorField {
    pub grid: Grid,
    pub values: Vec<Vec2>,
}

impl NodeVectorField {
    pub fn zeros(grid: Grid) -> Self {
        NodeVectorField {
            grid,
            values: vec![Vec2::ZERO; grid.num_nodes()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Vec2) -> Vec2) -> Self {
        let mut values = Vec::with_capacity(grid.num_nodes());
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                values.push(f(grid.node_pos(i, j)));
            }
        }
        NodeVectorField { grid, values }
    }

    /// Center gradient on one cell.
    pub fn cell_gradient(&self, i: usize, j: usize) -> Mat2 {
        let [c00, c10, c01, c11] = self.grid.cell_corners(i, j);
        let v = &self.values;
        let dx = (v[c10] + v[c11] - v[c00] - v[c01]) * (1.0 / (2.0 * self.grid.hx()));
        let dy = (v[c01] + v[c11] - v[c00] - v[c10]) * (1.0 / (2.0 * self.grid.hy()));
        Mat2::from_cols(dx, dy)
    }

    /// Bilinear interpolation at a reference point (clamped to the box).
    pub fn value_at(&self, p: Vec2) -> Vec2 {
        bilinear_at(&self.grid, &self.values, p)
    }
}

fn bilinear_at(g: &Grid, values: &[Vec2], p: Vec2) -> Vec2 {
    let tx = (p.x / g.hx()).clamp(0.0, g.nx as f64);
    let ty = (p.y / g.hy()).clamp(0.0, g.ny as f64);
    let i = (tx.floor() as usize).min(g.nx - 1);
    let j = (ty.floor() as usize).min(g.ny - 1);
    let fx = tx - i as f64;
    let fy = ty - j as f64;
    let [c00, c10, c01, c11] = g.cell_corners(i, j);
    values[c00] * ((1.0 - fx) * (1.0 - fy))
        + values[c10] * (fx * (1.0 - fy))
        + values[c01] * ((1.0 - fx) * fy)
        + values[c11] * (fx * fy)
}

/// A deformation `y` of the reference rectangle: a [`NodeVectorField`]
/// plus the set of Dirichlet-constrained nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationField {
    pub grid: Grid,
    pub values: Vec<Vec2>,
    /// Nodes that descent steps must not move.
    pub dirichlet: Vec<bool>,
}

impl DeformationField {
    /// The identity map with the full boundary constrained.
    pub fn identity(grid: Grid) -> Self {
        Self::from_map(grid, |x| x)
    }

    /// Nodal interpolation of `f`, boundary constrained.
    pub fn from_map(grid: Grid, f: impl Fn(Vec2) -> Vec2) -> Self {
        let field = NodeVectorField::from_fn(grid, f);
        let dirichlet = (0..grid.num_nodes())
            .map(|idx| grid.is_boundary_node(idx))
            .collect();
        DeformationField {
            grid,
            values: field.values,
            dirichlet,
        }
    }

    /// The affine map `x -> A x + t`.
    pub fn affine(grid: Grid, a: Mat2, t: Vec2) -> Self {
        Self::from_map(grid, |x| a * x + t)
    }

    pub fn as_node_field(&self) -> NodeVectorField {
        NodeVectorField {
            grid: self.grid,
            values: self.values.clone(),
        }
    }

    pub fn cell_gradient(&self, i: usize, j: usize) -> Mat2 {
        let [c00, c10, c01, c11] = self.grid.cell_corners(i, j);
        let v = &self.values;
        let dx = (v[c10] + v[c11] - v[c00] - v[c01]) * (1.0 / (2.0 * self.grid.hx()));
        let dy = (v[c01] + v[c11] - v[c00] - v[c10]) * (1.0 / (2.0 * self.grid.hy()));
        Mat2::from_cols(dx, dy)
    }

    /// Deformation gradient on every cell.
    pub fn gradient(&self) -> TensorCellField {
        let g = &self.grid;
        let mut values = Vec::with_capacity(g.num_cells());
        for j in 0..g.ny {
            for i in 0..g.nx {
                values.push(self.cell_gradient(i, j));
            }
        }
        TensorCellField {
            grid: self.grid,
            values,
        }
    }

    /// Bilinear interpolation of the deformation at a reference point.
    pub fn value_at(&self, p: Vec2) -> Vec2 {
        bilinear_at(&self.grid, &self.values, p)
    }

    /// Smallest cell determinant.
    pub fn min_det(&self) -> f64 {
        let mut m = f64::INFINITY;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                m = m.min(self.cell_gradient(i, j).det());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// A nodal phase field with `h` components per node, stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    pub grid: Grid,
    /// Phase-space dimension.
    pub h: usize,
    /// `values[node * h + comp]`.
    pub values: Vec<f64>,
}

impl PhaseField {
    pub fn constant(grid: Grid, value: &[f64]) -> Self {
        let h = value.len();
        let mut values = Vec::with_capacity(grid.num_nodes() * h);
        for _ in 0..grid.num_nodes() {
            values.extend_from_slice(value);
        }
        PhaseField { grid, h, values }
    }

    pub fn from_fn(grid: Grid, h: usize, mut f: impl FnMut(Vec2, &mut [f64])) -> Self {
        let mut values = vec![0.0; grid.num_nodes() * h];
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                let idx = grid.node_index(i, j);
                f(grid.node_pos(i, j), &mut values[idx * h..(idx + 1) * h]);
            }
        }
        PhaseField { grid, h, values }
    }

    pub fn node(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.h..(idx + 1) * self.h]
    }

    pub fn node_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.values[idx * self.h..(idx + 1) * self.h]
    }

    /// Corner average on a cell (the bilinear value at its center),
    /// written into `out[..h]`.
    pub fn cell_average(&self, i: usize, j: usize, out: &mut [f64]) {
        let corners = self.grid.cell_corners(i, j);
        out[..self.h].fill(0.0);
        for c in corners {
            let v = self.node(c);
            for a in 0..self.h {
                out[a] += 0.25 * v[a];
            }
        }
    }

    /// Center gradient on a cell, written row-major into `out[..2h]`
    /// (`out[2a] = d z_a / d x1`, `out[2a + 1] = d z_a / d x2`).
    pub fn cell_gradient(&self, i: usize, j: usize, out: &mut [f64]) {
        let [c00, c10, c01, c11] = self.grid.cell_corners(i, j);
        let sx = 1.0 / (2.0 * self.grid.hx());
        let sy = 1.0 / (2.0 * self.grid.hy());
        for a in 0..self.h {
            let v00 = self.values[c00 * self.h + a];
            let v10 = self.values[c10 * self.h + a];
            let v01 = self.values[c01 * self.h + a];
            let v11 = self.values[c11 * self.h + a];
            out[2 * a] = (v10 + v11 - v00 - v01) * sx;
            out[2 * a + 1] = (v01 + v11 - v00 - v10) * sy;
        }
    }

    /// Largest Euclidean node norm.
    pub fn max_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for idx in 0..self.grid.num_nodes() {
            let n = self.node(idx).iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(n);
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// A 2x2 tensor per cell (deformation gradients, cofactors, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCellField {
    pub grid: Grid,
    pub values: Vec<Mat2>,
}

impl TensorCellField {
    pub fn get(&self, i: usize, j: usize) -> Mat2 {
        self.values[self.grid.cell_index(i, j)]
    }
}

/// A scalar per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl CellScalarField {
    pub fn constant(grid: Grid, v: f64) -> Self {
        CellScalarField {
            grid,
            values: vec![v; grid.num_cells()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Vec2) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.num_cells());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.cell_center(i, j)));
            }
        }
        CellScalarField { grid, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.cell_index(i, j)]
    }
}

/// Per-cell determinant and cofactor of a tensor field.
pub fn det_cof(f: &TensorCellField) -> (CellScalarField, TensorCellField) {
    let dets = CellScalarField {
        grid: f.grid,
        values: f.values.iter().map(Mat2::det).collect(),
    };
    let cofs = TensorCellField {
        grid: f.grid,
        values: f.values.iter().map(Mat2::cof).collect(),
    };
    (dets, cofs)
}

/// Distortion report: the pointwise coefficient and its `L^q` norm.
#[derive(Debug, Clone)]
pub struct DistortionReport {
    pub field: CellScalarField,
    pub lq_norm: f64,
}

/// Pointwise distortion `K = |grad y|^2 / det grad y` per cell, set to 1
/// where the determinant falls below [`DISTORTION_DET_FLOOR`], and its
/// `L^q(Omega)` norm.
pub fn distortion(def: &DeformationField, q: f64) -> DistortionReport {
    assert!(q >= 1.0, "distortion exponent must be >= 1");
    let g = &def.grid;
    let mut values = Vec::with_capacity(g.num_cells());
    let mut acc = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let f = def.cell_gradient(i, j);
            let det = f.det();
            let k = if det <= DISTORTION_DET_FLOOR {
                1.0
            } else {
                f.frob_sq() / det
            };
            values.push(k);
            acc += k.powf(q) * g.cell_area();
        }
    }
    DistortionReport {
        field: CellScalarField { grid: *g, values },
        lq_norm: acc.powf(1.0 / q),
    }
}

/// Ciarlet-Necas (global invertibility) diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct CiarletNecasReport {
    /// `int |det grad y| dx - |shoelace area of the deformed boundary|`.
    /// Positive residuals indicate self-overlap; admissible states give
    /// values on the order of quadrature error or below.
    pub residual: f64,
    pub integral_abs_det: f64,
    pub boundary_area: f64,
    /// True when the deformed boundary loop intersects itself.
    pub self_intersection: bool,
}

/// Measure the Ciarlet-Necas condition on a discrete deformation.
///
/// The deformed volume is computed as the shoelace area of the deformed
/// boundary loop. For an injective orientation-preserving map both sides
/// agree up to quadrature error; folds inflate `int |det|` relative to
/// the covered area and typically self-intersect the boundary image.
pub fn ciarlet_necas_residual(def: &DeformationField) -> CiarletNecasReport {
    let g = &def.grid;
    let mut integral_abs_det = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            integral_abs_det += def.cell_gradient(i, j).det().abs() * g.cell_area();
        }
    }
    let loop_nodes = g.boundary_loop();
    let pts: Vec<Vec2> = loop_nodes.iter().map(|&n| def.values[n]).collect();
    let mut twice_area = 0.0;
    for k in 0..pts.len() {
        let a = pts[k];
        let b = pts[(k + 1) % pts.len()];
        twice_area += a.cross(b);
    }
    let boundary_area = 0.5 * twice_area.abs();
    CiarletNecasReport {
        residual: integral_abs_det - boundary_area,
        integral_abs_det,
        boundary_area,
        self_intersection: boundary_self_intersects(&pts),
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) - 1e-14
        && p.x <= a.x.max(b.x) + 1e-14
        && p.y >= a.y.min(b.y) - 1e-14
        && p.y <= a.y.max(b.y) + 1e-14
}

fn segments_intersect(p1: Vec2, p2: Vec2, p3: Vec2, p4: Vec2) -> bool {
    let d1 = orient(p3, p4, p1);
    let d2 = orient(p3, p4, p2);
    let d3 = orient(p1, p2, p3);
    let d4 = orient(p1, p2, p4);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p3, p4, p1))
        || (d2 == 0.0 && on_segment(p3, p4, p2))
        || (d3 == 0.0 && on_segment(p1, p2, p3))
        || (d4 == 0.0 && on_segment(p1, p2, p4))
}

/// Quadratic scan for self-intersections of a closed polyline,
/// ignoring pairs of segments that share an endpoint.
fn boundary_self_intersects(pts: &[Vec2]) -> bool {
    let n = pts.len();
    for i in 0..n {
        let a1 = pts[i];
        let a2 = pts[(i + 1) % n];
        for j in i + 1..n {
            // Skip the shared-endpoint neighbors, including the wrap pair.
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let b1 = pts[j];
            let b2 = pts[(j + 1) % n];
            if segments_intersect(a1, a2, b1, b2) {
                return true;
            }
        }
    }
    false
}

/// Weak-form Piola identity residual `int_Omega cof(grad y) : grad psi`
/// for a smooth compactly supported test field `psi`.
///
/// The cofactor side uses the cell-center gradient (one midpoint per
/// cell); the test-function side integrates `grad psi` cellwise as edge
/// fluxes with a 2-point Gauss rule per edge. Every interior edge
/// integral is computed once and enters its two cells with opposite
/// signs, so for affine `y` (constant cofactor) the sum telescopes to
/// the boundary, where `psi` vanishes — the residual is exact there.
/// For smooth `y` the bilinear cofactor carries an O(h^2) consistency
/// error, which is what the residual measures.
///
/// `psi` must vanish on a margin of at least two cells at the boundary.
pub fn piola_residual(def: &DeformationField, psi: impl Fn(Vec2) -> Vec2) -> f64 {
    let g = &def.grid;
    let (hx, hy) = (g.hx(), g.hy());
    // 2-point Gauss positions on [0, 1].
    let qa = 0.5 - 0.5 / 3.0f64.sqrt();
    let qb = 0.5 + 0.5 / 3.0f64.sqrt();

    // Integral of psi over each vertical edge (column i, row j).
    let mut vert = vec![Vec2::ZERO; (g.nx + 1) * g.ny];
    for j in 0..g.ny {
        for i in 0..=g.nx {
            let x = i as f64 * hx;
            let y0 = j as f64 * hy;
            let s = psi(Vec2::new(x, y0 + qa * hy)) + psi(Vec2::new(x, y0 + qb * hy));
            vert[j * (g.nx + 1) + i] = s * (0.5 * hy);
        }
    }
    // Integral of psi over each horizontal edge (column i, row j).
    let mut horiz = vec![Vec2::ZERO; g.nx * (g.ny + 1)];
    for j in 0..=g.ny {
        for i in 0..g.nx {
            let x0 = i as f64 * hx;
            let y = j as f64 * hy;
            let s = psi(Vec2::new(x0 + qa * hx, y)) + psi(Vec2::new(x0 + qb * hx, y));
            horiz[j * g.nx + i] = s * (0.5 * hx);
        }
    }

    let mut acc = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let cof = def.cell_gradient(i, j).cof();
            // int_cell grad psi: column 0 from the vertical-edge fluxes,
            // column 1 from the horizontal ones.
            let dx = vert[j * (g.nx + 1) + i + 1] - vert[j * (g.nx + 1) + i];
            let dy = horiz[(j + 1) * g.nx + i] - horiz[j * g.nx + i];
            let e = Mat2::from_cols(dx, dy);
            acc += cof.ddot(&e);
        }
    }
    acc
}

/// A C^3 bump supported on the rectangle inset by 10% per side,
/// `psi = (b, -0.5 b)` with `b = prod ((t - a)(b - t))^4`, normalized to
/// peak height 1. Satisfies the margin precondition of
/// [`piola_residual`] on any grid with 20 or fewer cells per axis spare.
pub fn bump_test_function(grid: Grid) -> impl Fn(Vec2) -> Vec2 {
    let profile = move |t: f64, l: f64| -> f64 {
        let a = 0.1 * l;
        let b = 0.9 * l;
        if t <= a || t >= b {
            return 0.0;
        }
        let half = 0.5 * (b - a);
        ((t - a) * (b - t)).powi(4) / half.powi(8)
    };
    move |p: Vec2| {
        let b = profile(p.x, grid.lx) * profile(p.y, grid.ly);
        Vec2::new(b, -0.5 * b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_indexing_roundtrip() {
        let g = Grid::new(4, 3, 1.0, 2.0).unwrap();
        assert_eq!(g.num_nodes(), 20);
        assert_eq!(g.num_cells(), 12);
        for idx in 0..g.num_nodes() {
            let (i, j) = g.node_coords(idx);
            assert_eq!(g.node_index(i, j), idx);
        }
        assert_eq!(g.boundary_loop().len(), 2 * (g.nx + g.ny));
    }

    #[test]
    fn affine_gradient_is_exact() {
        let g = Grid::new(7, 5, 2.0, 1.0).unwrap();
        let a = Mat2::new(1.3, 0.4, -0.2, 0.9);
        let t = Vec2::new(0.3, -1.0);
        let def = DeformationField::affine(g, a, t);
        let grads = def.gradient();
        for f in &grads.values {
            assert!((*f - a).frob_sq() < 1e-28);
        }
    }

    #[test]
    fn det_cof_match_hand_values() {
        let g = Grid::new(2, 2, 1.0, 1.0).unwrap();
        let def = DeformationField::affine(g, Mat2::diag(2.0, 1.0), Vec2::ZERO);
        let (dets, cofs) = det_cof(&def.gradient());
        assert!((dets.get(0, 0) - 2.0).abs() < 1e-14);
        assert!((cofs.get(1, 1) - Mat2::diag(1.0, 2.0)).frob_sq() < 1e-28);
    }

    #[test]
    fn distortion_of_simple_maps() {
        let g = Grid::new(8, 8, 1.0, 1.0).unwrap();
        // Identity: K = 2 everywhere, so ||K||_q = 2 |Omega|^(1/q).
        let id = DeformationField::identity(g);
        let rep = distortion(&id, 3.0);
        assert!((rep.field.get(3, 3) - 2.0).abs() < 1e-13);
        assert!((rep.lq_norm - 2.0).abs() < 1e-13);
        // diag(2, 1): K = 5/2.
        let st = DeformationField::affine(g, Mat2::diag(2.0, 1.0), Vec2::ZERO);
        assert!((distortion(&st, 2.0).field.get(0, 0) - 2.5).abs() < 1e-13);
        // Degenerate map falls back to K = 1.
        let flat = DeformationField::affine(g, Mat2::diag(1.0, 0.0), Vec2::ZERO);
        assert_eq!(distortion(&flat, 2.0).field.get(4, 4), 1.0);
    }

    #[test]
    fn ciarlet_necas_accepts_injective_maps() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let def = DeformationField::from_map(g, |p| {
            Vec2::new(p.x + 0.1 * (p.y * 3.0).sin() * p.x * (1.0 - p.x), p.y)
        });
        let rep = ciarlet_necas_residual(&def);
        assert!(rep.residual.abs() < 1e-3, "residual {}", rep.residual);
        assert!(!rep.self_intersection);
    }

    #[test]
    fn ciarlet_necas_flags_the_fold() {
        // y = (|x1 - 1/2|, x2) folds the square onto half of itself:
        // int |det| stays 1 while the covered area is 1/2, and the
        // boundary image self-overlaps.
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let def = DeformationField::from_map(g, |p| Vec2::new((p.x - 0.5).abs(), p.y));
        let rep = ciarlet_necas_residual(&def);
        assert!(
            rep.residual >= 0.5 * g.area() - 1e-12,
            "residual {} too small for a fold",
            rep.residual
        );
        assert!(rep.self_intersection);
        assert!((rep.integral_abs_det - 1.0).abs() < 1e-12);
    }

    #[test]
    fn piola_residual_vanishes_for_affine_maps() {
        let g = Grid::new(24, 24, 1.0, 1.0).unwrap();
        let def = DeformationField::affine(g, Mat2::new(1.7, 0.3, -0.4, 1.1), Vec2::new(0.2, 0.1));
        let psi = bump_test_function(g);
        assert!(piola_residual(&def, psi).abs() < 1e-12);
    }

    #[test]
    fn piola_residual_second_order_for_smooth_maps() {
        let smooth = |p: Vec2| {
            Vec2::new(
                p.x + 0.1 * (2.0 * p.x + p.y).sin(),
                p.y + 0.08 * (p.x - 1.5 * p.y).cos(),
            )
        };
        let mut residuals = Vec::new();
        for n in [16usize, 32, 64] {
            let g = Grid::new(n, n, 1.0, 1.0).unwrap();
            let def = DeformationField::from_map(g, smooth);
            residuals.push(piola_residual(&def, bump_test_function(g)).abs());
        }
        let order1 = (residuals[0] / residuals[1]).log2();
        let order2 = (residuals[1] / residuals[2]).log2();
        assert!(order1 > 1.9, "order {order1} from {residuals:?}");
        assert!(order2 > 1.9, "order {order2} from {residuals:?}");
    }

    #[test]
    fn interpolation_reproduces_bilinear_fields() {
        let g = Grid::new(5, 4, 1.0, 1.0).unwrap();
        let f = NodeVectorField::from_fn(g, |p| Vec2::new(2.0 * p.x - p.y, p.x * 0.5 + 3.0));
        let p = Vec2::new(0.37, 0.81);
        let v = f.value_at(p);
        assert!((v.x - (2.0 * p.x - p.y)).abs() < 1e-14);
        assert!((v.y - (p.x * 0.5 + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn boundary_dirichlet_mask() {
        let g = Grid::new(3, 3, 1.0, 1.0).unwrap();
        let def = DeformationField::identity(g);
        let count = def.dirichlet.iter().filter(|&&b| b).count();
        assert_eq!(count, 12);
        assert!(!def.dirichlet[g.node_index(1, 1)]);
    }
}
