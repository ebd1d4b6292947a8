//! Square cell-centered grids, scalar and face fields, and the difference
//! operators of the scheme.
//!
//! Cells are indexed `(i, j)` with `i` along the first axis and `j` along the
//! second, both in `0..n_cells`. Storage is row-major in `j`, so a row of the
//! backing vector is one line of constant `j`. Values outside the grid are
//! produced on the fly by [`BoundaryCondition::ghost_index`]; no halo is
//! stored.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Uniform square grid `[lo, hi]^2` with `n_cells` cells per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    lo: f64,
    hi: f64,
    n_cells: usize,
    h: f64,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n_cells: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::InvalidGrid(format!(
                "domain [{lo}, {hi}] must be finite and non-empty"
            )));
        }
        if n_cells < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells per axis, got {n_cells}"
            )));
        }
        let h = (hi - lo) / n_cells as f64;
        Ok(Self { lo, hi, n_cells, h })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Mesh width.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n_cells * self.n_cells
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Area of one cell.
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// Midpoint coordinate of cell index `i` along either axis.
    pub fn midpoint(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.h
    }

    /// Same grid with `factor` times fewer cells per axis.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.n_cells.is_multiple_of(factor) {
            return Err(Error::IncompatibleGrids(format!(
                "factor {factor} does not divide {} cells",
                self.n_cells
            )));
        }
        Self::new(self.lo, self.hi, self.n_cells / factor)
    }

    /// Same grid with `factor` times more cells per axis.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        Self::new(self.lo, self.hi, self.n_cells * factor)
    }

    #[inline]
    pub(crate) fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n_cells + i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    /// Homogeneous Neumann: the ghost cell mirrors its interior neighbor.
    Neumann,
    /// Ghost cells wrap around with period `n_cells`.
    Periodic,
}

impl BoundaryCondition {
    /// Storage index along one axis for a logical index that may sit one cell
    /// outside `0..n`.
    #[inline]
    pub fn ghost_index(self, k: isize, n: usize) -> usize {
        let n = n as isize;
        debug_assert!(k >= -1 && k <= n);
        match self {
            BoundaryCondition::Neumann => k.clamp(0, n - 1) as usize,
            BoundaryCondition::Periodic => k.rem_euclid(n) as usize,
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::Neumann => f.write_str("neumann"),
            BoundaryCondition::Periodic => f.write_str("periodic"),
        }
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "neumann" => Ok(BoundaryCondition::Neumann),
            "periodic" => Ok(BoundaryCondition::Periodic),
            other => Err(Error::Config(format!("unknown boundary condition `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Cell-centered values on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Wraps row-major values (`j` outer, `i` inner).
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let n = grid.n_cells();
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..n {
            for i in 0..n {
                values.push(f(i, j));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    /// Value at `(i, j)` where either index may lie one cell outside the grid.
    #[inline]
    pub fn ghost(&self, i: isize, j: isize, bc: BoundaryCondition) -> f64 {
        let n = self.grid.n_cells();
        let gi = bc.ghost_index(i, n);
        let gj = bc.ghost_index(j, n);
        self.values[self.grid.idx(gi, gj)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Integral of the piecewise constant interpolant, `h^2 * sum`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_area() * self.sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(i, j)` of the smallest value.
    pub fn argmin(&self) -> (usize, usize) {
        self.unravel(
            self.values
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc })
                .0,
        )
    }

    /// `(i, j)` of the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        self.unravel(
            self.values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc })
                .0,
        )
    }

    /// Euclidean norm of the raw value vector (no `h` weighting).
    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `L^1` norm of the piecewise constant interpolant.
    pub fn norm_l1(&self) -> f64 {
        self.grid.cell_area() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn dot(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    fn unravel(&self, k: usize) -> (usize, usize) {
        let n = self.grid.n_cells();
        (k % n, k / n)
    }
}

impl Index<(usize, usize)> for ScalarField {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[self.grid.idx(i, j)]
    }
}

impl IndexMut<(usize, usize)> for ScalarField {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        let k = self.grid.idx(i, j);
        &mut self.values[k]
    }
}

/// Values on cell faces.
///
/// `x` holds the vertical faces: face `f` in `0..=n` lies between cells
/// `f - 1` and `f` along the first axis, so face `f` is `i + 1/2` for cell
/// `i = f - 1`. `y` holds the horizontal faces with the roles of the axes
/// swapped. Under periodic conditions face `0` and face `n` coincide and carry
/// identical values.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    grid: GridSpec,
    x: Vec<f64>,
    y: Vec<f64>,
}

/// Face-centered velocities `u_{i+1/2,j}` (in `x`) and `v_{i,j+1/2}` (in `y`).
pub type FaceVelocities = FaceField;

impl FaceField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.n_cells();
        Self {
            grid,
            x: vec![0.0; (n + 1) * n],
            y: vec![0.0; n * (n + 1)],
        }
    }

    /// Builds both components from closures over `(face, cell)` pairs:
    /// `fx(f, j)` for vertical faces and `fy(i, f)` for horizontal ones.
    pub fn from_fns(
        grid: GridSpec,
        mut fx: impl FnMut(usize, usize) -> f64,
        mut fy: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let n = grid.n_cells();
        let mut x = Vec::with_capacity((n + 1) * n);
        for j in 0..n {
            for f in 0..=n {
                x.push(fx(f, j));
            }
        }
        let mut y = Vec::with_capacity(n * (n + 1));
        for f in 0..=n {
            for i in 0..n {
                y.push(fy(i, f));
            }
        }
        Self { grid, x, y }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Vertical face `f` (between cells `f-1` and `f`) in row `j`.
    #[inline]
    pub fn x_face(&self, f: usize, j: usize) -> f64 {
        self.x[j * (self.grid.n_cells() + 1) + f]
    }

    /// Horizontal face `f` (between cells `f-1` and `f`) in column `i`.
    #[inline]
    pub fn y_face(&self, i: usize, f: usize) -> f64 {
        self.y[f * self.grid.n_cells() + i]
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x
    }

    pub fn y_values(&self) -> &[f64] {
        &self.y
    }

    /// Largest absolute value over every face of both components.
    pub fn max_abs(&self) -> f64 {
        self.x.iter().chain(&self.y).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }
}

/// Forward difference `D^+` along `axis`.
pub fn diff_plus(field: &ScalarField, axis: Axis, bc: BoundaryCondition) -> ScalarField {
    let h = field.grid().h();
    ScalarField::from_fn(*field.grid(), |i, j| {
        let (i, j) = (i as isize, j as isize);
        let next = match axis {
            Axis::X => field.ghost(i + 1, j, bc),
            Axis::Y => field.ghost(i, j + 1, bc),
        };
        (next - field.ghost(i, j, bc)) / h
    })
}

/// Backward difference `D^-` along `axis`.
pub fn diff_minus(field: &ScalarField, axis: Axis, bc: BoundaryCondition) -> ScalarField {
    let h = field.grid().h();
    ScalarField::from_fn(*field.grid(), |i, j| {
        let (i, j) = (i as isize, j as isize);
        let prev = match axis {
            Axis::X => field.ghost(i - 1, j, bc),
            Axis::Y => field.ghost(i, j - 1, bc),
        };
        (field.ghost(i, j, bc) - prev) / h
    })
}

/// Gradient on faces: `x` holds `D_1^+ f_{i,j}` at face `i+1/2`, `y` holds
/// `D_2^+ f_{i,j}` at face `j+1/2`, boundary faces included.
pub fn face_gradient(field: &ScalarField, bc: BoundaryCondition) -> FaceField {
    let h = field.grid().h();
    FaceField::from_fns(
        *field.grid(),
        |f, j| {
            let (f, j) = (f as isize, j as isize);
            (field.ghost(f, j, bc) - field.ghost(f - 1, j, bc)) / h
        },
        |i, f| {
            let (i, f) = (i as isize, f as isize);
            (field.ghost(i, f, bc) - field.ghost(i, f - 1, bc)) / h
        },
    )
}

/// Cell divergence `D_1^- F^{(1)} + D_2^- F^{(2)}` of a face field.
pub fn face_divergence(faces: &FaceField) -> ScalarField {
    let h = faces.grid().h();
    ScalarField::from_fn(*faces.grid(), |i, j| {
        (faces.x_face(i + 1, j) - faces.x_face(i, j)) / h
            + (faces.y_face(i, j + 1) - faces.y_face(i, j)) / h
    })
}

/// Five-point Laplacian `div_h^- grad_h^+` with ghost values from `bc`.
///
/// The floating-point evaluation order matches `face_divergence(face_gradient(f))`
/// and the periodic compositions of [`diff_minus`] and [`diff_plus`] exactly.
pub fn laplacian(field: &ScalarField, bc: BoundaryCondition) -> ScalarField {
    let h = field.grid().h();
    ScalarField::from_fn(*field.grid(), |i, j| {
        let (i, j) = (i as isize, j as isize);
        let c = field.ghost(i, j, bc);
        let east = (field.ghost(i + 1, j, bc) - c) / h;
        let west = (c - field.ghost(i - 1, j, bc)) / h;
        let north = (field.ghost(i, j + 1, bc) - c) / h;
        let south = (c - field.ghost(i, j - 1, bc)) / h;
        (east - west) / h + (north - south) / h
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// 2x2 tensor Gauss-Legendre rule, exact for bicubics.
    #[default]
    Gauss2x2,
    /// One point at the cell midpoint.
    Midpoint,
}

/// Cell averages of `f` approximated by `quadrature`.
pub fn cell_average_init(
    f: impl Fn(f64, f64) -> f64,
    grid: GridSpec,
    quadrature: Quadrature,
) -> Result<ScalarField> {
    let h = grid.h();
    let offset = h / (2.0 * 3f64.sqrt());
    let nodes: &[(f64, f64, f64)] = match quadrature {
        Quadrature::Midpoint => &[(0.0, 0.0, 1.0)],
        Quadrature::Gauss2x2 => &[
            (-offset, -offset, 0.25),
            (offset, -offset, 0.25),
            (-offset, offset, 0.25),
            (offset, offset, 0.25),
        ],
    };
    let n = grid.n_cells();
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..n {
        let yc = grid.midpoint(j);
        for i in 0..n {
            let xc = grid.midpoint(i);
            let mut acc = 0.0;
            for &(dx, dy, w) in nodes {
                let (x, y) = (xc + dx, yc + dy);
                let v = f(x, y);
                if !v.is_finite() {
                    return Err(Error::NonFiniteInit { x, y });
                }
                acc += w * v;
            }
            values.push(acc);
        }
    }
    ScalarField::from_values(grid, values)
}

/// Block average over `factor x factor` groups of cells. Conserves the
/// integral exactly up to rounding.
pub fn restrict(fine: &ScalarField, factor: usize) -> Result<ScalarField> {
    let coarse = fine.grid().coarsen(factor)?;
    let scale = 1.0 / (factor * factor) as f64;
    Ok(ScalarField::from_fn(coarse, |ci, cj| {
        let mut acc = 0.0;
        for dj in 0..factor {
            for di in 0..factor {
                acc += fine[(ci * factor + di, cj * factor + dj)];
            }
        }
        acc * scale
    }))
}
