//! Node-centred finite differences on the unit square and the unit interval.
//!
//! Fields live on the `(ny+1) x (nz+1)` node lattice `(y_i, z_j) = (i dy, j dz)`.
//! Boundary conditions are applied through ghost nodes, and every integral uses
//! the trapezoidal rule, which makes the ghost-node Laplacians self-adjoint with
//! respect to the discrete `L2` inner product.

mod spectral;
mod stencil;

pub use spectral::{discrete_eigenvalue, CosineBasis, ImplicitDiffusion, PoissonSolver, SineBasis, Tridiagonal, ZBoundary};
pub use stencil::{arakawa_jacobian, diffusion_apply_1d, diffusion_apply_2d, BoundarySpec};

use ndarray::{Array1, Array2};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid must have at least 4 cells per direction, got {ny} x {nz}")]
    TooCoarse { ny: usize, nz: usize },
    #[error("grid mismatch: {0}")]
    Mismatch(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("linear solve did not converge (residual {residual:e})")]
    NotConverged { residual: f64 },
}

/// Uniform node-centred grid on `D = [0,1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid2D {
    ny: usize,
    nz: usize,
}

impl Grid2D {
    pub fn new(ny: usize, nz: usize) -> Result<Self, GridError> {
        if ny < 4 || nz < 4 {
            return Err(GridError::TooCoarse { ny, nz });
        }
        Ok(Self { ny, nz })
    }

    /// Square grid, panics below 4 cells.
    pub fn square(n: usize) -> Self {
        Self::new(n, n).expect("square grid needs n >= 4")
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn dy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn dz(&self) -> f64 {
        1.0 / self.nz as f64
    }

    pub fn y(&self, i: usize) -> f64 {
        i as f64 / self.ny as f64
    }

    pub fn z(&self, j: usize) -> f64 {
        j as f64 / self.nz as f64
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.ny + 1, self.nz + 1)
    }

    pub fn node_count(&self) -> usize {
        (self.ny + 1) * (self.nz + 1)
    }
}

/// Trapezoidal weights (without the mesh width) for `n` cells.
pub(crate) fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i == n {
        0.5
    } else {
        1.0
    }
}

/// Nodal values on `[0,1]` with `n` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    pub values: Array1<f64>,
}

impl Field1D {
    pub fn zeros(n: usize) -> Self {
        Self { values: Array1::zeros(n + 1) }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: Array1::from_elem(n + 1, c) }
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = 1.0 / n as f64;
        Self { values: Array1::from_shape_fn(n + 1, |i| f(i as f64 * h)) }
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() < 2 {
            return Err(GridError::Argument("a 1-D field needs at least two nodes".into()));
        }
        Ok(Self { values: Array1::from(values) })
    }

    /// Number of cells.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dy(&self) -> f64 {
        1.0 / self.n() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn integral(&self) -> f64 {
        let n = self.n();
        self.values.iter().enumerate().map(|(i, v)| trapezoid_weight(i, n) * v).sum::<f64>() * self.dy()
    }

    pub fn mean(&self) -> f64 {
        self.integral()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn dot(&self, other: &Field1D) -> f64 {
        let n = self.n();
        self.values
            .iter()
            .zip(other.values.iter())
            .enumerate()
            .map(|(i, (a, b))| trapezoid_weight(i, n) * a * b)
            .sum::<f64>()
            * self.dy()
    }

    pub fn norms(&self) -> FieldNorms {
        let h = self.dy();
        let grad_sq = self.values.windows(2).into_iter().map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / h;
        FieldNorms { l2_sq: self.dot(self), grad_sq }
    }
}

/// Nodal values on the grid lattice, indexed `[i, j]` with `i` along `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: Grid2D,
    pub values: Array2<f64>,
}

impl Field2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, values: Array2::zeros(grid.shape()) }
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        Self { grid, values: Array2::from_elem(grid.shape(), c) }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        Self { grid, values: Array2::from_shape_fn(grid.shape(), |(i, j)| f(grid.y(i), grid.z(j))) }
    }

    pub fn from_array(grid: Grid2D, values: Array2<f64>) -> Result<Self, GridError> {
        if values.dim() != grid.shape() {
            return Err(GridError::Mismatch(format!(
                "array shape {:?} does not match grid {:?}",
                values.dim(),
                grid.shape()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_same_grid(&self, other: &Field2D) -> Result<(), GridError> {
        if self.grid != other.grid {
            return Err(GridError::Mismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub fn dot(&self, other: &Field2D) -> f64 {
        let (ny, nz) = (self.grid.ny, self.grid.nz);
        let mut acc = 0.0;
        for ((i, j), a) in self.values.indexed_iter() {
            acc += trapezoid_weight(i, ny) * trapezoid_weight(j, nz) * a * other.values[[i, j]];
        }
        acc * self.grid.dy() * self.grid.dz()
    }

    pub fn integral(&self) -> f64 {
        let (ny, nz) = (self.grid.ny, self.grid.nz);
        let mut acc = 0.0;
        for ((i, j), a) in self.values.indexed_iter() {
            acc += trapezoid_weight(i, ny) * trapezoid_weight(j, nz) * a;
        }
        acc * self.grid.dy() * self.grid.dz()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Trapezoidal `L2` norm squared and the edge-difference gradient norm squared.
    ///
    /// The gradient norm equals `-<L f, f>` for the Neumann ghost-node Laplacian `L`.
    pub fn norms(&self) -> FieldNorms {
        let g = self.grid;
        let (ny, nz) = (g.ny, g.nz);
        let (dy, dz) = (g.dy(), g.dz());
        let v = &self.values;
        let mut gy = 0.0;
        for i in 0..ny {
            for j in 0..=nz {
                gy += trapezoid_weight(j, nz) * (v[[i + 1, j]] - v[[i, j]]).powi(2);
            }
        }
        let mut gz = 0.0;
        for i in 0..=ny {
            let w = trapezoid_weight(i, ny);
            for j in 0..nz {
                gz += w * (v[[i, j + 1]] - v[[i, j]]).powi(2);
            }
        }
        FieldNorms { l2_sq: self.dot(self), grad_sq: gy * dz / dy + gz * dy / dz }
    }

    /// Values at `z = 1`.
    pub fn trace_top(&self) -> Field1D {
        Field1D { values: self.values.column(self.grid.nz).to_owned() }
    }

    /// Centred `d/dy` at interior nodes, one-sided at `y = 0, 1`.
    pub fn d_dy(&self) -> Field2D {
        let g = self.grid;
        let (ny, nz) = (g.ny, g.nz);
        let h = g.dy();
        let v = &self.values;
        let mut out = Array2::zeros(g.shape());
        for i in 0..=ny {
            for j in 0..=nz {
                out[[i, j]] = if i == 0 {
                    (v[[1, j]] - v[[0, j]]) / h
                } else if i == ny {
                    (v[[ny, j]] - v[[ny - 1, j]]) / h
                } else {
                    (v[[i + 1, j]] - v[[i - 1, j]]) / (2.0 * h)
                };
            }
        }
        Field2D { grid: g, values: out }
    }
}

/// `L2` norm squared and gradient (V-seminorm) squared.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldNorms {
    pub l2_sq: f64,
    pub grad_sq: f64,
}

impl std::ops::Add for FieldNorms {
    type Output = FieldNorms;
    fn add(self, o: FieldNorms) -> FieldNorms {
        FieldNorms { l2_sq: self.l2_sq + o.l2_sq, grad_sq: self.grad_sq + o.grad_sq }
    }
}

/// Restriction of a field to the top boundary row.
pub fn trace_top(f: &Field2D) -> Field1D {
    f.trace_top()
}

/// Dirichlet Poisson solve `-Δψ = q`, `ψ = 0` on the boundary.
pub fn poisson_solve_dirichlet(q: &Field2D) -> Result<Field2D, GridError> {
    PoissonSolver::new(q.grid()).solve(q)
}
