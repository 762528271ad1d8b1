//! Direct solvers by fast diagonalisation.
//!
//! The ghost-node second difference with homogeneous Neumann ends is
//! diagonalised by the DCT-I vectors `cos(kπ i/n)`, the Dirichlet one by the
//! DST-I vectors `sin(kπ i/n)`, both with eigenvalues `4 n² sin²(kπ/2n)`.
//! Transforming along `y` leaves one tridiagonal system per mode along `z`,
//! where the `z` boundary rows (Neumann, Robin, Dirichlet) are assembled exactly.

use ndarray::{s, Array2, ArrayViewMut1};
use std::f64::consts::PI;

use super::{Field2D, Grid2D, GridError};

/// Thomas-factorised tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    sub: Vec<f64>,
    sup_prime: Vec<f64>,
    inv_den: Vec<f64>,
}

impl Tridiagonal {
    /// `sub[0]` and `sup[m-1]` are ignored.
    pub fn factor(sub: &[f64], diag: &[f64], sup: &[f64]) -> Self {
        let m = diag.len();
        assert!(sub.len() == m && sup.len() == m && m > 0);
        let mut sup_prime = vec![0.0; m];
        let mut inv_den = vec![0.0; m];
        let mut prev = 0.0;
        for i in 0..m {
            let den = diag[i] - if i > 0 { sub[i] * prev } else { 0.0 };
            inv_den[i] = 1.0 / den;
            prev = if i + 1 < m { sup[i] * inv_den[i] } else { 0.0 };
            sup_prime[i] = prev;
        }
        Self { sub: sub.to_vec(), sup_prime, inv_den }
    }

    pub fn len(&self) -> usize {
        self.inv_den.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_den.is_empty()
    }

    pub fn solve_in_place(&self, mut x: ArrayViewMut1<f64>) {
        let m = self.len();
        debug_assert_eq!(x.len(), m);
        x[0] *= self.inv_den[0];
        for i in 1..m {
            x[i] = (x[i] - self.sub[i] * x[i - 1]) * self.inv_den[i];
        }
        for i in (0..m - 1).rev() {
            x[i] -= self.sup_prime[i] * x[i + 1];
        }
    }
}

/// DCT-I basis on `n` cells: `f_i = Σ_k c_k cos(kπ i/n)`.
#[derive(Debug, Clone)]
pub struct CosineBasis {
    n: usize,
    synthesis: Array2<f64>,
    analysis: Array2<f64>,
}

impl CosineBasis {
    pub fn new(n: usize) -> Self {
        let nf = n as f64;
        let synthesis = Array2::from_shape_fn((n + 1, n + 1), |(i, k)| cos_node(k * i, n));
        let analysis = Array2::from_shape_fn((n + 1, n + 1), |(k, i)| {
            let wi = if i == 0 || i == n { 0.5 } else { 1.0 };
            let ek = if k == 0 || k == n { 0.5 } else { 1.0 };
            2.0 / nf * ek * wi * cos_node(k * i, n)
        });
        Self { n, synthesis, analysis }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nodal values (along axis 0) to mode coefficients.
    pub fn analyse(&self, values: &Array2<f64>) -> Array2<f64> {
        self.analysis.dot(values)
    }

    pub fn synthesise(&self, coeffs: &Array2<f64>) -> Array2<f64> {
        self.synthesis.dot(coeffs)
    }

    pub fn analyse_vec(&self, values: &ndarray::Array1<f64>) -> ndarray::Array1<f64> {
        self.analysis.dot(values)
    }

    pub fn synthesise_vec(&self, coeffs: &ndarray::Array1<f64>) -> ndarray::Array1<f64> {
        self.synthesis.dot(coeffs)
    }

    /// Eigenvalue of `-d²/dy²` (ghost-node Neumann) for mode `k`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        discrete_eigenvalue(k, self.n)
    }
}

/// DST-I basis on the `n-1` interior nodes: `f_i = Σ_k s_k sin(kπ i/n)`, `k = 1..n-1`.
#[derive(Debug, Clone)]
pub struct SineBasis {
    n: usize,
    synthesis: Array2<f64>,
    analysis: Array2<f64>,
}

impl SineBasis {
    pub fn new(n: usize) -> Self {
        let m = n - 1;
        let synthesis = Array2::from_shape_fn((m, m), |(i, k)| sin_node((k + 1) * (i + 1), n));
        let analysis = synthesis.t().mapv(|v| 2.0 / n as f64 * v);
        Self { n, synthesis, analysis }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Interior values (rows `1..n`) to coefficients of modes `1..n`.
    pub fn analyse(&self, values: &Array2<f64>) -> Array2<f64> {
        self.analysis.dot(values)
    }

    pub fn synthesise(&self, coeffs: &Array2<f64>) -> Array2<f64> {
        self.synthesis.dot(coeffs)
    }

    /// Eigenvalue of `-d²/dy²` (Dirichlet) for mode `k >= 1`.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        discrete_eigenvalue(k, self.n)
    }
}

/// `cos(π m / n)` with the argument reduced exactly on the integer lattice.
fn cos_node(m: usize, n: usize) -> f64 {
    let r = m % (2 * n);
    (PI * r as f64 / n as f64).cos()
}

fn sin_node(m: usize, n: usize) -> f64 {
    let r = m % (2 * n);
    if r == 0 || r == n {
        return 0.0;
    }
    (PI * r as f64 / n as f64).sin()
}

/// Eigenvalue `4n² sin²(kπ/2n)` of the negated second difference on `n` cells.
pub fn discrete_eigenvalue(k: usize, n: usize) -> f64 {
    let nf = n as f64;
    4.0 * nf * nf * (PI * k as f64 / (2.0 * nf)).sin().powi(2)
}

/// Boundary treatment along `z` for the implicit diffusion operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZBoundary {
    /// `∂_z f = 0` at both ends.
    Neumann,
    /// `∂_z f = 0` at `z = 0`, `∂_z f = g - coefficient·f` at `z = 1` (the `-f` part is implicit).
    RobinTop { coefficient: f64 },
    /// `f = 0` on the whole boundary (also in `y`).
    Dirichlet,
}

#[derive(Debug, Clone)]
enum YBasis {
    Cosine(CosineBasis),
    Sine(SineBasis),
}

/// Direct solver for `(I - τ L) x = r`, `τ = dt·κ`, `L` the ghost-node Laplacian.
///
/// For `Neumann`/`RobinTop`, `y` is Neumann. For `Dirichlet`, boundary rows of
/// the result are zero and only interior rows of `r` are read.
#[derive(Debug, Clone)]
pub struct ImplicitDiffusion {
    grid: Grid2D,
    tau: f64,
    boundary: ZBoundary,
    basis: YBasis,
    systems: Vec<Tridiagonal>,
}

impl ImplicitDiffusion {
    pub fn new(grid: Grid2D, tau: f64, boundary: ZBoundary) -> Self {
        let (ny, nz) = (grid.ny(), grid.nz());
        let dz = grid.dz();
        let off = -tau / (dz * dz);
        match boundary {
            ZBoundary::Dirichlet => {
                let basis = SineBasis::new(ny);
                let m = nz - 1;
                let systems = (1..ny)
                    .map(|k| {
                        let d = 1.0 + tau * (basis.eigenvalue(k) + 2.0 / (dz * dz));
                        Tridiagonal::factor(&vec![off; m], &vec![d; m], &vec![off; m])
                    })
                    .collect();
                Self { grid, tau, boundary, basis: YBasis::Sine(basis), systems }
            }
            ZBoundary::Neumann | ZBoundary::RobinTop { .. } => {
                let basis = CosineBasis::new(ny);
                let robin = match boundary {
                    ZBoundary::RobinTop { coefficient } => coefficient,
                    _ => 0.0,
                };
                let m = nz + 1;
                let systems = (0..=ny)
                    .map(|k| {
                        let d = 1.0 + tau * (basis.eigenvalue(k) + 2.0 / (dz * dz));
                        let mut diag = vec![d; m];
                        let mut sub = vec![off; m];
                        let mut sup = vec![off; m];
                        sup[0] = 2.0 * off;
                        sub[m - 1] = 2.0 * off;
                        diag[m - 1] += tau * 2.0 * robin / dz;
                        Tridiagonal::factor(&sub, &diag, &sup)
                    })
                    .collect();
                Self { grid, tau, boundary, basis: YBasis::Cosine(basis), systems }
            }
        }
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn boundary(&self) -> ZBoundary {
        self.boundary
    }

    pub fn solve(&self, rhs: &Array2<f64>) -> Array2<f64> {
        let (ny, nz) = (self.grid.ny(), self.grid.nz());
        match &self.basis {
            YBasis::Cosine(basis) => {
                let mut coeffs = basis.analyse(rhs);
                for (k, sys) in self.systems.iter().enumerate() {
                    sys.solve_in_place(coeffs.row_mut(k));
                }
                basis.synthesise(&coeffs)
            }
            YBasis::Sine(basis) => {
                let interior = rhs.slice(s![1..ny, 1..nz]).to_owned();
                let mut coeffs = basis.analyse(&interior);
                for (k, sys) in self.systems.iter().enumerate() {
                    sys.solve_in_place(coeffs.row_mut(k));
                }
                let inner = basis.synthesise(&coeffs);
                let mut out = Array2::zeros(self.grid.shape());
                out.slice_mut(s![1..ny, 1..nz]).assign(&inner);
                out
            }
        }
    }
}

/// Direct Dirichlet Poisson solver for `-Δψ = q` with the 5-point stencil.
#[derive(Debug, Clone)]
pub struct PoissonSolver {
    grid: Grid2D,
    basis: SineBasis,
    systems: Vec<Tridiagonal>,
}

impl PoissonSolver {
    pub fn new(grid: Grid2D) -> Self {
        let (ny, nz) = (grid.ny(), grid.nz());
        let dz = grid.dz();
        let basis = SineBasis::new(ny);
        let m = nz - 1;
        let off = -1.0 / (dz * dz);
        let systems = (1..ny)
            .map(|k| {
                let d = basis.eigenvalue(k) + 2.0 / (dz * dz);
                Tridiagonal::factor(&vec![off; m], &vec![d; m], &vec![off; m])
            })
            .collect();
        Self { grid, basis, systems }
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    /// Unchecked solve; boundary values of `q` are ignored.
    pub fn solve_array(&self, q: &Array2<f64>) -> Array2<f64> {
        let (ny, nz) = (self.grid.ny(), self.grid.nz());
        let interior = q.slice(s![1..ny, 1..nz]).to_owned();
        let mut coeffs = self.basis.analyse(&interior);
        for (k, sys) in self.systems.iter().enumerate() {
            sys.solve_in_place(coeffs.row_mut(k));
        }
        let inner = self.basis.synthesise(&coeffs);
        let mut out = Array2::zeros(self.grid.shape());
        out.slice_mut(s![1..ny, 1..nz]).assign(&inner);
        out
    }

    /// Solve and verify the interior residual `max |-Δψ - q| <= 1e-10 · max(1, |q|_∞)`.
    pub fn solve(&self, q: &Field2D) -> Result<Field2D, GridError> {
        if q.grid() != self.grid {
            return Err(GridError::Mismatch(format!("{:?} vs {:?}", q.grid(), self.grid)));
        }
        let psi = Field2D::from_array(self.grid, self.solve_array(&q.values))?;
        let residual = poisson_residual(&psi, q);
        if !(residual <= 1e-10 * q.max_abs().max(1.0)) {
            return Err(GridError::NotConverged { residual });
        }
        Ok(psi)
    }
}

/// Max-norm interior residual of `-Δψ = q`.
pub(crate) fn poisson_residual(psi: &Field2D, q: &Field2D) -> f64 {
    let g = psi.grid();
    let (dy2, dz2) = (g.dy().powi(2), g.dz().powi(2));
    let p = &psi.values;
    let mut worst = 0.0_f64;
    for i in 1..g.ny() {
        for j in 1..g.nz() {
            let lap = (p[[i + 1, j]] - 2.0 * p[[i, j]] + p[[i - 1, j]]) / dy2
                + (p[[i, j + 1]] - 2.0 * p[[i, j]] + p[[i, j - 1]]) / dz2;
            worst = worst.max((-lap - q.values[[i, j]]).abs());
        }
    }
    worst
}
