use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::grid::{Field1D, Field2D, FieldNorms, Grid2D, PoissonSolver};

use super::ModelError;

/// `u = (Θ, q, T, S)` with the derived streamfunction.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub theta: Field1D,
    pub q: Field2D,
    pub t_ocean: Field2D,
    pub s_ocean: Field2D,
    pub psi: Field2D,
    pub time: f64,
}

/// `v = u - Z` with `Z = (z, 0, 0, 0)`: only the atmosphere component differs.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedState {
    /// `Θ̃ = Θ - z`.
    pub theta: Field1D,
    pub q: Field2D,
    pub t_ocean: Field2D,
    pub s_ocean: Field2D,
    pub psi: Field2D,
    pub time: f64,
}

/// Subtracts the trapezoidal mean so that `∫_D S dD = 0`.
pub fn remove_mean(s: &mut Field2D) {
    let m = s.integral();
    s.values.mapv_inplace(|v| v - m);
}

impl TransformedState {
    /// Builds a state from `(Θ̃, q, T, S)`; `ψ` is solved, `S` is mean-subtracted.
    pub fn new(
        theta: Field1D,
        q: Field2D,
        t_ocean: Field2D,
        mut s_ocean: Field2D,
        time: f64,
    ) -> Result<Self, ModelError> {
        let grid = q.grid();
        if t_ocean.grid() != grid || s_ocean.grid() != grid || theta.n() != grid.ny() {
            return Err(ModelError::Invalid("state fields live on different grids".into()));
        }
        remove_mean(&mut s_ocean);
        let mut q = q;
        zero_boundary(&mut q.values);
        let psi = Field2D::from_array(grid, PoissonSolver::new(grid).solve_array(&q.values))?;
        Ok(Self { theta, q, t_ocean, s_ocean, psi, time })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            theta: Field1D::zeros(grid.ny()),
            q: Field2D::zeros(grid),
            t_ocean: Field2D::zeros(grid),
            s_ocean: Field2D::zeros(grid),
            psi: Field2D::zeros(grid),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> Grid2D {
        self.q.grid()
    }

    /// Smooth random state from low cosine (Θ̃, T, S) and sine (q) modes.
    ///
    /// Coefficients are uniform in `[-1, 1]` and decay like `1/(1 + k_y + k_z)`.
    pub fn random_smooth(grid: Grid2D, seed: u64, modes: usize) -> Result<Self, ModelError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coef = |k: usize, l: usize| rng.random_range(-1.0..=1.0) / (1.0 + k as f64 + l as f64);
        let mut theta = Field1D::zeros(grid.ny());
        let mut fields = [Field2D::zeros(grid), Field2D::zeros(grid), Field2D::zeros(grid)];
        for k in 0..modes {
            let c = coef(k, 0);
            for (i, v) in theta.values.iter_mut().enumerate() {
                *v += c * (k as f64 * PI * grid.y(i)).cos();
            }
        }
        for (idx, field) in fields.iter_mut().enumerate() {
            for k in 0..modes {
                for l in 0..modes {
                    let c = coef(k, l);
                    let (k, l) = if idx == 0 { (k + 1, l + 1) } else { (k, l) };
                    let basis = |y: f64, z: f64| {
                        if idx == 0 {
                            (k as f64 * PI * y).sin() * (l as f64 * PI * z).sin()
                        } else {
                            (k as f64 * PI * y).cos() * (l as f64 * PI * z).cos()
                        }
                    };
                    field.values.indexed_iter_mut().for_each(|((i, j), v)| *v += c * basis(grid.y(i), grid.z(j)));
                }
            }
        }
        let [q, t, s] = fields;
        Self::new(theta, q, t, s, 0.0)
    }

    /// Uniformly rescales all components (ψ rescales with q).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.theta.values *= factor;
        out.q.values *= factor;
        out.t_ocean.values *= factor;
        out.s_ocean.values *= factor;
        out.psi.values *= factor;
        out
    }

    /// Norms of `ṽ = (Θ̃, T, S)`.
    pub fn htilde(&self) -> FieldNorms {
        self.theta.norms() + self.t_ocean.norms() + self.s_ocean.norms()
    }

    /// Composite `H` norm² and `V` seminorm² of `(Θ̃, q, T, S)`.
    pub fn composite(&self) -> FieldNorms {
        self.htilde() + self.q.norms()
    }

    pub fn s_mass(&self) -> f64 {
        self.s_ocean.integral()
    }

    pub fn is_finite(&self) -> Option<&'static str> {
        if !self.theta.is_finite() {
            Some("theta")
        } else if !self.q.is_finite() {
            Some("q")
        } else if !self.t_ocean.is_finite() {
            Some("T")
        } else if !self.s_ocean.is_finite() {
            Some("S")
        } else if !self.psi.is_finite() {
            Some("psi")
        } else {
            None
        }
    }

    /// `‖self - other‖²_H` over `(Θ̃, q, T, S)`.
    pub fn distance_sq(&self, other: &TransformedState) -> f64 {
        let d1 = Field1D { values: &self.theta.values - &other.theta.values };
        let g = self.grid();
        let d2 = |a: &Field2D, b: &Field2D| {
            let d = Field2D::from_array(g, &a.values - &b.values).unwrap();
            d.dot(&d)
        };
        d1.dot(&d1)
            + d2(&self.q, &other.q)
            + d2(&self.t_ocean, &other.t_ocean)
            + d2(&self.s_ocean, &other.s_ocean)
    }
}

impl CoupledState {
    pub fn norms(&self) -> FieldNorms {
        self.theta.norms() + self.q.norms() + self.t_ocean.norms() + self.s_ocean.norms()
    }
}

pub(crate) fn zero_boundary(v: &mut Array2<f64>) {
    let (my, mz) = v.dim();
    for i in 0..my {
        v[[i, 0]] = 0.0;
        v[[i, mz - 1]] = 0.0;
    }
    for j in 0..mz {
        v[[0, j]] = 0.0;
        v[[my - 1, j]] = 0.0;
    }
}

/// `u = v + Z`: adds `z` to the atmosphere component only.
pub fn to_u(v: &TransformedState, z: &Field1D) -> CoupledState {
    CoupledState {
        theta: Field1D { values: &v.theta.values + &z.values },
        q: v.q.clone(),
        t_ocean: v.t_ocean.clone(),
        s_ocean: v.s_ocean.clone(),
        psi: v.psi.clone(),
        time: v.time,
    }
}

/// `v = u - Z`.
pub fn to_v(u: &CoupledState, z: &Field1D) -> TransformedState {
    TransformedState {
        theta: Field1D { values: &u.theta.values - &z.values },
        q: u.q.clone(),
        t_ocean: u.t_ocean.clone(),
        s_ocean: u.s_ocean.clone(),
        psi: u.psi.clone(),
        time: u.time,
    }
}
