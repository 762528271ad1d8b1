use ndarray::{Array1, Array2};

use crate::grid::{
    arakawa_jacobian, diffusion_apply_1d, diffusion_apply_2d, BoundarySpec, Field1D, Field2D, Grid2D,
    ImplicitDiffusion, PoissonSolver, Tridiagonal, ZBoundary,
};
use crate::stochastic::{mesh_index, ModeSynthesis, OUPath};

use super::state::zero_boundary;
use super::{ModelError, ModelParams, TransformedState};

pub const DEFAULT_DT: f64 = 1e-3;

/// Time derivative of `(Θ̃, q, T, S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub theta: Field1D,
    pub q: Field2D,
    pub t_ocean: Field2D,
    pub s_ocean: Field2D,
}

fn check_grids(v: &TransformedState, z: &Field1D, p: &ModelParams) -> Result<Grid2D, ModelError> {
    let g = v.grid();
    if v.theta.n() != g.ny() || z.n() != g.ny() || p.ny() != g.ny() {
        return Err(ModelError::Invalid(format!(
            "latitude fields have {}/{}/{} cells, grid has {}",
            v.theta.n(),
            z.n(),
            p.ny(),
            g.ny()
        )));
    }
    Ok(g)
}

/// Right-hand side of the transformed system at `v` with OU value `z`.
///
/// The OU term cancels from the Θ̃ equation (`z` solves the linear part of it)
/// and enters only through the Robin flux `S_o + Θ̃ + z - T` at `z = 1`.
pub fn rhs_transformed(v: &TransformedState, z: &Field1D, p: &ModelParams) -> Result<Tendency, ModelError> {
    let g = check_grids(v, z, p)?;
    if let Some(field) = v.is_finite() {
        return Err(ModelError::Blowup { time: v.time, field: field.into() });
    }
    let psi = PoissonSolver::new(g).solve(&v.q)?;
    let top_t = v.t_ocean.trace_top();

    let mut theta = diffusion_apply_1d(&v.theta, &BoundarySpec::Neumann1d)?;
    for i in 0..=g.ny() {
        let b = p.b.values[i];
        theta.values[i] += -(1.0 + b) * v.theta.values[i] - p.a + p.s_a.values[i] - b * p.s_o.values[i]
            + b * top_t.values[i];
    }

    let g_top = Field1D { values: &p.s_o.values + &v.theta.values + &z.values };
    let mut t = diffusion_apply_2d(&v.t_ocean, &BoundarySpec::RobinTop { g: g_top })?;
    t.values *= p.nu;
    t.values -= &arakawa_jacobian(&v.t_ocean, &psi)?.values;

    let mut s = diffusion_apply_2d(&v.s_ocean, &BoundarySpec::FluxTop { flux: p.f_flux.clone() })?;
    s.values *= p.nu;
    s.values -= &arakawa_jacobian(&v.s_ocean, &psi)?.values;

    let mut q = diffusion_apply_2d(&v.q, &BoundarySpec::DirichletZero)?;
    q.values *= p.pr;
    q.values -= &arakawa_jacobian(&v.q, &psi)?.values;
    q.values += &(buoyancy(&v.t_ocean, &v.s_ocean) * (p.pr * p.ra));
    zero_boundary(&mut q.values);

    Ok(Tendency { theta, q: q, t_ocean: t, s_ocean: s })
}

fn buoyancy(t: &Field2D, s: &Field2D) -> Array2<f64> {
    t.d_dy().values - s.d_dy().values
}

#[derive(Debug, Clone)]
struct Solvers {
    dt: f64,
    theta: Tridiagonal,
    t: ImplicitDiffusion,
    s: ImplicitDiffusion,
    q: ImplicitDiffusion,
}

/// IMEX Euler integrator with factorised implicit operators cached per step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid2D,
    params: ModelParams,
    poisson: PoissonSolver,
    synth: ModeSynthesis,
    synth_modes: usize,
    cache: Vec<Solvers>,
}

/// Hook called by [`Stepper::simulate`] with the current state and OU value.
pub trait Observer {
    fn observe(&mut self, v: &TransformedState, z: &Field1D) -> Result<(), ModelError>;
}

/// Largest allowed CFL halvings per mesh step.
const MAX_HALVINGS: u32 = 12;

impl Stepper {
    pub fn new(grid: Grid2D, params: ModelParams) -> Result<Self, ModelError> {
        params.validate()?;
        if params.ny() != grid.ny() {
            return Err(ModelError::Invalid(format!("profiles have {} cells, grid has {}", params.ny(), grid.ny())));
        }
        let synth_modes = params.noise.n_modes();
        let synth = ModeSynthesis::new(grid.ny(), synth_modes);
        Ok(Self { grid, poisson: PoissonSolver::new(grid), synth, synth_modes, params, cache: Vec::new() })
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `z(t_i)` on the latitude nodes.
    pub fn z_at(&mut self, path: &OUPath, i: i64) -> Result<Field1D, ModelError> {
        let modes = path.spec().n_modes();
        if modes != self.synth_modes {
            self.synth = ModeSynthesis::new(self.grid.ny(), modes);
            self.synth_modes = modes;
        }
        Ok(path.field_at(i, &self.synth)?)
    }

    /// Recomputes `ψ` from `q`.
    pub fn refresh_psi(&self, v: &mut TransformedState) {
        v.psi = Field2D::from_array(self.grid, self.poisson.solve_array(&v.q.values)).unwrap();
    }

    /// Advective limit `0.5 / max(|ψ_z|/dy + |ψ_y|/dz)`; infinite at rest.
    pub fn dt_max(&self, v: &TransformedState) -> f64 {
        let g = self.grid;
        let (dy, dz) = (g.dy(), g.dz());
        let p = &v.psi.values;
        let mut worst = 0.0_f64;
        for i in 1..g.ny() {
            for j in 1..g.nz() {
                let uy = (p[[i, j + 1]] - p[[i, j - 1]]).abs() / (2.0 * dz);
                let uz = (p[[i + 1, j]] - p[[i - 1, j]]).abs() / (2.0 * dy);
                worst = worst.max(uy / dy + uz / dz);
            }
        }
        if worst == 0.0 {
            f64::INFINITY
        } else {
            0.5 / worst
        }
    }

    fn solvers(&mut self, dt: f64) -> &Solvers {
        if let Some(pos) = self.cache.iter().position(|s| s.dt == dt) {
            return &self.cache[pos];
        }
        let g = self.grid;
        let p = &self.params;
        let n = g.ny();
        let h2 = g.dy() * g.dy();
        let off = -dt / h2;
        let diag: Vec<f64> = (0..=n).map(|i| 1.0 + dt * (2.0 / h2 + 1.0 + p.b.values[i])).collect();
        let mut sub = vec![off; n + 1];
        let mut sup = vec![off; n + 1];
        sup[0] = 2.0 * off;
        sub[n] = 2.0 * off;
        let solvers = Solvers {
            dt,
            theta: Tridiagonal::factor(&sub, &diag, &sup),
            t: ImplicitDiffusion::new(g, dt * p.nu, ZBoundary::RobinTop { coefficient: 1.0 }),
            s: ImplicitDiffusion::new(g, dt * p.nu, ZBoundary::Neumann),
            q: ImplicitDiffusion::new(g, dt * p.pr, ZBoundary::Dirichlet),
        };
        if self.cache.len() >= 8 {
            self.cache.remove(0);
        }
        self.cache.push(solvers);
        self.cache.last().unwrap()
    }

    /// One IMEX Euler step of size `dt` with the OU value `z_now`.
    ///
    /// Diffusion, the Robin `-T` term and `-(1+b)Θ̃` are implicit; Jacobians,
    /// buoyancy, sources, `bγT` and the Robin data `S_o + Θ̃ + z` are explicit.
    pub fn step_imex(&mut self, v: &TransformedState, z_now: &Field1D, dt: f64) -> Result<TransformedState, ModelError> {
        check_grids(v, z_now, &self.params)?;
        if dt == 0.0 {
            return Ok(v.clone());
        }
        if !(dt > 0.0) {
            return Err(ModelError::Invalid(format!("dt must be positive, got {dt}")));
        }
        let dt_max = self.dt_max(v);
        if dt > dt_max {
            return Err(ModelError::StepSize { dt, dt_max });
        }
        let g = self.grid;
        let (n, nz) = (g.ny(), g.nz());
        let dz = g.dz();
        let p = self.params.clone();
        let top_t = v.t_ocean.trace_top();

        let mut theta: Array1<f64> = Array1::zeros(n + 1);
        for i in 0..=n {
            let b = p.b.values[i];
            theta[i] = v.theta.values[i]
                + dt * (-p.a + p.s_a.values[i] - b * p.s_o.values[i] + b * top_t.values[i]);
        }

        let mut t = &v.t_ocean.values - &(arakawa_jacobian(&v.t_ocean, &v.psi)?.values * dt);
        let mut s = &v.s_ocean.values - &(arakawa_jacobian(&v.s_ocean, &v.psi)?.values * dt);
        let inject = dt * p.nu * 2.0 / dz;
        for i in 0..=n {
            t[[i, nz]] += inject * (p.s_o.values[i] + v.theta.values[i] + z_now.values[i]);
            s[[i, nz]] += inject * p.f_flux.values[i];
        }
        let mut q = &v.q.values - &(arakawa_jacobian(&v.q, &v.psi)?.values * dt);
        q += &(buoyancy(&v.t_ocean, &v.s_ocean) * (dt * p.pr * p.ra));

        let solvers = self.solvers(dt);
        solvers.theta.solve_in_place(theta.view_mut());
        let t = solvers.t.solve(&t);
        let s = solvers.s.solve(&s);
        let q = solvers.q.solve(&q);

        let mut out = TransformedState {
            theta: Field1D { values: theta },
            q: Field2D::from_array(g, q)?,
            t_ocean: Field2D::from_array(g, t)?,
            s_ocean: Field2D::from_array(g, s)?,
            psi: Field2D::zeros(g),
            time: v.time + dt,
        };
        self.refresh_psi(&mut out);
        if let Some(field) = out.is_finite() {
            return Err(ModelError::Blowup { time: out.time, field: field.into() });
        }
        Ok(out)
    }

    /// Advances from mesh index `i` to `i + k` of `path`.
    ///
    /// Substeps by powers of two when the advective limit requires it, with
    /// `z` linearly interpolated between mesh values.
    pub fn advance(&mut self, v: &TransformedState, path: &OUPath, i: i64, k: i64) -> Result<TransformedState, ModelError> {
        let z0 = self.z_at(path, i)?;
        let z1 = self.z_at(path, i + k)?;
        let dt = path.dt() * k as f64;
        let end_time = (i + k) as f64 * path.dt();
        let mut halvings = 0;
        loop {
            let m = 1_i64 << halvings;
            let h = dt / m as f64;
            let mut cur = v.clone();
            let mut failed = None;
            for sub in 0..m {
                let w = sub as f64 / m as f64;
                let z = if sub == 0 { z0.clone() } else { Field1D { values: &z0.values * (1.0 - w) + &z1.values * w } };
                match self.step_imex(&cur, &z, h) {
                    Ok(next) => cur = next,
                    Err(ModelError::StepSize { dt, dt_max }) => {
                        failed = Some((dt, dt_max));
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            match failed {
                None => {
                    cur.time = end_time;
                    return Ok(cur);
                }
                Some((dt, dt_max)) if halvings >= MAX_HALVINGS => {
                    return Err(ModelError::StepSize { dt, dt_max });
                }
                Some(_) => halvings += 1,
            }
        }
    }

    /// Integrates `v0` to `t_end` with step `dt` (a multiple of the path mesh).
    ///
    /// Observers see the initial state, every `stride`-th step, and the final state.
    pub fn simulate(
        &mut self,
        v0: &TransformedState,
        path: &OUPath,
        t_end: f64,
        dt: f64,
        observers: &mut [&mut dyn Observer],
        stride: usize,
    ) -> Result<TransformedState, ModelError> {
        let k = mesh_index(dt, path.dt())?;
        if k < 1 {
            return Err(ModelError::Invalid(format!("dt = {dt} is below the path mesh {}", path.dt())));
        }
        let i0 = mesh_index(v0.time, path.dt())?;
        let i1 = mesh_index(t_end, path.dt())?;
        if (i1 - i0) % k != 0 || i1 < i0 {
            return Err(ModelError::Invalid(format!("[{}, {t_end}] is not a whole number of steps of {dt}", v0.time)));
        }
        if !path.covers(i0, i1) {
            return Err(ModelError::Noise(crate::stochastic::NoiseError::Range {
                lo: v0.time,
                hi: t_end,
                t0: path.t0(),
                t1: path.t1(),
            }));
        }
        let stride = stride.max(1);
        let mut v = v0.clone();
        v.time = i0 as f64 * path.dt();
        if !observers.is_empty() {
            let z = self.z_at(path, i0)?;
            for o in observers.iter_mut() {
                o.observe(&v, &z)?;
            }
        }
        let steps = ((i1 - i0) / k) as usize;
        for step in 1..=steps {
            let i = i0 + (step as i64 - 1) * k;
            v = self.advance(&v, path, i, k)?;
            if !observers.is_empty() && (step % stride == 0 || step == steps) {
                let z = self.z_at(path, i + k)?;
                for o in observers.iter_mut() {
                    o.observe(&v, &z)?;
                }
            }
        }
        Ok(v)
    }
}

/// One-shot [`Stepper::simulate`] without observers.
pub fn simulate(
    v0: &TransformedState,
    path: &OUPath,
    p: &ModelParams,
    t_end: f64,
    dt: f64,
) -> Result<TransformedState, ModelError> {
    Stepper::new(v0.grid(), p.clone())?.simulate(v0, path, t_end, dt, &mut [], 1)
}
