use crate::grid::{discrete_eigenvalue, Grid2D};
use crate::model::ModelParams;

/// Dissipativity constants from the Cauchy–Schwarz chain of the energy estimate.
///
/// With `η` the Young weight on `2ν(Θ̃, γT)` and `s = ‖b^½‖_∞`,
///
/// ```text
/// d/dt‖ṽ‖² + 2‖Θ̃_y‖² + 2ν‖∇T‖² + ν‖∇S‖² + (3/2 - η)‖Θ̃‖² + c_γ‖γT‖² ≤ c₁₀ + 6‖z‖²
/// c_γ = 2ν - ν/6 - ν²/η - ν²/6 - (2/3)s
/// c₁₀ = 4a² + 4‖S_a‖² + 2‖b^½ S_o‖² + 6ν‖S_o‖² + ν c_tr ‖F‖²
/// ```
///
/// and the Poincaré inequalities give `α = min(3/2 - η, 2, c_γ/2, 2ν/5, ν/(1 + C_P))`.
/// `η` is chosen to maximise `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLedger {
    pub eta: f64,
    pub alpha: f64,
    pub c10: f64,
    /// Neumann Poincaré constant for mean-free fields on the grid.
    pub c_p: f64,
    /// Trace constant `‖γS‖² ≤ c_tr ‖∇S‖²` for mean-free `S`.
    pub c_tr: f64,
    /// Dirichlet Poincaré constant squared, `‖q‖² ≤ c₁₁² ‖∇q‖²`.
    pub c11_sq: f64,
    /// Vorticity decay rate `Pr / c₁₁²`.
    pub kappa_q: f64,
    /// Vorticity forcing `2 Pr Ra² c₁₁²` multiplying `‖∇T‖² + ‖∇S‖²`.
    pub k_q: f64,
    /// Rate of the same chain in the original variables (no OU split).
    pub alpha0: f64,
    /// Weight of `‖q‖²` in the Lyapunov function `‖(Θ,T,S)‖² + μ‖q‖²`.
    pub mu: f64,
    pub c24: f64,
    pub c25: f64,
}

fn alpha_of(eta: f64, nu: f64, s: f64, c_p: f64, ou_split: bool) -> f64 {
    let split = if ou_split { nu * nu / 6.0 } else { 0.0 };
    let c_gamma = 2.0 * nu - nu / 6.0 - nu * nu / eta - split - 2.0 / 3.0 * s;
    (1.5 - eta).min(2.0).min(c_gamma / 2.0).min(0.4 * nu).min(nu / (1.0 + c_p))
}

fn best_eta(nu: f64, s: f64, c_p: f64, ou_split: bool) -> (f64, f64) {
    (1..15000)
        .map(|k| k as f64 * 1e-4)
        .map(|eta| (eta, alpha_of(eta, nu, s, c_p, ou_split)))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

impl EnergyLedger {
    pub fn new(p: &ModelParams, grid: Grid2D) -> Self {
        let (ny, nz) = (grid.ny(), grid.nz());
        let c_p = 1.0 / discrete_eigenvalue(1, ny).min(discrete_eigenvalue(1, nz));
        let c_tr = c_p + 2.0 * c_p.sqrt();
        let c11_sq = 1.0 / (discrete_eigenvalue(1, ny) + discrete_eigenvalue(1, nz));
        let s = p.b.max().max(0.0).sqrt();
        let nu = p.nu;
        let sq = |f: &crate::grid::Field1D| f.dot(f);
        let b_so: f64 = {
            let w = crate::grid::Field1D { values: &p.b.values * &p.s_o.values * &p.s_o.values };
            w.integral()
        };
        let c10 = 4.0 * p.a * p.a + 4.0 * sq(&p.s_a) + 2.0 * b_so + 6.0 * nu * sq(&p.s_o) + nu * c_tr * sq(&p.f_flux);
        let (eta, alpha) = best_eta(nu, s, c_p, true);
        let (_, alpha0) = best_eta(nu, s, c_p, false);
        let kappa_q = p.pr / c11_sq;
        let k_q = 2.0 * p.pr * p.ra * p.ra * c11_sq;
        let mu = if k_q > 0.0 { (alpha0 / (2.0 * k_q)).min(1.0) } else { 1.0 };
        Self {
            eta,
            alpha,
            c10,
            c_p,
            c_tr,
            c11_sq,
            kappa_q,
            k_q,
            alpha0,
            mu,
            c24: c10,
            c25: (alpha0 / 2.0).min(kappa_q),
        }
    }

    pub fn is_dissipative(&self) -> bool {
        self.alpha > 0.0
    }

    /// `(c₂₄ + trace) / c₂₅`.
    pub fn theta_feedback_bound(&self, trace: f64) -> f64 {
        (self.c24 + trace) / self.c25
    }
}
