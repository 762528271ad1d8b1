//! Energy bookkeeping, absorbing-radius integrals and the runtime versions of
//! the dissipativity estimates.

mod absorbing;
mod ledger;

pub use absorbing::{
    absorbing_radius_r1, absorbing_radius_r2, check_dissipativity, check_energy_inequality, check_vorticity_bound,
    exp_step_weights, r1_series, AbsorbingReport, InequalityCheck, R1Estimate, TRUNCATION_TOL,
};
pub use ledger::EnergyLedger;

use crate::grid::{arakawa_jacobian, Field1D, Field2D};
use crate::model::{ModelError, Observer, TransformedState};

/// CSV header of an energy record.
pub const ENERGY_CSV_HEADER: &str = "time,h_sq,v_sq,htilde_sq,q_sq,trace_t_sq,s_mass,z_sq";

/// Norm time series along one trajectory; all series share `times`.
///
/// The first eight series are the CSV columns. The rest are kept for the
/// in-memory checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyRecord {
    pub times: Vec<f64>,
    /// `‖u‖²_H` with `Θ = Θ̃ + z`.
    pub h_sq: Vec<f64>,
    /// Composite gradient norm² of `u`.
    pub v_sq: Vec<f64>,
    /// `‖(Θ̃, T, S)‖²`.
    pub htilde_sq: Vec<f64>,
    pub q_sq: Vec<f64>,
    pub trace_t_sq: Vec<f64>,
    pub s_mass: Vec<f64>,
    pub z_sq: Vec<f64>,
    pub theta_sq: Vec<f64>,
    pub t_sq: Vec<f64>,
    pub s_sq: Vec<f64>,
    /// Gradient norm² of `(Θ̃, T, S)`.
    pub htilde_grad_sq: Vec<f64>,
    /// `‖∇T‖² + ‖∇S‖²`.
    pub ts_grad_sq: Vec<f64>,
}

impl EnergyRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, v: &TransformedState, z: &Field1D) {
        let theta = Field1D { values: &v.theta.values + &z.values };
        let th = theta.norms();
        let tt = v.t_ocean.norms();
        let ss = v.s_ocean.norms();
        let qq = v.q.norms();
        let ht = v.theta.norms();
        let top = v.t_ocean.trace_top();
        self.times.push(v.time);
        self.h_sq.push(th.l2_sq + qq.l2_sq + tt.l2_sq + ss.l2_sq);
        self.v_sq.push(th.grad_sq + qq.grad_sq + tt.grad_sq + ss.grad_sq);
        self.htilde_sq.push(ht.l2_sq + tt.l2_sq + ss.l2_sq);
        self.q_sq.push(qq.l2_sq);
        self.trace_t_sq.push(top.dot(&top));
        self.s_mass.push(v.s_ocean.integral());
        self.z_sq.push(z.dot(z));
        self.theta_sq.push(th.l2_sq);
        self.t_sq.push(tt.l2_sq);
        self.s_sq.push(ss.l2_sq);
        self.htilde_grad_sq.push(ht.grad_sq + tt.grad_sq + ss.grad_sq);
        self.ts_grad_sq.push(tt.grad_sq + ss.grad_sq);
    }

    /// CSV columns of row `i`, without the newline.
    pub fn csv_row(&self, i: usize) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.times[i],
            self.h_sq[i],
            self.v_sq[i],
            self.htilde_sq[i],
            self.q_sq[i],
            self.trace_t_sq[i],
            self.s_mass[i],
            self.z_sq[i]
        )
    }

    /// Largest drift of `∫S` from its first sample.
    pub fn s_mass_drift(&self) -> f64 {
        let first = self.s_mass.first().copied().unwrap_or(0.0);
        self.s_mass.iter().fold(0.0_f64, |m, s| m.max((s - first).abs()))
    }

    /// Largest `|h_sq - (Θ² + q² + T² + S²)|`.
    pub fn consistency_error(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.h_sq[i] - (self.theta_sq[i] + self.q_sq[i] + self.t_sq[i] + self.s_sq[i])).abs())
            .fold(0.0, f64::max)
    }
}

impl Observer for EnergyRecord {
    fn observe(&mut self, v: &TransformedState, z: &Field1D) -> Result<(), ModelError> {
        self.push(v, z);
        Ok(())
    }
}

/// `‖T‖² / (2‖γT‖² + 4‖∇T‖²)`, zero for `T ≡ 0`.
pub fn poincare_check(t: &Field2D) -> f64 {
    let n = t.norms();
    let top = t.trace_top();
    let den = 2.0 * top.dot(&top) + 4.0 * n.grad_sq;
    if den == 0.0 {
        0.0
    } else {
        n.l2_sq / den
    }
}

/// Relative size of the transport terms in the energy budget:
/// the largest `|⟨J(f,ψ), f⟩| / (‖f‖‖J(f,ψ)‖)` over `f ∈ {q, T, S}`.
pub fn jacobian_energy_residual(v: &TransformedState) -> Result<f64, ModelError> {
    let mut worst = 0.0_f64;
    for f in [&v.q, &v.t_ocean, &v.s_ocean] {
        let j = arakawa_jacobian(f, &v.psi)?;
        let scale = (f.dot(f) * j.dot(&j)).sqrt();
        if scale > 0.0 {
            worst = worst.max(j.dot(f).abs() / scale);
        }
    }
    Ok(worst)
}

/// Least-squares fit of `log y = log c - rate·t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub rate: f64,
    pub log_c: f64,
    pub r_squared: f64,
}

/// Fits an exponential to the positive samples; `None` with fewer than two.
pub fn fit_exponential(times: &[f64], values: &[f64]) -> Option<ExpFit> {
    let pts: Vec<(f64, f64)> =
        times.iter().zip(values).filter(|(_, v)| **v > 0.0 && v.is_finite()).map(|(t, v)| (*t, v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(ExpFit { rate: -slope, log_c: my - slope * mt, r_squared })
}

/// Decay rate of `‖ṽ‖²` fitted over a record, for comparison with the symbolic `α`.
pub fn empirical_alpha(record: &EnergyRecord) -> Option<ExpFit> {
    fit_exponential(&record.times, &record.htilde_sq)
}
