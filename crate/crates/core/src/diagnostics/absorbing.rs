use crate::stochastic::{NoiseError, OUPath};

use super::{EnergyLedger, EnergyRecord};

/// Required weight `e^{-αT}` at the truncated end of a pullback integral.
pub const TRUNCATION_TOL: f64 = 1e-8;

/// Weights `(w0, w1)` with `∫₀ʰ e^{-α(h-s)} f(s) ds = w0 f(0) + w1 f(h)` for linear `f`.
pub fn exp_step_weights(alpha: f64, h: f64) -> (f64, f64) {
    let x = alpha * h;
    if x.abs() < 1e-4 {
        let w0 = h * (0.5 - x / 3.0 + x * x / 8.0);
        let w1 = h * (0.5 - x / 6.0 + x * x / 24.0);
        return (w0, w1);
    }
    let one_minus_e = -(-x).exp_m1();
    let w1 = 1.0 / alpha - one_minus_e / (alpha * x);
    (one_minus_e / alpha - w1, w1)
}

/// `I(t_k) = e^{-α(t_k - t_0)} I₀ + ∫_{t_0}^{t_k} e^{-α(t_k - s)} f(s) ds` for piecewise-linear `f`.
fn exp_convolution(alpha: f64, times: &[f64], f: &[f64], start: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = start;
    out.push(acc);
    for k in 1..times.len() {
        let h = times[k] - times[k - 1];
        let (w0, w1) = exp_step_weights(alpha, h);
        acc = (-alpha * h).exp() * acc + w0 * f[k - 1] + w1 * f[k];
        out.push(acc);
    }
    out
}

/// `R₁` at the end of a truncated pullback integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R1Estimate {
    pub r1: f64,
    /// Pullback length `T` that was integrated.
    pub horizon: f64,
    /// `12 max‖z‖² e^{-αT}/α`, the size of the dropped noise tail if `‖z‖²` stays at its sampled maximum.
    pub truncation_bound: f64,
}

/// `R₁ = 2∫_{-∞}^0 e^{ατ}(c₁₀ + 6‖z(θ_τ ω)‖²) dτ` with time 0 at the end of `path`.
///
/// The `c₁₀` part is integrated exactly; the noise part uses the path's samples
/// (exact for piecewise-linear `‖z‖²`) and needs `e^{-αT} ≤ TRUNCATION_TOL`.
pub fn absorbing_radius_r1(path: &OUPath, alpha: f64, c10: f64) -> Result<R1Estimate, NoiseError> {
    if !(alpha > 0.0) {
        return Err(NoiseError::Argument(format!("alpha must be positive, got {alpha}")));
    }
    let horizon = path.t1() - path.t0();
    let need = -TRUNCATION_TOL.ln() / alpha;
    if horizon < need - 1e-9 {
        return Err(NoiseError::Range { lo: path.t1() - need, hi: path.t1(), t0: path.t0(), t1: path.t1() });
    }
    let idx: Vec<i64> = (path.start_index()..=path.end_index()).collect();
    let times: Vec<f64> = idx.iter().map(|i| *i as f64 * path.dt()).collect();
    let z_sq: Vec<f64> = idx.iter().map(|i| path.norm_sq_at(*i)).collect::<Result<_, _>>()?;
    let zmax = z_sq.iter().copied().fold(0.0, f64::max);
    let tail = exp_convolution(alpha, &times, &z_sq, 0.0);
    Ok(R1Estimate {
        r1: 2.0 * c10 / alpha + 12.0 * tail.last().copied().unwrap_or(0.0),
        horizon,
        truncation_bound: 12.0 * zmax * (-alpha * horizon).exp() / alpha,
    })
}

/// `R₁(θ_t ω)` along sampled `‖z(t)‖²`, starting from `r1_start` at `times[0]`.
pub fn r1_series(alpha: f64, c10: f64, times: &[f64], z_sq: &[f64], r1_start: f64) -> Vec<f64> {
    let f: Vec<f64> = z_sq.iter().map(|z| 2.0 * (c10 + 6.0 * z)).collect();
    exp_convolution(alpha, times, &f, r1_start)
}

/// Vorticity tail radius, with time 0 at the end of `path`:
/// `R₂ = 2∫_{-T}^0 e^{κs}[(K_q/α)(c₁₀ + 6‖z‖²) + (κK_q/α) R₁(θ_s ω)] ds`.
///
/// `R₁` along the path starts from `2c₁₀/α`, so this is a lower estimate.
pub fn absorbing_radius_r2(path: &OUPath, ledger: &EnergyLedger) -> Result<f64, NoiseError> {
    let (alpha, c10, kappa, kq) = (ledger.alpha, ledger.c10, ledger.kappa_q, ledger.k_q);
    if !(alpha > 0.0) {
        return Err(NoiseError::Argument(format!("alpha must be positive, got {alpha}")));
    }
    let idx: Vec<i64> = (path.start_index()..=path.end_index()).collect();
    let times: Vec<f64> = idx.iter().map(|i| *i as f64 * path.dt()).collect();
    let z_sq: Vec<f64> = idx.iter().map(|i| path.norm_sq_at(*i)).collect::<Result<_, _>>()?;
    let r1 = r1_series(alpha, c10, &times, &z_sq, 2.0 * c10 / alpha);
    let f: Vec<f64> = (0..times.len()).map(|k| kq / alpha * (c10 + 6.0 * z_sq[k]) + kappa * kq / alpha * r1[k]).collect();
    Ok(2.0 * exp_convolution(kappa, &times, &f, 0.0).last().copied().unwrap_or(0.0))
}

/// Outcome of the absorbing-ball checks on one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingReport {
    pub alpha: f64,
    pub c10: f64,
    /// `R₁` at the first sample.
    pub r1: f64,
    pub r2: Option<f64>,
    /// First sample time with `‖ṽ‖² ≤ R₁(θ_t ω)`.
    pub entry_time: Option<f64>,
    /// First sample time at which the Gronwall envelope is below `R₁(θ_t ω)`.
    pub crossing_time: Option<f64>,
    /// Never above `(1 + slack) R₁(θ_t ω)` after entry.
    pub stayed_inside: bool,
    /// Largest `‖ṽ‖² / envelope`.
    pub envelope_ratio: f64,
    pub envelope_ok: bool,
    pub slack: f64,
}

impl AbsorbingReport {
    /// Entry no later than `crossing + 20%` of the elapsed time, envelope respected, no exit.
    pub fn entry_ok(&self, t0: f64) -> bool {
        match (self.entry_time, self.crossing_time) {
            (Some(e), Some(c)) => e <= t0 + 1.2 * (c - t0) + 1e-12,
            (Some(_), None) => true,
            (None, _) => false,
        }
    }

    pub fn passed(&self, t0: f64) -> bool {
        self.envelope_ok && self.stayed_inside && self.entry_ok(t0)
    }
}

/// Gronwall envelope and absorbing-ball checks with `slack` (0.05 for 5%).
///
/// `r1_start` is `R₁(θ_{t₀} ω)` at the first sample; later values follow from
/// the recorded `‖z‖²`.
pub fn check_dissipativity(record: &EnergyRecord, alpha: f64, c10: f64, r1_start: f64, slack: f64) -> AbsorbingReport {
    let t = &record.times;
    let h = &record.htilde_sq;
    let mut report = AbsorbingReport {
        alpha,
        c10,
        r1: r1_start,
        r2: None,
        entry_time: None,
        crossing_time: None,
        stayed_inside: true,
        envelope_ratio: 0.0,
        envelope_ok: true,
        slack,
    };
    if t.is_empty() {
        return report;
    }
    let r1 = r1_series(alpha, c10, t, &record.z_sq, r1_start);
    let f: Vec<f64> = record.z_sq.iter().map(|z| 6.0 * z).collect();
    let noise = exp_convolution(alpha, t, &f, 0.0);
    for k in 0..t.len() {
        let env = h[0] * (-alpha * (t[k] - t[0])).exp() + c10 / alpha + noise[k];
        let ratio = if env > 0.0 { h[k] / env } else if h[k] > 0.0 { f64::INFINITY } else { 0.0 };
        report.envelope_ratio = report.envelope_ratio.max(ratio);
        if report.crossing_time.is_none() && env <= r1[k] {
            report.crossing_time = Some(t[k]);
        }
        match report.entry_time {
            None if h[k] <= r1[k] => report.entry_time = Some(t[k]),
            Some(_) if h[k] > (1.0 + slack) * r1[k] => report.stayed_inside = false,
            _ => {}
        }
    }
    report.envelope_ok = report.envelope_ratio <= 1.0 + slack;
    report
}

/// Result of a per-sample inequality check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    /// Largest `lhs / rhs` (or `lhs - rhs` when `rhs` vanishes).
    pub worst: f64,
    pub violations: usize,
    pub samples: usize,
}

impl InequalityCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Discrete energy inequality
/// `(‖ṽ_{k+1}‖² - ‖ṽ_k‖²)/Δt + α(‖ṽ_{k+1}‖² + ‖∇ṽ_{k+1}‖²) ≤ (1 + slack)(c₁₀ + 6‖z_k‖²)`.
pub fn check_energy_inequality(record: &EnergyRecord, alpha: f64, c10: f64, slack: f64) -> InequalityCheck {
    let mut out = InequalityCheck { worst: f64::NEG_INFINITY, violations: 0, samples: 0 };
    for k in 0..record.len().saturating_sub(1) {
        let dt = record.times[k + 1] - record.times[k];
        if dt <= 0.0 {
            continue;
        }
        let lhs = (record.htilde_sq[k + 1] - record.htilde_sq[k]) / dt
            + alpha * (record.htilde_sq[k + 1] + record.htilde_grad_sq[k + 1]);
        let rhs = c10 + 6.0 * record.z_sq[k];
        out.samples += 1;
        out.worst = out.worst.max(if rhs > 0.0 { lhs / rhs } else { lhs });
        if lhs > (1.0 + slack) * rhs + 1e-12 {
            out.violations += 1;
        }
    }
    out
}

/// `‖q(t)‖² ≤ (1 + slack)[‖q₀‖² e^{-κt} + K_q ∫₀ᵗ e^{-κ(t-s)}(‖∇T‖² + ‖∇S‖²) ds]`.
pub fn check_vorticity_bound(record: &EnergyRecord, kappa: f64, k_q: f64, slack: f64) -> InequalityCheck {
    let mut out = InequalityCheck { worst: 0.0, violations: 0, samples: 0 };
    if record.is_empty() {
        return out;
    }
    let f: Vec<f64> = record.ts_grad_sq.iter().map(|g| k_q * g).collect();
    let bound = exp_convolution(kappa, &record.times, &f, record.q_sq[0]);
    for (q, b) in record.q_sq.iter().zip(&bound) {
        out.samples += 1;
        if *b > 0.0 {
            out.worst = out.worst.max(q / b);
        }
        if *q > (1.0 + slack) * b + 1e-14 {
            out.violations += 1;
        }
    }
    out
}
