use crate::diagnostics::EnergyLedger;
use crate::grid::Field1D;
use crate::model::{ModelError, Observer, Stepper, TransformedState};
use crate::seed::seed_split;
use crate::stochastic::stationary_ou_path;

use super::{par_map, random_initial_state, ExperimentConfig, ExperimentError, ExperimentReport, Verdict};

/// Relative drop tolerated between plateaus of increasing `σ₀`.
pub const MONOTONE_SLACK: f64 = 0.02;
/// Absolute floor for the plateau comparison; the bound is exactly 0 without forcing.
const PLATEAU_FLOOR: f64 = 1e-10;

/// Per-step record of `‖Θ‖²`, `E_μ` and the running dissipation integral.
struct Budget {
    alpha0: f64,
    mu: f64,
    kappa: f64,
    dt: f64,
    times: Vec<f64>,
    theta_sq: Vec<f64>,
    energy: Vec<f64>,
    dissipated: Vec<f64>,
    last: Option<f64>,
}

impl Budget {
    fn new(ledger: &EnergyLedger, dt: f64) -> Self {
        Self {
            alpha0: ledger.alpha0,
            mu: ledger.mu,
            kappa: ledger.kappa_q,
            dt,
            times: Vec::new(),
            theta_sq: Vec::new(),
            energy: Vec::new(),
            dissipated: Vec::new(),
            last: None,
        }
    }
}

impl Observer for Budget {
    fn observe(&mut self, v: &TransformedState, z: &Field1D) -> Result<(), ModelError> {
        let theta = Field1D { values: &v.theta.values + &z.values };
        let w = theta.norms() + v.t_ocean.norms() + v.s_ocean.norms();
        let q = v.q.dot(&v.q);
        let rate = 0.5 * self.alpha0 * (w.l2_sq + w.grad_sq) + self.mu * self.kappa * q;
        let acc = self.dissipated.last().copied().unwrap_or(0.0);
        let inc = self.last.map_or(0.0, |prev| 0.5 * (prev + rate) * self.dt);
        self.last = Some(rate);
        self.times.push(v.time);
        self.theta_sq.push(theta.dot(&theta));
        self.energy.push(w.l2_sq + self.mu * q);
        self.dissipated.push(acc + inc);
        Ok(())
    }
}

/// Mean-square bound on the atmospheric temperature under increasing noise.
///
/// Each member runs over `[0, T_max]` once per `σ₀` multiplier with the same
/// noise seed, so the sweep uses common random numbers. The plateau is the
/// mean over `t ≥ T_max/2` of the ensemble mean of `‖Θ‖²`. The energy budget
/// `E[E_μ(t)] + E∫D ≤ E[E_μ(0)] + t(c₂₄ + tr Q)` is checked at every step.
pub fn theta_feedback_bound(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    if cfg.sigma_sweep.is_empty() || cfg.sigma_sweep.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ExperimentError::Config("sigma_sweep must be non-empty and strictly increasing".into()));
    }
    let t_end = cfg.t_max();
    let ledger = EnergyLedger::new(&cfg.params, cfg.grid);
    let mut report = ExperimentReport::new(
        "feedback",
        cfg,
        &["sigma0", "time", "mean_theta_sq", "budget_lhs", "budget_rhs"],
    );
    report.tolerance("monotone_slack", MONOTONE_SLACK);
    report.tolerance("plateau_floor", PLATEAU_FLOOR);
    report.stat("alpha0", ledger.alpha0);
    report.stat("mu", ledger.mu);
    report.stat("c24", ledger.c24);
    report.stat("c25", ledger.c25);

    let mut plateaus = Vec::new();
    let mut bound_ok = true;
    let mut budget_worst = f64::NEG_INFINITY;
    let mut bound_detail = Vec::new();
    for &m in &cfg.sigma_sweep {
        let noise = cfg.params.noise.with_sigma0(cfg.params.noise.sigma0() * m)?;
        let mut params = cfg.params.clone();
        params.noise = noise.clone();
        let runs = par_map(&cfg.seeds, |&seed| {
            let path = stationary_ou_path(&params.noise, &params.b, 0.0, t_end, cfg.dt, seed_split(seed, "noise", 0))?;
            let mut st = Stepper::new(cfg.grid, params.clone())?;
            let v0 = random_initial_state(cfg.grid, seed_split(seed, "ic", 0), cfg.ic_scale)?;
            let mut b = Budget::new(&ledger, cfg.dt);
            st.simulate(&v0, &path, t_end, cfg.dt, &mut [&mut b], 1)?;
            Ok(b)
        })?;
        let n = runs.len() as f64;
        let len = runs[0].times.len();
        let mean = |f: &dyn Fn(&Budget) -> f64| runs.iter().map(f).sum::<f64>() / n;
        let trace = noise.trace();
        let e0 = mean(&|b| b.energy[0]);
        let mut tail = (0.0, 0usize);
        for i in 0..len {
            let t = runs[0].times[i];
            let th = mean(&|b| b.theta_sq[i]);
            let lhs = mean(&|b| b.energy[i] + b.dissipated[i]);
            let rhs = e0 + t * (ledger.c24 + trace);
            budget_worst = budget_worst.max(lhs - rhs);
            if t >= 0.5 * t_end {
                tail.0 += th;
                tail.1 += 1;
            }
            if i % cfg.stride == 0 || i + 1 == len {
                report.rows.push(vec![noise.sigma0(), t, th, lhs, rhs]);
            }
        }
        let plateau = tail.0 / tail.1 as f64;
        let bound = ledger.theta_feedback_bound(trace);
        report.stat(format!("plateau_sigma{m}"), plateau);
        report.stat(format!("bound_sigma{m}"), bound);
        bound_ok &= plateau <= bound + PLATEAU_FLOOR;
        bound_detail.push(format!("sigma0 x{m}: {plateau:.4e} <= {bound:.4e}"));
        plateaus.push(plateau);
    }

    report.verdict(Verdict::new("plateau_below_bound", bound_ok, bound_detail.join("; ")));
    let monotone = plateaus.windows(2).all(|w| w[1] >= w[0] * (1.0 - MONOTONE_SLACK));
    report.verdict(Verdict::new(
        "plateau_monotone_in_sigma",
        monotone,
        format!("plateaus {:?}", plateaus.iter().map(|p| format!("{p:.4e}")).collect::<Vec<_>>()),
    ));
    report.stat("budget_worst_excess", budget_worst);
    report.verdict(Verdict::new(
        "energy_budget",
        budget_worst <= 0.0,
        format!("max over t of lhs - rhs = {budget_worst:.4e}"),
    ));
    Ok(report)
}
