//! Quick sanity suite over the degenerate cases of every module.

use crate::diagnostics::{check_dissipativity, poincare_check, EnergyLedger, EnergyRecord};
use crate::experiments::{nudged_run, random_initial_state, theta_feedback_bound, ExperimentConfig, ModalProjector};
use crate::grid::{Field1D, Field2D, Grid2D};
use crate::model::{to_u, to_v, ModelParams, Stepper, TransformedState};
use crate::seed::seed_split;
use crate::stochastic::{stationary_ou_path, wiener_increment, ModeStreams, NoiseSpectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String), String>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult { name, passed: false, detail: format!("error: {e}") },
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

/// Runs every check; a few seconds in release builds.
pub fn run_all() -> Vec<CheckResult> {
    let g = Grid2D::square(8);
    let mut out = Vec::new();

    out.push(check("trace_of_z_is_one", || {
        let t = Field2D::from_fn(g, |_, z| z).trace_top();
        let err = t.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        Ok((err == 0.0, format!("max |trace - 1| = {err:e}")))
    }));
    out.push(check("trace_of_separable_field", || {
        let pi = std::f64::consts::PI;
        let t = Field2D::from_fn(g, |y, z| (pi * y).sin() * z).trace_top();
        let err = (0..=g.ny()).map(|i| (t.values[i] - (pi * g.y(i)).sin()).abs()).fold(0.0, f64::max);
        Ok((err == 0.0, format!("max error {err:e}")))
    }));
    out.push(check("zero_field_norms", || {
        let n = Field2D::zeros(g).norms();
        Ok((n.l2_sq == 0.0 && n.grad_sq == 0.0, format!("({}, {})", n.l2_sq, n.grad_sq)))
    }));
    out.push(check("wiener_increment_dt_zero", || {
        let spec = NoiseSpectrum::new(1.0, 1.0, 8).map_err(e)?;
        let w = wiener_increment(&spec, 0.0, &mut ModeStreams::new(1, 8), g.ny());
        Ok((w.values.iter().all(|v| *v == 0.0), "dt = 0 gives the zero field".into()))
    }));
    out.push(check("zero_sigma_path", || {
        let spec = NoiseSpectrum::new(0.0, 1.0, 8).map_err(e)?;
        let b = Field1D::constant(g.ny(), 0.5);
        let p = stationary_ou_path(&spec, &b, 0.0, 1.0, 0.01, 3).map_err(e)?;
        let zero = (p.start_index()..=p.end_index()).all(|i| p.norm_sq_at(i).is_ok_and(|n| n == 0.0));
        Ok((zero, format!("{} mesh values", p.len())))
    }));
    out.push(check("change_of_variables", || {
        let v = TransformedState::random_smooth(g, 5, 3).map_err(e)?;
        let zero = Field1D::zeros(g.ny());
        let z = Field1D::from_fn(g.ny(), |y| (3.0 * y).cos());
        let id = to_u(&v, &zero).theta == v.theta;
        let back = to_v(&to_u(&v, &z), &z);
        let ocean = back.q == v.q && back.t_ocean == v.t_ocean && back.s_ocean == v.s_ocean;
        let inv = ocean
            && back.theta.values.iter().zip(&v.theta.values).zip(&z.values).all(|((b, a), z)| {
                (b - a).abs() <= f64::EPSILON * (a.abs() + z.abs())
            });
        let mut u = to_u(&v, &z);
        u.theta = z.clone();
        let flat = to_v(&u, &z).theta.values.iter().all(|x| *x == 0.0);
        Ok((id && inv && flat, format!("identity {id}, inverse {inv}, theta = z gives zero {flat}")))
    }));
    out.push(check("unforced_decay_under_envelope", || {
        let p = ModelParams::zero_data(g.ny());
        let ledger = EnergyLedger::new(&p, g);
        let path = stationary_ou_path(&p.noise, &p.b, 0.0, 2.0, 0.01, 0).map_err(e)?;
        let v0 = random_initial_state(g, 7, 1.0).map_err(e)?;
        let mut rec = EnergyRecord::new();
        Stepper::new(g, p).map_err(e)?.simulate(&v0, &path, 2.0, 0.01, &mut [&mut rec], 1).map_err(e)?;
        let monotone = rec.htilde_sq.windows(2).all(|w| w[1] <= w[0]);
        let rep = check_dissipativity(&rec, ledger.alpha, 0.0, rec.htilde_sq[0], 0.0);
        Ok((monotone && rep.envelope_ok, format!("monotone {monotone}, envelope ratio {:.3}", rep.envelope_ratio)))
    }));
    out.push(check("poincare_of_zero", || {
        let r = poincare_check(&Field2D::zeros(g));
        Ok((r == 0.0, format!("{r}")))
    }));
    out.push(check("nudging_degenerate_cases", || {
        let p = ModelParams::defaults(g.ny());
        let path = stationary_ou_path(&p.noise, &p.b, 0.0, 1.0, 0.01, 1).map_err(e)?;
        let proj = ModalProjector::new(g);
        let mut st = Stepper::new(g, p).map_err(e)?;
        let a = random_initial_state(g, 11, 1.0).map_err(e)?;
        let b = random_initial_state(g, 12, 1.0).map_err(e)?;
        let full = nudged_run(&mut st, &proj, &a, &b, &path, 0.01, 0.01, proj.full()).map_err(e)?;
        let mut same = true;
        for n in [0, 2, proj.full()] {
            let t = nudged_run(&mut st, &proj, &a, &a, &path, 0.01, 0.2, n).map_err(e)?;
            same &= t.diff.iter().all(|d| *d == 0.0);
        }
        let ok = full.first_step_diff <= 1e-12 * full.diff[0];
        Ok((ok && same, format!("all modes: {:.2e} after one step; identical ICs stay identical {same}", full.first_step_diff)))
    }));
    out.push(check("feedback_without_forcing", || {
        let mut p = ModelParams::zero_data(g.ny());
        p.noise = NoiseSpectrum::new(0.0, 1.0, 4).map_err(e)?;
        let mut cfg = ExperimentConfig::new(p, g, 0.01).with_master_seed(0, 2).with_horizons(&[4.0]);
        cfg.ic_scale = 0.0;
        cfg.sigma_sweep = vec![1.0];
        let r = theta_feedback_bound(&cfg).map_err(e)?;
        let plateau = r.get("plateau_sigma1").unwrap_or(f64::NAN);
        let ok = plateau == 0.0 && r.find_verdict("plateau_below_bound").is_some_and(|v| v.passed);
        Ok((ok, format!("plateau {plateau:e}")))
    }));
    out.push(check("seed_split_deterministic", || {
        let same = seed_split(99, "noise", 4) == seed_split(99, "noise", 4);
        Ok((same, "repeated derivation agrees".into()))
    }));
    out
}
