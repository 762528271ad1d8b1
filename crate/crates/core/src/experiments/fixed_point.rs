use crate::diagnostics::fit_exponential;
use crate::grid::Field1D;
use crate::model::{ModelError, Observer, Stepper, TransformedState};
use crate::seed::seed_split;
use crate::stochastic::{mesh_index, stationary_ou_path, OUPath};

use super::{
    batch_means, bootstrap_mean, par_map, random_initial_state, ExperimentConfig, ExperimentError, ExperimentReport,
    Observable, Verdict,
};

/// Confidence level of every bootstrap interval.
pub const CI_LEVEL: f64 = 0.95;
/// Minimum `R²` of the log-distance fit.
pub const FIT_R2: f64 = 0.95;
/// Relative distances below this are treated as converged and left out of the fit.
pub const DISTANCE_FLOOR: f64 = 1e-12;
/// Batches over `T_long`.
pub const BATCHES: usize = 100;
/// Allowed factor between the observed and expected `SE(T)/SE(2T)`.
pub const CLT_FACTOR: f64 = 1.3;
/// Ergodicity agreement in combined standard errors.
pub const ERGODIC_SIGMAS: f64 = 2.0;

/// Distances `‖a(t) - b(t)‖_H` every `stride` steps along a shared path.
fn pair_distances(
    stepper: &mut Stepper,
    a: &TransformedState,
    b: &TransformedState,
    path: &OUPath,
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let k = mesh_index(dt, path.dt())?;
    let i0 = mesh_index(a.time, path.dt())?;
    let steps = ((t_end - a.time) / dt).round() as usize;
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut times = vec![a.time];
    let mut dist = vec![a.distance_sq(&b).sqrt()];
    for step in 1..=steps {
        let i = i0 + (step as i64 - 1) * k;
        a = stepper.advance(&a, path, i, k)?;
        b = stepper.advance(&b, path, i, k)?;
        if step % stride == 0 || step == steps {
            times.push(a.time);
            dist.push(a.distance_sq(&b).sqrt());
        }
    }
    Ok((times, dist))
}

struct Realisation {
    log_k: f64,
    times: Vec<f64>,
    /// Mean over pairs of `ln(d(t)/d(0))`.
    mean_log_ratio: Vec<f64>,
}

/// Contraction of the random dynamical system along independent noise paths.
///
/// For each member seed, `pairs` initial-condition pairs share one path. The
/// one-step contraction factor `k` is the largest ratio `d(t_c)/d(0)` with
/// `t_c` the first horizon. `E[ln k] < 0` implies a unique random fixed point.
/// The pooled log distance is fitted against time over `[0, T_max]`.
pub fn fixed_point_contraction(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    if cfg.pairs == 0 {
        return Err(ExperimentError::Config("pairs must be positive".into()));
    }
    let t_c = cfg.horizons[0];
    let t_end = cfg.t_max();
    let stride = cfg.stride;
    let per_unit = cfg.steps(t_c) as usize;
    if per_unit % stride != 0 {
        return Err(ExperimentError::Config(format!("stride {stride} does not divide the {per_unit} steps to t = {t_c}")));
    }
    let runs = par_map(&cfg.seeds, |&seed| {
        let path = stationary_ou_path(&cfg.params.noise, &cfg.params.b, 0.0, t_end, cfg.dt, seed_split(seed, "noise", 0))?;
        let mut st = Stepper::new(cfg.grid, cfg.params.clone())?;
        let mut k = 0.0_f64;
        let mut times = Vec::new();
        let mut acc: Vec<f64> = Vec::new();
        for p in 0..cfg.pairs as u64 {
            let a = random_initial_state(cfg.grid, seed_split(seed, "pair", 2 * p), cfg.ic_scale)?;
            let b = random_initial_state(cfg.grid, seed_split(seed, "pair", 2 * p + 1), cfg.ic_scale)?;
            let (t, d) = pair_distances(&mut st, &a, &b, &path, cfg.dt, t_end, stride)?;
            let d0 = d[0];
            k = k.max(d[per_unit / stride] / d0);
            let logs: Vec<f64> = d.iter().map(|x| (x / d0).max(f64::MIN_POSITIVE).ln()).collect();
            if acc.is_empty() {
                acc = logs;
                times = t;
            } else {
                acc.iter_mut().zip(&logs).for_each(|(s, l)| *s += l);
            }
        }
        acc.iter_mut().for_each(|s| *s /= cfg.pairs as f64);
        Ok(Realisation { log_k: k.ln(), times, mean_log_ratio: acc })
    })?;

    let mut report = ExperimentReport::new("fixedpoint", cfg, &["time", "mean_log_distance_ratio"]);
    report.tolerance("ci_level", CI_LEVEL);
    report.tolerance("fit_r_squared", FIT_R2);
    report.tolerance("distance_floor", DISTANCE_FLOOR);

    let log_k: Vec<f64> = runs.iter().map(|r| r.log_k).collect();
    let b = bootstrap_mean(&log_k, cfg.bootstrap, seed_split(cfg.noise_seed, "bootstrap", 0), CI_LEVEL);
    report.stat("contraction_time", t_c);
    report.stat("mean_log_k", b.mean);
    report.stat("log_k_se", b.se);
    report.stat("log_k_ci_lo", b.lo);
    report.stat("log_k_ci_hi", b.hi);
    report.verdict(Verdict::new(
        "mean_log_k_negative",
        b.hi < 0.0,
        format!("E[ln k] = {:.4e}, {}% CI [{:.4e}, {:.4e}] over {} paths", b.mean, CI_LEVEL * 100.0, b.lo, b.hi, log_k.len()),
    ));

    let times = runs[0].times.clone();
    let pooled: Vec<f64> = (0..times.len())
        .map(|i| runs.iter().map(|r| r.mean_log_ratio[i]).sum::<f64>() / runs.len() as f64)
        .collect();
    for (t, l) in times.iter().zip(&pooled) {
        report.rows.push(vec![*t, *l]);
    }
    let floor = DISTANCE_FLOOR.ln();
    let (ft, fv): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(&pooled)
        .filter(|(_, l)| **l > floor)
        .map(|(t, l)| (*t, l.exp()))
        .unzip();
    match fit_exponential(&ft, &fv) {
        Some(fit) => {
            report.stat("attraction_rate", fit.rate);
            report.stat("attraction_r_squared", fit.r_squared);
            report.stat("fit_samples", ft.len() as f64);
            report.verdict(Verdict::new(
                "exponential_attraction",
                fit.rate > 0.0 && fit.r_squared >= FIT_R2,
                format!("rate {:.4e}, R^2 {:.4} over {} samples", fit.rate, fit.r_squared, ft.len()),
            ));
        }
        None => report.verdict(Verdict::new(
            "exponential_attraction",
            false,
            "fewer than two samples above the distance floor",
        )),
    }
    Ok(report)
}

struct Sampler<'a> {
    observable: &'a Observable,
    values: Vec<f64>,
}

impl Observer for Sampler<'_> {
    fn observe(&mut self, v: &TransformedState, z: &Field1D) -> Result<(), ModelError> {
        self.values.push(self.observable.eval(v, z));
        Ok(())
    }
}

/// Time average of the observable along one path against the ensemble average
/// at `t = burn_in`.
///
/// `T_long` is the last horizon. The long run covers `burn_in + 2 T_long`; the
/// time average uses the first `T_long`, with a bootstrap standard error over
/// batch means. Extending to `2 T_long` gives the check `SE(T)/SE(2T) ≈ √2`.
pub fn ergodicity_check(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let t_long = cfg.t_max();
    let burn = cfg.steps(cfg.burn_in) as f64 * cfg.dt;
    let t_end = burn + 2.0 * cfg.steps(t_long) as f64 * cfg.dt;
    let obs = &cfg.observable;

    let long = {
        let path = stationary_ou_path(&cfg.params.noise, &cfg.params.b, 0.0, t_end, cfg.dt, cfg.noise_seed)?;
        let mut st = Stepper::new(cfg.grid, cfg.params.clone())?;
        let v0 = random_initial_state(cfg.grid, seed_split(cfg.noise_seed, "ic", 0), cfg.ic_scale)?;
        let v = st.simulate(&v0, &path, burn, cfg.dt, &mut [], 1)?;
        let mut s = Sampler { observable: obs, values: Vec::new() };
        st.simulate(&v, &path, t_end, cfg.dt, &mut [&mut s], cfg.stride)?;
        s.values.remove(0);
        s.values
    };
    let half = long.len() / 2;
    let first = &long[..half];
    let time_avg = first.iter().sum::<f64>() / half as f64;
    let boot_t = bootstrap_mean(&batch_means(first, BATCHES), cfg.bootstrap, seed_split(cfg.noise_seed, "bootstrap", 2), CI_LEVEL);
    let boot_2t =
        bootstrap_mean(&batch_means(&long, 2 * BATCHES), cfg.bootstrap, seed_split(cfg.noise_seed, "bootstrap", 3), CI_LEVEL);
    let (se_t, se_2t) = (boot_t.se, boot_2t.se);

    let ensemble = par_map(&cfg.seeds, |&seed| {
        let path = stationary_ou_path(&cfg.params.noise, &cfg.params.b, 0.0, burn, cfg.dt, seed_split(seed, "noise", 0))?;
        let mut st = Stepper::new(cfg.grid, cfg.params.clone())?;
        let v0 = random_initial_state(cfg.grid, seed_split(seed, "ic", 0), cfg.ic_scale)?;
        let v = st.simulate(&v0, &path, burn, cfg.dt, &mut [], 1)?;
        let z = st.z_at(&path, path.end_index())?;
        Ok(obs.eval(&v, &z))
    })?;
    let boot = bootstrap_mean(&ensemble, cfg.bootstrap, seed_split(cfg.noise_seed, "bootstrap", 1), CI_LEVEL);

    let mut report = ExperimentReport::new("ergodicity", cfg, &["time", "running_average"]);
    let mut sum = 0.0;
    for (i, x) in first.iter().enumerate() {
        sum += x;
        report.rows.push(vec![burn + (i + 1) as f64 * cfg.stride as f64 * cfg.dt, sum / (i + 1) as f64]);
    }
    report.tolerance("batches", BATCHES as f64);
    report.tolerance("ergodic_sigmas", ERGODIC_SIGMAS);
    report.tolerance("clt_factor", CLT_FACTOR);
    report.stat("time_average", time_avg);
    report.stat("time_average_se", se_t);
    report.stat("time_average_se_2t", se_2t);
    report.stat("ensemble_average", boot.mean);
    report.stat("ensemble_se", boot.se);
    report.stat("ensemble_ci_lo", boot.lo);
    report.stat("ensemble_ci_hi", boot.hi);

    let diff = (time_avg - boot.mean).abs();
    let allowed = ERGODIC_SIGMAS * (se_t * se_t + boot.se * boot.se).sqrt();
    report.stat("difference", diff);
    report.verdict(Verdict::new(
        "time_vs_ensemble",
        diff <= allowed,
        format!("|{time_avg:.5e} - {:.5e}| = {diff:.3e} vs {allowed:.3e} ({}, {} combined SE)", boot.mean, obs.name(), ERGODIC_SIGMAS),
    ));
    let ratio = se_t / se_2t;
    let expected = 2f64.sqrt();
    report.stat("clt_ratio", ratio);
    report.verdict(Verdict::new(
        "clt_scaling",
        ratio >= expected / CLT_FACTOR && ratio <= expected * CLT_FACTOR,
        format!("SE(T)/SE(2T) = {ratio:.4}, expected {expected:.4} within factor {CLT_FACTOR}"),
    ));
    Ok(report)
}

/// A contraction result that predicts a unique invariant measure must come
/// with a passing ergodicity check.
pub fn check_consistency(fixed_point: &ExperimentReport, ergodicity: &ExperimentReport) -> Verdict {
    let contracting = fixed_point.get("log_k_ci_hi").is_some_and(|h| h < 0.0);
    let ergodic = ergodicity.find_verdict("time_vs_ensemble").is_some_and(|v| v.passed);
    Verdict::new(
        "consistency",
        !contracting || ergodic,
        match (contracting, ergodic) {
            (true, true) => "contraction and ergodicity agree",
            (true, false) => "contraction predicts a unique invariant measure but time and ensemble averages differ",
            (false, _) => "no contraction claim to check",
        },
    )
}
