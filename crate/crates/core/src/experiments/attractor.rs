use crate::diagnostics::{absorbing_radius_r1, EnergyLedger, TRUNCATION_TOL};
use crate::grid::{Field1D, Field2D};
use crate::model::{Stepper, TransformedState};
use crate::seed::seed_split;
use crate::stochastic::stationary_ou_path;

use super::{par_map, random_initial_state, ExperimentConfig, ExperimentError, ExperimentReport, Verdict};

/// Diameters may grow by this factor between horizons before counting as an increase.
const NOISE_FLOOR: f64 = 0.10;
const FINAL_RATIO: f64 = 0.10;

fn field_distance(a: &Field2D, b: &Field2D) -> f64 {
    let d = Field2D::from_array(a.grid(), &a.values - &b.values).unwrap();
    d.dot(&d)
}

/// Largest pairwise distances: `[H, Θ, q, T, S]`, not squared.
fn diameters(states: &[TransformedState]) -> [f64; 5] {
    let mut out = [0.0_f64; 5];
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let (a, b) = (&states[i], &states[j]);
            let dth = Field1D { values: &a.theta.values - &b.theta.values };
            let parts = [dth.dot(&dth), field_distance(&a.q, &b.q), field_distance(&a.t_ocean, &b.t_ocean), field_distance(&a.s_ocean, &b.s_ocean)];
            out[0] = out[0].max(parts.iter().sum::<f64>().sqrt());
            for k in 0..4 {
                out[k + 1] = out[k + 1].max(parts[k].sqrt());
            }
        }
    }
    out
}

/// `u ∈ [0.1, 1)` drawn from the member seed.
fn ball_fraction(seed: u64) -> f64 {
    let u = (seed_split(seed, "radius", 0) >> 11) as f64 / (1u64 << 53) as f64;
    0.1 + 0.9 * u
}

/// Pullback ensemble diameters at time 0 for each horizon, one noise realisation.
///
/// Initial states are the same `M` smooth fields for every horizon, scaled to
/// `‖v₀‖² = R₁ · u · ic_scale` (`R₁ = 1` without forcing), and started at `-T`.
/// Each state depends on its own seed only, so the set is label-free.
pub fn pullback_attractor(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let ledger = EnergyLedger::new(&cfg.params, cfg.grid);
    let t_max = cfg.t_max();
    let need = if ledger.is_dissipative() { -TRUNCATION_TOL.ln() / ledger.alpha } else { 0.0 };
    let span = t_max.max((need / cfg.dt).ceil() * cfg.dt);
    let path = stationary_ou_path(&cfg.params.noise, &cfg.params.b, -span, 0.0, cfg.dt, cfg.noise_seed)?;
    let r1 = if ledger.is_dissipative() {
        absorbing_radius_r1(&path, ledger.alpha, ledger.c10)?.r1
    } else {
        1.0
    };
    // without forcing the ball shrinks to a point; sample the unit ball instead
    let radius = if r1 > 0.0 { r1 } else { 1.0 };
    let ics: Vec<TransformedState> = cfg
        .seeds
        .iter()
        .map(|&seed| random_initial_state(cfg.grid, seed_split(seed, "ic", 0), radius * cfg.ic_scale * ball_fraction(seed)))
        .collect::<Result<_, _>>()?;

    let mut report = ExperimentReport::new(
        "attractor",
        cfg,
        &["horizon", "diameter", "diameter_theta", "diameter_q", "diameter_t", "diameter_s", "ratio_to_first"],
    );
    report.stat("r1", r1);
    report.stat("alpha", ledger.alpha);
    report.stat("c10", ledger.c10);
    report.tolerance("noise_floor", NOISE_FLOOR);
    report.tolerance("final_ratio", FINAL_RATIO);

    let mut diam = Vec::new();
    for &h in &cfg.horizons {
        let start = -(cfg.steps(h) as f64) * cfg.dt;
        let finals = par_map(&ics, |ic| {
            let mut v = ic.clone();
            v.time = start;
            let mut st = Stepper::new(cfg.grid, cfg.params.clone())?;
            Ok(st.simulate(&v, &path, 0.0, cfg.dt, &mut [], 1)?)
        })?;
        let d = diameters(&finals);
        let first = diam.first().copied().unwrap_or(d[0]);
        let ratio = if first > 0.0 { d[0] / first } else { 0.0 };
        report.rows.push(vec![h, d[0], d[1], d[2], d[3], d[4], ratio]);
        report.stat(format!("diameter_T{h}"), d[0]);
        diam.push(d[0]);
    }

    let increases: Vec<String> = diam
        .windows(2)
        .zip(cfg.horizons.windows(2))
        .filter(|(d, _)| d[1] > (1.0 + NOISE_FLOOR) * d[0] + 1e-12)
        .map(|(d, h)| format!("T={} -> T={}: {:.3e} -> {:.3e}", h[0], h[1], d[0], d[1]))
        .collect();
    report.verdict(Verdict::new(
        "diameter_non_increasing",
        increases.is_empty(),
        if increases.is_empty() { "no increase beyond the noise floor".to_string() } else { increases.join("; ") },
    ));
    let (d0, dn) = (diam[0], *diam.last().unwrap());
    let ratio = if d0 > 0.0 { dn / d0 } else { 0.0 };
    report.stat("final_over_initial", ratio);
    report.verdict(Verdict::new(
        "final_ratio",
        ratio <= FINAL_RATIO,
        format!("diameter(T_max)/diameter(T_min) = {ratio:.3e} (limit {FINAL_RATIO})"),
    ));
    Ok(report)
}
