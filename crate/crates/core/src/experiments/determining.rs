use ndarray::{s, Array2};

use crate::grid::{CosineBasis, Grid2D, SineBasis};
use crate::model::{Stepper, TransformedState};
use crate::seed::seed_split;
use crate::stochastic::{stationary_ou_path, OUPath};

use super::{par_map, random_initial_state, ExperimentConfig, ExperimentError, ExperimentReport, Verdict};

/// Convergence threshold on `‖diff‖_H`.
pub const CONVERGED: f64 = 1e-6;
/// Fraction of seeds that must agree on `N*`.
pub const SEED_AGREEMENT: f64 = 0.9;

/// Projections onto the lowest cosine (Θ̃, T, S) and sine (q) modes.
#[derive(Debug, Clone)]
pub struct ModalProjector {
    grid: Grid2D,
    cy: CosineBasis,
    cz: CosineBasis,
    sy: SineBasis,
    sz: SineBasis,
}

impl ModalProjector {
    pub fn new(grid: Grid2D) -> Self {
        Self {
            grid,
            cy: CosineBasis::new(grid.ny()),
            cz: CosineBasis::new(grid.nz()),
            sy: SineBasis::new(grid.ny()),
            sz: SineBasis::new(grid.nz()),
        }
    }

    /// Number of modes per direction needed to reproduce any state.
    pub fn full(&self) -> usize {
        self.grid.ny().max(self.grid.nz()) + 1
    }

    fn cos2(&self, f: &Array2<f64>) -> Array2<f64> {
        self.cz.analyse(&self.cy.analyse(f).t().to_owned()).t().to_owned()
    }

    fn icos2(&self, c: &Array2<f64>) -> Array2<f64> {
        self.cz.synthesise(&self.cy.synthesise(c).t().to_owned()).t().to_owned()
    }

    fn sin2(&self, f: &Array2<f64>) -> Array2<f64> {
        let (ny, nz) = (self.grid.ny(), self.grid.nz());
        let inner = f.slice(s![1..ny, 1..nz]).to_owned();
        self.sz.analyse(&self.sy.analyse(&inner).t().to_owned()).t().to_owned()
    }

    fn isin2(&self, c: &Array2<f64>) -> Array2<f64> {
        let (ny, nz) = (self.grid.ny(), self.grid.nz());
        let inner = self.sz.synthesise(&self.sy.synthesise(c).t().to_owned()).t().to_owned();
        let mut out = Array2::zeros(self.grid.shape());
        out.slice_mut(s![1..ny, 1..nz]).assign(&inner);
        out
    }

    fn mask(c: &mut Array2<f64>, n: usize) -> f64 {
        let mut worst = 0.0_f64;
        for ((k, l), v) in c.indexed_iter_mut() {
            if k < n && l < n {
                worst = worst.max(v.abs());
            } else {
                *v = 0.0;
            }
        }
        worst
    }

    /// Overwrites the lowest `n` modes per direction of `follower` with those of
    /// `master`. Returns `max_j |l_j(master - follower)|` before the overwrite.
    pub fn nudge(&self, master: &TransformedState, follower: &mut TransformedState, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        let mut dth = self.cy.analyse_vec(&(&master.theta.values - &follower.theta.values));
        for (k, v) in dth.iter_mut().enumerate() {
            if k < n {
                worst = worst.max(v.abs());
            } else {
                *v = 0.0;
            }
        }
        follower.theta.values += &self.cy.synthesise_vec(&dth);
        for (m, f) in [(&master.t_ocean, &mut follower.t_ocean), (&master.s_ocean, &mut follower.s_ocean)] {
            let mut c = self.cos2(&(&m.values - &f.values));
            worst = worst.max(Self::mask(&mut c, n));
            f.values += &self.icos2(&c);
        }
        let mut c = self.sin2(&(&master.q.values - &follower.q.values));
        worst = worst.max(Self::mask(&mut c, n));
        follower.q.values += &self.isin2(&c);
        worst
    }
}

/// Master/follower history of one nudging run.
#[derive(Debug, Clone, PartialEq)]
pub struct NudgeTrace {
    pub modes: usize,
    /// Sample times (every unit of time and the final time).
    pub times: Vec<f64>,
    /// `‖master - follower‖_H` at the sample times.
    pub diff: Vec<f64>,
    /// `∫_{t-1}^{t} max_j |l_j(diff)|² dt` at the sample times.
    pub functional: Vec<f64>,
    /// `‖diff‖_H` after the first step.
    pub first_step_diff: f64,
}

impl NudgeTrace {
    pub fn final_diff(&self) -> f64 {
        *self.diff.last().unwrap()
    }
}

/// Runs master and nudged follower over `[0, horizon]` on the same noise path.
pub fn nudged_run(
    stepper: &mut Stepper,
    projector: &ModalProjector,
    master0: &TransformedState,
    follower0: &TransformedState,
    path: &OUPath,
    dt: f64,
    horizon: f64,
    modes: usize,
) -> Result<NudgeTrace, ExperimentError> {
    let k = crate::stochastic::mesh_index(dt, path.dt())?;
    let steps = (horizon / dt).round() as i64;
    let per_unit = ((1.0 / dt).round() as i64).max(1);
    let (mut master, mut follower) = (master0.clone(), follower0.clone());
    let i0 = crate::stochastic::mesh_index(master.time, path.dt())?;
    let mut trace = NudgeTrace {
        modes,
        times: vec![master.time],
        diff: vec![master.distance_sq(&follower).sqrt()],
        functional: vec![0.0],
        first_step_diff: f64::NAN,
    };
    let mut window = 0.0;
    for step in 1..=steps {
        let i = i0 + (step - 1) * k;
        master = stepper.advance(&master, path, i, k)?;
        follower = stepper.advance(&follower, path, i, k)?;
        let l = projector.nudge(&master, &mut follower, modes);
        stepper.refresh_psi(&mut follower);
        window += l * l * dt;
        if step == 1 {
            trace.first_step_diff = master.distance_sq(&follower).sqrt();
        }
        if step % per_unit == 0 || step == steps {
            trace.times.push(master.time);
            trace.diff.push(master.distance_sq(&follower).sqrt());
            trace.functional.push(window);
            window = 0.0;
        }
    }
    Ok(trace)
}

struct SeedResult {
    n_star: Option<usize>,
    traces: Vec<NudgeTrace>,
    full: NudgeTrace,
    configured: f64,
}

/// Nudging proxy for determining modes: `N*` is the smallest entry of
/// `mode_sweep` for which the follower is within [`CONVERGED`] by `T_max`.
pub fn determining_modes(cfg: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let horizon = cfg.t_max();
    let projector = ModalProjector::new(cfg.grid);
    let full = projector.full();
    let mut sweep: Vec<usize> = cfg.mode_sweep.iter().map(|n| (*n).min(full)).collect();
    sweep.sort_unstable();
    sweep.dedup();

    let per_seed = par_map(&cfg.seeds, |&seed| {
        let path = stationary_ou_path(&cfg.params.noise, &cfg.params.b, 0.0, horizon, cfg.dt, seed_split(seed, "noise", 0))?;
        let a = random_initial_state(cfg.grid, seed_split(seed, "ic", 0), cfg.ic_scale)?;
        let b = random_initial_state(cfg.grid, seed_split(seed, "ic", 1), cfg.ic_scale)?;
        let mut st = Stepper::new(cfg.grid, cfg.params.clone())?;
        let full_trace = nudged_run(&mut st, &projector, &a, &b, &path, cfg.dt, cfg.dt, full)?;
        let mut traces = Vec::new();
        let mut n_star = None;
        for &n in &sweep {
            let t = nudged_run(&mut st, &projector, &a, &b, &path, cfg.dt, horizon, n)?;
            let ok = t.final_diff() <= CONVERGED;
            traces.push(t);
            if ok {
                n_star = Some(n);
                break;
            }
        }
        let configured = nudged_run(&mut st, &projector, &a, &b, &path, cfg.dt, horizon, cfg.modes_n.min(full))?.final_diff();
        Ok(SeedResult { n_star, traces, full: full_trace, configured })
    })?;

    let mut report = ExperimentReport::new("determining", cfg, &["seed_index", "modes", "time", "diff_h", "functional"]);
    report.tolerance("converged", CONVERGED);
    report.tolerance("seed_agreement", SEED_AGREEMENT);
    for (s, r) in per_seed.iter().enumerate() {
        for t in &r.traces {
            for k in 0..t.times.len() {
                report.rows.push(vec![s as f64, t.modes as f64, t.times[k], t.diff[k], t.functional[k]]);
            }
        }
    }

    let worst_full = per_seed
        .iter()
        .map(|r| r.full.first_step_diff / r.full.diff[0].max(1e-300))
        .fold(0.0, f64::max);
    report.stat("full_nudge_first_step_relative_diff", worst_full);
    report.tolerance("full_nudge", 1e-10);
    report.verdict(Verdict::new(
        "full_nudge_one_step",
        worst_full <= 1e-10,
        format!("all {full} modes per direction: relative diff after one step {worst_full:.2e}"),
    ));

    let worst_configured = per_seed.iter().map(|r| r.configured).fold(0.0, f64::max);
    report.stat("modes_n", cfg.modes_n as f64);
    report.stat("modes_n_worst_final_diff", worst_configured);

    let stars: Vec<Option<usize>> = per_seed.iter().map(|r| r.n_star).collect();
    for (s, n) in stars.iter().enumerate() {
        report.stat(format!("n_star_seed{s}"), n.map_or(f64::NAN, |n| n as f64));
    }
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for n in stars.iter().flatten() {
        match counts.iter_mut().find(|(v, _)| v == n) {
            Some(c) => c.1 += 1,
            None => counts.push((*n, 1)),
        }
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let (mode, agree) = counts.first().copied().map_or((None, 0), |(n, c)| (Some(n), c));
    let frac = agree as f64 / stars.len() as f64;
    report.stat("n_star", mode.map_or(f64::NAN, |n| n as f64));
    report.stat("n_star_agreement", frac);
    report.verdict(Verdict::new(
        "finite_n_star",
        mode.is_some_and(|n| n <= 64),
        match mode {
            Some(n) => format!("N* = {n} (per field and direction), diff <= {CONVERGED:e} by t = {horizon}"),
            None => format!("no N in {sweep:?} converged by t = {horizon}"),
        },
    ));
    report.verdict(Verdict::new(
        "n_star_seed_stable",
        frac >= SEED_AGREEMENT,
        format!("{agree} of {} seeds share N*", stars.len()),
    ));
    Ok(report)
}
