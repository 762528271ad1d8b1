use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use caom_core::diagnostics::{
    absorbing_radius_r1, check_dissipativity, EnergyLedger, EnergyRecord, ENERGY_CSV_HEADER, TRUNCATION_TOL,
};
use caom_core::experiments::{
    determining_modes, ergodicity_check, fixed_point_contraction, pullback_attractor, random_initial_state,
    theta_feedback_bound, ExperimentConfig, ExperimentReport, Verdict,
};
use caom_core::grid::Field1D;
use caom_core::model::{to_u, ModelError, Observer, Stepper, TransformedState};
use caom_core::seed::seed_split;
use caom_core::selftest;
use caom_core::stochastic::stationary_ou_path;

use crate::config::RunConfig;
use crate::snapshot::write_snapshot;

pub const SUBCOMMANDS: [&str; 7] = ["simulate", "attractor", "determining", "fixedpoint", "ergodicity", "feedback", "selftest"];

/// Envelope slack of the `simulate` dissipativity verdict.
pub const ENVELOPE_SLACK: f64 = 0.05;
/// Absolute drift allowed in `∫S dD`.
pub const MASS_DRIFT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub verdicts: Vec<Verdict>,
}

struct SnapshotWriter<'a> {
    dir: &'a Path,
    stem: String,
    dt: f64,
    every: usize,
    written: Vec<PathBuf>,
    last_step: Option<i64>,
}

impl SnapshotWriter<'_> {
    fn write(&mut self, v: &TransformedState, z: &Field1D) -> std::io::Result<()> {
        let step = (v.time / self.dt).round() as i64;
        if self.last_step == Some(step) {
            return Ok(());
        }
        let path = self.dir.join(format!("{}-{step:08}.snap", self.stem));
        let mut w = BufWriter::new(File::create(&path)?);
        write_snapshot(&mut w, &to_u(v, z))?;
        w.flush()?;
        self.written.push(path);
        self.last_step = Some(step);
        Ok(())
    }
}

impl Observer for SnapshotWriter<'_> {
    fn observe(&mut self, v: &TransformedState, z: &Field1D) -> Result<(), ModelError> {
        let step = (v.time / self.dt).round() as usize;
        if self.every > 0 && step % self.every == 0 {
            self.write(v, z).map_err(|e| ModelError::Observer(e.to_string()))?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn simulate(cfg: &RunConfig, dir: &Path, stem: &str) -> Result<(ExperimentReport, Vec<PathBuf>)> {
    let p = &cfg.params;
    let ledger = EnergyLedger::new(p, cfg.grid);
    let lead = if ledger.is_dissipative() { ((-TRUNCATION_TOL.ln() / ledger.alpha) / cfg.dt).ceil() * cfg.dt } else { cfg.dt };
    let path = stationary_ou_path(&p.noise, &p.b, -lead, cfg.t_end, cfg.dt, seed_split(cfg.seed, "noise", 0))?;
    let v0 = random_initial_state(cfg.grid, seed_split(cfg.seed, "ic", 0), cfg.initial_norm_sq)?;
    let mut st = Stepper::new(cfg.grid, p.clone())?;
    let mut record = EnergyRecord::new();
    let mut snaps = SnapshotWriter { dir, stem: stem.into(), dt: cfg.dt, every: cfg.snapshot_stride, written: Vec::new(), last_step: None };
    let v = st.simulate(&v0, &path, cfg.t_end, cfg.dt, &mut [&mut record, &mut snaps], cfg.stride)?;
    let z = st.z_at(&path, path.end_index())?;
    snaps.write(&v, &z)?;

    let mut csv = String::from(ENERGY_CSV_HEADER);
    csv.push('\n');
    for i in 0..record.len() {
        csv.push_str(&record.csv_row(i));
        csv.push('\n');
    }
    let csv_path = dir.join(format!("{stem}.csv"));
    write_file(&csv_path, &csv)?;

    let ecfg = ExperimentConfig::new(p.clone(), cfg.grid, cfg.dt).with_master_seed(cfg.seed, 1);
    let mut report = ExperimentReport::new("simulate", &ecfg, &[]);
    report.stat("alpha", ledger.alpha);
    report.stat("c10", ledger.c10);
    report.tolerance("envelope_slack", ENVELOPE_SLACK);
    report.tolerance("mass_drift", MASS_DRIFT_TOL);
    let drift = record.s_mass_drift();
    report.stat("s_mass_drift", drift);
    report.verdict(Verdict::new("salinity_mass", drift <= MASS_DRIFT_TOL, format!("max |∫S - ∫S(0)| = {drift:.3e}")));
    if ledger.is_dissipative() {
        let r1 = absorbing_radius_r1(&path.window(-lead, 0.0)?, ledger.alpha, ledger.c10)?.r1;
        let rep = check_dissipativity(&record, ledger.alpha, ledger.c10, r1, ENVELOPE_SLACK);
        report.stat("r1_initial", r1);
        report.stat("envelope_ratio", rep.envelope_ratio);
        report.stat("entry_time", rep.entry_time.unwrap_or(f64::NAN));
        report.verdict(Verdict::new(
            "gronwall_envelope",
            rep.envelope_ok,
            format!("max ‖ṽ‖²/envelope = {:.4}", rep.envelope_ratio),
        ));
    }
    let mut files = vec![csv_path];
    files.extend(snaps.written);
    Ok((report, files))
}

fn selftest_report(cfg: &RunConfig) -> ExperimentReport {
    let ecfg = ExperimentConfig::new(cfg.params.clone(), cfg.grid, cfg.dt).with_master_seed(cfg.seed, 1);
    let mut report = ExperimentReport::new("selftest", &ecfg, &[]);
    for r in selftest::run_all() {
        report.verdict(Verdict::new(r.name, r.passed, r.detail));
    }
    let default_ok = crate::config::parse_config("").is_ok();
    report.verdict(Verdict::new("default_config_valid", default_ok, "empty file parses with all defaults"));
    report
}

/// Runs one subcommand and writes its outputs to `dir`.
pub fn run(subcommand: &str, cfg: &RunConfig, dir: &Path) -> Result<Outcome> {
    if !SUBCOMMANDS.contains(&subcommand) {
        bail!("unknown subcommand `{subcommand}` (expected one of {})", SUBCOMMANDS.join(", "));
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let hash = cfg.hash(subcommand);
    let stem = format!("{subcommand}-{hash}");
    let (mut report, mut files) = match subcommand {
        "simulate" => simulate(cfg, dir, &stem)?,
        "selftest" => (selftest_report(cfg), Vec::new()),
        kind => {
            let ecfg = cfg.experiment(kind).expect("experiment subcommand");
            let report = match kind {
                "attractor" => pullback_attractor(&ecfg),
                "determining" => determining_modes(&ecfg),
                "fixedpoint" => fixed_point_contraction(&ecfg),
                "ergodicity" => ergodicity_check(&ecfg),
                _ => theta_feedback_bound(&ecfg),
            }?;
            let csv = dir.join(format!("{stem}.csv"));
            write_file(&csv, &report.to_csv())?;
            (report, vec![csv])
        }
    };
    report.config_hash = hash;
    if !cfg.defaulted.is_empty() {
        report.notes.push(format!("defaulted keys: {}", cfg.defaulted.join(", ")));
    }
    let txt = dir.join(format!("{stem}.txt"));
    write_file(&txt, &report.to_text())?;
    files.push(txt);
    Ok(Outcome { passed: report.passed(), files, verdicts: report.verdicts })
}
