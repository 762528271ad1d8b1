//! Run configuration: a TOML file of `key = value` pairs in sections.
//!
//! Every key is optional. Keys that are not given take their defaults and are
//! listed in [`RunConfig::defaulted`]. Unknown keys and sections are errors.

use std::path::PathBuf;

use caom_core::experiments::{ExperimentConfig, Observable};
use caom_core::grid::Grid2D;
use caom_core::model::{defaults, ModelError, ModelParams, Profile};
use caom_core::stochastic::NoiseSpectrum;
use sha2::{Digest, Sha256};
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("{key}: expected {expected}")]
    Type { key: String, expected: &'static str },
    #[error("{key}: {message}")]
    Constraint { key: String, message: String },
}

fn constraint(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Constraint { key: key.into(), message: message.into() }
}

/// Scaling applied to the data for the contraction and ergodicity runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub small_data: bool,
    /// Multiplier on `a`, `S_a`, `S_o`, `F` and `σ₀`.
    pub data_factor: f64,
    pub nu: f64,
}

impl Regime {
    fn apply(&self, p: &ModelParams) -> ModelParams {
        if self.small_data {
            p.small_data(self.data_factor, self.nu)
        } else {
            p.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttractorSection {
    pub members: usize,
    pub horizons: Vec<f64>,
    /// Initial norms² run up to `ic_scale · R₁`.
    pub ic_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeterminingSection {
    pub seeds: usize,
    pub horizon: f64,
    pub mode_sweep: Vec<usize>,
    pub modes_n: usize,
    pub ic_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSection {
    pub realizations: usize,
    pub pairs: usize,
    pub window: f64,
    pub horizon: f64,
    pub ic_scale: f64,
    pub bootstrap: usize,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicitySection {
    pub members: usize,
    pub t_long: f64,
    pub burn_in: f64,
    pub observable: Observable,
    pub ic_scale: f64,
    pub bootstrap: usize,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackSection {
    pub members: usize,
    pub horizon: f64,
    pub sigma_sweep: Vec<f64>,
    pub ic_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 means all available.
    pub workers: usize,
    /// Sampling stride of time series, in steps.
    pub stride: usize,
    /// Snapshot interval of `simulate`, in steps; 0 writes the final state only.
    pub snapshot_stride: usize,
    pub grid: Grid2D,
    pub dt: f64,
    pub t_end: f64,
    pub initial_norm_sq: f64,
    pub params: ModelParams,
    pub attractor: AttractorSection,
    pub determining: DeterminingSection,
    pub fixedpoint: FixedPointSection,
    pub ergodicity: ErgodicitySection,
    pub feedback: FeedbackSection,
    /// Keys that took their default value, as `section.key`.
    pub defaulted: Vec<String>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

/// Typed reads from one table, tracking used and defaulted keys.
struct Section<'a> {
    name: String,
    table: Option<&'a Table>,
    used: Vec<&'static str>,
    defaulted: &'a mut Vec<String>,
}

impl<'a> Section<'a> {
    fn key(&self, k: &str) -> String {
        if self.name.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.name)
        }
    }

    fn raw(&mut self, k: &'static str) -> Option<&'a Value> {
        self.used.push(k);
        let v = self.table.and_then(|t| t.get(k));
        if v.is_none() {
            let key = self.key(k);
            self.defaulted.push(key);
        }
        v
    }

    fn f64(&mut self, k: &'static str, default: f64) -> Result<f64, ConfigError> {
        match self.raw(k) {
            None => Ok(default),
            Some(v) => as_f64(v).ok_or(ConfigError::Type { key: self.key(k), expected: "a number" }),
        }
    }

    fn positive(&mut self, k: &'static str, default: f64) -> Result<f64, ConfigError> {
        let v = self.f64(k, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(constraint(&self.key(k), format!("must be > 0, got {v}")));
        }
        Ok(v)
    }

    fn non_negative(&mut self, k: &'static str, default: f64) -> Result<f64, ConfigError> {
        let v = self.f64(k, default)?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(constraint(&self.key(k), format!("must be >= 0, got {v}")));
        }
        Ok(v)
    }

    fn uint(&mut self, k: &'static str, default: u64) -> Result<u64, ConfigError> {
        match self.raw(k) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
            Some(_) => Err(ConfigError::Type { key: self.key(k), expected: "a non-negative integer" }),
        }
    }

    fn count(&mut self, k: &'static str, default: usize) -> Result<usize, ConfigError> {
        let v = self.uint(k, default as u64)? as usize;
        if v == 0 {
            return Err(constraint(&self.key(k), "must be positive"));
        }
        Ok(v)
    }

    fn bool(&mut self, k: &'static str, default: bool) -> Result<bool, ConfigError> {
        match self.raw(k) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(ConfigError::Type { key: self.key(k), expected: "true or false" }),
        }
    }

    fn string(&mut self, k: &'static str, default: &str) -> Result<String, ConfigError> {
        match self.raw(k) {
            None => Ok(default.into()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(ConfigError::Type { key: self.key(k), expected: "a string" }),
        }
    }

    fn f64_list(&mut self, k: &'static str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.raw(k) {
            None => Ok(default.to_vec()),
            Some(Value::Array(a)) => a
                .iter()
                .map(as_f64)
                .collect::<Option<Vec<_>>>()
                .ok_or(ConfigError::Type { key: self.key(k), expected: "a list of numbers" }),
            Some(_) => Err(ConfigError::Type { key: self.key(k), expected: "a list of numbers" }),
        }
    }

    fn increasing(&mut self, k: &'static str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        let v = self.f64_list(k, default)?;
        if v.is_empty() || v.windows(2).any(|w| w[1] <= w[0]) || v[0] <= 0.0 {
            return Err(constraint(&self.key(k), "must be a non-empty, positive, strictly increasing list"));
        }
        Ok(v)
    }

    fn usize_list(&mut self, k: &'static str, default: &[usize]) -> Result<Vec<usize>, ConfigError> {
        let key = self.key(k);
        let err = || ConfigError::Type { key: key.clone(), expected: "a list of non-negative integers" };
        match self.raw(k) {
            None => Ok(default.to_vec()),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Some(*i as usize),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(err),
            Some(_) => Err(err()),
        }
    }

    fn profile(&mut self, k: &'static str, default: Profile) -> Result<Profile, ConfigError> {
        let key = self.key(k);
        let bad = || ConfigError::Type {
            key: key.clone(),
            expected: "a number, a list of node values, or { kind = \"cosine\", mean, amp, k }",
        };
        match self.raw(k) {
            None => Ok(default),
            Some(Value::Array(a)) => a.iter().map(as_f64).collect::<Option<Vec<_>>>().map(Profile::Nodes).ok_or_else(bad),
            Some(Value::Table(t)) => {
                let mut defaulted = Vec::new();
                let mut s = Section { name: key.clone(), table: Some(t), used: Vec::new(), defaulted: &mut defaulted };
                let kind = s.string("kind", "constant")?;
                let p = match kind.as_str() {
                    "constant" => Profile::Constant(s.f64("value", 0.0)?),
                    "cosine" => Profile::Cosine {
                        mean: s.f64("mean", 0.0)?,
                        amp: s.f64("amp", 0.0)?,
                        k: s.uint("k", 1)? as u32,
                    },
                    other => return Err(constraint(&format!("{key}.kind"), format!("unknown profile kind `{other}`"))),
                };
                s.finish()?;
                Ok(p)
            }
            Some(v) => as_f64(v).map(Profile::Constant).ok_or_else(bad),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some(t) = self.table {
            if let Some(k) = t.keys().find(|k| !self.used.contains(&k.as_str())) {
                return Err(ConfigError::UnknownKey(self.key(k)));
            }
        }
        Ok(())
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

const SECTIONS: [&str; 11] =
    ["model", "profiles", "grid", "time", "noise", "initial", "attractor", "determining", "fixedpoint", "ergodicity", "feedback"];

fn sample(p: &Profile, n: usize, key: &str) -> Result<caom_core::grid::Field1D, ConfigError> {
    p.sample(n).map_err(|e| constraint(key, e.to_string()))
}

fn regime(s: &mut Section) -> Result<Regime, ConfigError> {
    Ok(Regime {
        small_data: s.bool("small_data", true)?,
        data_factor: s.non_negative("data_factor", 0.01)?,
        nu: s.positive("nu", 10.0)?,
    })
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    for (k, v) in &root {
        if SECTIONS.contains(&k.as_str()) && !v.is_table() {
            return Err(ConfigError::Type { key: k.clone(), expected: "a [section]" });
        }
    }
    let mut defaulted = Vec::new();
    let table = |name: &str| root.get(name).and_then(Value::as_table);
    macro_rules! section {
        ($name:expr) => {
            Section { name: $name.to_string(), table: table($name), used: Vec::new(), defaulted: &mut defaulted }
        };
    }

    let mut top = Section { name: String::new(), table: Some(&root), used: SECTIONS.to_vec(), defaulted: &mut defaulted };
    let seed = top.uint("seed", 0)?;
    let out = PathBuf::from(top.string("out", "out")?);
    let workers = top.uint("workers", 0)? as usize;
    let stride = top.count("stride", 10)?;
    let snapshot_stride = top.uint("snapshot_stride", 0)? as usize;
    top.finish()?;
    if snapshot_stride % stride != 0 {
        return Err(constraint("snapshot_stride", format!("must be a multiple of stride = {stride}")));
    }

    let mut s = section!("grid");
    let ny = s.uint("ny", 64)? as usize;
    let nz = s.uint("nz", 64)? as usize;
    s.finish()?;
    let grid = Grid2D::new(ny, nz).map_err(|e| constraint("grid", e.to_string()))?;

    let mut s = section!("time");
    let dt = s.positive("dt", 1e-3)?;
    let t_end = s.positive("t_end", 10.0)?;
    s.finish()?;
    let steps = t_end / dt;
    if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
        return Err(constraint("time.t_end", format!("{t_end} is not a whole number of steps of dt = {dt}")));
    }

    let mut s = section!("model");
    let (a, pr, ra, nu) = (s.f64("a", defaults::A)?, s.f64("pr", defaults::PR)?, s.f64("ra", defaults::RA)?, s.f64("nu", defaults::NU)?);
    s.finish()?;

    let mut s = section!("profiles");
    let b = s.profile("b", defaults::b())?;
    let s_a = s.profile("s_a", defaults::s_a())?;
    let s_o = s.profile("s_o", defaults::s_o())?;
    let f = s.profile("f", defaults::f_flux())?;
    s.finish()?;

    let base = NoiseSpectrum::default();
    let mut s = section!("noise");
    let sigma0 = s.f64("sigma0", base.sigma0())?;
    let gamma = s.f64("gamma", base.gamma())?;
    let modes = s.uint("modes", base.n_modes() as u64)? as usize;
    s.finish()?;
    let noise = NoiseSpectrum::new(sigma0, gamma, modes).map_err(|e| {
        let key = if !(sigma0 >= 0.0) {
            "noise.sigma0"
        } else if !(gamma > 0.5) {
            "noise.gamma"
        } else {
            "noise.modes"
        };
        constraint(key, e.to_string())
    })?;

    let params = ModelParams {
        a,
        pr,
        ra,
        nu,
        b: sample(&b, ny, "profiles.b")?,
        s_a: sample(&s_a, ny, "profiles.s_a")?,
        s_o: sample(&s_o, ny, "profiles.s_o")?,
        f_flux: sample(&f, ny, "profiles.f")?,
        noise,
    };
    params.validate().map_err(|e| match e {
        ModelError::Constraint { key, message } => ConfigError::Constraint { key, message },
        other => constraint("model", other.to_string()),
    })?;

    let mut s = section!("initial");
    let initial_norm_sq = s.non_negative("norm_sq", 1.0)?;
    s.finish()?;

    let mut s = section!("attractor");
    let attractor = AttractorSection {
        members: s.count("members", 16)?,
        horizons: s.increasing("horizons", &[1.0, 2.0, 4.0, 8.0, 16.0])?,
        ic_scale: s.non_negative("ic_scale", 1.0)?,
    };
    s.finish()?;

    let mut s = section!("determining");
    let determining = DeterminingSection {
        seeds: s.count("seeds", 8)?,
        horizon: s.positive("horizon", 50.0)?,
        mode_sweep: s.usize_list("mode_sweep", &[0, 1, 2, 4, 8, 16, 32, 64])?,
        modes_n: s.uint("modes_n", 0)? as usize,
        ic_scale: s.non_negative("ic_scale", 1.0)?,
    };
    s.finish()?;
    if determining.mode_sweep.is_empty() {
        return Err(constraint("determining.mode_sweep", "must not be empty"));
    }

    let mut s = section!("fixedpoint");
    let fixedpoint = FixedPointSection {
        realizations: s.count("realizations", 32)?,
        pairs: s.count("pairs", 4)?,
        window: s.positive("window", 1.0)?,
        horizon: s.positive("horizon", 10.0)?,
        ic_scale: s.positive("ic_scale", 1.0)?,
        bootstrap: s.uint("bootstrap", 2000)? as usize,
        regime: regime(&mut s)?,
    };
    s.finish()?;
    if fixedpoint.horizon <= fixedpoint.window {
        return Err(constraint("fixedpoint.horizon", "must exceed fixedpoint.window"));
    }

    let mut s = section!("ergodicity");
    let observable = match s.raw("observable") {
        None => Observable::ThetaL2Sq,
        Some(Value::String(n)) => Observable::parse(n).ok_or_else(|| {
            constraint("ergodicity.observable", format!("unknown observable `{n}` (h_norm_sq, theta_mean, theta_l2_sq or a weight list)"))
        })?,
        Some(Value::Array(a)) => {
            let w = a
                .iter()
                .map(as_f64)
                .collect::<Option<Vec<_>>>()
                .ok_or(ConfigError::Type { key: "ergodicity.observable".into(), expected: "a name or a list of numbers" })?;
            if w.len() != ny + 1 {
                return Err(constraint("ergodicity.observable", format!("needs {} weights, got {}", ny + 1, w.len())));
            }
            Observable::Linear(w)
        }
        Some(_) => return Err(ConfigError::Type { key: "ergodicity.observable".into(), expected: "a name or a list of numbers" }),
    };
    let ergodicity = ErgodicitySection {
        members: s.count("members", 64)?,
        t_long: s.positive("t_long", 1000.0)?,
        burn_in: s.non_negative("burn_in", 20.0)?,
        observable,
        ic_scale: s.non_negative("ic_scale", 1.0)?,
        bootstrap: s.uint("bootstrap", 2000)? as usize,
        regime: regime(&mut s)?,
    };
    s.finish()?;

    let mut s = section!("feedback");
    let feedback = FeedbackSection {
        members: s.count("members", 32)?,
        horizon: s.positive("horizon", 200.0)?,
        sigma_sweep: s.increasing("sigma_sweep", &[0.5, 1.0, 2.0])?,
        ic_scale: s.non_negative("ic_scale", 1.0)?,
    };
    s.finish()?;

    Ok(RunConfig {
        seed,
        out,
        workers,
        stride,
        snapshot_stride,
        grid,
        dt,
        t_end,
        initial_norm_sq,
        params,
        attractor,
        determining,
        fixedpoint,
        ergodicity,
        feedback,
        defaulted,
    })
}

impl RunConfig {
    /// Everything that affects results; excludes the output directory, worker count and the defaulted list.
    pub fn hash(&self, subcommand: &str) -> String {
        let key = format!(
            "{subcommand}|{}|{}|{}|{:?}|{}|{}|{}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}",
            self.seed,
            self.stride,
            self.snapshot_stride,
            self.grid,
            self.dt,
            self.t_end,
            self.initial_norm_sq,
            self.params,
            self.attractor,
            self.determining,
            self.fixedpoint,
            self.ergodicity,
            self.feedback
        );
        Sha256::digest(key.as_bytes())[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn base(&self, params: ModelParams, members: usize, horizons: &[f64]) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(params, self.grid, self.dt).with_master_seed(self.seed, members).with_horizons(horizons);
        c.stride = self.stride;
        c
    }

    /// Driver configuration for one experiment subcommand.
    pub fn experiment(&self, kind: &str) -> Option<ExperimentConfig> {
        Some(match kind {
            "attractor" => {
                let s = &self.attractor;
                let mut c = self.base(self.params.clone(), s.members, &s.horizons);
                c.ic_scale = s.ic_scale;
                c
            }
            "determining" => {
                let s = &self.determining;
                let mut c = self.base(self.params.clone(), s.seeds, &[s.horizon]);
                c.mode_sweep = s.mode_sweep.clone();
                c.modes_n = s.modes_n;
                c.ic_scale = s.ic_scale;
                c
            }
            "fixedpoint" => {
                let s = &self.fixedpoint;
                let mut c = self.base(s.regime.apply(&self.params), s.realizations, &[s.window, s.horizon]);
                c.pairs = s.pairs;
                c.bootstrap = s.bootstrap;
                c.ic_scale = s.ic_scale;
                c
            }
            "ergodicity" => {
                let s = &self.ergodicity;
                let mut c = self.base(s.regime.apply(&self.params), s.members, &[s.t_long]);
                c.burn_in = s.burn_in;
                c.observable = s.observable.clone();
                c.bootstrap = s.bootstrap;
                c.ic_scale = s.ic_scale;
                c
            }
            "feedback" => {
                let s = &self.feedback;
                let mut c = self.base(self.params.clone(), s.members, &[s.horizon]);
                c.sigma_sweep = s.sigma_sweep.clone();
                c.ic_scale = s.ic_scale;
                c
            }
            _ => return None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_numbers() {
        assert_eq!(line_of("a\nb\nc", 0), 1);
        assert_eq!(line_of("a\nb\nc", 4), 3);
    }
}
