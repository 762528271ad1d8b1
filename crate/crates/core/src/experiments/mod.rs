//! Ensemble drivers that test the long-time claims about the random dynamical
//! system: pullback attractor, determining modes, random fixed point,
//! ergodicity and the mean-square feedback bound.
//!
//! Ensemble members run on the rayon pool and are collected in input order,
//! so every report is independent of the worker count.

mod attractor;
mod determining;
mod feedback;
mod fixed_point;
mod report;
mod stats;

pub use attractor::pullback_attractor;
pub use determining::{determining_modes, nudged_run, ModalProjector, NudgeTrace};
pub use feedback::theta_feedback_bound;
pub use fixed_point::{check_consistency, ergodicity_check, fixed_point_contraction};
pub use report::{ExperimentReport, Verdict};
pub use stats::{batch_means, bootstrap_mean, BootstrapSummary};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::grid::{Field1D, Grid2D};
use crate::model::{ModelError, ModelParams, TransformedState};
use crate::seed::seed_list;
use crate::stochastic::NoiseError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("{0}; reduce Ra or dt")]
    Regime(String),
    #[error(transparent)]
    Model(ModelError),
}

impl From<ModelError> for ExperimentError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Blowup { .. } | ModelError::StepSize { .. } => ExperimentError::Regime(e.to_string()),
            other => ExperimentError::Model(other),
        }
    }
}

impl From<NoiseError> for ExperimentError {
    fn from(e: NoiseError) -> Self {
        ExperimentError::Model(ModelError::Noise(e))
    }
}

/// Scalar functional of the physical state `u = v + Z`.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// `‖u‖²_H`.
    HNormSq,
    /// `∫Θ dy`.
    ThetaMean,
    /// `‖Θ‖²`.
    ThetaL2Sq,
    /// `Σ_i w_i Θ(y_i)` with one weight per latitude node.
    Linear(Vec<f64>),
}

impl Observable {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "h_norm_sq" => Some(Self::HNormSq),
            "theta_mean" => Some(Self::ThetaMean),
            "theta_l2_sq" => Some(Self::ThetaL2Sq),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::HNormSq => "h_norm_sq",
            Self::ThetaMean => "theta_mean",
            Self::ThetaL2Sq => "theta_l2_sq",
            Self::Linear(_) => "custom",
        }
    }

    pub fn eval(&self, v: &TransformedState, z: &Field1D) -> f64 {
        let theta = Field1D { values: &v.theta.values + &z.values };
        match self {
            Self::HNormSq => theta.dot(&theta) + v.q.dot(&v.q) + v.t_ocean.dot(&v.t_ocean) + v.s_ocean.dot(&v.s_ocean),
            Self::ThetaMean => theta.integral(),
            Self::ThetaL2Sq => theta.dot(&theta),
            Self::Linear(w) => w.iter().zip(theta.values.iter()).map(|(a, b)| a * b).sum(),
        }
    }
}

/// Shared configuration of the experiment drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub grid: Grid2D,
    pub dt: f64,
    pub ensemble_size: usize,
    /// One seed per ensemble member.
    pub seeds: Vec<u64>,
    /// Noise seed of the single realisation used by the pullback experiment.
    pub noise_seed: u64,
    /// Strictly increasing times; the meaning depends on the experiment.
    pub horizons: Vec<f64>,
    pub modes_n: usize,
    /// Candidate mode counts for the `N*` search.
    pub mode_sweep: Vec<usize>,
    pub observable: Observable,
    pub burn_in: f64,
    /// Initial-data size: a multiple of `R₁` (pullback) or `‖v₀‖²` (others).
    pub ic_scale: f64,
    /// `σ₀` multipliers for the feedback sweep.
    pub sigma_sweep: Vec<f64>,
    pub bootstrap: usize,
    /// Initial-condition pairs per realisation in the contraction estimate.
    pub pairs: usize,
    /// Sampling stride (in steps) for time series.
    pub stride: usize,
}

impl ExperimentConfig {
    pub fn new(params: ModelParams, grid: Grid2D, dt: f64) -> Self {
        Self {
            params,
            grid,
            dt,
            ensemble_size: 1,
            seeds: vec![0],
            noise_seed: 0,
            horizons: vec![1.0],
            modes_n: 0,
            mode_sweep: vec![0, 1, 2, 4, 8, 16, 32, 64],
            observable: Observable::ThetaL2Sq,
            burn_in: 20.0,
            ic_scale: 1.0,
            sigma_sweep: vec![0.5, 1.0, 2.0],
            bootstrap: 2000,
            pairs: 4,
            stride: 1,
        }
    }

    /// Sets `count` member seeds and the noise seed from a master seed.
    pub fn with_master_seed(mut self, master: u64, count: usize) -> Self {
        self.seeds = seed_list(master, "member", count);
        self.noise_seed = crate::seed::seed_split(master, "noise", 0);
        self.ensemble_size = count;
        self
    }

    pub fn with_horizons(mut self, horizons: &[f64]) -> Self {
        self.horizons = horizons.to_vec();
        self
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.params.validate().map_err(ExperimentError::Model)?;
        if self.params.ny() != self.grid.ny() {
            return Err(ExperimentError::Config(format!(
                "profiles have {} cells but the grid has {}",
                self.params.ny(),
                self.grid.ny()
            )));
        }
        if !(self.dt > 0.0) {
            return Err(ExperimentError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.ensemble_size == 0 || self.ensemble_size != self.seeds.len() {
            return Err(ExperimentError::Config(format!(
                "ensemble_size = {} but {} seeds given",
                self.ensemble_size,
                self.seeds.len()
            )));
        }
        if self.horizons.is_empty() || self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ExperimentError::Config("horizons must be non-empty and strictly increasing".into()));
        }
        for h in &self.horizons {
            if crate::stochastic::mesh_index(*h, self.dt).is_err() {
                return Err(ExperimentError::Config(format!("horizon {h} is not a multiple of dt = {}", self.dt)));
            }
        }
        if self.stride == 0 {
            return Err(ExperimentError::Config("stride must be positive".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the config's debug form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(format!("{self:?}").as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn t_max(&self) -> f64 {
        *self.horizons.last().unwrap()
    }

    pub(crate) fn steps(&self, t: f64) -> i64 {
        (t / self.dt).round() as i64
    }
}

/// Smooth random state with `‖v‖²_H = norm_sq`, at time 0.
pub fn random_initial_state(grid: Grid2D, seed: u64, norm_sq: f64) -> Result<TransformedState, ModelError> {
    let v = TransformedState::random_smooth(grid, seed, 4)?;
    let n = v.composite().l2_sq;
    Ok(if n > 0.0 { v.scaled((norm_sq / n).sqrt()) } else { v })
}

/// Order-preserving parallel map with error propagation.
pub(crate) fn par_map<T: Sync, R: Send>(
    items: &[T],
    f: impl Fn(&T) -> Result<R, ExperimentError> + Sync + Send,
) -> Result<Vec<R>, ExperimentError> {
    items.par_iter().map(f).collect()
}

/// Standard notes attached to every report.
pub(crate) fn provenance_notes(cfg: &ExperimentConfig) -> Vec<String> {
    vec![
        "profiles b, S_a, S_o, F and the power-law noise spectrum are configurable model choices".into(),
        format!(
            "grid {}x{}, dt {}, noise sigma0 {}, gamma {}, modes {}",
            cfg.grid.ny(),
            cfg.grid.nz(),
            cfg.dt,
            cfg.params.noise.sigma0(),
            cfg.params.noise.gamma(),
            cfg.params.noise.n_modes()
        ),
    ]
}
