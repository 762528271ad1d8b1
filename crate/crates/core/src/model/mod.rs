//! The coupled energy-balance / Boussinesq system, integrated pathwise in the
//! transformed variable `v = u - Z`.

mod params;
mod state;
mod step;

pub use params::{defaults, ModelParams, Profile, FLUX_INTEGRAL_TOL};
pub use state::{remove_mean, to_u, to_v, CoupledState, TransformedState};
pub use step::{rhs_transformed, simulate, Observer, Stepper, Tendency, DEFAULT_DT};

use thiserror::Error;

use crate::grid::GridError;
use crate::stochastic::NoiseError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{key}: {message}")]
    Constraint { key: String, message: String },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("integration blew up at t = {time}: field {field} is not finite")]
    Blowup { time: f64, field: String },
    #[error("step size {dt} exceeds the advective limit {dt_max}")]
    StepSize { dt: f64, dt_max: f64 },
    #[error("observer failed: {0}")]
    Observer(String),
}
