//! Pathwise simulation of a stochastic coupled atmosphere–ocean model.
//!
//! A 1-D energy balance equation for the surface air temperature `Θ(y,t)` is
//! coupled through a Robin flux at the sea surface to a 2-D Boussinesq ocean
//! (vorticity `q`, temperature `T`, salinity `S`) on the latitude–depth square.
//! The atmosphere is forced by trace-class white noise. The noise is removed by
//! subtracting a stationary Ornstein–Uhlenbeck process, which turns every run
//! into a deterministic ODE solve along a stored noise path.

pub mod diagnostics;
pub mod experiments;
pub mod grid;
pub mod model;
pub mod seed;
pub mod selftest;
pub mod stochastic;
