//! Trace-class Wiener forcing and the stationary Ornstein–Uhlenbeck process
//! `dz + A₁ z dt = dw`, `A₁ = -∂_yy + (1 + b(y))` with Neumann ends.
//!
//! Everything is expanded in the cosine basis `φ_k(y) = cos(kπy)`, `k = 0..=n_modes`.
//! The covariance `Q` is diagonal there with variances
//! `σ_k² = σ₀² (1 + (kπ)²)^(-γ)`.
//!
//! Each mode draws from its own ChaCha8 stream (`seed`, stream = mode index), so
//! a path depends only on `(seed, t0, t1, dt, spectrum, b)` and never on the
//! order in which modes or paths are generated.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::grid::Field1D;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("noise spectrum: {0}")]
    Spectrum(String),
    #[error("path window [{lo}, {hi}] outside generated support [{t0}, {t1}]")]
    Range { lo: f64, hi: f64, t0: f64, t1: f64 },
    #[error("invalid path request: {0}")]
    Argument(String),
}

/// Power-law spectrum of `Q` in the cosine basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpectrum {
    sigma0: f64,
    gamma: f64,
    n_modes: usize,
}

impl Default for NoiseSpectrum {
    fn default() -> Self {
        Self { sigma0: 0.1, gamma: 1.0, n_modes: 32 }
    }
}

impl NoiseSpectrum {
    pub fn new(sigma0: f64, gamma: f64, n_modes: usize) -> Result<Self, NoiseError> {
        if !(sigma0 >= 0.0 && sigma0.is_finite()) {
            return Err(NoiseError::Spectrum(format!("sigma0 must be >= 0, got {sigma0}")));
        }
        if !(gamma > 0.5 && gamma.is_finite()) {
            return Err(NoiseError::Spectrum(format!("gamma must exceed 1/2 for a trace-class Q, got {gamma}")));
        }
        if n_modes == 0 {
            return Err(NoiseError::Spectrum("n_modes must be positive".into()));
        }
        Ok(Self { sigma0, gamma, n_modes })
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn with_sigma0(&self, sigma0: f64) -> Result<Self, NoiseError> {
        Self::new(sigma0, self.gamma, self.n_modes)
    }

    /// `σ_k²`.
    pub fn variance(&self, k: usize) -> f64 {
        let kp = k as f64 * PI;
        self.sigma0 * self.sigma0 * (1.0 + kp * kp).powf(-self.gamma)
    }

    /// `Σ_k σ_k²`.
    pub fn trace(&self) -> f64 {
        (0..=self.n_modes).map(|k| self.variance(k)).sum()
    }

    /// Trace of `Q` on `L2(0,1)`: `Σ_k σ_k² ‖φ_k‖²` with `‖φ_0‖² = 1`, `‖φ_k‖² = 1/2`.
    pub fn l2_trace(&self) -> f64 {
        (0..=self.n_modes).map(|k| self.variance(k) * basis_norm_sq(k)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.sigma0 == 0.0
    }
}

/// `‖cos(kπ·)‖²_{L2(0,1)}`.
pub fn basis_norm_sq(k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        0.5
    }
}

/// One independent ChaCha8 stream per mode.
#[derive(Debug, Clone)]
pub struct ModeStreams {
    streams: Vec<ChaCha8Rng>,
}

impl ModeStreams {
    pub fn new(seed: u64, n_modes: usize) -> Self {
        let streams = (0..=n_modes)
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                rng
            })
            .collect();
        Self { streams }
    }

    fn normal(&mut self, k: usize) -> f64 {
        StandardNormal.sample(&mut self.streams[k])
    }
}

/// Mode coefficients of `Δw = Σ_k √(σ_k² dt) ξ_k φ_k`.
pub fn wiener_increment_modes(spec: &NoiseSpectrum, dt: f64, rng: &mut ModeStreams) -> Vec<f64> {
    (0..=spec.n_modes)
        .map(|k| {
            let xi = rng.normal(k);
            (spec.variance(k) * dt).sqrt() * xi
        })
        .collect()
}

/// `Δw` on `n` cells of `[0,1]`.
pub fn wiener_increment(spec: &NoiseSpectrum, dt: f64, rng: &mut ModeStreams, n: usize) -> Field1D {
    let modes = wiener_increment_modes(spec, dt, rng);
    ModeSynthesis::new(n, spec.n_modes).field(&modes)
}

/// Evaluates cosine series at the nodes of an `n`-cell grid.
#[derive(Debug, Clone)]
pub struct ModeSynthesis {
    matrix: Array2<f64>,
}

impl ModeSynthesis {
    pub fn new(n: usize, n_modes: usize) -> Self {
        let h = 1.0 / n as f64;
        let matrix = Array2::from_shape_fn((n + 1, n_modes + 1), |(i, k)| (k as f64 * PI * i as f64 * h).cos());
        Self { matrix }
    }

    pub fn field(&self, modes: &[f64]) -> Field1D {
        let c = ndarray::ArrayView1::from(modes);
        Field1D { values: self.matrix.dot(&c) }
    }
}

/// `A₁` in the cosine basis: diagonal `λ_k = (kπ)² + 1 + b̄` plus the coupling from `b - b̄`.
#[derive(Debug, Clone)]
pub struct OuOperator {
    lambdas: Vec<f64>,
    coupling: Option<Array2<f64>>,
}

impl OuOperator {
    pub fn new(n_modes: usize, b: &Field1D) -> Self {
        let b_mean = b.mean();
        let lambdas = (0..=n_modes).map(|k| (k as f64 * PI).powi(2) + 1.0 + b_mean).collect();
        let coupling = if b.max() == b.min() {
            None
        } else {
            // C_kj = <(b - b̄) φ_j, φ_k> / <φ_k, φ_k> by trapezoid on b's nodes
            let n = b.n();
            let phi = ModeSynthesis::new(n, n_modes).matrix;
            let fluct: Vec<f64> = b.values.iter().map(|v| v - b_mean).collect();
            let quad = |f: &dyn Fn(usize) -> f64| {
                (0..=n).map(|i| crate::grid::trapezoid_weight(i, n) * f(i)).sum::<f64>() / n as f64
            };
            let norms: Vec<f64> = (0..=n_modes).map(|k| quad(&|i| phi[[i, k]] * phi[[i, k]])).collect();
            Some(Array2::from_shape_fn((n_modes + 1, n_modes + 1), |(k, j)| {
                quad(&|i| fluct[i] * phi[[i, j]] * phi[[i, k]]) / norms[k]
            }))
        };
        Self { lambdas, coupling }
    }

    pub fn lambda(&self, k: usize) -> f64 {
        self.lambdas[k]
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.lambdas.last().unwrap()
    }

    pub fn n_modes(&self) -> usize {
        self.lambdas.len() - 1
    }

    pub fn has_coupling(&self) -> bool {
        self.coupling.is_some()
    }
}

/// Semi-implicit OU step `z_k ← (z_k + Δw_k - dt (C z)_k) / (1 + dt λ_k)`.
pub fn ou_advance(z: &mut [f64], dt: f64, increment: &[f64], op: &OuOperator) {
    let cz: Option<Array1<f64>> = op.coupling.as_ref().map(|c| c.dot(&ndarray::ArrayView1::from(&*z)));
    for k in 0..z.len() {
        let explicit = cz.as_ref().map_or(0.0, |c| dt * c[k]);
        z[k] = (z[k] + increment[k] - explicit) / (1.0 + dt * op.lambdas[k]);
    }
}

/// A stored realisation of the stationary OU process on the mesh `t = i·dt`.
///
/// Mesh indices are integers, so Wiener shifts by mesh multiples are exact.
#[derive(Debug, Clone)]
pub struct OUPath {
    dt: f64,
    start_index: i64,
    modes: Arc<Array2<f64>>,
    seed: u64,
    spec: NoiseSpectrum,
    b_profile: Field1D,
    stability_warning: bool,
}

impl PartialEq for OUPath {
    fn eq(&self, other: &Self) -> bool {
        self.dt == other.dt
            && self.start_index == other.start_index
            && self.seed == other.seed
            && self.spec == other.spec
            && self.b_profile == other.b_profile
            && *self.modes == *other.modes
    }
}

/// Nearest mesh index of `t`, requiring `t` to lie on the mesh.
pub fn mesh_index(t: f64, dt: f64) -> Result<i64, NoiseError> {
    let x = t / dt;
    let r = x.round();
    if (x - r).abs() > 1e-6 {
        return Err(NoiseError::Argument(format!("time {t} is not a multiple of dt = {dt}")));
    }
    Ok(r as i64)
}

/// Generates a path on `[t0, t1]` after a burn-in of `10/λ_min` from rest.
pub fn stationary_ou_path(
    spec: &NoiseSpectrum,
    b_profile: &Field1D,
    t0: f64,
    t1: f64,
    dt: f64,
    seed: u64,
) -> Result<OUPath, NoiseError> {
    if !(dt > 0.0) {
        return Err(NoiseError::Argument(format!("dt must be positive, got {dt}")));
    }
    if !(t0 < t1) {
        return Err(NoiseError::Argument(format!("need t0 < t1, got [{t0}, {t1}]")));
    }
    let i0 = mesh_index(t0, dt)?;
    let i1 = mesh_index(t1, dt)?;
    let op = OuOperator::new(spec.n_modes, b_profile);
    let m = spec.n_modes + 1;
    let steps = (i1 - i0) as usize;
    let mut modes = Array2::zeros((steps + 1, m));
    if !spec.is_zero() {
        let mut rng = ModeStreams::new(seed, spec.n_modes);
        let burn = (10.0 / op.lambda_min() / dt).ceil() as usize;
        let mut z = vec![0.0; m];
        for _ in 0..burn {
            let inc = wiener_increment_modes(spec, dt, &mut rng);
            ou_advance(&mut z, dt, &inc, &op);
        }
        modes.row_mut(0).assign(&ndarray::ArrayView1::from(&z[..]));
        for s in 1..=steps {
            let inc = wiener_increment_modes(spec, dt, &mut rng);
            ou_advance(&mut z, dt, &inc, &op);
            modes.row_mut(s).assign(&ndarray::ArrayView1::from(&z[..]));
        }
    }
    Ok(OUPath {
        dt,
        start_index: i0,
        modes: Arc::new(modes),
        seed,
        spec: *spec,
        b_profile: b_profile.clone(),
        stability_warning: dt >= 1.0 / op.lambda_max(),
    })
}

/// The path of `t ↦ z(θ_s ω)(t) = z(ω)(t + s)`; `s` must be a mesh multiple.
pub fn wiener_shift(path: &OUPath, s: f64) -> Result<OUPath, NoiseError> {
    let m = mesh_index(s, path.dt)?;
    let mut shifted = path.clone();
    shifted.start_index = path.start_index - m;
    Ok(shifted)
}

impl OUPath {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spec(&self) -> &NoiseSpectrum {
        &self.spec
    }

    pub fn b_profile(&self) -> &Field1D {
        &self.b_profile
    }

    /// True when `dt ≥ 1/λ_max`: stable but biased in the stiffest modes.
    pub fn stability_warning(&self) -> bool {
        self.stability_warning
    }

    pub fn start_index(&self) -> i64 {
        self.start_index
    }

    pub fn end_index(&self) -> i64 {
        self.start_index + self.modes.nrows() as i64 - 1
    }

    pub fn t0(&self) -> f64 {
        self.start_index as f64 * self.dt
    }

    pub fn t1(&self) -> f64 {
        self.end_index() as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.modes.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.nrows() == 0
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        lo >= self.start_index && hi <= self.end_index()
    }

    /// Mode coefficients at absolute mesh index `i`.
    pub fn modes_at(&self, i: i64) -> Result<ndarray::ArrayView1<'_, f64>, NoiseError> {
        if !self.covers(i, i) {
            let t = i as f64 * self.dt;
            return Err(NoiseError::Range { lo: t, hi: t, t0: self.t0(), t1: self.t1() });
        }
        Ok(self.modes.row((i - self.start_index) as usize))
    }

    pub fn field_at(&self, i: i64, synth: &ModeSynthesis) -> Result<Field1D, NoiseError> {
        let row = self.modes_at(i)?;
        Ok(Field1D { values: synth.matrix.dot(&row) })
    }

    /// `‖z(t_i)‖²` from the modes (continuous cosine normalisation).
    pub fn norm_sq_at(&self, i: i64) -> Result<f64, NoiseError> {
        Ok(self.modes_at(i)?.iter().enumerate().map(|(k, c)| c * c * basis_norm_sq(k)).sum())
    }

    /// Restriction to `[lo, hi]`; range error outside the generated support.
    pub fn window(&self, lo: f64, hi: f64) -> Result<OUPath, NoiseError> {
        let a = mesh_index(lo, self.dt)?;
        let b = mesh_index(hi, self.dt)?;
        if a > b || !self.covers(a, b) {
            return Err(NoiseError::Range { lo, hi, t0: self.t0(), t1: self.t1() });
        }
        let off = (a - self.start_index) as usize;
        let rows = (b - a) as usize + 1;
        let modes = self.modes.slice(ndarray::s![off..off + rows, ..]).to_owned();
        Ok(OUPath { start_index: a, modes: Arc::new(modes), ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b_const(c: f64) -> Field1D {
        Field1D::constant(16, c)
    }

    #[test]
    fn spectrum_validation_and_trace() {
        assert!(NoiseSpectrum::new(0.1, 0.5, 8).is_err());
        assert!(NoiseSpectrum::new(-0.1, 1.0, 8).is_err());
        assert!(NoiseSpectrum::new(0.1, 1.0, 0).is_err());
        let s = NoiseSpectrum::new(0.3, 1.2, 10).unwrap();
        let direct: f64 = (0..=10).map(|k| 0.09 * (1.0 + (k as f64 * PI).powi(2)).powf(-1.2)).sum();
        assert!((s.trace() - direct).abs() < 1e-15);
        let steeper = NoiseSpectrum::new(0.3, 2.0, 10).unwrap();
        assert!(steeper.trace() < s.trace());
    }

    #[test]
    fn zero_dt_increment_is_zero() {
        let spec = NoiseSpectrum::default();
        let mut rng = ModeStreams::new(1, spec.n_modes());
        let w = wiener_increment(&spec, 0.0, &mut rng, 16);
        assert!(w.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_noise_ou_decay_is_implicit_euler() {
        let op = OuOperator::new(4, &b_const(0.5));
        let dt = 0.01;
        for k in 0..=4 {
            let mut z = vec![0.0; 5];
            z[k] = 1.0;
            let steps = 250;
            for _ in 0..steps {
                ou_advance(&mut z, dt, &[0.0; 5], &op);
            }
            let expected = (1.0 + dt * op.lambda(k)).powf(-(steps as f64));
            assert!((z[k] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_zero_path_is_zero() {
        let spec = NoiseSpectrum::new(0.0, 1.0, 8).unwrap();
        let p = stationary_ou_path(&spec, &b_const(0.7), 0.0, 1.0, 0.01, 3).unwrap();
        assert!(p.modes.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_mesh_times_rejected() {
        let spec = NoiseSpectrum::default();
        assert!(stationary_ou_path(&spec, &b_const(0.7), 0.0, 1.0, 0.3, 3).is_err());
        assert!(stationary_ou_path(&spec, &b_const(0.7), 1.0, 0.0, 0.1, 3).is_err());
    }

    #[test]
    fn shift_identity_and_group() {
        let spec = NoiseSpectrum::new(0.2, 1.0, 6).unwrap();
        let p = stationary_ou_path(&spec, &b_const(0.7), -2.0, 2.0, 0.01, 11).unwrap();
        assert_eq!(wiener_shift(&p, 0.0).unwrap(), p);
        let back = wiener_shift(&wiener_shift(&p, 0.37).unwrap(), -0.37).unwrap();
        assert_eq!(back, p);
        let s = wiener_shift(&p, 0.5).unwrap();
        for i in s.start_index()..=s.end_index() {
            assert_eq!(s.modes_at(i).unwrap(), p.modes_at(i + 50).unwrap());
        }
        let r = wiener_shift(&wiener_shift(&p, 0.3).unwrap(), 0.2).unwrap();
        assert_eq!(r, wiener_shift(&p, 0.5).unwrap());
    }

    #[test]
    fn window_out_of_range() {
        let spec = NoiseSpectrum::new(0.2, 1.0, 6).unwrap();
        let p = stationary_ou_path(&spec, &b_const(0.7), 0.0, 1.0, 0.01, 11).unwrap();
        assert!(matches!(p.window(-0.5, 0.5), Err(NoiseError::Range { .. })));
        let w = p.window(0.2, 0.4).unwrap();
        assert_eq!(w.modes_at(30).unwrap(), p.modes_at(30).unwrap());
        assert!(p.modes_at(101).is_err());
    }

    #[test]
    fn constant_b_has_no_coupling() {
        assert!(!OuOperator::new(8, &b_const(0.7)).has_coupling());
        let b = Field1D::from_fn(16, |y| 0.5 + 0.3 * (PI * y).cos());
        assert!(OuOperator::new(8, &b).has_coupling());
    }
}
