use std::f64::consts::PI;

use crate::grid::Field1D;
use crate::stochastic::NoiseSpectrum;

use super::ModelError;

/// A latitude profile, either a named built-in or explicit node values.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// `mean + amp · cos(kπy)`.
    Cosine { mean: f64, amp: f64, k: u32 },
    /// Values on equispaced nodes of `[0,1]`, linearly interpolated.
    Nodes(Vec<f64>),
}

impl Profile {
    pub fn sample(&self, n: usize) -> Result<Field1D, ModelError> {
        match self {
            Profile::Constant(c) => Ok(Field1D::constant(n, *c)),
            Profile::Cosine { mean, amp, k } => {
                Ok(Field1D::from_fn(n, |y| mean + amp * (*k as f64 * PI * y).cos()))
            }
            Profile::Nodes(v) => {
                if v.len() < 2 {
                    return Err(ModelError::Invalid("node profile needs at least two values".into()));
                }
                let m = (v.len() - 1) as f64;
                Ok(Field1D::from_fn(n, |y| {
                    let x = y * m;
                    let i = (x.floor() as usize).min(v.len() - 2);
                    let t = x - i as f64;
                    v[i] * (1.0 - t) + v[i + 1] * t
                }))
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Profile {
        match self {
            Profile::Constant(c) => Profile::Constant(c * s),
            Profile::Cosine { mean, amp, k } => Profile::Cosine { mean: mean * s, amp: amp * s, k: *k },
            Profile::Nodes(v) => Profile::Nodes(v.iter().map(|x| x * s).collect()),
        }
    }
}

/// Profile defaults; the model data have no empirical values attached.
pub mod defaults {
    use super::Profile;

    pub const A: f64 = 0.5;
    pub const PR: f64 = 1.0;
    pub const RA: f64 = 1.0;
    pub const NU: f64 = 1.0;

    pub fn b() -> Profile {
        Profile::Constant(0.7)
    }

    pub fn s_a() -> Profile {
        Profile::Cosine { mean: 1.0, amp: -0.4, k: 2 }
    }

    pub fn s_o() -> Profile {
        Profile::Cosine { mean: 0.5, amp: -0.2, k: 2 }
    }

    pub fn f_flux() -> Profile {
        Profile::Cosine { mean: 0.0, amp: 0.1, k: 1 }
    }
}

/// Physical data of the coupled model, sampled on the `y` nodes of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub pr: f64,
    pub ra: f64,
    pub nu: f64,
    pub b: Field1D,
    pub s_a: Field1D,
    pub s_o: Field1D,
    pub f_flux: Field1D,
    pub noise: NoiseSpectrum,
}

/// Tolerance on the trapezoidal `∫₀¹ F dy`.
pub const FLUX_INTEGRAL_TOL: f64 = 1e-12;

impl ModelParams {
    /// Default data on an `ny`-cell latitude grid.
    pub fn defaults(ny: usize) -> Self {
        Self {
            a: defaults::A,
            pr: defaults::PR,
            ra: defaults::RA,
            nu: defaults::NU,
            b: defaults::b().sample(ny).unwrap(),
            s_a: defaults::s_a().sample(ny).unwrap(),
            s_o: defaults::s_o().sample(ny).unwrap(),
            f_flux: defaults::f_flux().sample(ny).unwrap(),
            noise: NoiseSpectrum::default(),
        }
    }

    /// All sources and noise switched off.
    pub fn zero_data(ny: usize) -> Self {
        Self {
            a: 0.0,
            s_a: Field1D::zeros(ny),
            s_o: Field1D::zeros(ny),
            f_flux: Field1D::zeros(ny),
            noise: NoiseSpectrum::new(0.0, 1.0, 1).unwrap(),
            ..Self::defaults(ny)
        }
    }

    /// Scales `a, S_a, S_o, F, σ₀` by `factor` and sets `ν`.
    pub fn small_data(&self, factor: f64, nu: f64) -> Self {
        Self {
            a: self.a * factor,
            s_a: Field1D { values: &self.s_a.values * factor },
            s_o: Field1D { values: &self.s_o.values * factor },
            f_flux: Field1D { values: &self.f_flux.values * factor },
            noise: self.noise.with_sigma0(self.noise.sigma0() * factor).unwrap(),
            nu,
            ..self.clone()
        }
    }

    pub fn ny(&self) -> usize {
        self.b.n()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |key: &str, msg: String| Err(ModelError::Constraint { key: key.into(), message: msg });
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return bad("model.a", format!("must be >= 0, got {}", self.a));
        }
        if !(self.pr > 0.0 && self.pr.is_finite()) {
            return bad("model.pr", format!("must be > 0, got {}", self.pr));
        }
        if !(self.ra >= 0.0 && self.ra.is_finite()) {
            return bad("model.ra", format!("must be >= 0, got {}", self.ra));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad("model.nu", format!("must be > 0, got {}", self.nu));
        }
        let n = self.ny();
        for (key, f) in [("profiles.s_a", &self.s_a), ("profiles.s_o", &self.s_o), ("profiles.f", &self.f_flux)] {
            if f.n() != n {
                return bad(key, format!("has {} cells, expected {n}", f.n()));
            }
            if !f.is_finite() {
                return bad(key, "contains non-finite values".into());
            }
        }
        if let Some(v) = self.b.values.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
            return bad("profiles.b", format!("violates 0 <= b <= 1 (value {v})"));
        }
        let flux = self.f_flux.integral();
        if flux.abs() > FLUX_INTEGRAL_TOL {
            return bad("profiles.f", format!("flux.F integral nonzero: {flux}"));
        }
        Ok(())
    }
}
