use std::f64::consts::PI;

use caom_core::diagnostics::{fit_exponential, EnergyRecord};
use caom_core::grid::{discrete_eigenvalue, Field1D, Field2D, Grid2D};
use caom_core::model::{
    rhs_transformed, simulate, to_u, to_v, ModelError, ModelParams, Profile, Stepper, TransformedState,
};
use caom_core::stochastic::{stationary_ou_path, wiener_shift, NoiseSpectrum, OUPath};

fn quiet_path(p: &ModelParams, t0: f64, t1: f64, dt: f64) -> OUPath {
    stationary_ou_path(&p.noise, &p.b, t0, t1, dt, 0).unwrap()
}

fn log_decay_rate(times: &[f64], values: &[f64]) -> f64 {
    fit_exponential(times, values).unwrap().rate
}

#[test]
fn linear_theta_decay_rate() {
    let n = 32;
    let g = Grid2D::square(n);
    let mut p = ModelParams::zero_data(n);
    p.b = Field1D::zeros(n);
    let dt = 1e-3;
    for k in [0usize, 1] {
        let theta = Field1D::from_fn(n, |y| (k as f64 * PI * y).cos());
        let v0 = TransformedState::new(theta, Field2D::zeros(g), Field2D::zeros(g), Field2D::zeros(g), 0.0).unwrap();
        let path = quiet_path(&p, 0.0, 0.2, dt);
        let mut st = Stepper::new(g, p.clone()).unwrap();
        let mut rec = EnergyRecord::new();
        st.simulate(&v0, &path, 0.2, dt, &mut [&mut rec], 10).unwrap();
        // ‖Θ̃‖² decays at twice the mode rate
        let rate = log_decay_rate(&rec.times, &rec.theta_sq) / 2.0;
        let expect = (k as f64 * PI).powi(2) + 1.0;
        assert!((rate / expect - 1.0).abs() < 0.02, "k = {k}: {rate} vs {expect}");
    }
}

fn salinity_decay_rate(n: usize) -> f64 {
    let g = Grid2D::square(n);
    let mut p = ModelParams::zero_data(n);
    p.ra = 0.0;
    let s = Field2D::from_fn(g, |y, z| (PI * y).cos() * (PI * z).cos());
    let v0 = TransformedState::new(Field1D::zeros(n), Field2D::zeros(g), Field2D::zeros(g), s, 0.0).unwrap();
    let dt = 1e-4;
    let path = quiet_path(&p, 0.0, 0.02, dt);
    let mut rec = EnergyRecord::new();
    Stepper::new(g, p.clone()).unwrap().simulate(&v0, &path, 0.02, dt, &mut [&mut rec], 10).unwrap();
    log_decay_rate(&rec.times, &rec.s_sq) / 2.0
}

#[test]
fn salinity_eigenmode_decays_at_discrete_rate() {
    let n = 32;
    let discrete = 2.0 * discrete_eigenvalue(1, n);
    let rate = salinity_decay_rate(n);
    // implicit Euler shifts the rate by ln(1 + dt λ)/dt
    let expect = (1.0 + 1e-4 * discrete).ln() / 1e-4;
    assert!((rate / expect - 1.0).abs() < 1e-6, "{rate} vs {expect}");
    let continuous = 2.0 * PI * PI;
    assert!((rate / continuous - 1.0).abs() < 0.02);
}

fn manufactured_q_error(n: usize) -> f64 {
    let g = Grid2D::square(n);
    let mut p = ModelParams::zero_data(n);
    p.pr = 1.0;
    p.ra = 1.0;
    let q = Field2D::from_fn(g, |y, z| (PI * y).sin() * (PI * z).sin());
    let t = Field2D::from_fn(g, |y, z| (PI * y).cos() * (PI * z).cos());
    let v = TransformedState::new(Field1D::zeros(n), q, t, Field2D::zeros(g), 0.0).unwrap();
    let r = rhs_transformed(&v, &Field1D::zeros(n), &p).unwrap();
    let mut worst = 0.0_f64;
    for i in 1..n {
        for j in 1..n {
            let (y, z) = (g.y(i), g.z(j));
            // ψ ∥ q so the advection vanishes
            let exact = -2.0 * PI * PI * (PI * y).sin() * (PI * z).sin() - PI * (PI * y).sin() * (PI * z).cos();
            worst = worst.max((r.q.values[[i, j]] - exact).abs());
        }
    }
    worst
}

fn manufactured_theta_error(n: usize) -> f64 {
    let g = Grid2D::square(n);
    let p = ModelParams::defaults(n);
    let theta = Field1D::from_fn(n, |y| (PI * y).cos() + 0.5 * (2.0 * PI * y).cos());
    let t = Field2D::from_fn(g, |y, z| y * y * z);
    let v = TransformedState::new(theta, Field2D::zeros(g), t, Field2D::zeros(g), 0.0).unwrap();
    let z = Field1D::from_fn(n, |y| 0.1 * (PI * y).cos());
    let r = rhs_transformed(&v, &z, &p).unwrap();
    let b = 0.7;
    let (a, pi2) = (0.5, PI * PI);
    (0..=n)
        .map(|i| {
            let y = g.y(i);
            let th = (PI * y).cos() + 0.5 * (2.0 * PI * y).cos();
            let th_yy = -pi2 * (PI * y).cos() - 2.0 * pi2 * (2.0 * PI * y).cos();
            let s_a = 1.0 - 0.4 * (2.0 * PI * y).cos();
            let s_o = 0.5 - 0.2 * (2.0 * PI * y).cos();
            let exact = th_yy - (1.0 + b) * th - a + s_a - b * s_o + b * y * y;
            (r.theta.values[i] - exact).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn manufactured_rhs_converges_at_second_order() {
    for err in [manufactured_q_error as fn(usize) -> f64, manufactured_theta_error] {
        let (e32, e64, e128) = (err(32), err(64), err(128));
        assert!(e64 < 0.05);
        assert!(e32 / e64 > 3.5 && e64 / e128 > 3.5, "{e32} {e64} {e128}");
    }
}

fn default_run(n: usize, seed: u64) -> (ModelParams, OUPath, TransformedState) {
    let p = ModelParams::defaults(n);
    let path = stationary_ou_path(&p.noise, &p.b, -4.0, 4.0, 0.01, seed).unwrap();
    let v0 = TransformedState::random_smooth(Grid2D::square(n), seed, 4).unwrap();
    (p, path, v0)
}

#[test]
fn cocycle_property() {
    let (p, path, v0) = default_run(16, 3);
    let direct = simulate(&v0, &path, &p, 2.0, 0.01).unwrap();
    let half = simulate(&v0, &path, &p, 1.0, 0.01).unwrap();
    let split = simulate(&half, &path, &p, 2.0, 0.01).unwrap();
    assert_eq!(direct, split);
}

#[test]
fn shifted_start_equals_shifted_noise() {
    let (p, path, v0) = default_run(16, 5);
    let s = 1.5;
    let mut late = v0.clone();
    late.time = s;
    let a = simulate(&late, &path, &p, s + 1.0, 0.01).unwrap();
    let shifted = wiener_shift(&path, s).unwrap();
    let b = simulate(&v0, &shifted, &p, 1.0, 0.01).unwrap();
    assert_eq!(a.theta, b.theta);
    assert_eq!(a.q, b.q);
    assert_eq!(a.t_ocean, b.t_ocean);
    assert_eq!(a.s_ocean, b.s_ocean);
}

#[test]
fn salinity_mass_is_conserved() {
    let (p, path, v0) = default_run(16, 7);
    let mut rec = EnergyRecord::new();
    Stepper::new(Grid2D::square(16), p).unwrap().simulate(&v0, &path, 4.0, 0.01, &mut [&mut rec], 1).unwrap();
    assert!(rec.s_mass_drift() <= 1e-10);
    assert!(rec.consistency_error() <= 1e-12);
}

#[test]
fn zero_data_energy_is_monotone() {
    let n = 16;
    let p = ModelParams::zero_data(n);
    let path = quiet_path(&p, 0.0, 3.0, 0.01);
    let v0 = TransformedState::random_smooth(Grid2D::square(n), 2, 4).unwrap();
    let mut rec = EnergyRecord::new();
    Stepper::new(Grid2D::square(n), p).unwrap().simulate(&v0, &path, 3.0, 0.01, &mut [&mut rec], 1).unwrap();
    assert!(rec.h_sq.windows(2).all(|w| w[1] <= w[0]));
    assert!(rec.h_sq.last().unwrap() < &(0.1 * rec.h_sq[0]));
}

#[test]
fn change_of_variables_round_trip() {
    let g = Grid2D::square(8);
    let v = TransformedState::random_smooth(g, 9, 3).unwrap();
    let zero = Field1D::zeros(8);
    assert_eq!(to_v(&to_u(&v, &zero), &zero), v);
    let z = Field1D::from_fn(8, |y| 0.3 * (PI * y).cos() - 0.1);
    let back = to_v(&to_u(&v, &z), &z);
    assert_eq!(back.q, v.q);
    assert_eq!(back.t_ocean, v.t_ocean);
    assert_eq!(back.s_ocean, v.s_ocean);
    for (a, b) in back.theta.values.iter().zip(v.theta.values.iter()) {
        assert!((a - b).abs() <= 4.0 * f64::EPSILON * (b.abs() + 1.0));
    }
}

#[test]
fn invalid_data_is_rejected() {
    let mut p = ModelParams::defaults(16);
    p.b.values[4] = 1.3;
    match p.validate() {
        Err(ModelError::Constraint { key, message }) => {
            assert_eq!(key, "profiles.b");
            assert!(message.contains("0 <= b <= 1"));
        }
        other => panic!("{other:?}"),
    }
    let mut p = ModelParams::defaults(16);
    p.f_flux = Profile::Constant(0.013).sample(16).unwrap();
    let err = p.validate().unwrap_err().to_string();
    assert!(err.contains("flux.F integral nonzero"), "{err}");
    let mut p = ModelParams::defaults(16);
    p.nu = 0.0;
    assert!(Stepper::new(Grid2D::square(16), p).is_err());
    assert!(Stepper::new(Grid2D::square(8), ModelParams::defaults(16)).is_err());
}

#[test]
fn simulate_checks_path_and_mesh() {
    let (p, path, v0) = default_run(8, 1);
    assert!(matches!(simulate(&v0, &path, &p, 10.0, 0.01), Err(ModelError::Noise(_))));
    assert!(simulate(&v0, &path, &p, 1.0, 0.015).is_err());
    assert!(simulate(&v0, &path, &p, 1.0, 0.001).is_err());
}

#[test]
fn noise_drives_the_system_from_rest() {
    let n = 8;
    let mut p = ModelParams::zero_data(n);
    p.noise = NoiseSpectrum::new(0.3, 1.0, 8).unwrap();
    let path = stationary_ou_path(&p.noise, &p.b, 0.0, 2.0, 0.01, 4).unwrap();
    let out = simulate(&TransformedState::zeros(Grid2D::square(n)), &path, &p, 2.0, 0.01).unwrap();
    assert!(out.t_ocean.norms().l2_sq > 0.0);
    assert!(out.is_finite().is_none());
}
