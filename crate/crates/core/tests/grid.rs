use std::f64::consts::PI;

use caom_core::grid::{
    arakawa_jacobian, diffusion_apply_1d, diffusion_apply_2d, discrete_eigenvalue, poisson_solve_dirichlet,
    BoundarySpec, Field1D, Field2D, Grid2D, ImplicitDiffusion, ZBoundary,
};

/// Dense Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let m = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= m * a[c][k];
            }
            b[r] -= m * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

#[test]
fn poisson_matches_dense_five_point_solve() {
    let g = Grid2D::square(8);
    let q = Field2D::from_fn(g, |y, z| (1.0 + y * y) * (3.0 * z).cos() + y * z);
    let psi = poisson_solve_dirichlet(&q).unwrap();

    let (ny, nz) = (g.ny(), g.nz());
    let (dy2, dz2) = (g.dy().powi(2), g.dz().powi(2));
    let idx = |i: usize, j: usize| (i - 1) * (nz - 1) + (j - 1);
    let m = (ny - 1) * (nz - 1);
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for i in 1..ny {
        for j in 1..nz {
            let r = idx(i, j);
            a[r][r] = 2.0 / dy2 + 2.0 / dz2;
            if i > 1 {
                a[r][idx(i - 1, j)] = -1.0 / dy2;
            }
            if i < ny - 1 {
                a[r][idx(i + 1, j)] = -1.0 / dy2;
            }
            if j > 1 {
                a[r][idx(i, j - 1)] = -1.0 / dz2;
            }
            if j < nz - 1 {
                a[r][idx(i, j + 1)] = -1.0 / dz2;
            }
            b[r] = q.values[[i, j]];
        }
    }
    let x = dense_solve(a, b);
    for i in 0..=ny {
        for j in 0..=nz {
            let expect = if i == 0 || j == 0 || i == ny || j == nz { 0.0 } else { x[idx(i, j)] };
            assert!((psi.values[[i, j]] - expect).abs() < 1e-10, "({i},{j})");
        }
    }
}

fn sin_sin(g: Grid2D) -> Field2D {
    Field2D::from_fn(g, |y, z| (PI * y).sin() * (PI * z).sin())
}

fn poisson_error(n: usize) -> f64 {
    let g = Grid2D::square(n);
    let q = Field2D::from_fn(g, |y, z| 2.0 * PI * PI * (PI * y).sin() * (PI * z).sin());
    let psi = poisson_solve_dirichlet(&q).unwrap();
    let exact = sin_sin(g);
    psi.values.iter().zip(exact.values.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn poisson_recovers_sine_mode() {
    assert!(poisson_error(64) < 1e-3);
    let ratio = poisson_error(32) / poisson_error(64);
    assert!(ratio > 3.5, "ratio {ratio}");
}

#[test]
fn jacobian_identities() {
    let g = Grid2D::new(20, 16).unwrap();
    // the second argument is a streamfunction, so it vanishes on the boundary
    let f = Field2D::from_fn(g, |y, z| (PI * y).sin() * (2.0 * PI * z).sin() * (1.0 + y * z));
    assert!(arakawa_jacobian(&f, &f).unwrap().max_abs() < 1e-12);
    let f = Field2D::from_fn(g, |y, z| (2.0 * y).sin() * (3.0 * z + 0.3).cos() + y * z);
    let c = Field2D::constant(g, -1.7);
    assert!(arakawa_jacobian(&f, &c).unwrap().max_abs() < 1e-12);
}

fn jacobian_y2_error(n: usize) -> f64 {
    let g = Grid2D::square(n);
    let f = Field2D::from_fn(g, |y, _| y * y);
    let psi = sin_sin(g);
    let j = arakawa_jacobian(&f, &psi).unwrap();
    let mut worst = 0.0_f64;
    for i in 1..n {
        for k in 1..n {
            let (y, z) = (g.y(i), g.z(k));
            let expect = 2.0 * y * PI * (PI * y).sin() * (PI * z).cos();
            worst = worst.max((j.values[[i, k]] - expect).abs());
        }
    }
    worst
}

#[test]
fn jacobian_of_y_squared_is_two_y_psi_z() {
    assert!(jacobian_y2_error(64) < 5e-3);
    let ratio = jacobian_y2_error(32) / jacobian_y2_error(64);
    assert!(ratio > 3.5, "ratio {ratio}");
}

#[test]
fn laplacian_of_constant_vanishes() {
    let g = Grid2D::new(12, 10).unwrap();
    let c = Field2D::constant(g, 3.25);
    let lap = diffusion_apply_2d(&c, &BoundarySpec::NeumannZeroAll).unwrap();
    assert!(lap.max_abs() < 1e-10);
    let c1 = Field1D::constant(12, 3.25);
    let lap1 = diffusion_apply_1d(&c1, &BoundarySpec::Neumann1d).unwrap();
    assert!(lap1.values.iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn cosine_is_a_discrete_eigenfunction() {
    for (n, k, l) in [(16, 1, 1), (24, 2, 3), (32, 5, 1)] {
        let g = Grid2D::square(n);
        let f = Field2D::from_fn(g, |y, z| (k as f64 * PI * y).cos() * (l as f64 * PI * z).cos());
        let lap = diffusion_apply_2d(&f, &BoundarySpec::NeumannZeroAll).unwrap();
        let lam = discrete_eigenvalue(k, n) + discrete_eigenvalue(l, n);
        for (a, b) in lap.values.iter().zip(f.values.iter()) {
            assert!((a + lam * b).abs() < 1e-8 * lam);
        }
    }
}

#[test]
fn discrete_eigenvalue_converges_quadratically() {
    let err = |n: usize| (discrete_eigenvalue(3, n) - (3.0 * PI).powi(2)).abs();
    for n in [32, 64] {
        assert!(err(n) / err(2 * n) > 3.5);
    }
}

#[test]
fn robin_row_is_hand_assembled_flux() {
    let g = Grid2D::new(8, 10).unwrap();
    let t = Field2D::zeros(g);
    let data = Field1D::constant(8, 1.0);
    let lap = diffusion_apply_2d(&t, &BoundarySpec::RobinTop { g: data }).unwrap();
    // ghost node T_{N+1} = T_{N-1} + 2 dz (g - T_N)
    let expect = 2.0 / g.dz();
    for i in 0..=8 {
        assert!((lap.values[[i, 10]] - expect).abs() < 1e-12);
        for j in 0..10 {
            assert_eq!(lap.values[[i, j]], 0.0);
        }
    }
    let tagged = BoundarySpec::from_tag("robin-top", Some(Field1D::constant(8, 1.0))).unwrap();
    assert_eq!(tagged.tag(), "robin-top");
    assert!(BoundarySpec::from_tag("robin-top", None).is_err());
    assert!(BoundarySpec::from_tag("periodic", None).is_err());
}

#[test]
fn norms_of_reference_fields() {
    let g = Grid2D::square(64);
    let one = Field2D::constant(g, 1.0).norms();
    assert!((one.l2_sq - 1.0).abs() < 1e-14);
    assert_eq!(one.grad_sq, 0.0);
    let s = sin_sin(g).norms();
    assert!((s.l2_sq - 0.25).abs() < 0.0025);
    let target = PI * PI / 2.0;
    assert!((s.grad_sq - target).abs() < 0.01 * target);
}

#[test]
fn gradient_norm_is_minus_laplacian_pairing() {
    let g = Grid2D::new(14, 11).unwrap();
    let f = Field2D::from_fn(g, |y, z| (2.0 * y + z).sin() + y * y * z);
    let lap = diffusion_apply_2d(&f, &BoundarySpec::NeumannZeroAll).unwrap();
    let n = f.norms();
    assert!((n.grad_sq + lap.dot(&f)).abs() < 1e-10 * n.grad_sq);
}

#[test]
fn implicit_diffusion_inverts_its_operator() {
    let g = Grid2D::new(12, 16).unwrap();
    let tau = 0.05;
    let f = Field2D::from_fn(g, |y, z| (PI * y).cos() * (2.0 * z).sin() + 0.2);
    let lap = diffusion_apply_2d(&f, &BoundarySpec::NeumannZeroAll).unwrap();
    let rhs = &f.values - &(&lap.values * tau);
    let back = ImplicitDiffusion::new(g, tau, ZBoundary::Neumann).solve(&rhs);
    for (a, b) in back.iter().zip(f.values.iter()) {
        assert!((a - b).abs() < 1e-11);
    }
}

#[test]
fn grid_rejects_too_coarse_meshes() {
    assert!(Grid2D::new(2, 8).is_err());
    assert!(Grid2D::new(8, 2).is_err());
    assert!(Field1D::from_vec(vec![1.0]).is_err());
}
