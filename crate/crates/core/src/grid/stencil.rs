//! Explicit stencils: ghost-node Laplacians and the Arakawa Jacobian.

use ndarray::Array2;

use super::{Field1D, Field2D, GridError};

/// Boundary conditions folded into [`diffusion_apply_2d`] / [`diffusion_apply_1d`].
#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    /// `∂_n f = 0` on all four edges.
    NeumannZeroAll,
    /// `∂_z f = g - f` at `z = 1`, no flux elsewhere.
    RobinTop { g: Field1D },
    /// `∂_z f = flux` at `z = 1`, no flux elsewhere.
    FluxTop { flux: Field1D },
    /// `f = 0` on the boundary; boundary rows of the result are zero.
    DirichletZero,
    /// `f' = 0` at both ends of the interval.
    Neumann1d,
}

impl BoundarySpec {
    /// Builds a spec from its tag; `data` carries the boundary profile where needed.
    pub fn from_tag(tag: &str, data: Option<Field1D>) -> Result<Self, GridError> {
        let need = |d: Option<Field1D>| {
            d.ok_or_else(|| GridError::Argument(format!("boundary '{tag}' needs a top profile")))
        };
        match tag {
            "neumann-zero-all" => Ok(Self::NeumannZeroAll),
            "robin-top" => Ok(Self::RobinTop { g: need(data)? }),
            "flux-top" => Ok(Self::FluxTop { flux: need(data)? }),
            "dirichlet-zero" => Ok(Self::DirichletZero),
            "neumann-1d" => Ok(Self::Neumann1d),
            other => Err(GridError::Argument(format!("unknown boundary tag '{other}'"))),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::NeumannZeroAll => "neumann-zero-all",
            Self::RobinTop { .. } => "robin-top",
            Self::FluxTop { .. } => "flux-top",
            Self::DirichletZero => "dirichlet-zero",
            Self::Neumann1d => "neumann-1d",
        }
    }
}

/// Ghost-node Laplacian `Δf` of a 2-D field with the given boundary data.
pub fn diffusion_apply_2d(f: &Field2D, bc: &BoundarySpec) -> Result<Field2D, GridError> {
    let g = f.grid();
    let (ny, nz) = (g.ny(), g.nz());
    let (dy, dz) = (g.dy(), g.dz());
    let top: Option<(&Field1D, bool)> = match bc {
        BoundarySpec::NeumannZeroAll | BoundarySpec::DirichletZero => None,
        BoundarySpec::RobinTop { g: data } => Some((data, true)),
        BoundarySpec::FluxTop { flux } => Some((flux, false)),
        BoundarySpec::Neumann1d => {
            return Err(GridError::Argument("neumann-1d applies to 1-D fields only".into()))
        }
    };
    if let Some((data, _)) = top {
        if data.n() != ny {
            return Err(GridError::Mismatch(format!("top profile has {} cells, grid has {ny}", data.n())));
        }
    }
    let v = &f.values;
    let mut out = Array2::zeros(g.shape());
    if matches!(bc, BoundarySpec::DirichletZero) {
        for i in 1..ny {
            for j in 1..nz {
                out[[i, j]] = (v[[i + 1, j]] - 2.0 * v[[i, j]] + v[[i - 1, j]]) / (dy * dy)
                    + (v[[i, j + 1]] - 2.0 * v[[i, j]] + v[[i, j - 1]]) / (dz * dz);
            }
        }
        return Field2D::from_array(g, out);
    }
    for i in 0..=ny {
        for j in 0..=nz {
            let (ym, yp) = neighbours(i, ny);
            let (zm, zp) = neighbours(j, nz);
            let c = v[[i, j]];
            let mut lap = (v[[ym, j]] - 2.0 * c + v[[yp, j]]) / (dy * dy)
                + (v[[i, zm]] - 2.0 * c + v[[i, zp]]) / (dz * dz);
            if j == nz {
                if let Some((data, robin)) = top {
                    let flux = if robin { data.values[i] - c } else { data.values[i] };
                    lap += 2.0 * flux / dz;
                }
            }
            out[[i, j]] = lap;
        }
    }
    Field2D::from_array(g, out)
}

/// Mirror neighbours for the homogeneous-Neumann ghost node.
#[inline]
fn neighbours(i: usize, n: usize) -> (usize, usize) {
    let lo = if i == 0 { 1 } else { i - 1 };
    let hi = if i == n { n - 1 } else { i + 1 };
    (lo, hi)
}

/// Ghost-node `f''` with `f' = 0` at both ends.
pub fn diffusion_apply_1d(f: &Field1D, bc: &BoundarySpec) -> Result<Field1D, GridError> {
    if !matches!(bc, BoundarySpec::Neumann1d) {
        return Err(GridError::Argument(format!("boundary '{}' applies to 2-D fields only", bc.tag())));
    }
    let n = f.n();
    let h2 = f.dy().powi(2);
    let v = &f.values;
    let out = ndarray::Array1::from_shape_fn(n + 1, |i| {
        let (lo, hi) = neighbours(i, n);
        (v[lo] - 2.0 * v[i] + v[hi]) / h2
    });
    Ok(Field1D { values: out })
}

/// Arakawa's nine-point Jacobian `J(f, ψ) = f_y ψ_z - f_z ψ_y` at every node.
///
/// Ghost values extend `f` evenly and `ψ` oddly about its boundary value. With
/// `ψ = 0` on the boundary this is Arakawa's scheme on the doubly reflected
/// periodic lattice, so the trapezoidal sums of `J`, `f·J` and `ψ·J` vanish.
pub fn arakawa_jacobian(f: &Field2D, psi: &Field2D) -> Result<Field2D, GridError> {
    f.check_same_grid(psi)?;
    let g = f.grid();
    let (ny, nz) = (g.ny(), g.nz());
    let fe = extend(&f.values, false);
    let pe = extend(&psi.values, true);
    let scale = 1.0 / (12.0 * g.dy() * g.dz());
    let mut out = Array2::zeros(g.shape());
    for i in 0..=ny {
        for j in 0..=nz {
            let (a, b) = (i + 1, j + 1);
            let p = |di: isize, dj: isize| fe[[(a as isize + di) as usize, (b as isize + dj) as usize]];
            let q = |di: isize, dj: isize| pe[[(a as isize + di) as usize, (b as isize + dj) as usize]];
            let jpp = (p(1, 0) - p(-1, 0)) * (q(0, 1) - q(0, -1)) - (p(0, 1) - p(0, -1)) * (q(1, 0) - q(-1, 0));
            let jpx = p(1, 0) * (q(1, 1) - q(1, -1)) - p(-1, 0) * (q(-1, 1) - q(-1, -1))
                - p(0, 1) * (q(1, 1) - q(-1, 1))
                + p(0, -1) * (q(1, -1) - q(-1, -1));
            let jxp = q(0, 1) * (p(1, 1) - p(-1, 1)) - q(0, -1) * (p(1, -1) - p(-1, -1))
                - q(1, 0) * (p(1, 1) - p(1, -1))
                + q(-1, 0) * (p(-1, 1) - p(-1, -1));
            out[[i, j]] = (jpp + jpx + jxp) * scale;
        }
    }
    Field2D::from_array(g, out)
}

/// Pads by one ghost layer: even reflection, or odd reflection about the edge value.
fn extend(v: &Array2<f64>, odd: bool) -> Array2<f64> {
    let (my, mz) = v.dim();
    let (ny, nz) = (my - 1, mz - 1);
    let mut e = Array2::zeros((my + 2, mz + 2));
    e.slice_mut(ndarray::s![1..my + 1, 1..mz + 1]).assign(v);
    let reflect = |edge: f64, inner: f64| if odd { 2.0 * edge - inner } else { inner };
    for j in 1..=mz {
        e[[0, j]] = reflect(e[[1, j]], e[[2, j]]);
        e[[ny + 2, j]] = reflect(e[[ny + 1, j]], e[[ny, j]]);
    }
    for i in 0..my + 2 {
        e[[i, 0]] = reflect(e[[i, 1]], e[[i, 2]]);
        e[[i, nz + 2]] = reflect(e[[i, nz + 1]], e[[i, nz]]);
    }
    e
}
