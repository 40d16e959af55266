//! Two-particle quantities on the product grid for d = 2: lifted Fisher
//! informations, the good/bad decomposition of `dD/dt` and the key-inequality
//! monitor.

use std::sync::Arc;

use rayon::prelude::*;

use crate::bounds::{lambda_default, lambda_delta};
use crate::error::{Error, Result};
use crate::functionals::{
    entropy_production, fisher_directional, log_gradients, k_field, GradientRule, MatrixField,
    POSITIVITY_FLOOR,
};
use crate::geometry::{Density, TemperatureTensor, Vector, VelocityGrid};
use crate::linalg::{dot, norm_sq, SymMat};
use crate::moments::moment;
use crate::stencil::diff;
use crate::sum::pairwise;

/// Largest grid size accepted for product-grid computations.
pub const LIFTED_MAX_N: usize = 48;

/// `F(v, w) = f(v) f(w)` for a two-dimensional density.
#[derive(Debug, Clone)]
pub struct LiftedField {
    density: Density,
    values: Vec<f64>,
}

impl LiftedField {
    pub fn new(f: &Density) -> Result<Self> {
        let grid = f.grid();
        if grid.dim() != 2 {
            return Err(Error::InvalidInput("lifted computations are implemented for d = 2".into()));
        }
        if grid.n() > LIFTED_MAX_N {
            return Err(Error::CostGuard(format!(
                "product grid refused for n = {} > {LIFTED_MAX_N}",
                grid.n()
            )));
        }
        let fv = f.values();
        let nn = fv.len();
        let mut values = vec![0.0; nn * nn];
        values.par_chunks_mut(nn).enumerate().for_each(|(i, row)| {
            for (j, x) in row.iter_mut().enumerate() {
                *x = fv[i] * fv[j];
            }
        });
        Ok(Self { density: f.clone(), values })
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        self.density.grid()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_, _, _, _, x| x)
    }

    /// Product-trapezoid quadrature of `g(iv, iw, v, w, F)`, parallel over the
    /// outer index with a fixed combination order.
    fn integrate<G: Fn(usize, usize, &Vector, &Vector, f64) -> f64 + Sync>(&self, g: G) -> f64 {
        let grid = self.grid();
        let nn = grid.len();
        let nodes: Vec<(Vector, f64)> = (0..nn).map(|i| (grid.node(i), grid.weight(i))).collect();
        let rows: Vec<f64> = (0..nn)
            .into_par_iter()
            .map(|iv| {
                let (v, wv) = &nodes[iv];
                let terms: Vec<f64> = (0..nn)
                    .map(|iw| {
                        let (w, ww) = &nodes[iw];
                        ww * g(iv, iw, v, w, self.values[iv * nn + iw])
                    })
                    .collect();
                wv * pairwise(&terms)
            })
            .collect();
        pairwise(&rows)
    }

    /// Centered-difference gradient of an array on the product grid at
    /// `(iv, iw)`, returned as `(∇_v, ∇_w)`.
    fn grad4(&self, arr: &[f64], iv: usize, iw: usize) -> (Vector, Vector) {
        let grid = self.grid();
        let n = grid.n();
        let nn = grid.len();
        let h = grid.spacing();
        let idx = iv * nn + iw;
        let mv = grid.multi_index(iv);
        let mw = grid.multi_index(iw);
        let mut gv = [0.0; 3];
        let mut gw = [0.0; 3];
        for a in 0..2 {
            gv[a] = diff(arr, idx, mv[a], n, grid.stride(a) * nn, h);
            gw[a] = diff(arr, idx, mw[a], n, grid.stride(a), h);
        }
        (gv, gw)
    }
}

/// Symmetric `2d × 2d` matrix field on the product space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiftedMatrixField {
    /// `diag(s(v), s(w))`.
    BlockDiag(MatrixField),
    /// `|v−w|^{-2} [a, −a; −a, a](v−w)`.
    Pi,
}

impl LiftedMatrixField {
    fn quad(&self, v: &Vector, w: &Vector, uv: &Vector, uw: &Vector) -> f64 {
        match self {
            LiftedMatrixField::BlockDiag(s) => s.quad(v, uv) + s.quad(w, uw),
            LiftedMatrixField::Pi => {
                let z = [v[0] - w[0], v[1] - w[1], 0.0];
                let r2 = norm_sq(&z);
                if r2 == 0.0 {
                    return 0.0;
                }
                let u = [uv[0] - uw[0], uv[1] - uw[1], 0.0];
                (r2 * norm_sq(&u) - dot(&z, &u).powi(2)) / r2
            }
        }
    }
}

/// `K = diag(k(v), k(w))`.
pub fn lifted_k(t: &TemperatureTensor) -> Result<LiftedMatrixField> {
    Ok(LiftedMatrixField::BlockDiag(k_field(t, t.dim())?))
}

/// `𝒯 − Id = diag(T − Id, T − Id)`.
pub fn lifted_deviation(t: &TemperatureTensor) -> LiftedMatrixField {
    LiftedMatrixField::BlockDiag(MatrixField::Constant(t.deviation()))
}

/// `I_S(F) = ∬ F S:[∇ log F]⊗²` with product-grid centered differences.
pub fn lifted_fisher(field: &LiftedField, s: &LiftedMatrixField) -> f64 {
    lifted_fisher_impl(field, s, false)
}

/// `I_S(F/M) = ∬ F S:[∇ log F + (v, w)]⊗²`.
pub fn lifted_fisher_relative(field: &LiftedField, s: &LiftedMatrixField) -> f64 {
    lifted_fisher_impl(field, s, true)
}

fn lifted_fisher_impl(field: &LiftedField, s: &LiftedMatrixField, relative: bool) -> f64 {
    let vals = field.values();
    field.integrate(|iv, iw, v, w, x| {
        if x < POSITIVITY_FLOOR {
            return 0.0;
        }
        let (mut gv, mut gw) = field.grad4(vals, iv, iw);
        for a in 0..2 {
            gv[a] /= x;
            gw[a] /= x;
            if relative {
                gv[a] += v[a];
                gw[a] += w[a];
            }
        }
        x * s.quad(v, w, &gv, &gw)
    })
}

/// Rotation field `b₁₂(z) = (−z₂, z₁)`.
#[inline]
fn b12(z: &Vector) -> Vector {
    [-z[1], z[0], 0.0]
}

/// `Σ_{k<l} ∬ F K:[∇((b̃_kl·∇F)/F)]⊗²`, with `b̃₁₂·∇F = b₁₂(v−w)·(∇_v − ∇_w)F`
/// by centered differences.
pub fn good_term(field: &LiftedField, k: &LiftedMatrixField) -> Result<f64> {
    good_term_with(field, k, GradientRule::Centered)
}

/// As [`good_term`]; with [`GradientRule::MaxwellFitted`] the derivative of
/// `F` along the rotation is formed from fitted log-gradients, which vanishes
/// exactly on the discrete Maxwellian.
pub fn good_term_with(field: &LiftedField, k: &LiftedMatrixField, rule: GradientRule) -> Result<f64> {
    let grid = field.grid().clone();
    let nn = grid.len();
    let vals = field.values();
    let f = field.density();
    let logg: Vec<Option<Vector>> = (0..nn)
        .map(|i| log_gradients(&grid, f.values(), i, rule).map(|(g, _)| g))
        .collect();
    let nodes: Vec<Vector> = (0..nn).map(|i| grid.node(i)).collect();
    // φ = (b̃·∇F)/F, zero where F is below the floor
    let mut phi = vec![0.0; nn * nn];
    phi.par_chunks_mut(nn).enumerate().for_each(|(iv, row)| {
        for (iw, p) in row.iter_mut().enumerate() {
            let x = vals[iv * nn + iw];
            if x < POSITIVITY_FLOOR {
                continue;
            }
            let v = &nodes[iv];
            let w = &nodes[iw];
            let b = b12(&[v[0] - w[0], v[1] - w[1], 0.0]);
            *p = match rule {
                GradientRule::Centered => {
                    let (gv, gw) = field.grad4(vals, iv, iw);
                    (b[0] * (gv[0] - gw[0]) + b[1] * (gv[1] - gw[1])) / x
                }
                GradientRule::MaxwellFitted => match (&logg[iv], &logg[iw]) {
                    (Some(gv), Some(gw)) => b[0] * (gv[0] - gw[0]) + b[1] * (gv[1] - gw[1]),
                    _ => 0.0,
                },
            };
        }
    });
    Ok(field.integrate(|iv, iw, v, w, x| {
        if x < POSITIVITY_FLOOR {
            return 0.0;
        }
        let (gv, gw) = field.grad4(&phi, iv, iw);
        x * k.quad(v, w, &gv, &gw)
    }))
}

/// `3d · I_{𝒯−Id}(F) = 3d · 2 i_{T−Id}(f)`.
pub fn bad_term(f: &Density, t: &TemperatureTensor) -> Result<f64> {
    let d = f.dim();
    if t.dim() != d {
        return Err(Error::InvalidInput("temperature and density dimensions differ".into()));
    }
    let dev = t.deviation();
    if dev.frobenius_sq() == 0.0 {
        return Ok(0.0);
    }
    Ok(3.0 * d as f64 * 2.0 * fisher_directional(f, &MatrixField::Constant(dev)))
}

/// `3d · (I_{𝒯−Id}(F/M) − 2 Σ (T_i − 1)²)` evaluated on the product grid.
pub fn bad_term_relative_route(field: &LiftedField, t: &TemperatureTensor) -> f64 {
    let d = t.dim() as f64;
    let dev = t.deviation();
    3.0 * d * (lifted_fisher_relative(field, &lifted_deviation(t)) - 2.0 * dev.frobenius_sq())
}

/// `dD/dt = −good + bad` at a state with temperature `T`.
pub fn ddt_entropy_production(f: &Density, t: &TemperatureTensor) -> Result<f64> {
    let field = LiftedField::new(f)?;
    Ok(bad_term(f, t)? - good_term(&field, &lifted_k(t)?)?)
}

/// Both sides of `good ≥ λ_δ D^δ`, `δ = 1 + 2/p`.
pub fn key_inequality_monitor(
    f: &Density,
    t: &TemperatureTensor,
    p: f64,
    lambda: Option<f64>,
) -> Result<(f64, f64)> {
    if !(p >= 2.0) {
        return Err(Error::InvalidInput(format!("moment order p = {p} must be at least 2")));
    }
    let d = f.dim();
    let field = LiftedField::new(f)?;
    let lhs = good_term(&field, &lifted_k(t)?)?;
    let dval = entropy_production(f, t)?.max(0.0);
    let mp = moment(f, p)?.value;
    let lam = lambda_delta(d, p, t.max_eigenvalue(), mp, lambda.unwrap_or_else(|| lambda_default(d)))?;
    Ok((lhs, lam * dval.powf(1.0 + 2.0 / p)))
}

/// Block-diagonal field helper for tests and callers: `diag(c, c)`.
pub fn lifted_constant(c: SymMat) -> LiftedMatrixField {
    LiftedMatrixField::BlockDiag(MatrixField::Constant(c))
}
