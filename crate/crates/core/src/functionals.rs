//! Entropy, entropy production and Fisher-type informations on grid densities.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Density, TemperatureTensor, Vector, VelocityGrid};
use crate::linalg::{dot, norm_sq, projector_a, SymMat};
use crate::stencil::{diff, diff_stencil};
use crate::sum::pairwise;

/// Nodes with `f` below this value are left out of Fisher-type integrands.
pub const POSITIVITY_FLOOR: f64 = 1e-30;

/// Symmetric matrix field on velocity space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixField {
    /// `a(v)`.
    Projector,
    /// A constant matrix.
    Constant(SymMat),
    /// `a(v) + C`; with `C = d·Id − T` this is the coefficient field `k`.
    ProjectorPlus(SymMat),
}

impl MatrixField {
    pub fn eval(&self, v: &Vector, dim: usize) -> SymMat {
        match self {
            MatrixField::Projector => projector_a(v, dim),
            MatrixField::Constant(c) => *c,
            MatrixField::ProjectorPlus(c) => projector_a(v, dim).add(c),
        }
    }

    /// `s(v) : (u⊗u)` without forming the matrix.
    #[inline]
    pub fn quad(&self, v: &Vector, u: &Vector) -> f64 {
        let proj = || norm_sq(v) * norm_sq(u) - dot(v, u).powi(2);
        match self {
            MatrixField::Projector => proj(),
            MatrixField::Constant(c) => c.quad(u),
            MatrixField::ProjectorPlus(c) => proj() + c.quad(u),
        }
    }
}

/// The coefficient field `k(v) = a(v) + d·Id − T`.
pub fn k_field(t: &TemperatureTensor, d: usize) -> Result<MatrixField> {
    if t.dim() != d {
        return Err(Error::InvalidInput(format!("tensor of dimension {} used with d = {d}", t.dim())));
    }
    if !t.is_normalized() {
        return Err(Error::NotNormalized(t.trace()));
    }
    Ok(MatrixField::ProjectorPlus(SymMat::scaled_identity(d, d as f64).sub(t.matrix())))
}

/// How `∇ log f` is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientRule {
    /// Centered differences of `f`, divided by `f`.
    #[default]
    Centered,
    /// Centered differences of `f/M` rescaled by `M/f`, `M` the standard
    /// Maxwellian. Exact (zero relative gradient) at equilibrium.
    MaxwellFitted,
}

/// Which functional a [`FunctionalValue`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalKind {
    Entropy,
    RelativeEntropy,
    EntropyProductionDasI,
    EntropyProductionDirect,
    FisherDirectional,
    FisherRelative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalValue {
    pub kind: FunctionalKind,
    pub value: f64,
    pub time: f64,
}

/// `∇_h f` at a node.
pub(crate) fn grad(grid: &VelocityGrid, vals: &[f64], idx: usize) -> Vector {
    let mi = grid.multi_index(idx);
    let (n, h) = (grid.n(), grid.spacing());
    let mut g = [0.0; 3];
    for (a, ga) in g.iter_mut().enumerate().take(grid.dim()) {
        *ga = diff(vals, idx, mi[a], n, grid.stride(a), h);
    }
    g
}

/// `(∇ log f, ∇ log(f/M))` at a node, `None` below the positivity floor.
pub(crate) fn log_gradients(
    grid: &VelocityGrid,
    vals: &[f64],
    idx: usize,
    rule: GradientRule,
) -> Option<(Vector, Vector)> {
    let fp = vals[idx];
    if fp < POSITIVITY_FLOOR {
        return None;
    }
    let v = grid.node(idx);
    let d = grid.dim();
    match rule {
        GradientRule::Centered => {
            let g = grad(grid, vals, idx).map(|x| x / fp);
            let mut rho = g;
            for a in 0..d {
                rho[a] += v[a];
            }
            Some((g, rho))
        }
        GradientRule::MaxwellFitted => {
            let mi = grid.multi_index(idx);
            let (n, h) = (grid.n(), grid.spacing());
            let axis = grid.axis();
            let mut rho = [0.0; 3];
            for a in 0..d {
                let x = v[a];
                let stride = grid.stride(a) as isize;
                let mut s = 0.0;
                for (off, c) in diff_stencil(mi[a], n) {
                    if c == 0.0 {
                        continue;
                    }
                    let y = axis[(mi[a] as isize + off) as usize];
                    let j = (idx as isize + off * stride) as usize;
                    s += c * vals[j] * (0.5 * (y * y - x * x)).exp();
                }
                rho[a] = s / (h * fp);
            }
            let mut g = rho;
            for a in 0..d {
                g[a] -= v[a];
            }
            Some((g, rho))
        }
    }
}

/// `H(f) = ∫ f log f` with `0 log 0 = 0`.
pub fn entropy(f: &Density) -> f64 {
    let vals = f.values();
    f.grid().integrate(|i, _| {
        let x = vals[i];
        if x > 0.0 {
            x * x.ln()
        } else {
            0.0
        }
    })
}

/// `H(f/m) = H(f) + mass·(d/2) log 2π + m₂/2`.
pub fn relative_entropy(f: &Density) -> f64 {
    let d = f.dim() as f64;
    entropy(f) + f.mass() * 0.5 * d * (2.0 * PI).ln() + 0.5 * f.energy()
}

fn fisher(f: &Density, s: &MatrixField, rule: GradientRule, relative: bool) -> f64 {
    let grid = f.grid();
    let vals = f.values();
    grid.integrate(|i, v| match log_gradients(grid, vals, i, rule) {
        Some((g, rho)) => {
            let u = if relative { rho } else { g };
            vals[i] * s.quad(v, &u)
        }
        None => 0.0,
    })
}

/// `i_s(f) = ∫ f s:[∇ log f]⊗²`.
pub fn fisher_directional(f: &Density, s: &MatrixField) -> f64 {
    fisher(f, s, GradientRule::Centered, false)
}

pub fn fisher_directional_with(f: &Density, s: &MatrixField, rule: GradientRule) -> f64 {
    fisher(f, s, rule, false)
}

/// `i_s(f/m) = ∫ f s:[∇ log f + v]⊗²`.
pub fn fisher_relative(f: &Density, s: &MatrixField) -> f64 {
    fisher(f, s, GradientRule::Centered, true)
}

pub fn fisher_relative_with(f: &Density, s: &MatrixField, rule: GradientRule) -> f64 {
    fisher(f, s, rule, true)
}

/// `D(f) = i_k(f) − d(d−1)`.
pub fn entropy_production(f: &Density, t: &TemperatureTensor) -> Result<f64> {
    let d = f.dim();
    let k = k_field(t, d)?;
    Ok(fisher_directional(f, &k) - (d * (d - 1)) as f64)
}

/// `D(f) = i_k(f/m) + Σ (T_i − 1)²` (Frobenius norm for non-diagonal `T`).
pub fn entropy_production_relative(f: &Density, t: &TemperatureTensor) -> Result<f64> {
    entropy_production_relative_with(f, t, GradientRule::Centered)
}

pub fn entropy_production_relative_with(
    f: &Density,
    t: &TemperatureTensor,
    rule: GradientRule,
) -> Result<f64> {
    let k = k_field(t, f.dim())?;
    Ok(fisher_relative_with(f, &k, rule) + t.deviation().frobenius_sq())
}

/// Largest `n` accepted by [`entropy_production_direct`] in d = 3.
pub const DIRECT_MAX_N_3D: usize = 24;

/// `½ ∬ a(v−w):[(∇_v − ∇_w) log(f(v)f(w))]⊗² f(v)f(w)` on the product grid.
pub fn entropy_production_direct(f: &Density) -> Result<f64> {
    let grid = f.grid();
    let d = grid.dim();
    if d == 3 && grid.n() > DIRECT_MAX_N_3D {
        return Err(Error::CostGuard(format!(
            "direct double integral refused for d = 3 with n = {} > {DIRECT_MAX_N_3D}",
            grid.n()
        )));
    }
    let vals = f.values();
    // (node, weight·f, ∇ log f) for nodes above the floor
    let pts: Vec<(Vector, f64, Vector)> = (0..grid.len())
        .filter_map(|i| {
            log_gradients(grid, vals, i, GradientRule::Centered)
                .map(|(g, _)| (grid.node(i), grid.weight(i) * vals[i], g))
        })
        .collect();
    let rows: Vec<f64> = pts
        .par_iter()
        .map(|(v, wv, gv)| {
            let terms: Vec<f64> = pts
                .iter()
                .map(|(w, ww, gw)| {
                    let z = [v[0] - w[0], v[1] - w[1], v[2] - w[2]];
                    let u = [gv[0] - gw[0], gv[1] - gw[1], gv[2] - gw[2]];
                    ww * (norm_sq(&z) * norm_sq(&u) - dot(&z, &u).powi(2))
                })
                .collect();
            wv * pairwise(&terms)
        })
        .collect();
    Ok(0.5 * pairwise(&rows))
}

/// Discrete value of `∬ a(v−w):(∇f(v)⊗∇f(w)) − d(d−1)`, which vanishes for
/// exactly normalized continuum data. Computed from moment sums of `∇_h f`.
pub fn dasi_residual(f: &Density) -> f64 {
    let grid = f.grid();
    let vals = f.values();
    let d = grid.dim();
    let grads: Vec<Vector> = (0..grid.len()).map(|i| grad(grid, vals, i)).collect();
    let mut p = [0.0; 3];
    let mut r = [0.0; 3];
    let mut s = [0.0; 3];
    let mut q = [[0.0; 3]; 3];
    for a in 0..d {
        p[a] = grid.integrate(|i, _| grads[i][a]);
        r[a] = grid.integrate(|i, v| norm_sq(v) * grads[i][a]);
        s[a] = grid.integrate(|i, v| v[a] * dot(v, &grads[i]));
        for b in 0..d {
            q[a][b] = grid.integrate(|i, v| v[a] * grads[i][b]);
        }
    }
    let mut qq = 0.0;
    let mut qqt = 0.0;
    let mut trq = 0.0;
    for a in 0..d {
        trq += q[a][a];
        for b in 0..d {
            qq += q[a][b] * q[a][b];
            qqt += q[a][b] * q[b][a];
        }
    }
    let first = 2.0 * dot(&r, &p) - 2.0 * qq;
    let second = 2.0 * dot(&s, &p) - trq * trq - qqt;
    first - second - (d * (d - 1)) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use std::sync::Arc;

    fn gaussian(n: usize) -> Density {
        let g = Arc::new(build_grid(2, 6.0, n).unwrap());
        Density::gaussian(g, &[0.0, 0.0], &SymMat::from_diag(&[1.5, 0.5])).unwrap()
    }

    #[test]
    fn k_field_examples() {
        let t = TemperatureTensor::from_diag(&[1.5, 0.5]);
        let k = k_field(&t, 2).unwrap().eval(&[1.0, 0.0, 0.0], 2);
        assert_eq!(k.diag(), vec![0.5, 2.5]);
        assert_eq!(k.m[0][1], 0.0);
        let id = TemperatureTensor::from_diag(&[1.0, 1.0, 1.0]);
        assert_eq!(k_field(&id, 3).unwrap().eval(&[0.0; 3], 3), SymMat::scaled_identity(3, 2.0));
        assert!(k_field(&TemperatureTensor::from_diag(&[2.0, 1.0]), 2).is_err());
    }

    #[test]
    fn entropy_closed_forms() {
        let g = Arc::new(build_grid(2, 6.0, 65).unwrap());
        let m = Density::maxwellian(g.clone()).unwrap();
        assert!((entropy(&m) + (2.0 * PI).ln() + 1.0).abs() < 1e-3);
        let u = Density::from_fn(g, |_| 1.0 / 144.0).unwrap();
        assert!((entropy(&u) + 144f64.ln()).abs() < 1e-6);
        let f = gaussian(65);
        assert!((relative_entropy(&f) - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-3);
    }

    #[test]
    fn gaussian_fisher_values() {
        let f = gaussian(97);
        let t = TemperatureTensor::from_diag(&[1.5, 0.5]);
        let dev = MatrixField::Constant(t.deviation());
        assert!((fisher_directional(&f, &dev) + 2.0 / 3.0).abs() < 1e-2);
        let id = MatrixField::Constant(SymMat::identity(2));
        assert!((fisher_relative(&f, &id) - 2.0 / 3.0).abs() < 1e-2);
        let d = entropy_production(&f, &t).unwrap();
        assert!((d - 8.0 / 3.0).abs() < 2e-2, "{d}");
    }

    #[test]
    fn fitted_relative_gradient_vanishes_on_maxwellian() {
        let g = Arc::new(build_grid(2, 6.0, 33).unwrap());
        let m = Density::maxwellian(g).unwrap();
        let id = MatrixField::Constant(SymMat::identity(2));
        assert!(fisher_relative_with(&m, &id, GradientRule::MaxwellFitted) < 1e-24);
        assert!(fisher_relative(&m, &id) > 1e-6);
    }

    #[test]
    fn residual_small_for_gaussian() {
        let f = gaussian(97);
        assert!(dasi_residual(&f).abs() < 1e-2);
    }
}
