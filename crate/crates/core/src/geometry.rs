//! Velocity grids, densities on them, and the affine normalization of raw data.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
pub use crate::linalg::{projector_a, Vector};
use crate::linalg::SymMat;
use crate::sum::{pairwise_by, par_pairwise_by};

/// Uniform tensor grid on `[-L, L]^d` with trapezoid quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    dim: usize,
    half_width: f64,
    n: usize,
    h: f64,
    axis: Vec<f64>,
    axis_weights: Vec<f64>,
    strides: [usize; 3],
    len: usize,
}

/// Builds a `d`-dimensional grid with `n` points per axis on `[-L, L]^d`.
pub fn build_grid(dim: usize, half_width: f64, n: usize) -> Result<VelocityGrid> {
    VelocityGrid::new(dim, half_width, n)
}

impl VelocityGrid {
    pub fn new(dim: usize, half_width: f64, n: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Dimension(dim));
        }
        if n < 8 {
            return Err(Error::TooFewPoints(n));
        }
        if !half_width.is_finite() || half_width <= 0.0 {
            return Err(Error::HalfWidth(half_width));
        }
        let h = 2.0 * half_width / (n - 1) as f64;
        // symmetric construction so that the node set is closed under negation
        let axis: Vec<f64> = (0..n)
            .map(|i| {
                let j = i as f64 - (n - 1) as f64 / 2.0;
                j * h
            })
            .collect();
        let axis_weights: Vec<f64> = (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
            .collect();
        let mut strides = [0; 3];
        for (a, s) in strides.iter_mut().enumerate().take(dim) {
            *s = n.pow((dim - 1 - a) as u32);
        }
        Ok(Self { dim, half_width, n, h, axis, axis_weights, strides, len: n.pow(dim as u32) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    /// One-dimensional trapezoid weights along an axis.
    pub fn axis_weights(&self) -> &[f64] {
        &self.axis_weights
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut r = idx;
        for a in 0..self.dim {
            out[a] = r / self.strides[a];
            r %= self.strides[a];
        }
        out
    }

    pub fn index_of(&self, multi: [usize; 3]) -> usize {
        (0..self.dim).map(|a| multi[a] * self.strides[a]).sum()
    }

    pub fn node(&self, idx: usize) -> Vector {
        let mi = self.multi_index(idx);
        let mut v = [0.0; 3];
        for a in 0..self.dim {
            v[a] = self.axis[mi[a]];
        }
        v
    }

    pub fn weight(&self, idx: usize) -> f64 {
        let mi = self.multi_index(idx);
        (0..self.dim).map(|a| self.axis_weights[mi[a]]).product()
    }

    /// Index of the node `-v`.
    pub fn negated(&self, idx: usize) -> usize {
        let mut mi = self.multi_index(idx);
        for m in mi.iter_mut().take(self.dim) {
            *m = self.n - 1 - *m;
        }
        self.index_of(mi)
    }

    /// Index of the origin node when `n` is odd.
    pub fn origin(&self) -> Option<usize> {
        if self.n % 2 == 1 {
            let c = (self.n - 1) / 2;
            Some(self.index_of([c, c, c]))
        } else {
            None
        }
    }

    /// Trapezoid quadrature of `g(idx, v)` with fixed pairwise summation.
    pub fn integrate<F: Fn(usize, &Vector) -> f64 + Sync>(&self, g: F) -> f64 {
        let term = |i: usize| {
            let v = self.node(i);
            self.weight(i) * g(i, &v)
        };
        if self.len > 1 << 14 {
            par_pairwise_by(self.len, &term)
        } else {
            pairwise_by(self.len, &term)
        }
    }

    /// Multilinear interpolation of nodal values at `x`; zero outside the box.
    /// Points outside by less than `1e-3·h` (rounding of affine maps) are
    /// snapped onto the face.
    pub fn interpolate(&self, values: &[f64], x: &Vector) -> f64 {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        let top = (self.n - 1) as f64;
        for a in 0..self.dim {
            let mut s = (x[a] + self.half_width) / self.h;
            if (-1e-3..0.0).contains(&s) {
                s = 0.0;
            } else if s > top && s <= top + 1e-3 {
                s = top;
            }
            if !(0.0..=top).contains(&s) {
                return 0.0;
            }
            let i = (s.floor() as usize).min(self.n - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << self.dim) {
            let mut w = 1.0;
            let mut idx = 0;
            for a in 0..self.dim {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx += (base[a] + bit) * self.strides[a];
            }
            if w != 0.0 {
                acc += w * values[idx];
            }
        }
        acc
    }
}

/// Second-moment tensor `∫ v⊗v f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureTensor {
    matrix: SymMat,
    normalized: bool,
}

/// Tolerance on `|tr T − d|` for a tensor to count as normalized.
pub const TRACE_TOL: f64 = 1e-8;

impl TemperatureTensor {
    pub fn new(matrix: SymMat) -> Self {
        let normalized = (matrix.trace() - matrix.dim as f64).abs() <= TRACE_TOL;
        Self { matrix, normalized }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self::new(SymMat::from_diag(diag))
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    pub fn matrix(&self) -> &SymMat {
        &self.matrix
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn diag(&self) -> Vec<f64> {
        self.matrix.diag()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Largest eigenvalue `T_max`.
    pub fn max_eigenvalue(&self) -> f64 {
        self.matrix.max_eigenvalue()
    }

    /// `T − Id`.
    pub fn deviation(&self) -> SymMat {
        self.matrix.sub(&SymMat::identity(self.dim()))
    }
}

/// Nonnegative nodal density with cached low-order moments.
#[derive(Debug, Clone)]
pub struct Density {
    grid: Arc<VelocityGrid>,
    values: Vec<f64>,
    mass: f64,
    momentum: Vector,
    temperature: TemperatureTensor,
}

impl Density {
    pub fn new(grid: Arc<VelocityGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidDensity(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidDensity(format!(
                "value {} at node {} is negative or not finite",
                values[i], i
            )));
        }
        let d = grid.dim();
        let mass = grid.integrate(|i, _| values[i]);
        let mut momentum = [0.0; 3];
        for (a, m) in momentum.iter_mut().enumerate().take(d) {
            *m = grid.integrate(|i, v| v[a] * values[i]);
        }
        let mut t = SymMat::zeros(d);
        for a in 0..d {
            for b in a..d {
                let x = grid.integrate(|i, v| v[a] * v[b] * values[i]);
                t.m[a][b] = x;
                t.m[b][a] = x;
            }
        }
        Ok(Self { grid, values, mass, momentum, temperature: TemperatureTensor::new(t) })
    }

    /// Samples `g` at every node.
    pub fn from_fn<F: Fn(&Vector) -> f64>(grid: Arc<VelocityGrid>, g: F) -> Result<Self> {
        let values = (0..grid.len()).map(|i| g(&grid.node(i))).collect();
        Self::new(grid, values)
    }

    /// Standard Maxwellian `(2π)^{-d/2} e^{-|v|²/2}`.
    pub fn maxwellian(grid: Arc<VelocityGrid>) -> Result<Self> {
        let d = grid.dim();
        Self::from_fn(grid, |v| maxwellian_value(v, d))
    }

    /// Gaussian with the given mean and covariance.
    pub fn gaussian(grid: Arc<VelocityGrid>, mean: &[f64], cov: &SymMat) -> Result<Self> {
        let g = Gaussian::new(mean, cov)?;
        Self::from_fn(grid, |v| g.eval(v))
    }

    /// Mixture `Σ wᵢ N(μᵢ, Σᵢ)`.
    pub fn gaussian_mixture(grid: Arc<VelocityGrid>, parts: &[(f64, Vec<f64>, SymMat)]) -> Result<Self> {
        let mix = GaussianMixture::new(parts)?;
        Self::from_fn(grid, |v| mix.eval(v))
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn momentum(&self) -> Vector {
        self.momentum
    }

    pub fn temperature(&self) -> &TemperatureTensor {
        &self.temperature
    }

    /// `∫ |v|² f`.
    pub fn energy(&self) -> f64 {
        self.temperature.trace()
    }

    /// Unit mass, zero momentum, diagonal temperature with trace `d`.
    pub fn is_normalized(&self) -> bool {
        let d = self.dim();
        let mom = self.momentum.iter().map(|x| x.abs()).fold(0.0, f64::max);
        (self.mass - 1.0).abs() <= 1e-10
            && mom <= 1e-10
            && (self.temperature.trace() - d as f64).abs() <= TRACE_TOL
            && self.temperature.matrix().max_offdiag() <= TRACE_TOL
    }

    /// `∫ |f − g|` on the shared grid.
    pub fn l1_distance(&self, other: &Density) -> f64 {
        self.grid.integrate(|i, _| (self.values[i] - other.values[i]).abs())
    }
}

pub(crate) fn maxwellian_value(v: &Vector, d: usize) -> f64 {
    let r2: f64 = v[..d].iter().map(|x| x * x).sum();
    (2.0 * PI).powf(-(d as f64) / 2.0) * (-0.5 * r2).exp()
}

/// Closed-form mixture `Σ wᵢ N(μᵢ, Σᵢ)`.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    parts: Vec<(f64, Gaussian)>,
}

impl GaussianMixture {
    pub fn new(parts: &[(f64, Vec<f64>, SymMat)]) -> Result<Self> {
        let parts = parts
            .iter()
            .map(|(w, mu, cov)| Gaussian::new(mu, cov).map(|g| (*w, g)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { parts })
    }

    pub fn eval(&self, v: &Vector) -> f64 {
        self.parts.iter().map(|(w, g)| w * g.eval(v)).sum()
    }
}

/// Closed-form Gaussian density.
#[derive(Debug, Clone)]
pub(crate) struct Gaussian {
    dim: usize,
    mean: Vector,
    vals: Vec<f64>,
    rot: [[f64; 3]; 3],
    norm: f64,
}

impl Gaussian {
    pub(crate) fn new(mean: &[f64], cov: &SymMat) -> Result<Self> {
        let dim = cov.dim;
        if mean.len() != dim {
            return Err(Error::InvalidInput(format!(
                "mean has {} components, covariance is {dim}x{dim}",
                mean.len()
            )));
        }
        let (vals, rot) = cov.eigen();
        if vals.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidInput("covariance must be positive definite".into()));
        }
        let det: f64 = vals.iter().product();
        let norm = (2.0 * PI).powf(-(dim as f64) / 2.0) / det.sqrt();
        let mut m = [0.0; 3];
        m[..dim].copy_from_slice(mean);
        Ok(Self { dim, mean: m, vals, rot, norm })
    }

    pub(crate) fn eval(&self, v: &Vector) -> f64 {
        let mut q = 0.0;
        for k in 0..self.dim {
            let p: f64 = (0..self.dim).map(|a| self.rot[a][k] * (v[a] - self.mean[a])).sum();
            q += p * p / self.vals[k];
        }
        self.norm * (-0.5 * q).exp()
    }
}

/// Affine change of variables `u = scale · Rᵀ (v − shift)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub shift: Vector,
    /// Columns are the eigenvectors of the raw covariance.
    pub rotation: [[f64; 3]; 3],
    pub scale: f64,
}

impl AffineMap {
    pub fn identity() -> Self {
        let mut rotation = [[0.0; 3]; 3];
        for (i, row) in rotation.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { shift: [0.0; 3], rotation, scale: 1.0 }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        let mut u = [0.0; 3];
        for (k, uk) in u.iter_mut().enumerate() {
            *uk = self.scale * (0..3).map(|a| self.rotation[a][k] * (v[a] - self.shift[a])).sum::<f64>();
        }
        u
    }

    /// Inverse map `v = shift + R u / scale`.
    pub fn invert(&self, u: &Vector) -> Vector {
        let mut v = self.shift;
        for (a, va) in v.iter_mut().enumerate() {
            *va += (0..3).map(|k| self.rotation[a][k] * u[k]).sum::<f64>() / self.scale;
        }
        v
    }

    /// The map `next ∘ self`.
    pub fn then(&self, next: &AffineMap) -> AffineMap {
        let mut rotation = [[0.0; 3]; 3];
        for (i, row) in rotation.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..3).map(|k| self.rotation[i][k] * next.rotation[k][j]).sum();
            }
        }
        let mut shift = self.shift;
        for (a, s) in shift.iter_mut().enumerate() {
            *s += (0..3).map(|k| self.rotation[a][k] * next.shift[k]).sum::<f64>() / self.scale;
        }
        AffineMap { shift, rotation, scale: self.scale * next.scale }
    }
}

const MAX_NORMALIZE_PASSES: usize = 40;

/// Maps raw data to unit mass, zero momentum and diagonal temperature with
/// trace `d`, resampling on the same grid by multilinear interpolation.
pub fn normalize(raw: &Density) -> Result<(Density, AffineMap)> {
    let grid = raw.grid().clone();
    normalize_by(raw.clone(), |total| {
        let jac = total.scale.powi(-(grid.dim() as i32));
        (0..grid.len())
            .map(|i| (grid.interpolate(raw.values(), &total.invert(&grid.node(i))) * jac).max(0.0))
            .collect()
    })
}

/// As [`normalize`] for a density given in closed form: every pass samples
/// `g` at the mapped nodes, so no interpolation error enters.
pub fn normalize_fn<F: Fn(&Vector) -> f64>(grid: Arc<VelocityGrid>, g: F) -> Result<(Density, AffineMap)> {
    let raw = Density::from_fn(grid.clone(), &g)?;
    normalize_by(raw, |total| {
        let jac = total.scale.powi(-(grid.dim() as i32));
        (0..grid.len()).map(|i| (g(&total.invert(&grid.node(i))) * jac).max(0.0)).collect()
    })
}

/// Iterates moment-fitting affine steps; `sample(total)` returns the raw
/// density pushed forward by the accumulated map.
fn normalize_by<S: Fn(&AffineMap) -> Vec<f64>>(raw: Density, sample: S) -> Result<(Density, AffineMap)> {
    if !(raw.mass() > 0.0) {
        return Err(Error::InvalidDensity(format!("mass {} is not positive", raw.mass())));
    }
    let d = raw.dim();
    let grid = raw.grid().clone();
    let mut total = AffineMap::identity();
    let mut current = unit_mass(grid.clone(), raw.into_values())?;
    for _ in 0..MAX_NORMALIZE_PASSES {
        if current.is_normalized() {
            return Ok((current, total));
        }
        let mu = current.momentum();
        let mut cov = *current.temperature().matrix();
        for a in 0..d {
            for b in 0..d {
                cov.m[a][b] -= mu[a] * mu[b];
            }
        }
        let (vals, rot) = cov.eigen();
        let (largest, smallest) = (vals[0], vals[d - 1]);
        if !(smallest > 1e-10 * largest) {
            return Err(Error::DegenerateCovariance { smallest, largest });
        }
        let mut step = AffineMap::identity();
        step.shift = mu;
        // rotate only when the tensor is visibly non-diagonal; near-isotropic
        // data would otherwise pick arbitrary eigenbases on every pass
        let diag_scale = cov.diag().iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        if cov.max_offdiag() > 1e-9 * diag_scale || !is_descending(&cov.diag()) {
            step.rotation = rot;
        }
        step.scale = (d as f64 / vals.iter().sum::<f64>()).sqrt();
        total = total.then(&step);
        current = unit_mass(grid.clone(), sample(&total))?;
    }
    if current.is_normalized() {
        Ok((current, total))
    } else {
        Err(Error::NormalizationStalled(MAX_NORMALIZE_PASSES))
    }
}

fn is_descending(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] >= w[1])
}

fn unit_mass(grid: Arc<VelocityGrid>, mut values: Vec<f64>) -> Result<Density> {
    let m = grid.integrate(|i, _| values[i]);
    if !(m > 0.0) {
        return Err(Error::InvalidDensity("resampled density vanished on the grid".into()));
    }
    for x in values.iter_mut() {
        *x /= m;
    }
    Density::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_inputs() {
        assert_eq!(build_grid(4, 6.0, 32), Err(Error::Dimension(4)));
        assert_eq!(build_grid(2, 6.0, 3), Err(Error::TooFewPoints(3)));
        assert!(matches!(build_grid(2, f64::NAN, 32), Err(Error::HalfWidth(_))));
        assert!(matches!(build_grid(2, -1.0, 32), Err(Error::HalfWidth(_))));
    }

    #[test]
    fn grid_weights_sum_to_box_volume() {
        let g = build_grid(2, 6.0, 97).unwrap();
        assert_eq!(g.spacing(), 0.125);
        assert!((g.integrate(|_, _| 1.0) - 144.0).abs() < 1e-12 * 144.0);
        let g = build_grid(3, 5.0, 65).unwrap();
        assert!((g.integrate(|_, _| 1.0) - 1000.0).abs() < 1e-9 * 1000.0);
    }

    #[test]
    fn grid_closed_under_negation() {
        let g = build_grid(3, 4.0, 10).unwrap();
        for i in 0..g.len() {
            let j = g.negated(i);
            let (v, w) = (g.node(i), g.node(j));
            for a in 0..3 {
                assert_eq!(v[a], -w[a]);
            }
        }
    }

    #[test]
    fn interpolation_reproduces_bilinear_functions() {
        let g = Arc::new(build_grid(2, 3.0, 13).unwrap());
        let f = |v: &Vector| 1.0 + 0.3 * v[0] - 0.2 * v[1] + 0.1 * v[0] * v[1];
        let vals: Vec<f64> = (0..g.len()).map(|i| f(&g.node(i))).collect();
        let x = [0.37, -1.91, 0.0];
        assert!((g.interpolate(&vals, &x) - f(&x)).abs() < 1e-13);
        assert_eq!(g.interpolate(&vals, &[3.5, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn affine_composition_matches_sequential_application() {
        let mut a = AffineMap::identity();
        a.shift = [0.3, -0.2, 0.0];
        a.scale = 1.3;
        let c = 0.6_f64.cos();
        let s = 0.6_f64.sin();
        a.rotation = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        let mut b = AffineMap::identity();
        b.shift = [-0.1, 0.5, 0.0];
        b.scale = 0.7;
        let v = [1.0, 2.0, 0.0];
        let seq = b.apply(&a.apply(&v));
        let comp = a.then(&b).apply(&v);
        for k in 0..3 {
            assert!((seq[k] - comp[k]).abs() < 1e-14);
        }
        let back = a.invert(&a.apply(&v));
        for k in 0..3 {
            assert!((back[k] - v[k]).abs() < 1e-14);
        }
    }
}
