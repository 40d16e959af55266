//! Integrated Γ₂ criterion on the sphere `S^{d−1}` for antipodally symmetric
//! densities, checked by quadrature.
//!
//! Rotation fields `L_ij = σ_i ∂_j − σ_j ∂_i` act on `ψ = log g`. On the circle
//! the single field is `∂θ`, differentiated spectrally. On `S²` the grid is a
//! latitude–longitude product with latitudes offset by half a cell; every
//! meridian together with its antipodal meridian forms a great circle sampled
//! uniformly, so `∂θ` and `∂φ` are both spectral.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::bounds::lambda_default;
use crate::error::{Error, Result};
use crate::sum::pairwise;

/// Spectral first derivative of `2π`-periodic samples on a uniform grid.
#[derive(Clone)]
struct SpectralDiff {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl SpectralDiff {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&r| Complex::new(r, 0.0)).collect();
        self.fwd.process(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            let freq = if k < n / 2 {
                k as f64
            } else if k == n / 2 && n.is_multiple_of(2) {
                0.0
            } else {
                k as f64 - n as f64
            };
            *c *= Complex::new(0.0, freq / n as f64);
        }
        self.inv.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Quadrature grid on `S^{d−1}`.
#[derive(Clone)]
pub struct SphereGrid {
    dim: usize,
    /// `θ` values (d = 2: angle on the circle; d = 3: colatitude).
    theta: Vec<f64>,
    /// Longitudes (d = 3 only).
    phi: Vec<f64>,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    d_theta: SpectralDiff,
    d_phi: Option<SpectralDiff>,
}

impl fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereGrid")
            .field("dim", &self.dim)
            .field("n_theta", &self.theta.len())
            .field("n_phi", &self.phi.len())
            .finish()
    }
}

impl SphereGrid {
    /// `n` equispaced angles on the circle (`n` even).
    pub fn circle(n: usize) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("circle grid needs an even n ≥ 8, got {n}")));
        }
        let theta: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let points = theta.iter().map(|t| [t.cos(), t.sin(), 0.0]).collect();
        let weights = vec![2.0 * PI / n as f64; n];
        Ok(Self { dim: 2, theta, phi: Vec::new(), points, weights, d_theta: SpectralDiff::new(n), d_phi: None })
    }

    /// Offset colatitudes `(k+½)π/n_θ` with Fejér weights times `n_φ`
    /// equispaced longitudes (`n_φ` even).
    pub fn sphere(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 4 || n_phi < 8 || !n_phi.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "sphere grid needs n_theta ≥ 4 and an even n_phi ≥ 8, got {n_theta} × {n_phi}"
            )));
        }
        let theta: Vec<f64> = (0..n_theta).map(|k| (k as f64 + 0.5) * PI / n_theta as f64).collect();
        let phi: Vec<f64> = (0..n_phi).map(|m| 2.0 * PI * m as f64 / n_phi as f64).collect();
        let fejer: Vec<f64> = theta
            .iter()
            .map(|&t| {
                let s: f64 = (1..=n_theta / 2)
                    .map(|j| (2.0 * j as f64 * t).cos() / (4.0 * (j * j) as f64 - 1.0))
                    .sum();
                2.0 / n_theta as f64 * (1.0 - 2.0 * s)
            })
            .collect();
        let mut points = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (k, &t) in theta.iter().enumerate() {
            for &p in &phi {
                points.push([t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]);
                weights.push(fejer[k] * 2.0 * PI / n_phi as f64);
            }
        }
        Ok(Self {
            dim: 3,
            d_theta: SpectralDiff::new(2 * n_theta),
            d_phi: Some(SpectralDiff::new(n_phi)),
            theta,
            phi,
            points,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of `−σ` for node `i`.
    pub fn antipode(&self, i: usize) -> usize {
        if self.dim == 2 {
            let n = self.theta.len();
            (i + n / 2) % n
        } else {
            let (nt, np) = (self.theta.len(), self.phi.len());
            let (k, m) = (i / np, i % np);
            (nt - 1 - k) * np + (m + np / 2) % np
        }
    }

    /// Rotation fields `(i, j)` with `i < j`.
    pub fn rotations(&self) -> Vec<(usize, usize)> {
        if self.dim == 2 {
            vec![(0, 1)]
        } else {
            vec![(0, 1), (0, 2), (1, 2)]
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = values.iter().zip(&self.weights).map(|(v, w)| v * w).collect();
        pairwise(&terms)
    }

    fn d_theta(&self, u: &[f64]) -> Vec<f64> {
        if self.dim == 2 {
            return self.d_theta.apply(u);
        }
        let (nt, np) = (self.theta.len(), self.phi.len());
        let mut out = vec![0.0; u.len()];
        for m in 0..np / 2 {
            let m2 = m + np / 2;
            // great circle: meridian m downwards in θ, then meridian m2 back up
            let mut circle = Vec::with_capacity(2 * nt);
            circle.extend((0..nt).map(|k| u[k * np + m]));
            circle.extend((0..nt).rev().map(|k| u[k * np + m2]));
            let dc = self.d_theta.apply(&circle);
            for k in 0..nt {
                out[k * np + m] = dc[k];
                out[k * np + m2] = -dc[2 * nt - 1 - k];
            }
        }
        out
    }

    fn d_phi(&self, u: &[f64]) -> Vec<f64> {
        let np = self.phi.len();
        let op = self.d_phi.as_ref().expect("longitude derivative exists for d = 3");
        let mut out = Vec::with_capacity(u.len());
        for row in u.chunks(np) {
            out.extend(op.apply(row));
        }
        out
    }

    /// `L_ij u = (σ_i ∂_j − σ_j ∂_i) u`.
    pub fn rotate(&self, (i, j): (usize, usize), u: &[f64]) -> Vec<f64> {
        if self.dim == 2 {
            return self.d_theta(u);
        }
        let np = self.phi.len();
        let dphi = self.d_phi(u);
        if (i, j) == (0, 1) {
            return dphi;
        }
        let dth = self.d_theta(u);
        (0..u.len())
            .map(|idx| {
                let (t, p) = (self.theta[idx / np], self.phi[idx % np]);
                let cot = t.cos() / t.sin();
                match (i, j) {
                    (0, 2) => -p.cos() * dth[idx] + cot * p.sin() * dphi[idx],
                    (1, 2) => -p.sin() * dth[idx] - cot * p.cos() * dphi[idx],
                    _ => unreachable!("rotation pairs are (0,1), (0,2), (1,2)"),
                }
            })
            .collect()
    }
}

/// Positive antipodally symmetric density on the sphere, stored with its
/// logarithm.
#[derive(Debug, Clone)]
pub struct SphereDensity {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
    log: Vec<f64>,
}

impl SphereDensity {
    /// Builds `g = exp(ψ)` from a log-density generator; rejects generators
    /// that are not even under `σ ↦ −σ` on the grid.
    pub fn from_log<F: Fn(&[f64; 3]) -> f64>(grid: Arc<SphereGrid>, psi: F) -> Result<Self> {
        let log: Vec<f64> = grid.points().iter().map(psi).collect();
        if log.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("log-density must be finite".into()));
        }
        let values: Vec<f64> = log.iter().map(|x| x.exp()).collect();
        for i in 0..values.len() {
            let j = grid.antipode(i);
            if (values[i] - values[j]).abs() > 1e-12 * values[i].max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "density is not antipodally symmetric at node {i}"
                )));
            }
        }
        Ok(Self { grid, values, log })
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log
    }

    fn first_derivatives(&self) -> Vec<((usize, usize), Vec<f64>)> {
        self.grid
            .rotations()
            .into_iter()
            .map(|r| (r, self.grid.rotate(r, &self.log)))
            .collect()
    }

    fn weighted(&self, u: &[f64], power: i32) -> f64 {
        let integrand: Vec<f64> = u.iter().zip(&self.values).map(|(x, g)| g * x.powi(power)).collect();
        self.grid.integrate(&integrand)
    }
}

/// Denominator below which the ratio is undefined.
pub const RATIO_DENOMINATOR_MIN: f64 = 1e-12;

/// `Σ_{i<j,k<l} ∫ g (L_ij L_kl log g)² / Σ_{k<l} ∫ g (L_kl log g)²`.
pub fn gamma2_ratio(g: &SphereDensity) -> Result<f64> {
    let first = g.first_derivatives();
    let den: f64 = first.iter().map(|(_, u)| g.weighted(u, 2)).sum();
    if !(den > RATIO_DENOMINATOR_MIN) {
        return Err(Error::RatioUndefined);
    }
    let mut num = 0.0;
    for (_, u) in &first {
        for r in g.grid.rotations() {
            num += g.weighted(&g.grid.rotate(r, u), 2);
        }
    }
    Ok(num / den)
}

/// `(Σ_kl ∫ g (L_kl L_kl log g)², (1/9) Σ_kl ∫ g (L_kl log g)⁴)`.
pub fn fourth_power_check(g: &SphereDensity) -> (f64, f64) {
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (r, u) in g.first_derivatives() {
        lhs += g.weighted(&g.grid.rotate(r, &u), 2);
        rhs += g.weighted(&u, 4) / 9.0;
    }
    (lhs, rhs)
}

/// Shape of the log-densities in a scanned family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// d = 2, `log g = a cos 2θ`.
    Cos2Theta,
    /// d = 2, `log g = Σ_k c_k cos 2kθ + s_k sin 2kθ` with parameters
    /// `[c_1, s_1, c_2, s_2, …]`.
    EvenHarmonics,
    /// d = 3, `log g = a σ₁σ₂ + b (σ₁² − σ₃²)`.
    Quadric,
    /// d = 3, `log g = σᵀ A σ` with `A` given by `[A11, A22, A33, A12, A13, A23]`.
    QuadraticForm,
}

impl FamilyKind {
    pub fn dim(&self) -> usize {
        match self {
            FamilyKind::Cos2Theta | FamilyKind::EvenHarmonics => 2,
            FamilyKind::Quadric | FamilyKind::QuadraticForm => 3,
        }
    }

    pub fn parameter_names(&self, count: usize) -> Vec<String> {
        match self {
            FamilyKind::Cos2Theta => vec!["a".into()],
            FamilyKind::EvenHarmonics => (0..count)
                .map(|i| format!("{}{}", if i % 2 == 0 { "c" } else { "s" }, i / 2 + 1))
                .collect(),
            FamilyKind::Quadric => vec!["a".into(), "b".into()],
            FamilyKind::QuadraticForm => ["a11", "a22", "a33", "a12", "a13", "a23"].map(String::from).to_vec(),
        }
    }

    /// `log g(σ)` for the given parameters.
    pub fn log_density(&self, params: &[f64], s: &[f64; 3]) -> f64 {
        match self {
            FamilyKind::Cos2Theta => params[0] * (2.0 * s[1].atan2(s[0])).cos(),
            FamilyKind::EvenHarmonics => {
                let t = s[1].atan2(s[0]);
                params
                    .chunks(2)
                    .enumerate()
                    .map(|(k, cs)| {
                        let m = 2.0 * (k + 1) as f64 * t;
                        cs[0] * m.cos() + cs.get(1).copied().unwrap_or(0.0) * m.sin()
                    })
                    .sum()
            }
            FamilyKind::Quadric => params[0] * s[0] * s[1] + params[1] * (s[0] * s[0] - s[2] * s[2]),
            FamilyKind::QuadraticForm => {
                let p = params;
                p[0] * s[0] * s[0]
                    + p[1] * s[1] * s[1]
                    + p[2] * s[2] * s[2]
                    + 2.0 * (p[3] * s[0] * s[1] + p[4] * s[0] * s[2] + p[5] * s[1] * s[2])
            }
        }
    }

    fn expected_params(&self) -> Option<usize> {
        match self {
            FamilyKind::Cos2Theta => Some(1),
            FamilyKind::EvenHarmonics => None,
            FamilyKind::Quadric => Some(2),
            FamilyKind::QuadraticForm => Some(6),
        }
    }
}

/// A family of densities: a shape and a list of parameter vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub kind: FamilyKind,
    pub members: Vec<Vec<f64>>,
}

impl Family {
    /// `{exp(a cos 2θ)}` (d = 2) on `steps` values of `a ∈ [−amp, amp]`, or
    /// `{exp(a σ₁σ₂ + b(σ₁² − σ₃²))}` (d = 3) on a `steps × steps` grid of
    /// `a, b ∈ [−amp, amp]`.
    pub fn default_for(d: usize, amplitude: f64, steps: usize) -> Result<Self> {
        let axis = linspace(-amplitude, amplitude, steps);
        match d {
            2 => Ok(Self { kind: FamilyKind::Cos2Theta, members: axis.iter().map(|&a| vec![a]).collect() }),
            3 => Ok(Self {
                kind: FamilyKind::Quadric,
                members: axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect(),
            }),
            _ => Err(Error::Dimension(d)),
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// One evaluated family member.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub params: Vec<f64>,
    pub ratio: f64,
    pub fourth_lhs: f64,
    pub fourth_rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub min_ratio: f64,
    pub argmin: Vec<f64>,
    /// `d + 3 − 1/(d−1)`.
    pub bound: f64,
    /// Members skipped because they are constant on the sphere.
    pub skipped: usize,
}

/// Default quadrature grid for a dimension.
pub fn default_grid(d: usize) -> Result<SphereGrid> {
    match d {
        2 => SphereGrid::circle(256),
        3 => SphereGrid::sphere(40, 80),
        _ => Err(Error::Dimension(d)),
    }
}

/// Evaluates the ratio over every non-constant member and reports the minimum.
pub fn scan_family(d: usize, family: &Family, grid: Arc<SphereGrid>) -> Result<ScanResult> {
    if family.kind.dim() != d || grid.dim() != d {
        return Err(Error::InvalidInput(format!("family and grid do not match d = {d}")));
    }
    if family.members.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if let Some(k) = family.kind.expected_params() {
        if family.members.iter().any(|m| m.len() != k) {
            return Err(Error::InvalidInput(format!("each member needs {k} parameters")));
        }
    }
    let evaluated: Vec<Option<ScanRow>> = family
        .members
        .par_iter()
        .map(|params| -> Result<Option<ScanRow>> {
            let g = SphereDensity::from_log(grid.clone(), |s| family.kind.log_density(params, s))?;
            match gamma2_ratio(&g) {
                Ok(ratio) => {
                    let (fourth_lhs, fourth_rhs) = fourth_power_check(&g);
                    Ok(Some(ScanRow { params: params.clone(), ratio, fourth_lhs, fourth_rhs }))
                }
                Err(Error::RatioUndefined) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let skipped = evaluated.iter().filter(|r| r.is_none()).count();
    let rows: Vec<ScanRow> = evaluated.into_iter().flatten().collect();
    let best = rows
        .iter()
        .min_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .ok_or(Error::RatioUndefined)?;
    Ok(ScanResult {
        min_ratio: best.ratio,
        argmin: best.params.clone(),
        bound: lambda_default(d),
        skipped,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_derivative_of_trig_polynomial() {
        let n = 32;
        let op = SpectralDiff::new(n);
        let x: Vec<f64> = (0..n).map(|k| (3.0 * 2.0 * PI * k as f64 / n as f64).sin()).collect();
        let dx = op.apply(&x);
        for (k, v) in dx.iter().enumerate() {
            let t = 2.0 * PI * k as f64 / n as f64;
            assert!((v - 3.0 * (3.0 * t).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn fejer_weights_integrate_sphere_area() {
        let g = SphereGrid::sphere(12, 16).unwrap();
        assert!((g.integrate(&vec![1.0; g.len()]) - 4.0 * PI).abs() < 1e-12);
        let z2: Vec<f64> = g.points().iter().map(|p| p[2] * p[2]).collect();
        assert!((g.integrate(&z2) - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn antipodes_negate_points() {
        for g in [SphereGrid::circle(16).unwrap(), SphereGrid::sphere(6, 10).unwrap()] {
            for i in 0..g.len() {
                let (p, q) = (g.points()[i], g.points()[g.antipode(i)]);
                for a in 0..3 {
                    assert!((p[a] + q[a]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn odd_generator_rejected() {
        let g = Arc::new(SphereGrid::circle(16).unwrap());
        assert!(SphereDensity::from_log(g, |s| s[0]).is_err());
    }
}
