//! Conservative finite-volume integration of
//! `∂t f = ∇·([a(v) + d·Id − T(t)] ∇f + (d−1) v f)`.
//!
//! The flux is written as `k M ∇(f/M) + (T − Id) v f` with `M` the standard
//! Maxwellian, which is algebraically the same field (because `a(v) v = 0`)
//! but makes the discrete Maxwellian an exact stationary state when `T = Id`.

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{
    dasi_residual, entropy, entropy_production, entropy_production_relative,
    entropy_production_relative_with, fisher_relative_with, relative_entropy, GradientRule,
    MatrixField,
};
use crate::geometry::{maxwellian_value, Density, TemperatureTensor, Vector, VelocityGrid};
use crate::lifted;
use crate::linalg::{norm_sq, projector_a, SymMat};
use crate::moments::{exact_temperature, moment};
use crate::stencil::diff_stencil;

/// Time integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Heun's explicit second-order Runge–Kutta method.
    #[default]
    Rk2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Time step; `None` picks the largest stable step compatible with the
    /// recording interval.
    pub dt: Option<f64>,
    pub t_end: f64,
    /// Time between recorded diagnostics.
    pub record_every: f64,
    pub scheme: Scheme,
    pub safety: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { dt: None, t_end: 1.0, record_every: 0.05, scheme: Scheme::Rk2, safety: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsOptions {
    /// Orders `ℓ` of the recorded moments.
    pub moment_orders: Vec<f64>,
    /// Two-particle diagnostics (good/bad terms, dD/dt formula, key
    /// inequality); d = 2 only.
    pub lifted: bool,
    /// Moment order `p` of the key-inequality monitor.
    pub key_p: f64,
    /// Γ₂ constant used by the key-inequality monitor; default `d+3−1/(d−1)`.
    pub lambda: Option<f64>,
    /// Radial mixture `(weight, variance)` whose closed-form evolution is
    /// compared in L¹ against the computed density.
    pub exact_radial: Option<Vec<(f64, f64)>>,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self { moment_orders: vec![4.0], lifted: false, key_p: 2.0, lambda: None, exact_radial: None }
    }
}

/// Diagnostics at one recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: usize,
    pub entropy: f64,
    pub relative_entropy: f64,
    /// `i_k(f) − d(d−1)` with centered gradients.
    pub d_dasi: f64,
    /// `i_k(f/m) + |T − Id|²` with centered gradients.
    pub d_rel_centered: f64,
    /// `i_k(f/m) + |T − Id|²` with Maxwellian-fitted gradients; exactly zero
    /// at equilibrium.
    pub d_rel: f64,
    /// Finite difference of `d_rel` over `±5 dt` (one-sided at the ends).
    pub ddt_fd: Option<f64>,
    pub ddt_formula: Option<f64>,
    pub good: Option<f64>,
    pub bad: Option<f64>,
    pub key_lhs: Option<f64>,
    pub key_rhs: Option<f64>,
    pub temperature: Vec<f64>,
    pub temperature_exact: Vec<f64>,
    pub t_max: f64,
    pub moments: Vec<(f64, f64)>,
    /// `D_rel − (d − T_max) i_Id(f/m)`, both with fitted gradients.
    pub dv_monitor: f64,
    /// `D_rel − 2 (d − T_max) H(f/m)`; nonnegative in the continuum.
    pub cerc_monitor: f64,
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
    pub clamped_mass: f64,
    pub dasi_residual: f64,
    /// L¹ distance to the closed-form radial solution, when requested.
    pub l1_exact: Option<f64>,
}

impl DiagnosticsRecord {
    pub fn moment(&self, order: f64) -> Option<f64> {
        self.moments.iter().find(|(l, _)| *l == order).map(|(_, m)| *m)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub dt: f64,
    pub steps: usize,
    pub clamped_mass: f64,
    pub final_density: Density,
}

struct Face {
    p: usize,
    q: usize,
    area: f64,
    vf: Vector,
    /// `a_{αβ}(v_f) + d δ_{αβ}`.
    base: [f64; 3],
    /// ranges into the entry table for each `β`.
    ranges: [(usize, usize); 3],
}

/// Precomputed spatial operator `f ↦ L(T) f`.
pub struct Operator {
    grid: Arc<VelocityGrid>,
    faces: Vec<Vec<Option<Face>>>,
    entries: Vec<(usize, f64)>,
    weights: Vec<f64>,
}

impl Operator {
    pub fn new(grid: Arc<VelocityGrid>) -> Self {
        let d = grid.dim();
        let (n, h) = (grid.n(), grid.spacing());
        let axis_w = grid.axis_weights();
        let mut entries = Vec::new();
        let mut faces = Vec::with_capacity(d);
        for alpha in 0..d {
            let sa = grid.stride(alpha);
            let mut row = Vec::with_capacity(grid.len());
            for p in 0..grid.len() {
                let mi = grid.multi_index(p);
                if mi[alpha] == n - 1 {
                    row.push(None);
                    continue;
                }
                let q = p + sa;
                let vp = grid.node(p);
                let vq = grid.node(q);
                let mut vf = [0.0; 3];
                for a in 0..d {
                    vf[a] = 0.5 * (vp[a] + vq[a]);
                }
                let mf = norm_sq(&vf);
                let ratio = |x: usize| (-(mf - norm_sq(&grid.node(x))) / 2.0).exp();
                let area: f64 = (0..d).filter(|&b| b != alpha).map(|b| axis_w[mi[b]]).product();
                let a = projector_a(&vf, d);
                let mut base = [0.0; 3];
                let mut ranges = [(0, 0); 3];
                for beta in 0..d {
                    base[beta] = a.m[alpha][beta] + if beta == alpha { d as f64 } else { 0.0 };
                    let start = entries.len();
                    if beta == alpha {
                        entries.push((p, -ratio(p) / h));
                        entries.push((q, ratio(q) / h));
                    } else {
                        let sb = grid.stride(beta) as isize;
                        for x in [p, q] {
                            for (off, c) in diff_stencil(mi[beta], n) {
                                if c == 0.0 {
                                    continue;
                                }
                                let y = (x as isize + off * sb) as usize;
                                entries.push((y, 0.5 * c * ratio(y) / h));
                            }
                        }
                    }
                    ranges[beta] = (start, entries.len());
                }
                row.push(Some(Face { p, q, area, vf, base, ranges }));
            }
            faces.push(row);
        }
        let weights = (0..grid.len()).map(|i| grid.weight(i)).collect();
        Self { grid, faces, entries, weights }
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        &self.grid
    }

    /// Area-weighted flux `A_f Φ_f` through a face.
    #[inline]
    fn flux(&self, face: &Face, alpha: usize, vals: &[f64], t: &SymMat) -> f64 {
        let d = self.grid.dim();
        let mut phi = 0.0;
        for beta in 0..d {
            let (s, e) = face.ranges[beta];
            let g: f64 = self.entries[s..e].iter().map(|&(x, c)| c * vals[x]).sum();
            phi += (face.base[beta] - t.m[alpha][beta]) * g;
        }
        let drift: f64 = (0..d)
            .map(|b| (t.m[alpha][b] - if b == alpha { 1.0 } else { 0.0 }) * face.vf[b])
            .sum();
        phi += drift * 0.5 * (vals[face.p] + vals[face.q]);
        face.area * phi
    }

    /// `out = L(T) f`.
    pub fn apply(&self, vals: &[f64], t: &SymMat, out: &mut [f64]) {
        let d = self.grid.dim();
        let fluxes: Vec<Vec<f64>> = (0..d)
            .map(|alpha| {
                self.faces[alpha]
                    .par_iter()
                    .map(|f| f.as_ref().map_or(0.0, |f| self.flux(f, alpha, vals, t)))
                    .collect()
            })
            .collect();
        out.par_iter_mut().enumerate().for_each(|(p, o)| {
            let mi = self.grid.multi_index(p);
            let mut acc = 0.0;
            for (alpha, fl) in fluxes.iter().enumerate() {
                acc += fl[p];
                if mi[alpha] > 0 {
                    acc -= fl[p - self.grid.stride(alpha)];
                }
            }
            *o = acc / self.weights[p];
        });
    }

    /// Largest absolute row sum of `L(T)` (a bound on its spectral radius).
    pub fn row_sum_bound(&self, t: &SymMat) -> f64 {
        let d = self.grid.dim();
        let mut rows = vec![0.0; self.grid.len()];
        for alpha in 0..d {
            for face in self.faces[alpha].iter().flatten() {
                let mut coef: Vec<(usize, f64)> = Vec::new();
                for beta in 0..d {
                    let (s, e) = face.ranges[beta];
                    let m = face.base[beta] - t.m[alpha][beta];
                    coef.extend(self.entries[s..e].iter().map(|&(x, c)| (x, m * c)));
                }
                let drift: f64 = (0..d)
                    .map(|b| (t.m[alpha][b] - if b == alpha { 1.0 } else { 0.0 }) * face.vf[b])
                    .sum();
                coef.push((face.p, 0.5 * drift));
                coef.push((face.q, 0.5 * drift));
                let total: f64 = coef.iter().map(|(_, c)| c.abs()).sum();
                rows[face.p] += face.area * total / self.weights[face.p];
                rows[face.q] += face.area * total / self.weights[face.q];
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }
}

/// Result of one time step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub density: Density,
    /// Mass removed by clamping negative values (before renormalization).
    pub clamped_mass: f64,
}

/// Time stepper with the coefficient `T(t)` given by the exact temperature law.
pub struct Solver {
    op: Operator,
    t0: TemperatureTensor,
}

impl Solver {
    /// Prepares a solver whose temperature law starts from `T0` at `t = 0`.
    pub fn new(grid: Arc<VelocityGrid>, t0: TemperatureTensor) -> Result<Self> {
        if t0.dim() != grid.dim() {
            return Err(Error::InvalidInput("temperature and grid dimensions differ".into()));
        }
        if !t0.is_normalized() {
            return Err(Error::NotNormalized(t0.trace()));
        }
        Ok(Self { op: Operator::new(grid), t0 })
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn temperature_at(&self, t: f64) -> Result<TemperatureTensor> {
        exact_temperature(&self.t0, t, self.op.grid.dim())
    }

    /// Largest stable Heun step: `safety · 2 / R`, with `R` the largest
    /// absolute row sum of the operator over the temperature path.
    pub fn max_stable_dt(&self, safety: f64) -> f64 {
        let d = self.op.grid.dim();
        let r = self
            .op
            .row_sum_bound(self.t0.matrix())
            .max(self.op.row_sum_bound(&SymMat::identity(d)));
        safety * 2.0 / r
    }

    pub fn step(&self, f: &Density, t: f64, dt: f64) -> Result<StepOutcome> {
        let limit = self.max_stable_dt(1.0);
        if !(dt > 0.0) || dt > limit {
            return Err(Error::Cfl { dt, suggested: 0.9 * limit });
        }
        self.step_unchecked(f, t, dt)
    }

    fn step_unchecked(&self, f: &Density, t: f64, dt: f64) -> Result<StepOutcome> {
        let n = f.values().len();
        let t_a = self.temperature_at(t)?;
        let t_b = self.temperature_at(t + dt)?;
        let f0 = f.values();
        let mut k1 = vec![0.0; n];
        self.op.apply(f0, t_a.matrix(), &mut k1);
        let f1: Vec<f64> = f0.iter().zip(&k1).map(|(x, k)| x + dt * k).collect();
        let mut k2 = vec![0.0; n];
        self.op.apply(&f1, t_b.matrix(), &mut k2);
        let mut out: Vec<f64> =
            (0..n).map(|i| f0[i] + 0.5 * dt * (k1[i] + k2[i])).collect();
        let grid = f.grid();
        let clamped = grid.integrate(|i, _| (-out[i]).max(0.0));
        for x in out.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        restore_invariants(grid, f.values(), &mut out);
        Ok(StepOutcome { density: Density::new(grid.clone(), out)?, clamped_mass: clamped })
    }
}

/// Collision invariants `1, v, |v|²` of dimension `d`.
fn invariants(v: &Vector, d: usize) -> [f64; 5] {
    let mut phi = [0.0; 5];
    phi[0] = 1.0;
    phi[1..=d].copy_from_slice(&v[..d]);
    phi[d + 1] = norm_sq(v);
    phi
}

/// Multiplies `out` by `1 + Σ λ_j φ_j` so that its mass, momentum and energy
/// equal those of `reference`. Clamping and the O(h²) drift of the discrete
/// second moment are removed this way; the individual `T_i` stay free.
fn restore_invariants(grid: &VelocityGrid, reference: &[f64], out: &mut [f64]) {
    let d = grid.dim();
    let m = d + 2;
    let mut gram = nalgebra::DMatrix::<f64>::zeros(m, m);
    let mut rhs = nalgebra::DVector::<f64>::zeros(m);
    for i in 0..out.len() {
        let w = grid.weight(i);
        let phi = invariants(&grid.node(i), d);
        for a in 0..m {
            rhs[a] += w * phi[a] * (reference[i] - out[i]);
            for b in a..m {
                gram[(a, b)] += w * phi[a] * phi[b] * out[i];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let Some(lambda) = gram.cholesky().map(|c| c.solve(&rhs)) else {
        return;
    };
    for (i, x) in out.iter_mut().enumerate() {
        let phi = invariants(&grid.node(i), d);
        let c: f64 = (0..m).map(|a| lambda[a] * phi[a]).sum();
        *x = (*x * (1.0 + c)).max(0.0);
    }
}

/// Single step of a normalized `f` at time `_t`. The coefficient law only
/// depends on time through `T`, so `T` at the start of the step is taken to be
/// the measured temperature of `f` and then follows the exact law.
pub fn step(f: &Density, _t: f64, dt: f64) -> Result<Density> {
    let solver = Solver::new(f.grid().clone(), *f.temperature())?;
    Ok(solver.step(f, 0.0, dt)?.density)
}

/// Radially symmetric Gaussian mixture `Σ wᵢ N(0, σᵢ Id)` evolved by the
/// Ornstein–Uhlenbeck flow the equation reduces to for radial data:
/// `σᵢ(t) = 1 + (σᵢ − 1) e^{−2(d−1)t}`.
pub fn ou_exact_radial(grid: Arc<VelocityGrid>, components: &[(f64, f64)], t: f64) -> Result<Density> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let wsum: f64 = components.iter().map(|c| c.0).sum();
    let vsum: f64 = components.iter().map(|c| c.0 * c.1).sum();
    if components.is_empty()
        || components.iter().any(|&(w, s)| !(w >= 0.0) || !(s > 0.0))
        || (wsum - 1.0).abs() > 1e-12
        || (vsum - 1.0).abs() > 1e-12
    {
        return Err(Error::InvalidInput(
            "radial mixture needs nonnegative weights summing to 1 and unit mean variance".into(),
        ));
    }
    let d = grid.dim();
    let decay = (-2.0 * (d as f64 - 1.0) * t).exp();
    let sig: Vec<(f64, f64)> = components.iter().map(|&(w, s)| (w, 1.0 + (s - 1.0) * decay)).collect();
    Density::from_fn(grid, |v| {
        let r2 = norm_sq(v);
        sig.iter()
            .map(|&(w, s)| {
                w * (2.0 * std::f64::consts::PI * s).powf(-(d as f64) / 2.0) * (-0.5 * r2 / s).exp()
            })
            .sum()
    })
}

/// Maxwellian sampled on the grid (exact stationary state of the scheme).
pub fn grid_maxwellian(grid: Arc<VelocityGrid>) -> Result<Density> {
    let d = grid.dim();
    Density::from_fn(grid, |v| maxwellian_value(v, d))
}

const FD_OFFSET: usize = 5;

/// Runs the solver from a normalized `f0`, recording diagnostics.
pub fn simulate(f0: &Density, cfg: &SolverConfig, opts: &DiagnosticsOptions) -> Result<RunOutput> {
    if !f0.is_normalized() {
        return Err(Error::InvalidDensity("initial density is not normalized".into()));
    }
    if !(cfg.t_end >= 0.0) || !(cfg.record_every > 0.0) || !(cfg.safety > 0.0 && cfg.safety <= 1.0) {
        return Err(Error::InvalidInput("t_end, record interval and safety must be positive".into()));
    }
    if opts.lifted && f0.dim() != 2 {
        return Err(Error::InvalidInput("lifted diagnostics require d = 2".into()));
    }
    let solver = Solver::new(f0.grid().clone(), *f0.temperature())?;
    let limit = solver.max_stable_dt(cfg.safety);
    let (dt, stride) = match cfg.dt {
        Some(dt) => {
            if !(dt > 0.0) || dt > limit / cfg.safety {
                return Err(Error::Cfl { dt, suggested: limit });
            }
            (dt, ((cfg.record_every / dt).round() as usize).max(1))
        }
        None => {
            let k = (cfg.record_every / limit).ceil().max(1.0) as usize;
            (cfg.record_every / k as f64, k)
        }
    };
    let total = (cfg.t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let record_steps: Vec<usize> =
        (0..=total).filter(|s| s % stride == 0 || *s == total).collect();
    let mut d_steps = BTreeSet::new();
    let fd_plan: Vec<Option<[(usize, f64); 3]>> = record_steps
        .iter()
        .map(|&s| fd_stencil(s, total, FD_OFFSET))
        .collect();
    for plan in fd_plan.iter().flatten() {
        for &(s, _) in plan {
            d_steps.insert(s);
        }
    }

    let mut d_series = std::collections::BTreeMap::new();
    let mut records = Vec::with_capacity(record_steps.len());
    let mut f = f0.clone();
    let mass0 = f0.mass();
    let mut clamped_total = 0.0;
    let mut next_record = 0;
    for s in 0..=total {
        let t = s as f64 * dt;
        let t_exact = solver.temperature_at(t)?;
        if next_record < record_steps.len() && record_steps[next_record] == s {
            let rec = diagnose(&f, t, s, &t_exact, opts, clamped_total)?;
            d_series.insert(s, rec.d_rel);
            records.push(rec);
            next_record += 1;
        } else if d_steps.contains(&s) {
            d_series.insert(s, entropy_production_relative_with(&f, &t_exact, GradientRule::MaxwellFitted)?);
        }
        if s == total {
            break;
        }
        let out = solver.step_unchecked(&f, t, dt)?;
        clamped_total += out.clamped_mass;
        f = out.density;
        let drift = (f.mass() - mass0).abs();
        if drift > 1e-8 {
            return Err(Error::MassDrift(drift));
        }
    }
    for (rec, plan) in records.iter_mut().zip(&fd_plan) {
        rec.ddt_fd = plan.map(|p| p.iter().map(|(s, c)| c * d_series[s]).sum::<f64>() / (FD_OFFSET as f64 * dt));
    }
    Ok(RunOutput { records, dt, steps: total, clamped_mass: clamped_total, final_density: f })
}

/// Steps and weights (in units of `1/Δ`) of a second-order first-derivative
/// stencil at step `s`: centered when possible, one-sided at the ends.
fn fd_stencil(s: usize, total: usize, k: usize) -> Option<[(usize, f64); 3]> {
    if total < 2 * k {
        return None;
    }
    if s >= k && s + k <= total {
        Some([(s - k, -0.5), (s + k, 0.5), (s, 0.0)])
    } else if s < k {
        Some([(s, -1.5), (s + k, 2.0), (s + 2 * k, -0.5)])
    } else {
        Some([(s, 1.5), (s - k, -2.0), (s - 2 * k, 0.5)])
    }
}

/// Computes every recorded quantity for one snapshot.
pub fn diagnose(
    f: &Density,
    t: f64,
    step: usize,
    t_exact: &TemperatureTensor,
    opts: &DiagnosticsOptions,
    clamped_mass: f64,
) -> Result<DiagnosticsRecord> {
    let d = f.dim();
    let df = d as f64;
    let h = entropy(f);
    let h_rel = relative_entropy(f);
    let d_dasi = entropy_production(f, t_exact)?;
    let d_rel_centered = entropy_production_relative(f, t_exact)?;
    let d_rel = entropy_production_relative_with(f, t_exact, GradientRule::MaxwellFitted)?;
    let t_max = t_exact.max_eigenvalue();
    let i_rel = fisher_relative_with(f, &MatrixField::Constant(SymMat::identity(d)), GradientRule::MaxwellFitted);
    let moments = opts
        .moment_orders
        .iter()
        .map(|&l| moment(f, l).map(|m| (l, m.value)))
        .collect::<Result<Vec<_>>>()?;
    let (mut good, mut bad, mut ddt_formula, mut key_lhs, mut key_rhs) = (None, None, None, None, None);
    if opts.lifted {
        let field = lifted::LiftedField::new(f)?;
        let k = lifted::lifted_k(t_exact)?;
        let g = lifted::good_term_with(&field, &k, GradientRule::MaxwellFitted)?;
        let b = lifted::bad_term(f, t_exact)?;
        let mp = moment(f, opts.key_p)?.value;
        let lambda = opts.lambda.unwrap_or_else(|| crate::bounds::lambda_default(d));
        let rhs = crate::bounds::lambda_delta(d, opts.key_p, t_max, mp, lambda)?
            * d_rel.max(0.0).powf(1.0 + 2.0 / opts.key_p);
        good = Some(g);
        bad = Some(b);
        ddt_formula = Some(b - g);
        key_lhs = Some(g);
        key_rhs = Some(rhs);
    }
    let l1_exact = match &opts.exact_radial {
        Some(c) => Some(ou_exact_radial(f.grid().clone(), c, t)?.l1_distance(f)),
        None => None,
    };
    let mom = f.momentum();
    Ok(DiagnosticsRecord {
        t,
        step,
        entropy: h,
        relative_entropy: h_rel,
        d_dasi,
        d_rel_centered,
        d_rel,
        ddt_fd: None,
        ddt_formula,
        good,
        bad,
        key_lhs,
        key_rhs,
        temperature: f.temperature().diag(),
        temperature_exact: t_exact.diag(),
        t_max,
        moments,
        dv_monitor: d_rel - (df - t_max) * i_rel,
        cerc_monitor: d_rel - 2.0 * (df - t_max) * h_rel,
        mass: f.mass(),
        momentum: norm_sq(&mom).sqrt(),
        energy: f.energy(),
        clamped_mass,
        dasi_residual: dasi_residual(f),
        l1_exact,
    })
}
