//! Explicit constants and time thresholds for monotonicity and decay of the
//! entropy production.

use crate::error::{Error, Result};

/// Inputs shared by the thermalization-time formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub d: usize,
    pub ell: f64,
    /// Bound on the moment of order `ℓ`.
    pub mbar: f64,
    /// Largest initial directional temperature.
    pub t0_max: f64,
    pub lambda: f64,
    pub eta: f64,
}

impl BoundInputs {
    pub fn new(d: usize, ell: f64, mbar: f64, t0_max: f64) -> Self {
        Self { d, ell, mbar, t0_max, lambda: lambda_default(d), eta: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d as f64;
        if !(2..=3).contains(&self.d) {
            return Err(Error::Dimension(self.d));
        }
        let finite = [self.ell, self.mbar, self.t0_max, self.lambda, self.eta]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidInput("bound inputs must be finite".into()));
        }
        if !(self.ell > 2.0) {
            return Err(Error::InvalidInput(format!("moment order {} must exceed 2", self.ell)));
        }
        if !(self.mbar > 0.0) {
            return Err(Error::InvalidInput("moment bound must be positive".into()));
        }
        if !(self.t0_max >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "largest temperature {} is below 1, impossible for trace-normalized data",
                self.t0_max
            )));
        }
        if !(self.t0_max < d) {
            return Err(Error::InvalidInput(format!(
                "largest temperature {} must be below d = {}",
                self.t0_max, self.d
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidInput("Γ₂ constant must be positive".into()));
        }
        Ok(())
    }
}

/// Proven lower bound `d + 3 − 1/(d−1)` on the Γ₂ constant.
pub fn lambda_default(d: usize) -> f64 {
    let d = d as f64;
    d + 3.0 - 1.0 / (d - 1.0)
}

/// `C̄ = 9 · 2^{1+ℓ/2}/(2+ℓ) · (3dℓ/(ℓ+2))^{ℓ/2} · 2^{ℓ−3} · Λ^{1−ℓ/2} · d(d−1)`.
pub fn constant_cbar(d: usize, ell: f64, lambda: f64) -> Result<f64> {
    if !(ell > 2.0) || !(lambda > 0.0) {
        return Err(Error::InvalidInput("need ℓ > 2 and Λ > 0".into()));
    }
    let df = d as f64;
    let half = ell / 2.0;
    Ok(9.0
        * (2f64.powf(1.0 + half) / (2.0 + ell))
        * (3.0 * df * ell / (ell + 2.0)).powf(half)
        * 2f64.powf(ell - 3.0)
        * lambda.powf(1.0 - half)
        * df
        * (df - 1.0))
}

fn t0_prefactor(inp: &BoundInputs) -> f64 {
    1.0 / (4.0 * inp.d as f64 * (inp.ell / 2.0 - 1.0))
}

/// Explicit thermalization time, clamped at 0.
pub fn t0_explicit(inp: &BoundInputs) -> Result<f64> {
    inp.validate()?;
    if inp.t0_max == 1.0 {
        return Ok(0.0);
    }
    let c = constant_cbar(inp.d, inp.ell, inp.lambda)?;
    let d = inp.d as f64;
    let arg = c * inp.mbar * (inp.t0_max - 1.0).powf(inp.ell / 2.0 - 1.0)
        / (d - inp.t0_max).powf(1.0 + inp.ell);
    Ok((t0_prefactor(inp) * arg.ln()).max(0.0))
}

const T0_MAX_ITER: usize = 10_000;
const T0_TOL: f64 = 1e-6;

/// Implicit thermalization time: fixed point of
/// `t = 1/(4d(ℓ/2−1)) log(C̄ m̄ (T0max−1)^{ℓ/2−1} / ((d−1) − (T0max−1)e^{−4dt})^{1+ℓ})`,
/// iterated from `t = 0` (damped by ½ once iterates oscillate) and clamped at 0.
pub fn t0_implicit(inp: &BoundInputs) -> Result<f64> {
    inp.validate()?;
    if inp.t0_max == 1.0 {
        return Ok(0.0);
    }
    let c = constant_cbar(inp.d, inp.ell, inp.lambda)?;
    let d = inp.d as f64;
    let num = c * inp.mbar * (inp.t0_max - 1.0).powf(inp.ell / 2.0 - 1.0);
    let pre = t0_prefactor(inp);
    let rhs = |t: f64| {
        let den = (d - 1.0) - (inp.t0_max - 1.0) * (-4.0 * d * t).exp();
        (pre * (num / den.powf(1.0 + inp.ell)).ln()).max(0.0)
    };
    let mut t = 0.0;
    let mut last_step = 0.0;
    let mut damped = false;
    let mut trace = Vec::new();
    for _ in 0..T0_MAX_ITER {
        let target = rhs(t);
        let step = target - t;
        if step.abs() < T0_TOL {
            return Ok(target);
        }
        if !damped && last_step != 0.0 && step.signum() != f64::signum(last_step) {
            damped = true;
        }
        t += if damped { 0.5 * step } else { step };
        last_step = step;
        trace.push(t);
    }
    let last = trace.iter().rev().take(5).copied().collect();
    Err(Error::NoConvergence { iterations: T0_MAX_ITER, last })
}

/// `λ_δ = C_{d,p,Λ} (d − T_max) m_p^{1−δ}` with `δ = 1 + 2/p` and
/// `C_{d,p,Λ} = 2^{3δ−5} 9^{1−δ} Λ^{2−δ} (d(d−1))^{1−δ}`.
pub fn lambda_delta(d: usize, p: f64, t_max: f64, m_p: f64, lambda: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::InvalidInput(format!("moment order p = {p} must be at least 2")));
    }
    let delta = 1.0 + 2.0 / p;
    let df = d as f64;
    let c = 2f64.powf(3.0 * delta - 5.0)
        * 9f64.powf(1.0 - delta)
        * lambda.powf(2.0 - delta)
        * (df * (df - 1.0)).powf(1.0 - delta);
    if m_p.is_infinite() {
        return Ok(0.0);
    }
    Ok(c * (df - t_max) * m_p.powf(1.0 - delta))
}

fn check_tmax(t_max: f64, d: usize) -> Result<()> {
    if !(t_max < d as f64) {
        return Err(Error::InvalidInput(format!("T_max = {t_max} must be below d = {d}")));
    }
    if !(t_max >= 1.0) {
        return Err(Error::InvalidInput(format!("T_max = {t_max} is below 1")));
    }
    Ok(())
}

/// `(d − T_max)/(2(T_max − 1))`, `+∞` at `T_max = 1`.
pub fn alpha_lower(t_max: f64, d: usize) -> Result<f64> {
    check_tmax(t_max, d)?;
    if t_max == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok((d as f64 - t_max) / (2.0 * (t_max - 1.0)))
}

/// `(d − T_max)/2`.
pub fn beta_lower(t_max: f64, d: usize) -> Result<f64> {
    check_tmax(t_max, d)?;
    Ok((d as f64 - t_max) / 2.0)
}

/// `t₁ = −(1/4d) log(1 − η/(2(d−1)))` for `0 ≤ η < 2(d−1)`.
pub fn decay_t1(d: usize, eta: f64) -> Result<f64> {
    let df = d as f64;
    if !(eta >= 0.0) || !(eta < 2.0 * (df - 1.0)) {
        return Err(Error::InvalidInput(format!("decay rate {eta} outside [0, 2(d−1))")));
    }
    Ok(-(1.0 - eta / (2.0 * (df - 1.0))).ln() / (4.0 * df))
}
