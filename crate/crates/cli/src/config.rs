//! Run configuration: a TOML file with `[grid]`, `[initial]`, `[solver]`,
//! `[diagnostics]` and `[output]` tables.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use landau_core::linalg::SymMat;
use landau_core::solver::{DiagnosticsOptions, SolverConfig};
use landau_core::{build_grid, normalize_fn, Density, GaussianMixture, VelocityGrid};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub initial: InitialCondition,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dimension: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    pub points: usize,
}

fn default_half_width() -> f64 {
    6.0
}

/// Initial density before normalization.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    Maxwellian,
    /// Centered Gaussian with the given diagonal covariance.
    Gaussian { covariance: Vec<f64> },
    /// `Σ wᵢ N(0, σᵢ Id)`; evolves in closed form.
    RadialMixture { weights: Vec<f64>, variances: Vec<f64> },
    /// `Σ wᵢ N(cᵢ, sᵢ² Id)`; equal weights when omitted.
    BumpSum {
        centers: Vec<Vec<f64>>,
        widths: Vec<f64>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub t_end: f64,
    pub record_every: f64,
    pub dt: Option<f64>,
    pub safety: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self { t_end: d.t_end, record_every: d.record_every, dt: d.dt, safety: d.safety }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    pub lifted: bool,
    pub moments: Vec<f64>,
    pub key_p: f64,
    pub lambda: Option<f64>,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        let d = DiagnosticsOptions::default();
        Self { lifted: d.lifted, moments: d.moment_orders, key_p: d.key_p, lambda: d.lambda }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn check(&self) -> Result<(), CliError> {
        let d = self.grid.dimension;
        if !(2..=3).contains(&d) {
            return Err(CliError::Config(format!("dimension must be 2 or 3, got {d}")));
        }
        let bad = |msg: &str| Err(CliError::Config(msg.to_string()));
        match &self.initial {
            InitialCondition::Maxwellian => {}
            InitialCondition::Gaussian { covariance } => {
                if covariance.len() != d || covariance.iter().any(|c| !(*c > 0.0)) {
                    return bad("gaussian covariance needs d positive entries");
                }
            }
            InitialCondition::RadialMixture { weights, variances } => {
                if weights.is_empty() || weights.len() != variances.len() {
                    return bad("radial-mixture needs matching, nonempty weights and variances");
                }
                let wsum: f64 = weights.iter().sum();
                let vsum: f64 = weights.iter().zip(variances).map(|(w, s)| w * s).sum();
                if weights.iter().chain(variances).any(|x| !(*x > 0.0))
                    || (wsum - 1.0).abs() > 1e-12
                    || (vsum - 1.0).abs() > 1e-12
                {
                    return bad("radial-mixture needs positive weights summing to 1 and variances averaging to 1");
                }
            }
            InitialCondition::BumpSum { centers, widths, weights } => {
                if centers.is_empty() || centers.len() != widths.len() {
                    return bad("bump-sum needs one width per center");
                }
                if centers.iter().any(|c| c.len() != d) {
                    return bad("bump-sum centers need d coordinates");
                }
                if widths.iter().any(|w| !(*w > 0.0)) {
                    return bad("bump-sum widths must be positive");
                }
                if weights.as_ref().is_some_and(|w| w.len() != centers.len() || w.iter().any(|x| !(*x > 0.0))) {
                    return bad("bump-sum weights must be positive, one per center");
                }
            }
        }
        if self.diagnostics.lifted && d != 2 {
            return bad("lifted diagnostics need dimension = 2");
        }
        if self.diagnostics.moments.iter().any(|l| !(*l >= 0.0)) {
            return bad("moment orders must be nonnegative");
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Arc<VelocityGrid>, CliError> {
        build_grid(self.grid.dimension, self.grid.half_width, self.grid.points)
            .map(Arc::new)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// The initial condition as a closed-form mixture.
    pub fn initial_mixture(&self) -> Result<GaussianMixture, CliError> {
        let d = self.grid.dimension;
        let zero = vec![0.0; d];
        let parts: Vec<(f64, Vec<f64>, SymMat)> = match &self.initial {
            InitialCondition::Maxwellian => vec![(1.0, zero, SymMat::identity(d))],
            InitialCondition::Gaussian { covariance } => vec![(1.0, zero, SymMat::from_diag(covariance))],
            InitialCondition::RadialMixture { weights, variances } => weights
                .iter()
                .zip(variances)
                .map(|(&w, &s)| (w, zero.clone(), SymMat::scaled_identity(d, s)))
                .collect(),
            InitialCondition::BumpSum { centers, widths, weights } => {
                let k = centers.len() as f64;
                centers
                    .iter()
                    .zip(widths)
                    .enumerate()
                    .map(|(i, (c, w))| {
                        let wt = weights.as_ref().map_or(1.0 / k, |ws| ws[i]);
                        (wt, c.clone(), SymMat::scaled_identity(d, w * w))
                    })
                    .collect()
            }
        };
        GaussianMixture::new(&parts).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Samples the initial condition and normalizes it.
    pub fn initial_density(&self, grid: Arc<VelocityGrid>) -> Result<Density, CliError> {
        let mix = self.initial_mixture()?;
        let (f, _) = normalize_fn(grid, |v| mix.eval(v)).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(f)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.solver.dt,
            t_end: self.solver.t_end,
            record_every: self.solver.record_every,
            safety: self.solver.safety,
            ..SolverConfig::default()
        }
    }

    pub fn diagnostics(&self) -> DiagnosticsOptions {
        DiagnosticsOptions {
            moment_orders: self.diagnostics.moments.clone(),
            lifted: self.diagnostics.lifted,
            key_p: self.diagnostics.key_p,
            lambda: self.diagnostics.lambda,
            exact_radial: self.radial_components(),
        }
    }

    /// Radial-mixture components `(weight, variance)`, if that is the initial condition.
    pub fn radial_components(&self) -> Option<Vec<(f64, f64)>> {
        match &self.initial {
            InitialCondition::RadialMixture { weights, variances } => {
                Some(weights.iter().copied().zip(variances.iter().copied()).collect())
            }
            _ => None,
        }
    }
}
