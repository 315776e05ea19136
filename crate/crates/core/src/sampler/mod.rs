//! Monte-Carlo engines: canonical and energy-shell chains, Wang–Landau,
//! thermodynamic integration and concentration diagnostics.

mod chain;
mod moves;
mod wang_landau;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub use chain::{batch_means, check_beta, gibbs_mcmc, shell_mcmc, ChainConfig, ChainStats, ShellSpec, Side};
pub use moves::{dv_config, dv_point, propose, reference_point, rng_for};
pub use wang_landau::{wang_landau, DosEstimate, WangLandauConfig, WlMode};

use crate::error::{Error, Result};
use crate::functionals::Density;
use crate::geometry::Geometry;

/// Minimum number of stored configurations for marginal and concentration
/// estimates.
pub const MIN_CONFIGS: usize = 30;

fn need_configs(stats: &ChainStats) -> Result<()> {
    if stats.configs.len() < MIN_CONFIGS {
        return Err(Error::TooFewSamples {
            needed: MIN_CONFIGS,
            got: stats.configs.len(),
        });
    }
    Ok(())
}

/// Smoothed one-particle marginal averaged over stored configurations.
pub fn marginal_estimate(stats: &ChainStats, bandwidth: f64) -> Result<Density> {
    need_configs(stats)?;
    marginal_of_configs(&stats.geom, &stats.configs, bandwidth)
}

pub(crate) fn marginal_of_configs(geom: &Arc<Geometry>, configs: &[Vec<crate::geometry::Point>], bandwidth: f64) -> Result<Density> {
    if !(bandwidth > 0.0) {
        return Err(Error::ConfigInvalid("bandwidth must be positive".into()));
    }
    let all: Vec<_> = configs.iter().flatten().copied().collect();
    let f = geom.deposit(&all, bandwidth);
    Density::normalized(geom.clone(), f.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationSummary {
    pub distances: Vec<f64>,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    pub mean: f64,
}

impl ConcentrationSummary {
    pub fn from_distances(distances: Vec<f64>) -> Self {
        let mut s = distances.clone();
        s.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let x = p * (s.len() - 1) as f64;
            let (i, t) = (x.floor() as usize, x - x.floor());
            if i + 1 < s.len() {
                s[i] * (1.0 - t) + s[i + 1] * t
            } else {
                s[i]
            }
        };
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        Self {
            median: q(0.5),
            q10: q(0.1),
            q90: q(0.9),
            mean,
            distances,
        }
    }

    /// Fraction of distances above `delta`.
    pub fn exceedance(&self, delta: f64) -> f64 {
        self.distances.iter().filter(|d| **d > delta).count() as f64 / self.distances.len() as f64
    }
}

/// H⁻¹ distances between each smoothed configuration and the equally smoothed
/// target.
pub fn concentration_probe(stats: &ChainStats, target: &Density, bandwidth: f64) -> Result<ConcentrationSummary> {
    need_configs(stats)?;
    let geom = &stats.geom;
    let smooth_target = geom.smooth(target.values(), bandwidth)?;
    let distances = stats
        .configs
        .iter()
        .map(|c| {
            let d = geom.deposit(c, bandwidth);
            geom.hminus_distance(&d, &smooth_target)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConcentrationSummary::from_distances(distances))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationRow {
    pub beta: f64,
    pub mean_energy: f64,
    pub stderr: f64,
    /// `N⁻¹ log Z_{N,β}`.
    pub log_z: f64,
    pub log_z_stderr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegrationTable {
    pub n: usize,
    pub rows: Vec<IntegrationRow>,
    /// Difference to the same integral on every other grid point, divided by 3.
    pub quadrature_error: f64,
}

/// `N⁻¹ log Z_{N,β} = −∫₀^β Ē_N(s) ds` by the trapezoid rule over Gibbs
/// chain means; independent seeds are averaged at every grid point.
pub fn thermo_integration(base: &ChainConfig, beta_grid: &[f64], seeds: &[u64]) -> Result<IntegrationTable> {
    if beta_grid.first() != Some(&0.0) {
        return Err(Error::ConfigInvalid("β grid must start at 0".into()));
    }
    if beta_grid.windows(2).any(|w| w[1] == w[0]) {
        return Err(Error::ConfigInvalid("β grid has repeated points".into()));
    }
    if seeds.is_empty() {
        return Err(Error::ConfigInvalid("no seeds".into()));
    }
    for &b in beta_grid {
        check_beta(&base.geom, b, base.beta_floor)?;
    }
    let jobs: Vec<(usize, u64)> = (0..beta_grid.len()).flat_map(|i| seeds.iter().map(move |s| (i, *s))).collect();
    let results: Vec<Result<(f64, f64)>> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let mut cfg = base.clone();
            cfg.seed = seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
            let st = gibbs_mcmc(&cfg, beta_grid[i])?;
            Ok((st.mean_energy, st.stderr))
        })
        .collect();
    let k = seeds.len() as f64;
    let mut means = vec![0.0; beta_grid.len()];
    let mut errs = vec![0.0; beta_grid.len()];
    for (job, r) in jobs.iter().zip(results) {
        let (m, s) = r?;
        means[job.0] += m / k;
        errs[job.0] += s * s / (k * k);
    }
    let errs: Vec<f64> = errs.iter().map(|v| v.sqrt()).collect();
    let mut rows = Vec::with_capacity(beta_grid.len());
    let (mut acc, mut var) = (0.0, 0.0);
    // trapezoid weights are accumulated per node for the variance
    let mut w = vec![0.0; beta_grid.len()];
    for i in 0..beta_grid.len() {
        if i > 0 {
            let h = beta_grid[i] - beta_grid[i - 1];
            acc += 0.5 * h * (means[i] + means[i - 1]);
            w[i - 1] += 0.5 * h;
            w[i] += 0.5 * h;
            var = (0..=i).map(|j| (w[j] * errs[j]).powi(2)).sum();
        }
        rows.push(IntegrationRow {
            beta: beta_grid[i],
            mean_energy: means[i],
            stderr: errs[i],
            log_z: -acc,
            log_z_stderr: var.sqrt(),
        });
    }
    let quadrature_error = if beta_grid.len() >= 3 && beta_grid.len() % 2 == 1 {
        let mut coarse = 0.0;
        for i in (2..beta_grid.len()).step_by(2) {
            coarse += 0.5 * (beta_grid[i] - beta_grid[i - 2]) * (means[i] + means[i - 2]);
        }
        (acc - coarse).abs() / 3.0
    } else {
        f64::NAN
    };
    Ok(IntegrationTable {
        n: base.n,
        rows,
        quadrature_error,
    })
}

/// Run the same chain for several seeds in parallel; results keep seed order.
pub fn gibbs_seeds(base: &ChainConfig, beta: f64, seeds: &[u64]) -> Result<Vec<ChainStats>> {
    seeds
        .par_iter()
        .map(|&s| {
            let mut cfg = base.clone();
            cfg.seed = s;
            gibbs_mcmc(&cfg, beta)
        })
        .collect()
}

pub fn shell_seeds(base: &ChainConfig, shell: &ShellSpec, seeds: &[u64]) -> Result<Vec<ChainStats>> {
    seeds
        .par_iter()
        .map(|&s| {
            let mut cfg = base.clone();
            cfg.seed = s;
            shell_mcmc(&cfg, shell)
        })
        .collect()
}
