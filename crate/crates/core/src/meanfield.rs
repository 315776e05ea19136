//! Mean-field equation `dd^c u = e^{βu} dV / ∫e^{βu} dV − θ`, continuation in
//! β and detection of the critical energy.
//!
//! The equation is solved as the fixed point `u = G(ρ(u))`, where `G` is the
//! gauge-fixed Green operator of the geometry, by damped Newton with GMRES
//! inner solves.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{entropy_of_values, Density};
use crate::geometry::{Field, Geometry, Kind};
use crate::krylov::gmres;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SolverOptions {
    /// Convergence threshold on `max|u − G(ρ(u))|`.
    pub tolerance: f64,
    pub max_newton: usize,
    /// Step halvings allowed in the line search before giving up.
    pub max_damping: usize,
    /// Divergence cap on `β·max|u|`.
    pub u_cap: f64,
    /// Largest admissible spectral tail of `ρ` before the grid is declared too coarse.
    pub tail_limit: f64,
    /// Allow β < 0 on the torus (outside the Fano setting).
    pub allow_negative_torus: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_newton: 60,
            max_damping: 40,
            u_cap: 50.0,
            tail_limit: 1e-6,
            allow_negative_torus: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeanFieldSolution {
    pub beta: f64,
    pub u: Field,
    pub rho: Density,
    /// Shifted energy `E(ρ_β)`.
    pub e: f64,
    pub s: f64,
    pub f: f64,
    pub newton_iterations: usize,
    /// `‖dd^c u − (ρ − h)‖` in `L¹(dV)`.
    pub residual: f64,
}

/// Lower end of the admissible β range.
pub fn beta_floor(geom: &Geometry, opts: &SolverOptions) -> f64 {
    match geom.kind() {
        Kind::Torus if !opts.allow_negative_torus => 0.0,
        _ => -1.0,
    }
}

fn gibbs_density(geom: &Geometry, beta: f64, u: &[f64]) -> Result<Vec<f64>> {
    let top = u.iter().map(|x| beta * x).fold(f64::NEG_INFINITY, f64::max);
    let mut rho: Vec<f64> = u.iter().map(|x| (beta * x - top).exp()).collect();
    let z = geom.integrate(&rho);
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::NegativeDensityUnderflow(z));
    }
    rho.iter_mut().for_each(|x| *x /= z);
    Ok(rho)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

struct Residual {
    rho: Vec<f64>,
    r: Vec<f64>,
    norm: f64,
}

fn residual(geom: &Geometry, beta: f64, u: &[f64]) -> Result<Residual> {
    let rho = gibbs_density(geom, beta, u)?;
    let gu = geom.green_apply(&rho)?;
    let r: Vec<f64> = u.iter().zip(gu.iter()).map(|(a, b)| a - b).collect();
    let norm = sup(&r);
    Ok(Residual { rho, r, norm })
}

/// Solve the mean-field equation at `beta`.
pub fn solve_meanfield(geom: &Arc<Geometry>, beta: f64, warm_start: Option<&[f64]>) -> Result<MeanFieldSolution> {
    solve_with(geom, beta, warm_start, &SolverOptions::default())
}

pub fn solve_with(
    geom: &Arc<Geometry>,
    beta: f64,
    warm_start: Option<&[f64]>,
    opts: &SolverOptions,
) -> Result<MeanFieldSolution> {
    if !beta.is_finite() {
        return Err(Error::BetaOutOfRange {
            beta,
            reason: "not finite".into(),
        });
    }
    let floor = beta_floor(geom, opts);
    let ok = if floor == 0.0 { beta >= 0.0 } else { beta > floor };
    if !ok {
        let reason = if geom.kind() == Kind::Torus && !opts.allow_negative_torus {
            "negative β on the torus requires an explicit override".to_string()
        } else {
            format!("β must exceed {floor}")
        };
        return Err(Error::BetaOutOfRange { beta, reason });
    }
    let n = geom.len();
    let mut u = match warm_start {
        Some(w) => {
            if w.len() != n {
                return Err(Error::ShapeMismatch { expected: n, got: w.len() });
            }
            w.to_vec()
        }
        None => vec![0.0; n],
    };
    let diverged = |reason: String| Error::NewtonDiverged { beta, reason };
    let mut res = residual(geom, beta, &u)?;
    let mut iters = 0;
    while res.norm > opts.tolerance {
        if iters >= opts.max_newton {
            return Err(diverged(format!("no convergence in {iters} Newton steps")));
        }
        iters += 1;
        let rho = res.rho.clone();
        let jvp = |w: &[f64]| -> Vec<f64> {
            let mean: f64 = geom.integrate(&rho.iter().zip(w).map(|(r, x)| r * x).collect::<Vec<_>>());
            let dr: Vec<f64> = rho.iter().zip(w).map(|(r, x)| beta * r * (x - mean)).collect();
            let g = geom.green_apply(&dr).expect("shape checked");
            w.iter().zip(g.iter()).map(|(a, b)| a - b).collect()
        };
        let rhs: Vec<f64> = res.r.iter().map(|x| -x).collect();
        let mut step = vec![0.0; n];
        let rtol = (1e-3 * res.norm).clamp(1e-13, 1e-4);
        gmres(jvp, &rhs, &mut step, rtol, 40, 400);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_damping {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            if let Ok(r) = residual(geom, beta, &trial) {
                if r.norm < (1.0 - 1e-4 * t) * res.norm {
                    accepted = Some((trial, r));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, r)) => {
                u = trial;
                res = r;
            }
            None => {
                if res.norm < 1e3 * opts.tolerance {
                    // stalled at round-off level
                    break;
                }
                return Err(diverged(format!(
                    "residual did not decrease within {} damped steps",
                    opts.max_damping
                )));
            }
        }
        if beta.abs() * sup(&u) > opts.u_cap {
            return Err(diverged(format!("potential exceeded the cap {}", opts.u_cap)));
        }
    }
    // restore the exact fixed-point relation between u and ρ
    let rho = res.rho;
    let u = geom.green_apply(&rho)?.0;
    let tail = geom.spectral_tail(&rho);
    if tail > opts.tail_limit {
        return Err(diverged(format!("density under-resolved (spectral tail {tail:.2e})")));
    }
    let ddc = geom.ddc(&u)?;
    let h = geom.h();
    let l1: f64 = (0..n)
        .map(|i| (ddc[i] - (rho[i] - h[i])).abs() * geom.weights()[i])
        .sum();
    let e = geom.energy_from_potential(&rho, &u);
    let s = entropy_of_values(geom, &rho);
    let density = Density::new(geom.clone(), rho)?;
    Ok(MeanFieldSolution {
        beta,
        u: Field(u),
        rho: density,
        e,
        s,
        f: beta * e - s,
        newton_iterations: iters,
        residual: l1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub beta: f64,
    pub e: f64,
    pub f: f64,
    pub s: f64,
    pub newton_iterations: usize,
    pub residual: f64,
}

/// Samples of `e(β)`, `F(β)` and `S` along a continuation path, ordered by
/// decreasing β.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermoCurve {
    pub samples: Vec<CurveSample>,
    pub e0: f64,
    pub e_min: f64,
    /// Midpoint of the last bracketing pair when continuation failed.
    pub beta_star: Option<f64>,
    pub failure: Option<String>,
    /// Some samples lie outside the setting the theory covers (β < 0 on the torus).
    pub outside_theory: bool,
    pub fingerprint: String,
}

impl ThermoCurve {
    pub fn betas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.beta).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.e).collect()
    }

    pub fn free_energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.f).collect()
    }

    pub fn entropies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.s).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ContinuationOptions {
    pub solver: SolverOptions,
    /// Bisection steps inserted between the last success and the first failure.
    pub refine: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            refine: 6,
        }
    }
}

/// Evenly spaced descending schedule from `hi` to `lo` with `n` points.
pub fn linear_schedule(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| hi + (lo - hi) * i as f64 / (n - 1) as f64).collect()
}

pub fn continuation(geom: &Arc<Geometry>, schedule: &[f64]) -> Result<ThermoCurve> {
    continuation_with(geom, schedule, &ContinuationOptions::default())
}

/// Warm-started continuation along a descending schedule; failure is
/// reported in the curve rather than as an error.
pub fn continuation_with(geom: &Arc<Geometry>, schedule: &[f64], opts: &ContinuationOptions) -> Result<ThermoCurve> {
    if schedule.is_empty() || schedule[0] < 0.0 {
        return Err(Error::ConfigInvalid("schedule must start at β ≥ 0".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::ConfigInvalid("schedule must be strictly descending".into()));
    }
    let mut samples = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let mut beta_star = None;
    let mut failure = None;
    let push = |samples: &mut Vec<CurveSample>, s: &MeanFieldSolution| {
        samples.push(CurveSample {
            beta: s.beta,
            e: s.e,
            f: s.f,
            s: s.s,
            newton_iterations: s.newton_iterations,
            residual: s.residual,
        })
    };
    for &beta in schedule {
        match solve_with(geom, beta, warm.as_deref(), &opts.solver) {
            Ok(sol) => {
                push(&mut samples, &sol);
                warm = Some(sol.u.0);
            }
            Err(err) => {
                let Some(mut lo) = samples.last().map(|s| s.beta) else {
                    failure = Some(err.to_string());
                    break;
                };
                let mut hi = beta;
                let mut last_err = err;
                for _ in 0..opts.refine {
                    let mid = 0.5 * (lo + hi);
                    match solve_with(geom, mid, warm.as_deref(), &opts.solver) {
                        Ok(sol) => {
                            push(&mut samples, &sol);
                            warm = Some(sol.u.0);
                            lo = mid;
                        }
                        Err(e) => {
                            hi = mid;
                            last_err = e;
                        }
                    }
                }
                beta_star = Some(0.5 * (lo + hi));
                failure = Some(last_err.to_string());
                break;
            }
        }
    }
    let outside_theory = geom.kind() == Kind::Torus && samples.iter().any(|s| s.beta < 0.0);
    Ok(ThermoCurve {
        samples,
        e0: geom.e0(),
        e_min: 0.0,
        beta_star,
        failure,
        outside_theory,
        fingerprint: geom.fingerprint(),
    })
}

/// Estimate of the critical energy and of `R = −β_*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    /// `f64::INFINITY` when `e(β)` blows up before β = −1.
    pub e_c: f64,
    /// Standard error of the extrapolated intercept.
    pub e_c_error: f64,
    /// RMS residual of the linear fit.
    pub fit_residual: f64,
    pub r_est: f64,
    /// `−(1+β) de/dβ` at the last samples: about 1 for logarithmic blow-up,
    /// about 0 when `e` stays bounded.
    pub blow_up_indicator: f64,
}

/// Threshold on the blow-up indicator separating bounded and unbounded curves.
pub const BLOW_UP_THRESHOLD: f64 = 0.5;

pub fn detect_critical(curve: &ThermoCurve) -> Result<CriticalEstimate> {
    let mut pts: Vec<(f64, f64)> = curve.samples.iter().filter(|s| s.beta < 0.0).map(|s| (s.beta, s.e)).collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} samples below β = 0, need 3",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let last = pts.len() - 1;
    let beta_end = pts[last].0;
    let r_est = match curve.beta_star {
        Some(b) => (-b).clamp(0.0, 1.0),
        None => (-beta_end).clamp(0.0, 1.0),
    };
    let (b1, e1) = pts[last - 1];
    let (b2, e2) = pts[last];
    let slope = (e2 - e1) / (b2 - b1);
    let indicator = -(1.0 + 0.5 * (b1 + b2)) * slope;
    let k = pts.len().min(5);
    let fit = &pts[pts.len() - k..];
    let xs: Vec<f64> = fit.iter().map(|p| 1.0 + p.0).collect();
    let ys: Vec<f64> = fit.iter().map(|p| p.1).collect();
    let kf = k as f64;
    let mx = xs.iter().sum::<f64>() / kf;
    let my = ys.iter().sum::<f64>() / kf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let dof = (kf - 2.0).max(1.0);
    let sigma2 = ss / dof;
    let e_c_error = if sxx > 0.0 {
        (sigma2 * (1.0 / kf + mx * mx / sxx)).sqrt()
    } else {
        0.0
    };
    if indicator > BLOW_UP_THRESHOLD {
        return Ok(CriticalEstimate {
            e_c: f64::INFINITY,
            e_c_error: f64::NAN,
            fit_residual: (ss / kf).sqrt(),
            r_est,
            blow_up_indicator: indicator,
        });
    }
    Ok(CriticalEstimate {
        e_c: a,
        e_c_error,
        fit_residual: (ss / kf).sqrt(),
        r_est,
        blow_up_indicator: indicator,
    })
}
