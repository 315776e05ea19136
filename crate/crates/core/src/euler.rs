//! Continuum vortex dynamics: `∂ρ/∂t = {ρ, u}` with `dd^c u = ρ − θ`.
//!
//! Pseudo-spectral bracket with dealiasing and classical RK4 in time. The
//! step is the smaller of the requested `dt` and a CFL bound computed from
//! the transport speed; a step that drives `ρ` negative is retried at half
//! the size, never clipped.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{entropy_of_values, Density};
use crate::geometry::{Field, Geometry, Kind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EulerOptions {
    /// Largest time step.
    pub dt: f64,
    /// Steps below this size abort the run.
    pub dt_min: f64,
    /// Courant number relative to the chart grid spacing.
    pub cfl: f64,
    /// Number of output intervals.
    pub stamps: usize,
    /// Allowed undershoot `min ρ ≥ −positivity_tol · max ρ`.
    pub positivity_tol: f64,
}

impl Default for EulerOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            dt_min: 1e-7,
            cfl: 0.5,
            stamps: 50,
            positivity_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EulerState {
    pub rho: Density,
    /// Potential with `dd^c u = ρ − θ`, zero `dV`-mean.
    pub u: Field,
    pub t: f64,
}

/// Per-stamp diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EulerRunReport {
    pub times: Vec<f64>,
    /// Shifted energy `E(ρ)`.
    pub energy: Vec<f64>,
    /// `∫ρ² dV`.
    pub i2: Vec<f64>,
    /// `∫ρ³ dV`.
    pub i3: Vec<f64>,
    /// `S(ρ) = −∫ρ log ρ dV`, the Casimir of `−t log t`.
    pub entropy: Vec<f64>,
    pub min_rho: Vec<f64>,
    pub max_rho: Vec<f64>,
    pub steps: usize,
    pub rejected_steps: usize,
    pub smallest_dt: f64,
    /// Strength of any spectral filter beyond dealiasing (none is applied).
    pub filter_strength: f64,
}

#[derive(Debug, Clone)]
pub struct EulerRun {
    pub states: Vec<EulerState>,
    pub report: EulerRunReport,
}

fn state_of(geom: &Arc<Geometry>, rho: Vec<f64>, t: f64) -> Result<EulerState> {
    let u = geom.green_apply(&rho)?;
    Ok(EulerState {
        rho: Density::new(geom.clone(), rho)?,
        u,
        t,
    })
}

fn record(report: &mut EulerRunReport, geom: &Geometry, s: &EulerState) {
    let r = s.rho.values();
    report.times.push(s.t);
    report.energy.push(geom.energy_from_potential(r, &s.u));
    report.i2.push(geom.integrate(&r.iter().map(|x| x * x).collect::<Vec<_>>()));
    report.i3.push(geom.integrate(&r.iter().map(|x| x * x * x).collect::<Vec<_>>()));
    report.entropy.push(entropy_of_values(geom, r));
    report.min_rho.push(r.iter().cloned().fold(f64::INFINITY, f64::min));
    report.max_rho.push(r.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
}

fn rhs(geom: &Geometry, rho: &[f64]) -> Result<Vec<f64>> {
    let u = geom.green_apply(rho)?;
    Ok(geom.poisson_bracket_dealiased(rho, &u)?.0)
}

/// Chart coordinate functions whose brackets with `u` give the transport
/// speed, together with the factor converting their squared sum to speed².
struct SpeedProbe {
    coords: Vec<Vec<f64>>,
    scale: f64,
    spacing: f64,
}

impl SpeedProbe {
    fn new(geom: &Geometry) -> Self {
        use std::f64::consts::PI;
        let nodes = geom.nodes();
        match geom.kind() {
            Kind::Sphere => Self {
                coords: (0..3).map(|k| nodes.iter().map(|p| p[k]).collect()).collect(),
                scale: 1.0,
                spacing: geom.cell_radius() * (4.0 * PI).sqrt(),
            },
            _ => Self {
                coords: (0..2)
                    .flat_map(|k| {
                        [
                            nodes.iter().map(|p| (2.0 * PI * p[k]).sin()).collect(),
                            nodes.iter().map(|p| (2.0 * PI * p[k]).cos()).collect(),
                        ]
                    })
                    .collect(),
                scale: 1.0 / (4.0 * PI * PI),
                spacing: geom.cell_radius(),
            },
        }
    }

    fn max_speed(&self, geom: &Geometry, u: &[f64]) -> Result<f64> {
        let mut sq = vec![0.0; u.len()];
        for c in &self.coords {
            let b = geom.poisson_bracket(c, u)?;
            sq.iter_mut().zip(b.iter()).for_each(|(s, x)| *s += x * x);
        }
        Ok((sq.iter().cloned().fold(0.0, f64::max) * self.scale).sqrt())
    }
}

fn rk4_step(geom: &Geometry, rho: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = rho.len();
    let axpy = |a: &[f64], k: &[f64], h: f64| -> Vec<f64> { (0..n).map(|i| a[i] + h * k[i]).collect() };
    let k1 = rhs(geom, rho)?;
    let k2 = rhs(geom, &axpy(rho, &k1, 0.5 * dt))?;
    let k3 = rhs(geom, &axpy(rho, &k2, 0.5 * dt))?;
    let k4 = rhs(geom, &axpy(rho, &k3, dt))?;
    Ok((0..n)
        .map(|i| rho[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Evolve `ρ₀` to time `T`, storing states at `opts.stamps` equally spaced times.
pub fn euler_integrate(rho0: &Density, t_final: f64, opts: &EulerOptions) -> Result<EulerRun> {
    let geom = rho0.geometry().clone();
    if geom.kind() == Kind::Disk {
        return Err(Error::UnsupportedGeometry("Euler dynamics on the disk".into()));
    }
    if !(t_final >= 0.0 && t_final.is_finite() && opts.dt > 0.0 && opts.dt_min > 0.0 && opts.cfl > 0.0 && opts.stamps > 0) {
        return Err(Error::ConfigInvalid("Euler options need T ≥ 0 and positive dt, dt_min, cfl, stamps".into()));
    }
    if rho0.values().iter().any(|&x| x <= 0.0) {
        return Err(Error::NonPositiveDensity("initial density must be strictly positive".into()));
    }
    let probe = SpeedProbe::new(&geom);
    let mut report = EulerRunReport {
        smallest_dt: f64::INFINITY,
        ..Default::default()
    };
    let first = state_of(&geom, rho0.values().to_vec(), 0.0)?;
    record(&mut report, &geom, &first);
    let mut states = vec![first];
    let mut rho = rho0.values().to_vec();
    let mut t = 0.0;
    let mut dt_cap = opts.dt;
    for k in 1..=opts.stamps {
        let t_stamp = t_final * k as f64 / opts.stamps as f64;
        while t < t_stamp {
            let u = geom.green_apply(&rho)?;
            let speed = probe.max_speed(&geom, &u)?;
            let cfl_dt = if speed > 0.0 { opts.cfl * probe.spacing / speed } else { f64::INFINITY };
            if cfl_dt < opts.dt_min {
                return Err(Error::CflViolation(t));
            }
            let mut dt = dt_cap.min(cfl_dt).min(t_stamp - t);
            loop {
                let next = rk4_step(&geom, &rho, dt)?;
                let top = next.iter().cloned().fold(0.0, f64::max);
                let low = next.iter().cloned().fold(f64::INFINITY, f64::min);
                if next.iter().all(|x| x.is_finite()) && low >= -opts.positivity_tol * top {
                    rho = next;
                    break;
                }
                report.rejected_steps += 1;
                dt *= 0.5;
                dt_cap = dt_cap.min(dt);
                if dt < opts.dt_min {
                    return Err(Error::PositivityLoss(t));
                }
            }
            report.smallest_dt = report.smallest_dt.min(dt);
            report.steps += 1;
            t = if t_stamp - t <= dt { t_stamp } else { t + dt };
        }
        let s = state_of(&geom, rho.clone(), t)?;
        record(&mut report, &geom, &s);
        states.push(s);
    }
    Ok(EulerRun { states, report })
}

/// A smooth positive density `∝ 1 + a·f/max|f|` with `f` a random
/// combination of low modes (Fourier modes with `|k|∞ ≤ 3` on the torus,
/// von Mises bumps on the sphere).
pub fn random_smooth_density(geom: &Arc<Geometry>, seed: u64, amplitude: f64) -> Result<Density> {
    use rand::Rng;
    use std::f64::consts::PI;
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::ConfigInvalid(format!("amplitude {amplitude} must lie in [0, 1)")));
    }
    let mut rng = crate::sampler::rng_for(seed, 0);
    let nodes = geom.nodes();
    let mut f = vec![0.0; nodes.len()];
    match geom.kind() {
        Kind::Torus => {
            for kx in -3i32..=3 {
                for ky in -3i32..=3 {
                    if (kx, ky) == (0, 0) {
                        continue;
                    }
                    let c: f64 = rng.random::<f64>() - 0.5;
                    let ph: f64 = 2.0 * PI * rng.random::<f64>();
                    let decay = 1.0 / (kx * kx + ky * ky) as f64;
                    for (v, p) in f.iter_mut().zip(nodes) {
                        *v += c * decay * (2.0 * PI * (kx as f64 * p[0] + ky as f64 * p[1]) + ph).cos();
                    }
                }
            }
        }
        Kind::Sphere => {
            for _ in 0..6 {
                let n = crate::sampler::reference_point(Kind::Sphere, &mut rng);
                let c: f64 = rng.random::<f64>() - 0.5;
                for (v, p) in f.iter_mut().zip(nodes) {
                    *v += c * (2.0 * (n[0] * p[0] + n[1] * p[1] + n[2] * p[2])).exp();
                }
            }
        }
        Kind::Disk => return Err(Error::UnsupportedGeometry("random densities on the disk".into())),
    }
    let mean = geom.integrate(&f);
    f.iter_mut().for_each(|v| *v -= mean);
    let top = f.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let vals = f.iter().map(|v| 1.0 + amplitude * v / top).collect();
    Density::normalized(geom.clone(), vals)
}

/// Relative drifts `max_t |q(t) − q(0)| / |q(0)|` (absolute when `q(0) = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CasimirDrift {
    pub energy: f64,
    pub i2: f64,
    pub i3: f64,
    pub entropy: f64,
    pub sup_rho: f64,
    pub inf_rho: f64,
}

impl CasimirDrift {
    /// Largest of the conserved-quantity drifts (energy, Casimirs, entropy).
    pub fn worst(&self) -> f64 {
        self.energy.max(self.i2).max(self.i3).max(self.entropy)
    }
}

fn rel_drift(series: &[f64]) -> f64 {
    let q0 = series[0];
    let d = series.iter().map(|q| (q - q0).abs()).fold(0.0, f64::max);
    if q0 == 0.0 {
        d
    } else {
        d / q0.abs()
    }
}

pub fn casimir_report(run: &EulerRunReport) -> CasimirDrift {
    CasimirDrift {
        energy: rel_drift(&run.energy),
        i2: rel_drift(&run.i2),
        i3: rel_drift(&run.i3),
        entropy: rel_drift(&run.entropy),
        sup_rho: rel_drift(&run.max_rho),
        inf_rho: rel_drift(&run.min_rho),
    }
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    /// `‖ρ′_t − ρ_t‖₋₁` per stamp.
    pub distances: Vec<f64>,
    /// Least-squares slope of `log d(t)`.
    pub slope_fit: f64,
    /// Rate `C` used in the bound `d(t) ≤ d(0) e^{Ct}`: the larger of the
    /// fitted slope and the smallest rate that dominates every sample.
    pub c_fit: f64,
    /// Whether the series is dominated by `d(0) e^{C_fit t}`.
    pub dominated: bool,
    pub run_a: EulerRunReport,
    pub run_b: EulerRunReport,
}

/// Evolve two initial densities side by side and track their H⁻¹ distance.
pub fn stability_experiment(rho0: &Density, rho0b: &Density, t_final: f64, opts: &EulerOptions) -> Result<StabilityReport> {
    let (a, b) = rayon::join(
        || euler_integrate(rho0, t_final, opts),
        || euler_integrate(rho0b, t_final, opts),
    );
    let (a, b) = (a?, b?);
    let geom = rho0.geometry();
    let times = a.report.times.clone();
    let distances = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| geom.hminus_distance(x.rho.values(), y.rho.values()))
        .collect::<Result<Vec<f64>>>()?;
    let (slope_fit, c_fit, dominated) = exponential_bound(&times, &distances);
    Ok(StabilityReport {
        times,
        distances,
        slope_fit,
        c_fit,
        dominated,
        run_a: a.report,
        run_b: b.report,
    })
}

/// `(slope, C, dominated)` for `d(t) ≤ d(0) e^{Ct}`. Identical series give
/// `C = 0`.
pub fn exponential_bound(times: &[f64], d: &[f64]) -> (f64, f64, bool) {
    let d0 = d[0];
    if d.iter().all(|&x| x == 0.0) {
        return (0.0, 0.0, true);
    }
    if d0 <= 0.0 {
        // Distinct solutions from identical data would contradict uniqueness.
        return (f64::INFINITY, f64::INFINITY, false);
    }
    let pts: Vec<(f64, f64)> = times.iter().zip(d).filter(|(_, &x)| x > 0.0).map(|(&t, &x)| (t, x.ln())).collect();
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (tb, yb) = (st / m, sy / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - tb).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tb) * (p.1 - yb)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let envelope = times
        .iter()
        .zip(d)
        .filter(|(&t, _)| t > 0.0)
        .map(|(&t, &x)| (x / d0).ln() / t)
        .fold(f64::NEG_INFINITY, f64::max);
    let c = slope.max(envelope);
    let dominated = c.is_finite()
        && times
            .iter()
            .zip(d)
            .all(|(&t, &x)| x <= d0 * (c * t).exp() * (1.0 + 1e-12));
    (slope, c, dominated)
}
