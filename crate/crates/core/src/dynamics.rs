//! Hamiltonian point-vortex flow of `E^(N)` on the sphere and the torus.
//!
//! With symplectic form `dV` on each factor and `ω_{X^N} = N⁻¹ Σ ω_X`, the
//! flow is `dx_i/dt = −N J∇_{x_i} E^(N)`, the gradient taken in the metric
//! whose area form is `dV`. In the chart this reads
//! `dx_i/dt = −(4πN / v(x_i)) x_i × ∇_{x_i}E` on the unit sphere and
//! `dx_i/dt = −(N / v(x_i)) J∇_{x_i}E` on the unit torus, where `v` is the
//! density of `dV` against the area-one reference measure.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{empirical_density, energy_n, Density, PointConfig};
use crate::geometry::{Geometry, Kind, Point, Profile};
use crate::ode::{Advance, Dopri5, Dopri5Options};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VortexOptions {
    /// Local error tolerance of the integrator.
    pub tol: f64,
    /// Number of output intervals between `0` and `T`.
    pub stamps: usize,
    /// Collision floor as a fraction of the mean inter-particle spacing.
    pub floor_factor: f64,
    /// Allowed energy drift as a multiple of `tol`.
    pub budget_factor: f64,
    /// Tolerance tightenings (by 10×) tried when the drift budget is missed.
    pub max_refinements: usize,
}

impl Default for VortexOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            stamps: 200,
            floor_factor: 1e-3,
            budget_factor: 100.0,
            max_refinements: 2,
        }
    }
}

impl VortexOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn drift_budget(&self) -> f64 {
        self.budget_factor * self.tol
    }
}

/// Step-size controller state recorded at each output stamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerEntry {
    pub t: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub last_step: f64,
}

#[derive(Debug, Clone)]
pub struct VortexTrajectory {
    pub times: Vec<f64>,
    pub configs: Vec<PointConfig>,
    pub energies: Vec<f64>,
    pub min_distances: Vec<f64>,
    /// `Σ x_i` per stamp; only on the round sphere, where it is conserved.
    pub moments: Option<Vec<[f64; 3]>>,
    pub controller: Vec<ControllerEntry>,
    /// Velocity multiplier coming from `ω_{X^N} = N⁻¹ Σ ω_X` (equal to `N`).
    pub velocity_scale: f64,
    pub collision_floor: f64,
    /// Tolerance actually used after any drift-driven refinement.
    pub tol: f64,
    pub drift_budget: f64,
    /// `2π · spacing / rms speed` at `t = 0`; infinite for stationary starts.
    pub characteristic_period: f64,
    /// Set when the run stopped early on a close approach.
    pub halted: Option<Error>,
}

impl VortexTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn geometry(&self) -> &Arc<Geometry> {
        self.configs[0].geometry()
    }
}

/// Whether the flow commutes with all rotations: round sphere with `θ = dV`.
pub fn is_round_sphere(geom: &Geometry) -> bool {
    geom.kind() == Kind::Sphere && geom.spec().dv == Profile::Uniform && !geom.has_background_potential()
}

/// Mean inter-particle spacing in chart units (chordal on the sphere).
pub fn mean_spacing(kind: Kind, n: usize) -> f64 {
    let area = if kind == Kind::Sphere { 4.0 * PI } else { 1.0 };
    (area / n.max(1) as f64).sqrt()
}

/// Velocities of all vortices, written as 3-vectors into `out`.
pub fn velocities(geom: &Geometry, pts: &[Point], out: &mut [f64]) {
    let n = pts.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    if n < 2 {
        // The pair sum is empty: E ≡ 0 and every point is fixed.
        return;
    }
    let nf = n as f64;
    let a = 1.0 / (nf * (nf - 1.0));
    let b = 1.0 / nf;
    let bg = geom.has_background_potential();
    // Pair sums run in a label-independent order so relabeling commutes
    // with the flow bit for bit.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (p, q) = (&pts[a], &pts[b]);
        p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])).then(p[2].total_cmp(&q[2]))
    });
    for i in 0..n {
        let x = pts[i];
        let mut g = [0.0; 3];
        for &j in &order {
            if j != i {
                let d = geom.kernel_base_gradient(&x, &pts[j]);
                g[0] -= a * d[0];
                g[1] -= a * d[1];
                g[2] -= a * d[2];
            }
        }
        if bg {
            let w = geom.background_potential_gradient(&x);
            g[0] += b * w[0];
            g[1] += b * w[1];
            g[2] += b * w[2];
        }
        let s = nf / geom.dv_at(&x);
        let v = &mut out[3 * i..3 * i + 3];
        match geom.kind() {
            Kind::Sphere => {
                let c = 4.0 * PI * s;
                v[0] = -c * (x[1] * g[2] - x[2] * g[1]);
                v[1] = -c * (x[2] * g[0] - x[0] * g[2]);
                v[2] = -c * (x[0] * g[1] - x[1] * g[0]);
            }
            Kind::Torus => {
                v[0] = s * g[1];
                v[1] = -s * g[0];
            }
            Kind::Disk => unreachable!("no disk dynamics"),
        }
    }
}

fn unpack(kind: Kind, y: &[f64]) -> Vec<Point> {
    y.chunks(3)
        .map(|c| {
            if kind == Kind::Sphere {
                let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                [c[0] / r, c[1] / r, c[2] / r]
            } else {
                [c[0], c[1], 0.0]
            }
        })
        .collect()
}

fn min_distance(geom: &Geometry, pts: &[Point]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            m = m.min(geom.distance(&pts[i], &pts[j]));
        }
    }
    m
}

fn energy_of(config: &PointConfig) -> Result<f64> {
    if config.len() < 2 {
        Ok(0.0)
    } else {
        energy_n(config)
    }
}

/// Integrate the vortex flow from `config0` over `[0, T]` (`T < 0` runs the
/// flow backwards) with local tolerance `tol`.
pub fn vortex_flow(config0: &PointConfig, t_final: f64, tol: f64) -> Result<VortexTrajectory> {
    vortex_flow_with(config0, t_final, &VortexOptions::with_tol(tol))
}

/// As [`vortex_flow`], tightening the tolerance until the energy drift fits
/// the budget `budget_factor · tol`.
pub fn vortex_flow_with(config0: &PointConfig, t_final: f64, opts: &VortexOptions) -> Result<VortexTrajectory> {
    let geom = config0.geometry();
    if geom.kind() == Kind::Disk {
        return Err(Error::UnsupportedGeometry("vortex dynamics on the disk".into()));
    }
    if !(t_final.is_finite() && opts.tol > 0.0 && opts.stamps > 0) {
        return Err(Error::ConfigInvalid("need finite T, positive tol and stamps".into()));
    }
    let budget = opts.drift_budget();
    let mut tol = opts.tol;
    for attempt in 0..=opts.max_refinements {
        let mut traj = integrate(config0, t_final, tol, opts)?;
        traj.drift_budget = budget;
        let drift = energy_drift(&traj);
        if drift <= budget || traj.halted.is_some() {
            return Ok(traj);
        }
        if attempt == opts.max_refinements {
            return Err(Error::ToleranceUnreachable(t_final));
        }
        tol *= 0.1;
    }
    unreachable!()
}

fn integrate(config0: &PointConfig, t_final: f64, tol: f64, opts: &VortexOptions) -> Result<VortexTrajectory> {
    let geom = config0.geometry().clone();
    let kind = geom.kind();
    let n = config0.len();
    let round = is_round_sphere(&geom);
    let floor = opts.floor_factor * mean_spacing(kind, n);
    let e0 = energy_of(config0)?;
    let d0 = min_distance(&geom, config0.points());
    if d0 < floor {
        return Err(Error::CollisionApproach(0.0));
    }

    let mut y: Vec<f64> = config0.points().iter().flat_map(|p| p.iter().copied()).collect();
    let mut rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
        let pts = unpack(kind, y);
        velocities(&geom, &pts, dy);
    };
    let mut v0 = vec![0.0; y.len()];
    rhs(0.0, &y, &mut v0);
    let rms = (v0.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let characteristic_period = if rms > 0.0 {
        2.0 * PI * mean_spacing(kind, n) / rms
    } else {
        f64::INFINITY
    };

    let mut traj = VortexTrajectory {
        times: vec![0.0],
        configs: vec![config0.clone()],
        energies: vec![e0],
        min_distances: vec![d0],
        moments: round.then(|| vec![moment(config0.points())]),
        controller: vec![ControllerEntry {
            t: 0.0,
            accepted: 0,
            rejected: 0,
            last_step: 0.0,
        }],
        velocity_scale: n as f64,
        collision_floor: floor,
        tol,
        drift_budget: opts.drift_budget(),
        characteristic_period,
        halted: None,
    };
    if n < 2 || rms == 0.0 {
        // Fixed point: every stamp repeats the initial state.
        for k in 1..=opts.stamps {
            let t = t_final * k as f64 / opts.stamps as f64;
            push_stamp(&mut traj, config0.clone(), e0, d0, t, ControllerEntry { t, accepted: 0, rejected: 0, last_step: 0.0 });
        }
        return Ok(traj);
    }

    let mut stepper = Dopri5::new(Dopri5Options::new(tol, 3));
    let mut project = |y: &mut [f64]| {
        if kind == Kind::Sphere {
            for c in y.chunks_mut(3) {
                let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                c.iter_mut().for_each(|v| *v /= r);
            }
        }
    };
    let geom_obs = geom.clone();
    let mut closest = f64::INFINITY;
    let mut observe = |_: f64, y: &[f64]| {
        closest = min_distance(&geom_obs, &unpack(kind, y));
        closest >= floor
    };
    let mut t = 0.0;
    for k in 1..=opts.stamps {
        let t_stamp = t_final * k as f64 / opts.stamps as f64;
        let status = stepper.advance(&mut rhs, &mut project, &mut observe, &mut t, &mut y, t_stamp)?;
        let cfg = PointConfig::new(geom.clone(), unpack(kind, &y))?;
        let e = energy_of(&cfg)?;
        let d = min_distance(&geom, cfg.points());
        let entry = ControllerEntry {
            t,
            accepted: stepper.stats.accepted,
            rejected: stepper.stats.rejected,
            last_step: stepper.stats.last_step,
        };
        push_stamp(&mut traj, cfg, e, d, t, entry);
        if status == Advance::Stopped {
            traj.halted = Some(Error::CollisionApproach(t));
            break;
        }
    }
    Ok(traj)
}

fn push_stamp(traj: &mut VortexTrajectory, cfg: PointConfig, e: f64, d: f64, t: f64, entry: ControllerEntry) {
    if let Some(m) = traj.moments.as_mut() {
        m.push(moment(cfg.points()));
    }
    traj.times.push(t);
    traj.configs.push(cfg);
    traj.energies.push(e);
    traj.min_distances.push(d);
    traj.controller.push(entry);
}

fn moment(pts: &[Point]) -> [f64; 3] {
    let mut m = [0.0; 3];
    for p in pts {
        m[0] += p[0];
        m[1] += p[1];
        m[2] += p[2];
    }
    m
}

fn energy_drift(traj: &VortexTrajectory) -> f64 {
    let e0 = traj.energies[0];
    traj.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservedReport {
    /// `max_t |E(t) − E(0)|`.
    pub energy_drift: f64,
    /// `max_t ‖M(t) − M(0)‖` for `M = Σ x_i`, on the round sphere only.
    pub moment_drift: Option<f64>,
    pub min_distance: f64,
    pub drift_budget: f64,
    pub within_budget: bool,
}

pub fn conserved_report(traj: &VortexTrajectory) -> ConservedReport {
    let energy_drift = energy_drift(traj);
    let moment_drift = traj.moments.as_ref().map(|m| {
        let m0 = m[0];
        m.iter()
            .map(|v| ((v[0] - m0[0]).powi(2) + (v[1] - m0[1]).powi(2) + (v[2] - m0[2]).powi(2)).sqrt())
            .fold(0.0, f64::max)
    });
    ConservedReport {
        energy_drift,
        moment_drift,
        min_distance: traj.min_distances.iter().cloned().fold(f64::INFINITY, f64::min),
        drift_budget: traj.drift_budget,
        within_budget: energy_drift <= traj.drift_budget,
    }
}

#[derive(Debug, Clone)]
pub struct TimeAverage {
    pub density: Density,
    /// Length of the averaging window in characteristic periods.
    pub periods: f64,
    pub stamps_used: usize,
    pub warnings: Vec<String>,
}

/// Time-and-particle average of the heat-smoothed positions over the stamps
/// with `t ≥ t_burn` (in absolute time).
pub fn time_average_density(traj: &VortexTrajectory, bandwidth: f64, t_burn: f64) -> Result<TimeAverage> {
    if traj.is_empty() {
        return Err(Error::TooShort("empty trajectory".into()));
    }
    let idx: Vec<usize> = (0..traj.len()).filter(|&k| traj.times[k].abs() >= t_burn).collect();
    let t_end = traj.times[traj.len() - 1].abs();
    let window = t_end - t_burn;
    let stationary = traj.characteristic_period.is_infinite();
    if idx.is_empty() || (!stationary && (idx.len() < 2 || window <= 0.0)) {
        return Err(Error::TooShort(format!(
            "{} stamps after t_burn = {t_burn} (trajectory ends at {t_end})",
            idx.len()
        )));
    }
    let periods = window / traj.characteristic_period;
    let mut warnings = Vec::new();
    if periods < 10.0 {
        warnings.push(format!("averaging window covers only {periods:.2} characteristic periods"));
    }
    let mut acc: Option<Vec<f64>> = None;
    for &k in &idx {
        let d = empirical_density(&traj.configs[k], bandwidth)?.into_values();
        match acc.as_mut() {
            None => acc = Some(d),
            Some(a) => a.iter_mut().zip(&d).for_each(|(x, y)| *x += y),
        }
    }
    let m = idx.len() as f64;
    let vals: Vec<f64> = acc.expect("non-empty").into_iter().map(|x| x / m).collect();
    Ok(TimeAverage {
        density: Density::normalized(traj.geometry().clone(), vals)?,
        periods,
        stamps_used: idx.len(),
        warnings,
    })
}
