//! Energy and entropy functionals on microstates and macrostates.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{wrap_unit, Field, Geometry, Kind, Point};

/// `N` vortex positions on a shared geometry.
#[derive(Debug, Clone)]
pub struct PointConfig {
    geom: Arc<Geometry>,
    points: Vec<Point>,
}

impl PointConfig {
    /// Torus points are wrapped into the unit cell; sphere points must have
    /// unit norm and disk points must lie strictly inside.
    pub fn new(geom: Arc<Geometry>, points: Vec<Point>) -> Result<Self> {
        let mut points = points;
        for (i, p) in points.iter_mut().enumerate() {
            if !p.iter().all(|x| x.is_finite()) {
                return Err(Error::ConfigInvalid(format!("point {i} is not finite")));
            }
            match geom.kind() {
                Kind::Sphere => {
                    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                    if (n - 1.0).abs() > 1e-12 {
                        return Err(Error::ConfigInvalid(format!("point {i} has norm {n}")));
                    }
                }
                Kind::Torus => {
                    p[0] = wrap_unit(p[0]);
                    p[1] = wrap_unit(p[1]);
                    p[2] = 0.0;
                }
                Kind::Disk => {
                    if p[0] * p[0] + p[1] * p[1] >= 1.0 {
                        return Err(Error::ConfigInvalid(format!("point {i} outside the disk")));
                    }
                    p[2] = 0.0;
                }
            }
        }
        Ok(Self { geom, points })
    }

    pub fn geometry(&self) -> &Arc<Geometry> {
        &self.geom
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A probability density with respect to `dV`.
#[derive(Debug, Clone)]
pub struct Density {
    geom: Arc<Geometry>,
    values: Field,
}

/// Mass tolerance of [`Density::new`].
pub const MASS_TOLERANCE: f64 = 1e-10;

impl Density {
    pub fn new(geom: Arc<Geometry>, values: Vec<f64>) -> Result<Self> {
        if values.len() != geom.len() {
            return Err(Error::ShapeMismatch {
                expected: geom.len(),
                got: values.len(),
            });
        }
        let top = values.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if let Some(i) = values.iter().position(|x| !x.is_finite() || *x < -1e-12 * top.max(1.0)) {
            return Err(Error::InvalidDensity(format!("value {} at node {i}", values[i])));
        }
        let mass = geom.integrate(&values);
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDensity(format!("mass {mass}")));
        }
        Ok(Self {
            geom,
            values: Field(values),
        })
    }

    /// Rescale nonnegative values to unit mass.
    pub fn normalized(geom: Arc<Geometry>, values: Vec<f64>) -> Result<Self> {
        let mass = geom.integrate(&values);
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidDensity(format!("mass {mass}")));
        }
        Self::new(geom, values.into_iter().map(|x| x / mass).collect())
    }

    pub fn uniform(geom: Arc<Geometry>) -> Self {
        let n = geom.len();
        Self {
            geom,
            values: Field(vec![1.0; n]),
        }
    }

    /// The background `θ` as a density (closed surfaces only).
    pub fn background(geom: Arc<Geometry>) -> Result<Self> {
        if geom.kind() == Kind::Disk {
            return Err(Error::UnsupportedGeometry("the disk background lives on the boundary".into()));
        }
        let h = geom.h().to_vec();
        Self::new(geom, h)
    }

    pub fn geometry(&self) -> &Arc<Geometry> {
        &self.geom
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub raw_value: f64,
    pub shifted_value: f64,
    pub e_min_raw: f64,
}

fn check_collisions(geom: &Geometry, pts: &[Point]) -> Result<()> {
    let floor = geom.collision_floor();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if geom.distance(&pts[i], &pts[j]) < floor {
                return Err(Error::Collision(i, j));
            }
        }
    }
    Ok(())
}

/// Microscopic energy `E^(N)` on the shifted scale.
///
/// Closed surfaces: `−(N(N−1))⁻¹ Σ_{i<j} G_θ(x_i, x_j)`.
/// Disk: `−N⁻² Σ_{i<j} G(x_i, x_j) + N⁻² Σ_i γ(x_i)`.
pub fn energy_n(config: &PointConfig) -> Result<f64> {
    energy_of_points(config.geometry(), config.points())
}

pub(crate) fn energy_of_points(geom: &Geometry, pts: &[Point]) -> Result<f64> {
    let n = pts.len();
    let needed = if geom.kind() == Kind::Disk { 1 } else { 2 };
    if n < needed {
        return Err(Error::TooFewPoints { needed, got: n });
    }
    check_collisions(geom, pts)?;
    let mut pair = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            pair += geom.kernel_base(&pts[i], &pts[j]);
        }
    }
    let nf = n as f64;
    if geom.kind() == Kind::Disk {
        let mut robin = 0.0;
        for p in pts {
            robin += geom.robin(p)?;
        }
        return Ok((-pair + robin) / (nf * nf));
    }
    let w: f64 = pts.iter().map(|p| geom.background_potential_at(p)).sum();
    Ok(-(pair - (nf - 1.0) * w) / (nf * (nf - 1.0)) - 0.5 * geom.c_theta())
}

/// Part of `E^(N)` that depends on particle `i` placed at `x`; differences of
/// this quantity give single-move energy changes in O(N).
pub(crate) fn particle_term(geom: &Geometry, pts: &[Point], i: usize, x: &Point) -> Result<f64> {
    let n = pts.len();
    let floor = geom.collision_floor();
    let mut s = 0.0;
    for (j, q) in pts.iter().enumerate() {
        if j == i {
            continue;
        }
        if geom.distance(x, q) < floor {
            return Err(Error::Collision(i, j));
        }
        s += geom.kernel_base(x, q);
    }
    let nf = n as f64;
    if geom.kind() == Kind::Disk {
        Ok((-s + geom.robin(x)?) / (nf * nf))
    } else {
        Ok(-(s - (nf - 1.0) * geom.background_potential_at(x)) / (nf * (nf - 1.0)))
    }
}

/// Macroscopic energy computed through the potential of `ρ`.
pub fn energy_mu(rho: &Density) -> EnergyReport {
    let geom = rho.geometry();
    let shifted = geom.energy_shifted_raw(rho.values());
    let e_min_raw = geom.e_min_raw();
    EnergyReport {
        raw_value: shifted + e_min_raw,
        shifted_value: shifted,
        e_min_raw,
    }
}

/// `S(ρ) = −∫ ρ log ρ dV` with `0 log 0 = 0`.
pub fn entropy_mu(rho: &Density) -> f64 {
    entropy_of_values(rho.geometry(), rho.values())
}

pub(crate) fn entropy_of_values(geom: &Geometry, rho: &[f64]) -> f64 {
    -rho
        .iter()
        .zip(geom.weights())
        .map(|(r, w)| if *r > 0.0 { w * r * r.ln() } else { 0.0 })
        .sum::<f64>()
}

/// `F_β(ρ) = β E(ρ) − S(ρ)` with the shifted energy.
pub fn free_energy_functional(rho: &Density, beta: f64) -> f64 {
    beta * energy_mu(rho).shifted_value - entropy_mu(rho)
}

/// Heat-kernel smoothed empirical measure `(1/N) Σ δ_{x_i}`.
pub fn empirical_density(config: &PointConfig, bandwidth: f64) -> Result<Density> {
    if !(bandwidth > 0.0) {
        return Err(Error::ConfigInvalid(format!("bandwidth {bandwidth} must be positive")));
    }
    if config.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let geom = config.geometry().clone();
    let vals = geom.deposit(config.points(), bandwidth);
    Density::normalized(geom, vals.0)
}
