//! Discrete surfaces: measures, background density, `dd^c`, Green operator,
//! Poisson bracket and H⁻¹ norm.
//!
//! Every geometry carries a *reference* measure (normalized round, flat or
//! Lebesgue area) on which the spectral operators act, a base measure
//! `dV = v · ref` and a background `θ = h dV`. Operators acting on densities
//! with respect to `dV` are conjugated through `v`.

mod disk;
mod sphere;
mod torus;

use std::f64::consts::PI;
use std::ops::Deref;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use disk::DiskGrid;
pub use sphere::SphereGrid;
pub use torus::{wrap_half, wrap_unit, TorusGrid};

/// A point in the surface's chart: unit 3-vector on the sphere, `(x, y, 0)`
/// with `x, y ∈ [0,1)` on the torus, `(x, y, 0)` with `x² + y² < 1` on the disk.
pub type Point = [f64; 3];

/// Scale of `dd^c` relative to the Laplacian of the area-one metric.
pub const DDC_CONSTANT: f64 = 1.0 / (8.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Sphere,
    Torus,
    Disk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Surface {
    Sphere { lmax: usize },
    Torus { n: usize },
    Disk { n_r: usize, n_phi: usize },
}

impl Surface {
    pub fn kind(&self) -> Kind {
        match self {
            Surface::Sphere { .. } => Kind::Sphere,
            Surface::Torus { .. } => Kind::Torus,
            Surface::Disk { .. } => Kind::Disk,
        }
    }
}

/// A positive profile on the surface, normalized at build time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "lowercase", deny_unknown_fields)]
pub enum Profile {
    Uniform,
    /// `1 + a cos ϑ` on the sphere.
    Zonal { a: f64 },
    /// `1 + a cos 2πx` on the torus.
    Bump { a: f64 },
    /// Explicit node values.
    Values { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum ThetaMode {
    Explicit { h: Profile },
    /// `θ` is the Ricci form of `dV`.
    Fano,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub surface: Surface,
    pub dv: Profile,
    pub theta: ThetaMode,
    #[serde(default)]
    pub degenerate_allowed: bool,
}

impl GeometrySpec {
    /// Named presets: `sphere-round`, `sphere-zonal(a)`, `sphere-zonal-fano(a)`,
    /// `torus-flat`, `torus-bump(a)`, `disk-uniform`.
    pub fn preset(name: &str, surface: Option<Surface>) -> Result<Self> {
        let (base, arg) = match name.find('(') {
            Some(i) if name.ends_with(')') => {
                let a: f64 = name[i + 1..name.len() - 1]
                    .trim()
                    .parse()
                    .map_err(|_| Error::ConfigInvalid(format!("bad preset argument in {name}")))?;
                (&name[..i], Some(a))
            }
            _ => (name, None),
        };
        let need = |a: Option<f64>| a.ok_or_else(|| Error::ConfigInvalid(format!("preset {name} needs an argument")));
        let spec = match base {
            "sphere-round" => Self {
                surface: surface.unwrap_or(Surface::Sphere { lmax: 32 }),
                dv: Profile::Uniform,
                theta: ThetaMode::Explicit { h: Profile::Uniform },
                degenerate_allowed: true,
            },
            "sphere-zonal" => Self {
                surface: surface.unwrap_or(Surface::Sphere { lmax: 32 }),
                dv: Profile::Uniform,
                theta: ThetaMode::Explicit { h: Profile::Zonal { a: need(arg)? } },
                degenerate_allowed: false,
            },
            "sphere-zonal-fano" => Self {
                surface: surface.unwrap_or(Surface::Sphere { lmax: 32 }),
                dv: Profile::Zonal { a: need(arg)? },
                theta: ThetaMode::Fano,
                degenerate_allowed: false,
            },
            "torus-flat" => Self {
                surface: surface.unwrap_or(Surface::Torus { n: 64 }),
                dv: Profile::Uniform,
                theta: ThetaMode::Explicit { h: Profile::Uniform },
                degenerate_allowed: true,
            },
            "torus-bump" => Self {
                surface: surface.unwrap_or(Surface::Torus { n: 64 }),
                dv: Profile::Uniform,
                theta: ThetaMode::Explicit { h: Profile::Bump { a: need(arg)? } },
                degenerate_allowed: false,
            },
            "disk-uniform" => Self {
                surface: surface.unwrap_or(Surface::Disk { n_r: 32, n_phi: 64 }),
                dv: Profile::Uniform,
                theta: ThetaMode::Explicit { h: Profile::Uniform },
                degenerate_allowed: true,
            },
            _ => return Err(Error::ConfigInvalid(format!("unknown preset {name}"))),
        };
        if spec.surface.kind() != Self::preset_kind(base) {
            return Err(Error::ConfigInvalid(format!("preset {name} does not match the surface")));
        }
        Ok(spec)
    }

    fn preset_kind(base: &str) -> Kind {
        if base.starts_with("sphere") {
            Kind::Sphere
        } else if base.starts_with("torus") {
            Kind::Torus
        } else {
            Kind::Disk
        }
    }
}

/// Real values at grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Field(pub Vec<f64>);

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field(v)
    }
}

pub(crate) trait SpectralGrid: Send + Sync {
    fn len(&self) -> usize;
    fn nodes(&self) -> &[Point];
    fn ref_weights(&self) -> &[f64];
    /// Reference `dd^c` (density with respect to the reference measure).
    fn lap(&self, u: &[f64]) -> Vec<f64>;
    /// Inverse of [`Self::lap`] on mean-zero data (closed) or with Dirichlet data (disk).
    fn lap_inv(&self, f: &[f64]) -> Vec<f64>;
    fn hminus_sq(&self, f: &[f64]) -> f64;
    fn heat(&self, f: &[f64], t: f64) -> Result<Vec<f64>>;
    fn bracket(&self, f: &[f64], g: &[f64]) -> Result<Vec<f64>>;
    fn bracket_dealiased(&self, f: &[f64], g: &[f64]) -> Result<Vec<f64>>;
    fn deposit(&self, points: &[Point], t: f64) -> Vec<f64>;
    fn evaluator(&self, f: &[f64]) -> Evaluator;
    fn spectral_tail(&self, f: &[f64]) -> f64;
    fn project(&self, f: &[f64]) -> Vec<f64>;
    fn cell_radius(&self) -> f64;
    /// `(eigenvalue of −dd^c, squared coefficient)` pairs.
    fn eigen_coefficients(&self, f: &[f64]) -> Vec<(f64, f64)>;
}

/// Off-grid evaluation of a spectrally represented field.
#[derive(Debug, Clone)]
pub enum Evaluator {
    Zero,
    Torus(Vec<(i64, i64, Complex64)>),
    Sphere {
        modes: Vec<(usize, Vec<(usize, Complex64)>)>,
    },
    Disk {
        nodes: Vec<f64>,
        bary: Vec<f64>,
        modes: Vec<(i64, Vec<Complex64>)>,
    },
}

impl Evaluator {
    pub fn value(&self, p: &Point) -> f64 {
        match self {
            Evaluator::Zero => 0.0,
            Evaluator::Torus(modes) => modes
                .iter()
                .map(|(kx, ky, c)| {
                    let ph = 2.0 * PI * (*kx as f64 * p[0] + *ky as f64 * p[1]);
                    c.re * ph.cos() - c.im * ph.sin()
                })
                .sum(),
            Evaluator::Sphere { modes } => sphere::eval_modes(modes, p, false).0,
            Evaluator::Disk { nodes, bary, modes } => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                let phi = p[1].atan2(p[0]);
                modes
                    .iter()
                    .map(|(m, vals)| {
                        let c = disk::barycentric_eval(nodes, bary, vals, r);
                        (c * Complex64::from_polar(1.0, *m as f64 * phi)).re
                    })
                    .sum()
            }
        }
    }

    /// Gradient in the chart: `(∂x, ∂y, 0)` on the torus, round-metric ambient
    /// tangent vector on the sphere.
    pub fn gradient(&self, p: &Point) -> [f64; 3] {
        match self {
            Evaluator::Zero | Evaluator::Disk { .. } => [0.0; 3],
            Evaluator::Torus(modes) => {
                let mut g = [0.0; 3];
                for (kx, ky, c) in modes {
                    let ph = 2.0 * PI * (*kx as f64 * p[0] + *ky as f64 * p[1]);
                    let d = -(c.re * ph.sin() + c.im * ph.cos()) * 2.0 * PI;
                    g[0] += d * *kx as f64;
                    g[1] += d * *ky as f64;
                }
                g
            }
            Evaluator::Sphere { modes } => sphere::eval_modes(modes, p, true).1,
        }
    }
}

/// Fitted constants of the closed-form kernel `κ · shape + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub kappa: f64,
    pub offset: f64,
}

pub struct Geometry {
    spec: GeometrySpec,
    grid: Box<dyn SpectralGrid>,
    v: Vec<f64>,
    h: Vec<f64>,
    weights: Vec<f64>,
    kernel: KernelConstants,
    w_pot: Vec<f64>,
    w_eval: Evaluator,
    v_mass: f64,
    v_eval: Option<Evaluator>,
    c_theta: f64,
    e0: f64,
    green_residual: f64,
}

impl std::fmt::Debug for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Geometry")
            .field("spec", &self.spec)
            .field("nodes", &self.len())
            .field("e0", &self.e0)
            .finish()
    }
}

fn make_grid(surface: &Surface) -> Result<Box<dyn SpectralGrid>> {
    Ok(match *surface {
        Surface::Sphere { lmax } => {
            if !(2..=256).contains(&lmax) {
                return Err(Error::InvalidResolution(format!("sphere lmax {lmax} outside [2, 256]")));
            }
            Box::new(SphereGrid::new(lmax))
        }
        Surface::Torus { n } => {
            if !(4..=1024).contains(&n) {
                return Err(Error::InvalidResolution(format!("torus n {n} outside [4, 1024]")));
            }
            Box::new(TorusGrid::new(n))
        }
        Surface::Disk { n_r, n_phi } => {
            if n_r > 256 || n_phi > 1024 {
                return Err(Error::InvalidResolution(format!("disk grid {n_r}x{n_phi} too large")));
            }
            Box::new(DiskGrid::new(n_r, n_phi)?)
        }
    })
}

fn profile_values(profile: &Profile, kind: Kind, nodes: &[Point]) -> Result<Vec<f64>> {
    Ok(match profile {
        Profile::Uniform => vec![1.0; nodes.len()],
        Profile::Zonal { a } => {
            if kind != Kind::Sphere {
                return Err(Error::ConfigInvalid("zonal profile requires the sphere".into()));
            }
            nodes.iter().map(|p| 1.0 + a * p[2]).collect()
        }
        Profile::Bump { a } => {
            if kind != Kind::Torus {
                return Err(Error::ConfigInvalid("bump profile requires the torus".into()));
            }
            nodes.iter().map(|p| 1.0 + a * (2.0 * PI * p[0]).cos()).collect()
        }
        Profile::Values { values } => {
            if values.len() != nodes.len() {
                return Err(Error::ShapeMismatch {
                    expected: nodes.len(),
                    got: values.len(),
                });
            }
            values.clone()
        }
    })
}

/// Fit `κ` and the additive constant of the closed-form kernel by pairing
/// the spectral Green operator with smooth test functions on a fixed
/// auxiliary grid. Returns the fit and the relative mismatch on a third test
/// function.
fn fit_kernel(kind: Kind) -> (KernelConstants, f64) {
    match kind {
        Kind::Torus => {
            let grid = TorusGrid::new(64);
            let y0 = grid.nodes()[0];
            let bump = |cx: f64, cy: f64, c: f64| -> Vec<f64> {
                grid.nodes()
                    .iter()
                    .map(|p| (c * ((2.0 * PI * (p[0] - cx)).cos() + (2.0 * PI * (p[1] - cy)).cos() - 2.0)).exp())
                    .collect()
            };
            let tests = [bump(0.5, 0.5, 8.0), bump(0.35, 0.6, 7.0), bump(0.6, 0.25, 9.0)];
            fit_closed(&grid, &tests, |p| torus::kernel_shape(p, &y0), 0)
        }
        Kind::Sphere => {
            let grid = SphereGrid::new(64);
            let y0 = grid.nodes()[0];
            let bump = |a: Point, c: f64| -> Vec<f64> {
                grid.nodes()
                    .iter()
                    .map(|p| (c * (p[0] * a[0] + p[1] * a[1] + p[2] * a[2] - 1.0)).exp())
                    .collect()
            };
            // centers at 180°, 90° and 120° from the source node
            let t1 = [-y0[0], -y0[1], -y0[2]];
            let t2 = normalize([y0[2], 0.0, -y0[0]]);
            let t3 = normalize([-0.5 * y0[0] + 0.866 * t2[0], 0.0, -0.5 * y0[2] + 0.866 * t2[2]]);
            let tests = [bump(t1, 10.0), bump(t2, 25.0), bump(t3, 20.0)];
            fit_closed(&grid, &tests, |p| sphere::kernel_shape(p, &y0), 0)
        }
        Kind::Disk => {
            let grid = DiskGrid::new(40, 96).expect("auxiliary disk grid");
            let target = [-0.6, 0.0, 0.0];
            let (i0, y0) = grid
                .nodes()
                .iter()
                .enumerate()
                .min_by(|a, b| dist2(a.1, &target).total_cmp(&dist2(b.1, &target)))
                .map(|(i, p)| (i, *p))
                .unwrap();
            let bump = |cx: f64, cy: f64, s: f64| -> Vec<f64> {
                grid.nodes()
                    .iter()
                    .map(|p| (-((p[0] - cx).powi(2) + (p[1] - cy).powi(2)) / (2.0 * s * s)).exp())
                    .collect()
            };
            let tests = [bump(0.5, 0.0, 0.15), bump(0.35, 0.4, 0.15)];
            let w = grid.ref_weights();
            let mut ratios = Vec::new();
            for t in &tests {
                let lhs: f64 = grid
                    .nodes()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != i0)
                    .map(|(i, p)| w[i] * t[i] * disk::kernel_shape(p, &y0))
                    .sum();
                let rhs = grid.lap_inv(t)[i0];
                ratios.push(rhs / lhs);
            }
            let kappa = ratios[0];
            (KernelConstants { kappa, offset: 0.0 }, ((ratios[1] - kappa) / kappa).abs())
        }
    }
}

fn fit_closed(grid: &dyn SpectralGrid, tests: &[Vec<f64>], shape: impl Fn(&Point) -> f64, i0: usize) -> (KernelConstants, f64) {
    let w = grid.ref_weights();
    let rows: Vec<(f64, f64, f64)> = tests
        .iter()
        .map(|t| {
            let q: f64 = grid
                .nodes()
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != i0)
                .map(|(i, p)| w[i] * t[i] * shape(p))
                .sum();
            let mass: f64 = t.iter().zip(w).map(|(a, b)| a * b).sum();
            let centered: Vec<f64> = t.iter().map(|v| v - mass).collect();
            (q, mass, grid.lap_inv(&centered)[i0])
        })
        .collect();
    let (a1, b1, r1) = rows[0];
    let (a2, b2, r2) = rows[1];
    let det = a1 * b2 - a2 * b1;
    let kappa = (r1 * b2 - r2 * b1) / det;
    let offset = (a1 * r2 - a2 * r1) / det;
    let (a3, b3, r3) = rows[2];
    let mismatch = ((kappa * a3 + offset * b3 - r3) / r3).abs();
    (KernelConstants { kappa, offset }, mismatch)
}

fn kernel_constants(kind: Kind) -> (KernelConstants, f64) {
    static CACHE: [OnceLock<(KernelConstants, f64)>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = match kind {
        Kind::Sphere => 0,
        Kind::Torus => 1,
        Kind::Disk => 2,
    };
    *CACHE[slot].get_or_init(|| fit_kernel(kind))
}

fn dist2(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn normalize(p: Point) -> Point {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

/// Tolerance of the Green-operator checks performed at build time.
pub const GREEN_TOLERANCE: f64 = 1e-6;

impl Geometry {
    pub fn build(spec: GeometrySpec) -> Result<Self> {
        let kind = spec.surface.kind();
        let grid = make_grid(&spec.surface)?;
        let nodes = grid.nodes();
        let rw = grid.ref_weights();

        if kind == Kind::Disk && (spec.dv != Profile::Uniform || spec.theta != (ThetaMode::Explicit { h: Profile::Uniform })) {
            return Err(Error::ConfigInvalid(
                "the disk supports only uniform dV; its background lives on the boundary".into(),
            ));
        }

        let mut v = profile_values(&spec.dv, kind, nodes)?;
        if let Some(bad) = v.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::NonPositiveDensity(format!("dV density {} at node {bad}", v[bad])));
        }
        let mass: f64 = v.iter().zip(rw).map(|(a, b)| a * b).sum();
        v.iter_mut().for_each(|x| *x /= mass);
        let v_eval = match spec.dv {
            Profile::Values { .. } => Some(grid.evaluator(&v)),
            _ => None,
        };

        let h = if kind == Kind::Disk {
            vec![0.0; v.len()]
        } else {
            match &spec.theta {
                ThetaMode::Explicit { h } => {
                    let mut h = profile_values(h, kind, nodes)?;
                    if let Some(bad) = h.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                        return Err(Error::NonPositiveDensity(format!("background density {} at node {bad}", h[bad])));
                    }
                    let m: f64 = h.iter().zip(&v).zip(rw).map(|((a, b), c)| a * b * c).sum();
                    h.iter_mut().for_each(|x| *x /= m);
                    h
                }
                ThetaMode::Fano => {
                    let logv: Vec<f64> = v.iter().map(|x| x.ln()).collect();
                    let ric = grid.lap(&logv);
                    let h: Vec<f64> = ric.iter().zip(&v).map(|(r, vi)| (1.0 - r) / vi).collect();
                    if let Some(bad) = h.iter().position(|x| *x < -1e-10) {
                        return Err(Error::NonPositiveDensity(format!(
                            "Ricci background {} at node {bad} (not Fano-compatible)",
                            h[bad]
                        )));
                    }
                    h.into_iter().map(|x| x.max(0.0)).collect()
                }
            }
        };

        if kind != Kind::Disk && !spec.degenerate_allowed && h.iter().all(|x| (x - 1.0).abs() < 1e-12) {
            return Err(Error::DegenerateBackground);
        }

        let (kernel, mismatch) = kernel_constants(kind);
        if mismatch > GREEN_TOLERANCE {
            return Err(Error::GreenResidualTooLarge {
                residual: mismatch,
                tolerance: GREEN_TOLERANCE,
            });
        }

        let weights: Vec<f64> = v.iter().zip(rw).map(|(a, b)| a * b).collect();
        let (w_pot, w_eval, c_theta) = if kind == Kind::Disk {
            (vec![0.0; v.len()], Evaluator::Zero, 0.0)
        } else {
            let src: Vec<f64> = v.iter().zip(&h).map(|(a, b)| a * b - 1.0).collect();
            let w = grid.lap_inv(&src);
            let c: f64 = w.iter().zip(&h).zip(&weights).map(|((a, b), c)| a * b * c).sum();
            let ev = if w.iter().all(|x| x.abs() < 1e-15) {
                Evaluator::Zero
            } else {
                grid.evaluator(&w)
            };
            (w, ev, c)
        };

        let mut geom = Self {
            spec,
            grid,
            v,
            h,
            weights,
            kernel,
            w_pot,
            w_eval,
            v_mass: mass,
            v_eval,
            c_theta,
            e0: 0.0,
            green_residual: mismatch,
        };
        let ones = Field(vec![1.0; geom.len()]);
        geom.e0 = geom.energy_shifted_raw(&ones);
        let residual = geom.check_green_residual();
        geom.green_residual = geom.green_residual.max(residual);
        if residual > GREEN_TOLERANCE {
            return Err(Error::GreenResidualTooLarge {
                residual,
                tolerance: GREEN_TOLERANCE,
            });
        }
        Ok(geom)
    }

    /// Build from a preset name with an optional resolution override.
    pub fn preset(name: &str, surface: Option<Surface>) -> Result<Self> {
        Self::build(GeometrySpec::preset(name, surface)?)
    }

    /// L¹ residual of `dd^c G(·,y) = δ_y − θ` at a few nodes, with the spike
    /// replaced by its band-limited projection.
    fn check_green_residual(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for &node in &[0, n / 3, n / 2 + 1] {
            let spike_ref: Vec<f64> = self.spike(node).iter().zip(&self.v).map(|(a, b)| a * b).collect();
            let projected: Vec<f64> = self
                .grid
                .project(&spike_ref)
                .iter()
                .zip(&self.v)
                .map(|(a, b)| a / b)
                .collect();
            let u = self.green_apply(&projected).expect("shape checked");
            let d = self.ddc(&u).expect("shape checked");
            let r: f64 = (0..n)
                .map(|i| (d[i] - (projected[i] - self.h[i])).abs() * self.weights[i])
                .sum();
            worst = worst.max(r);
        }
        worst
    }

    pub fn spec(&self) -> &GeometrySpec {
        &self.spec
    }

    pub fn kind(&self) -> Kind {
        self.spec.surface.kind()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self) -> &[Point] {
        self.grid.nodes()
    }

    /// Quadrature weights of `dV` (sum to one).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Quadrature weights of the reference measure.
    pub fn ref_weights(&self) -> &[f64] {
        self.grid.ref_weights()
    }

    /// Density of `dV` with respect to the reference measure.
    pub fn dv(&self) -> &[f64] {
        &self.v
    }

    /// Density of `θ` with respect to `dV` (zero on the disk, whose background
    /// is the boundary harmonic measure).
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn kernel_constants(&self) -> KernelConstants {
        self.kernel
    }

    /// Largest Green-operator residual observed at build time.
    pub fn green_residual(&self) -> f64 {
        self.green_residual
    }

    /// Energy of the base measure, `e₀ = E(dV)` on the shifted scale.
    pub fn e0(&self) -> f64 {
        self.e0
    }

    /// Raw energy of `θ` under the kernel normalized by `∬G dV dV = 0`.
    pub fn e_min_raw(&self) -> f64 {
        if self.kind() == Kind::Disk {
            0.0
        } else {
            -self.e0
        }
    }

    /// `∫W dθ` where `W = ∫G₀(·,y) dθ(y)`.
    pub fn c_theta(&self) -> f64 {
        self.c_theta
    }

    /// Background potential `W` on the grid.
    pub fn background_potential(&self) -> &[f64] {
        &self.w_pot
    }

    pub fn cell_radius(&self) -> f64 {
        self.grid.cell_radius()
    }

    /// Short hexadecimal digest of the spec and grid.
    pub fn fingerprint(&self) -> String {
        let text = format!("{:?}", self.spec);
        let mut hsh: u64 = 0xcbf29ce484222325;
        for b in text.bytes() {
            hsh ^= b as u64;
            hsh = hsh.wrapping_mul(0x100000001b3);
        }
        format!("{hsh:016x}")
    }

    fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// `∫ f dV`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, b)| a * b).sum()
    }

    /// One quadrature cell of unit mass at `node`, as a density w.r.t. `dV`.
    pub fn spike(&self, node: usize) -> Field {
        let mut f = vec![0.0; self.len()];
        f[node] = 1.0 / self.weights[node];
        Field(f)
    }

    /// Density of `dd^c u` with respect to `dV`.
    pub fn ddc(&self, u: &[f64]) -> Result<Field> {
        self.check(u)?;
        let l = self.grid.lap(u);
        Ok(Field(l.iter().zip(&self.v).map(|(a, b)| a / b).collect()))
    }

    /// Potential `u` with `dd^c u = ν − (∫ν) θ`; zero `dV`-mean on closed
    /// surfaces, zero boundary values on the disk.
    pub fn green_apply(&self, nu: &[f64]) -> Result<Field> {
        self.check(nu)?;
        let mass = self.integrate(nu);
        let src: Vec<f64> = (0..nu.len())
            .map(|i| self.v[i] * (nu[i] - mass * self.h[i]))
            .collect();
        let mut u = self.grid.lap_inv(&src);
        if self.kind() != Kind::Disk {
            let m = self.integrate(&u);
            u.iter_mut().for_each(|x| *x -= m);
        }
        Ok(Field(u))
    }

    /// `{f, g} = −∇f · J∇g` for the symplectic form `dV`.
    pub fn poisson_bracket(&self, f: &[f64], g: &[f64]) -> Result<Field> {
        self.check(f)?;
        self.check(g)?;
        let b = self.grid.bracket(f, g)?;
        Ok(Field(b.iter().zip(&self.v).map(|(a, v)| a / v).collect()))
    }

    /// Pseudo-spectral bracket with dealiasing, used by the Euler solver.
    pub fn poisson_bracket_dealiased(&self, f: &[f64], g: &[f64]) -> Result<Field> {
        self.check(f)?;
        self.check(g)?;
        let b = self.grid.bracket_dealiased(f, g)?;
        Ok(Field(b.iter().zip(&self.v).map(|(a, v)| a / v).collect()))
    }

    /// `‖f‖₋₁² = −∫ (dd^c)⁻¹f · f dV`, i.e. `Σ|f̂_k|²/λ_k` over the nonzero
    /// eigenvalues `λ_k` of `−dd^c`.
    pub fn hminus_norm(&self, f: &[f64]) -> Result<f64> {
        self.check(f)?;
        let mean = self.integrate(f);
        if self.kind() != Kind::Disk {
            let scale = f.iter().map(|x| x.abs()).fold(1.0, f64::max);
            if mean.abs() > 1e-8 * scale {
                return Err(Error::NonZeroMean(mean));
            }
        }
        let src: Vec<f64> = f.iter().zip(&self.v).map(|(a, b)| a * b).collect();
        Ok(self.grid.hminus_sq(&src).max(0.0).sqrt())
    }

    /// H⁻¹ distance between two densities.
    pub fn hminus_distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        let mut d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        if self.kind() != Kind::Disk {
            let m = self.integrate(&d);
            d.iter_mut().for_each(|x| *x -= m);
        }
        self.hminus_norm(&d)
    }

    /// Spectral decomposition `(λ_k, |f̂_k|²)` of a reference-density field.
    pub fn eigen_coefficients(&self, f: &[f64]) -> Vec<(f64, f64)> {
        self.grid.eigen_coefficients(f)
    }

    /// Heat-smooth a density (w.r.t. `dV`) for time `bandwidth²` of the area-one metric.
    pub fn smooth(&self, rho: &[f64], bandwidth: f64) -> Result<Field> {
        self.check(rho)?;
        let src: Vec<f64> = rho.iter().zip(&self.v).map(|(a, b)| a * b).collect();
        let out = self.grid.heat(&src, bandwidth * bandwidth)?;
        Ok(Field(out.iter().zip(&self.v).map(|(a, b)| a / b).collect()))
    }

    /// Smoothed empirical measure of `points`, as a density w.r.t. `dV`.
    /// The band-limited kernel rings slightly when the bandwidth is near the
    /// grid spacing, so negative undershoot is clipped to zero and the
    /// result rescaled to unit mass.
    pub fn deposit(&self, points: &[Point], bandwidth: f64) -> Field {
        let out = self.grid.deposit(points, bandwidth * bandwidth);
        let mut f: Vec<f64> = out.iter().zip(&self.v).map(|(a, b)| a / b).collect();
        if f.iter().any(|x| *x < 0.0) {
            f.iter_mut().for_each(|x| *x = x.max(0.0));
            let mass = self.integrate(&f);
            if mass > 0.0 {
                f.iter_mut().for_each(|x| *x /= mass);
            }
        }
        Field(f)
    }

    /// Fraction of spectral energy in the top third of the resolved band.
    pub fn spectral_tail(&self, f: &[f64]) -> f64 {
        self.grid.spectral_tail(f)
    }

    /// Band-limited projection (identity on grids that are already exact).
    pub fn project(&self, f: &[f64]) -> Field {
        Field(self.grid.project(f))
    }

    pub fn evaluator(&self, f: &[f64]) -> Evaluator {
        self.grid.evaluator(f)
    }

    /// Closed-form kernel with uniform background: `G₀ = κ·shape + c`.
    #[inline]
    pub fn kernel_base(&self, p: &Point, q: &Point) -> f64 {
        let s = match self.kind() {
            Kind::Sphere => sphere::kernel_shape(p, q),
            Kind::Torus => torus::kernel_shape(p, q),
            Kind::Disk => disk::kernel_shape(p, q),
        };
        self.kernel.kappa * s + self.kernel.offset
    }

    /// Gradient of [`Self::kernel_base`] in its first argument.
    pub fn kernel_base_gradient(&self, p: &Point, q: &Point) -> [f64; 3] {
        let k = self.kernel.kappa;
        match self.kind() {
            Kind::Sphere => {
                let g = sphere::kernel_shape_gradient(p, q);
                [k * g[0], k * g[1], k * g[2]]
            }
            Kind::Torus => {
                let g = torus::kernel_shape_gradient(p, q);
                [k * g[0], k * g[1], 0.0]
            }
            Kind::Disk => [0.0; 3],
        }
    }

    /// Background potential `W(p)` off the grid.
    #[inline]
    pub fn background_potential_at(&self, p: &Point) -> f64 {
        self.w_eval.value(p)
    }

    pub fn background_potential_gradient(&self, p: &Point) -> [f64; 3] {
        self.w_eval.gradient(p)
    }

    pub fn has_background_potential(&self) -> bool {
        !matches!(self.w_eval, Evaluator::Zero)
    }

    /// Green kernel `G_θ` with `dd^c G_θ(·,y) = δ_y − θ` and `∫G_θ(·,y) dθ = 0`;
    /// the Dirichlet kernel on the disk.
    pub fn kernel(&self, p: &Point, q: &Point) -> f64 {
        let g = self.kernel_base(p, q);
        if self.has_background_potential() {
            g - self.background_potential_at(p) - self.background_potential_at(q) + self.c_theta
        } else {
            g
        }
    }

    /// Robin function of the disk: `γ(x) = −½ lim_{y→x} (G(x,y) − κ log|x − y|)`.
    pub fn robin(&self, p: &Point) -> Result<f64> {
        if self.kind() != Kind::Disk {
            return Err(Error::UnsupportedGeometry("Robin function outside the disk".into()));
        }
        Ok(0.5 * self.kernel.kappa * disk::robin_shape(p))
    }

    /// Shifted energy `E(ρ) = −½ ∫ (u − ⟨u⟩_θ) ρ dV` with `dd^c u = ρ − θ`.
    pub(crate) fn energy_shifted_raw(&self, rho: &[f64]) -> f64 {
        let u = self.green_apply(rho).expect("shape checked");
        self.energy_from_potential(rho, &u)
    }

    pub(crate) fn energy_from_potential(&self, rho: &[f64], u: &[f64]) -> f64 {
        let mean_theta: f64 = if self.kind() == Kind::Disk {
            0.0
        } else {
            (0..u.len()).map(|i| u[i] * self.h[i] * self.weights[i]).sum()
        };
        -0.5 * (0..u.len())
            .map(|i| (u[i] - mean_theta) * rho[i] * self.weights[i])
            .sum::<f64>()
    }

    /// Density of `dV` with respect to the reference area measure at an
    /// arbitrary point.
    pub fn dv_at(&self, p: &Point) -> f64 {
        match (&self.spec.dv, &self.v_eval) {
            (_, Some(ev)) => ev.value(p),
            (Profile::Uniform, _) => 1.0 / self.v_mass,
            (Profile::Zonal { a }, _) => (1.0 + a * p[2]) / self.v_mass,
            (Profile::Bump { a }, _) => (1.0 + a * (2.0 * PI * p[0]).cos()) / self.v_mass,
            (Profile::Values { .. }, None) => unreachable!("evaluator built for tabulated profiles"),
        }
    }

    /// Upper bound of `dv_at` over the surface (grid maximum plus slack for
    /// tabulated profiles).
    pub fn dv_max(&self) -> f64 {
        let m = self.v.iter().cloned().fold(0.0, f64::max);
        match self.spec.dv {
            Profile::Uniform => 1.0 / self.v_mass,
            Profile::Zonal { a } | Profile::Bump { a } => (1.0 + a.abs()) / self.v_mass,
            Profile::Values { .. } => 1.25 * m,
        }
    }

    /// Distance below which two points count as colliding.
    pub fn collision_floor(&self) -> f64 {
        1e-9
    }

    /// Distance in the chart (chordal on the sphere, periodic on the torus).
    pub fn distance(&self, p: &Point, q: &Point) -> f64 {
        match self.kind() {
            Kind::Torus => {
                let dx = wrap_half(p[0] - q[0]);
                let dy = wrap_half(p[1] - q[1]);
                (dx * dx + dy * dy).sqrt()
            }
            _ => dist2(p, q).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests;
