//! Unit sphere with a Gauss–Legendre × uniform-longitude grid and a
//! band-limited spherical-harmonic transform.
//!
//! Basis functions are `N_l^m(μ) e^{imφ}` with `∫ (N_l^m)² dμ/2 = 1`, so they
//! are orthonormal for the normalized area measure `dμ dφ / 4π`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Evaluator, Point, SpectralGrid};
use crate::error::Result;
use crate::quadrature::gauss_legendre;

pub struct SphereGrid {
    lmax: usize,
    nlat: usize,
    nlon: usize,
    mu: Vec<f64>,
    gw: Vec<f64>,
    p: Vec<f64>,
    dp: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    nodes: Vec<Point>,
    weights: Vec<f64>,
}

/// Offset of `(m, l)` in the triangular coefficient layout.
#[inline]
pub fn coeff_index(lmax: usize, m: usize, l: usize) -> usize {
    m * (lmax + 1) - m * m.saturating_sub(1) / 2 + (l - m)
}

pub fn coeff_count(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// All `N_l^m(μ)` for `0 ≤ m ≤ l ≤ lmax`, in [`coeff_index`] layout.
pub fn legendre_all(lmax: usize, mu: f64) -> Vec<f64> {
    let mut out = vec![0.0; coeff_count(lmax)];
    let s = (1.0 - mu * mu).max(0.0).sqrt();
    let mut pmm = 1.0;
    for m in 0..=lmax {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        let base = coeff_index(lmax, m, m);
        out[base] = pmm;
        if m < lmax {
            let mut p_prev = pmm;
            let mut p = ((2 * m + 3) as f64).sqrt() * mu * pmm;
            out[base + 1] = p;
            for l in m + 2..=lmax {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let lm1 = lf - 1.0;
                let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
                let next = a * (mu * p - b * p_prev);
                p_prev = p;
                p = next;
                out[base + (l - m)] = p;
            }
        }
    }
    out
}

/// `(1 − μ²) dN_l^m/dμ` from the values of [`legendre_all`].
pub fn legendre_sin_derivative(lmax: usize, mu: f64, p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; coeff_count(lmax)];
    for m in 0..=lmax {
        for l in m..=lmax {
            let lf = l as f64;
            let mut v = -lf * mu * p[coeff_index(lmax, m, l)];
            if l > m {
                let c = ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - (m * m) as f64)).sqrt();
                v += c * p[coeff_index(lmax, m, l - 1)];
            }
            out[coeff_index(lmax, m, l)] = v;
        }
    }
    out
}

impl SphereGrid {
    pub fn new(lmax: usize) -> Self {
        let nlat = (3 * lmax) / 2 + 2;
        let nlon = 3 * lmax + 2;
        let (mu, w) = gauss_legendre(nlat);
        let gw: Vec<f64> = w.iter().map(|v| 0.5 * v).collect();
        let nc = coeff_count(lmax);
        let mut p = vec![0.0; nc * nlat];
        let mut dp = vec![0.0; nc * nlat];
        for (j, &m) in mu.iter().enumerate() {
            let pj = legendre_all(lmax, m);
            let dj = legendre_sin_derivative(lmax, m, &pj);
            for c in 0..nc {
                p[c * nlat + j] = pj[c];
                dp[c * nlat + j] = dj[c] / (1.0 - m * m);
            }
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(nlon);
        let inv = planner.plan_fft_inverse(nlon);
        let mut nodes = Vec::with_capacity(nlat * nlon);
        let mut weights = Vec::with_capacity(nlat * nlon);
        for j in 0..nlat {
            let s = (1.0 - mu[j] * mu[j]).sqrt();
            for k in 0..nlon {
                let phi = 2.0 * PI * k as f64 / nlon as f64;
                nodes.push([s * phi.cos(), s * phi.sin(), mu[j]]);
                weights.push(gw[j] / nlon as f64);
            }
        }
        Self {
            lmax,
            nlat,
            nlon,
            mu,
            gw,
            p,
            dp,
            fwd,
            inv,
            nodes,
            weights,
        }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nlat, self.nlon)
    }

    pub fn latitudes(&self) -> &[f64] {
        &self.mu
    }

    /// Per-latitude Fourier coefficients `F_j(m)` for `0 ≤ m ≤ lmax`.
    fn rows_forward(&self, f: &[f64]) -> Vec<Complex64> {
        let (nlat, nlon, lmax) = (self.nlat, self.nlon, self.lmax);
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        let mut out = vec![Complex64::new(0.0, 0.0); nlat * (lmax + 1)];
        let s = 1.0 / nlon as f64;
        for j in 0..nlat {
            for m in 0..=lmax {
                out[m * nlat + j] = buf[j * nlon + m] * s;
            }
        }
        out
    }

    fn rows_inverse(&self, rows: &[Complex64]) -> Vec<f64> {
        let (nlat, nlon, lmax) = (self.nlat, self.nlon, self.lmax);
        let mut buf = vec![Complex64::new(0.0, 0.0); nlat * nlon];
        for j in 0..nlat {
            for m in 0..=lmax {
                let v = rows[m * nlat + j];
                buf[j * nlon + m] += if m == 0 { Complex64::new(v.re, 0.0) } else { v };
                if m > 0 {
                    buf[j * nlon + nlon - m] += v.conj();
                }
            }
        }
        self.inv.process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Spectral coefficients `a_l^m`, `m ≥ 0`.
    pub fn analysis(&self, f: &[f64]) -> Vec<Complex64> {
        let rows = self.rows_forward(f);
        let (nlat, lmax) = (self.nlat, self.lmax);
        let mut a = vec![Complex64::new(0.0, 0.0); coeff_count(lmax)];
        for m in 0..=lmax {
            let r = &rows[m * nlat..(m + 1) * nlat];
            for l in m..=lmax {
                let c = coeff_index(lmax, m, l);
                let pl = &self.p[c * nlat..(c + 1) * nlat];
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..nlat {
                    acc += r[j] * (self.gw[j] * pl[j]);
                }
                a[c] = acc;
            }
        }
        a
    }

    fn synthesis_with(&self, a: &[Complex64], table: &[f64]) -> Vec<f64> {
        let (nlat, lmax) = (self.nlat, self.lmax);
        let mut rows = vec![Complex64::new(0.0, 0.0); nlat * (lmax + 1)];
        for m in 0..=lmax {
            let r = &mut rows[m * nlat..(m + 1) * nlat];
            for l in m..=lmax {
                let c = coeff_index(lmax, m, l);
                if a[c] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let pl = &table[c * nlat..(c + 1) * nlat];
                for j in 0..nlat {
                    r[j] += a[c] * pl[j];
                }
            }
        }
        self.rows_inverse(&rows)
    }

    pub fn synthesis(&self, a: &[Complex64]) -> Vec<f64> {
        self.synthesis_with(a, &self.p)
    }

    /// Grid values of `∂_φ f` and `∂_μ f` for a band-limited `f`.
    pub fn derivatives(&self, a: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut aphi = a.to_vec();
        for m in 0..=self.lmax {
            for l in m..=self.lmax {
                let c = coeff_index(self.lmax, m, l);
                aphi[c] *= Complex64::new(0.0, m as f64);
            }
        }
        (self.synthesis(&aphi), self.synthesis_with(a, &self.dp))
    }

    fn map_degrees(&self, f: &[f64], g: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut a = self.analysis(f);
        for m in 0..=self.lmax {
            for l in m..=self.lmax {
                a[coeff_index(self.lmax, m, l)] *= g(l);
            }
        }
        self.synthesis(&a)
    }

    pub fn ddc_eigenvalue(l: usize) -> f64 {
        -0.5 * (l * (l + 1)) as f64
    }

    fn bracket_from_coeffs(&self, af: &[Complex64], ag: &[Complex64]) -> Vec<f64> {
        let (fp, fm) = self.derivatives(af);
        let (gp, gm) = self.derivatives(ag);
        (0..fp.len())
            .map(|i| 4.0 * PI * (fp[i] * gm[i] - fm[i] * gp[i]))
            .collect()
    }
}

impl SpectralGrid for SphereGrid {
    fn len(&self) -> usize {
        self.nlat * self.nlon
    }

    fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    fn ref_weights(&self) -> &[f64] {
        &self.weights
    }

    fn lap(&self, u: &[f64]) -> Vec<f64> {
        self.map_degrees(u, Self::ddc_eigenvalue)
    }

    fn lap_inv(&self, f: &[f64]) -> Vec<f64> {
        self.map_degrees(f, |l| if l == 0 { 0.0 } else { 1.0 / Self::ddc_eigenvalue(l) })
    }

    fn hminus_sq(&self, f: &[f64]) -> f64 {
        self.eigen_coefficients(f)
            .into_iter()
            .filter(|(lam, _)| *lam > 0.0)
            .map(|(lam, c2)| c2 / lam)
            .sum()
    }

    fn heat(&self, f: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(self.map_degrees(f, |l| (-t * 4.0 * PI * (l * (l + 1)) as f64).exp()))
    }

    fn bracket(&self, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        Ok(self.bracket_from_coeffs(&self.analysis(f), &self.analysis(g)))
    }

    fn bracket_dealiased(&self, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        let b = self.bracket_from_coeffs(&self.analysis(f), &self.analysis(g));
        Ok(self.synthesis(&self.analysis(&b)))
    }

    fn deposit(&self, points: &[Point], t: f64) -> Vec<f64> {
        let lmax = self.lmax;
        let mut a = vec![Complex64::new(0.0, 0.0); coeff_count(lmax)];
        let inv_n = 1.0 / points.len() as f64;
        for p in points {
            let phi = p[1].atan2(p[0]);
            let pl = legendre_all(lmax, p[2].clamp(-1.0, 1.0));
            for m in 0..=lmax {
                let e = Complex64::from_polar(inv_n, -(m as f64) * phi);
                for l in m..=lmax {
                    let c = coeff_index(lmax, m, l);
                    a[c] += e * pl[c];
                }
            }
        }
        for m in 0..=lmax {
            for l in m..=lmax {
                a[coeff_index(lmax, m, l)] *= (-t * 4.0 * PI * (l * (l + 1)) as f64).exp();
            }
        }
        self.synthesis(&a)
    }

    fn evaluator(&self, f: &[f64]) -> Evaluator {
        let a = self.analysis(f);
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut modes = Vec::new();
        for m in 0..=self.lmax {
            let mut ls = Vec::new();
            for l in m..=self.lmax {
                let c = a[coeff_index(self.lmax, m, l)];
                if c.norm() > 1e-15 * scale {
                    ls.push((l, c));
                }
            }
            if !ls.is_empty() {
                modes.push((m, ls));
            }
        }
        Evaluator::Sphere { modes }
    }

    fn spectral_tail(&self, f: &[f64]) -> f64 {
        let cut = 2 * self.lmax / 3;
        let (mut hi, mut all) = (0.0, 0.0);
        for (l, m, c2) in degree_power(self, f) {
            let w = if m == 0 { 1.0 } else { 2.0 };
            all += w * c2;
            if l > cut {
                hi += w * c2;
            }
        }
        if all == 0.0 {
            0.0
        } else {
            hi / all
        }
    }

    fn project(&self, f: &[f64]) -> Vec<f64> {
        self.synthesis(&self.analysis(f))
    }

    fn cell_radius(&self) -> f64 {
        // grid spacing in units of the area-one metric
        (PI / self.nlat as f64) / (4.0 * PI).sqrt()
    }

    fn eigen_coefficients(&self, f: &[f64]) -> Vec<(f64, f64)> {
        degree_power(self, f)
            .into_iter()
            .map(|(l, m, c2)| {
                let w = if m == 0 { 1.0 } else { 2.0 };
                (-Self::ddc_eigenvalue(l), w * c2)
            })
            .collect()
    }
}

fn degree_power(g: &SphereGrid, f: &[f64]) -> Vec<(usize, usize, f64)> {
    let a = g.analysis(f);
    let mut out = Vec::with_capacity(a.len());
    for m in 0..=g.lmax {
        for l in m..=g.lmax {
            out.push((l, m, a[coeff_index(g.lmax, m, l)].norm_sqr()));
        }
    }
    out
}

/// Evaluate `Σ Re[c a_l^m N_l^m(μ) e^{imφ}]` (with `c = 2` for `m > 0`) and its
/// round-metric ambient gradient at a unit vector.
pub(crate) fn eval_modes(modes: &[(usize, Vec<(usize, Complex64)>)], p: &Point, with_grad: bool) -> (f64, [f64; 3]) {
    let lmax = modes
        .iter()
        .flat_map(|(_, ls)| ls.iter().map(|(l, _)| *l))
        .max()
        .unwrap_or(0);
    let mu = p[2].clamp(-1.0, 1.0);
    let s = (1.0 - mu * mu).max(1e-24).sqrt();
    let mu = mu.signum() * (1.0 - s * s).sqrt();
    let phi = p[1].atan2(p[0]);
    let pl = legendre_all(lmax, mu);
    let dl = if with_grad {
        legendre_sin_derivative(lmax, mu, &pl)
    } else {
        Vec::new()
    };
    let mut val = 0.0;
    let (mut g_north, mut g_east) = (0.0, 0.0);
    for (m, ls) in modes {
        let e = Complex64::from_polar(if *m == 0 { 1.0 } else { 2.0 }, *m as f64 * phi);
        for (l, c) in ls {
            let idx = coeff_index(lmax, *m, *l);
            let z = c * e;
            val += z.re * pl[idx];
            if with_grad {
                g_north += z.re * dl[idx] / s;
                g_east += (z * Complex64::new(0.0, *m as f64)).re * pl[idx] / s;
            }
        }
    }
    let (sp, cp) = phi.sin_cos();
    let east = [-sp, cp, 0.0];
    let north = [-mu * cp, -mu * sp, s];
    let grad = [
        g_north * north[0] + g_east * east[0],
        g_north * north[1] + g_east * east[1],
        g_north * north[2] + g_east * east[2],
    ];
    (val, grad)
}

/// Shape of the round-sphere Green kernel before fitting: `log((1 − x·y)/2)`.
pub fn kernel_shape(p: &Point, q: &Point) -> f64 {
    let d = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    (0.5 * (1.0 - d)).ln()
}

/// Ambient gradient in the first argument of [`kernel_shape`] (radial part included).
pub fn kernel_shape_gradient(p: &Point, q: &Point) -> [f64; 3] {
    let d = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    let s = -1.0 / (1.0 - d);
    [s * q[0], s * q[1], s * q[2]]
}
