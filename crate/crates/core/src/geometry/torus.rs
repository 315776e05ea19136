//! Unit-square flat torus on an `n × n` grid with FFT-based operators.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Evaluator, Point, SpectralGrid};
use crate::error::Result;

pub struct TorusGrid {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    nodes: Vec<Point>,
    weights: Vec<f64>,
}

/// Signed wavenumber of FFT index `i` on a length-`n` axis.
pub(crate) fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl TorusGrid {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut nodes = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                nodes.push([ix as f64 / n as f64, iy as f64 / n as f64, 0.0]);
            }
        }
        let weights = vec![1.0 / (n * n) as f64; n * n];
        Self {
            n,
            fwd,
            inv,
            nodes,
            weights,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inv } else { &self.fwd };
        plan.process(data);
        transpose(data, n);
        plan.process(data);
        transpose(data, n);
    }

    /// Fourier coefficients `ĉ_k = n⁻² Σ f e^{−2πik·x}`, row-major in `(ky, kx)`.
    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let scale = 1.0 / (self.n * self.n) as f64;
        let mut data: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v * scale, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    pub fn inverse_complex(&self, c: &[Complex64]) -> Vec<Complex64> {
        let mut data = c.to_vec();
        self.transform(&mut data, true);
        data
    }

    pub fn inverse(&self, c: &[Complex64]) -> Vec<f64> {
        self.inverse_complex(c).into_iter().map(|z| z.re).collect()
    }

    /// `(kx, ky)` for coefficient index `idx`, with Nyquist flagged.
    pub fn mode(&self, idx: usize) -> (i64, i64, bool) {
        let n = self.n;
        let (iy, ix) = (idx / n, idx % n);
        let nyq = n % 2 == 0 && (ix == n / 2 || iy == n / 2);
        (wavenumber(ix, n), wavenumber(iy, n), nyq)
    }

    /// Eigenvalue of the reference `dd^c` on mode `(kx, ky)`.
    pub fn ddc_eigenvalue(kx: i64, ky: i64) -> f64 {
        -0.5 * PI * (kx * kx + ky * ky) as f64
    }

    /// `∂_x f + i ∂_y f` evaluated on the grid from coefficients.
    pub fn gradient_packed(&self, c: &[Complex64]) -> Vec<Complex64> {
        let mut d = vec![Complex64::new(0.0, 0.0); c.len()];
        for (idx, ck) in c.iter().enumerate() {
            let (kx, ky, nyq) = self.mode(idx);
            if nyq {
                continue;
            }
            let ikx = Complex64::new(0.0, 2.0 * PI * kx as f64);
            let iky = Complex64::new(0.0, 2.0 * PI * ky as f64);
            // ∂x ↦ ikx ĉ, and i·∂y ↦ i·iky ĉ
            d[idx] = ikx * ck + Complex64::new(0.0, 1.0) * iky * ck;
        }
        self.inverse_complex(&d)
    }

    /// Zero every mode with `max(|kx|,|ky|) > n/3`.
    pub fn dealias(&self, c: &mut [Complex64]) {
        let cut = self.n as i64 / 3;
        for (idx, ck) in c.iter_mut().enumerate() {
            let (kx, ky, _) = self.mode(idx);
            if kx.abs() > cut || ky.abs() > cut {
                *ck = Complex64::new(0.0, 0.0);
            }
        }
    }

    fn map_modes(&self, f: &[f64], g: impl Fn(i64, i64, bool) -> f64) -> Vec<f64> {
        let mut c = self.forward(f);
        for (idx, ck) in c.iter_mut().enumerate() {
            let (kx, ky, nyq) = self.mode(idx);
            *ck *= g(kx, ky, nyq);
        }
        self.inverse(&c)
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Minimal image of a coordinate difference into `[−½, ½)`.
pub fn wrap_half(d: f64) -> f64 {
    d - (d + 0.5).floor()
}

/// Wrap into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

const NOME: f64 = 0.043_213_918_263_772_25; // e^{−π}

/// `θ₁(πz)` and `θ₁'(πz)` for the square lattice, `z` reduced to the unit cell.
fn theta1(x: f64, y: f64) -> (Complex64, Complex64) {
    let u = Complex64::new(PI * x, PI * y);
    let w = (Complex64::new(0.0, 1.0) * u).exp();
    let w2 = w * w;
    let wi = 1.0 / w;
    let wi2 = wi * wi;
    let mut wp = w;
    let mut wm = wi;
    let mut th = Complex64::new(0.0, 0.0);
    let mut dth = Complex64::new(0.0, 0.0);
    for k in 0..6 {
        let nf = k as f64 + 0.5;
        let coef = 2.0 * NOME.powf(nf * nf) * if k % 2 == 0 { 1.0 } else { -1.0 };
        let odd = (2 * k + 1) as f64;
        // sin(ku) = (w^k − w^{−k})/(2i), cos(ku) = (w^k + w^{−k})/2
        th += coef * (wp - wm) / Complex64::new(0.0, 2.0);
        dth += coef * odd * (wp + wm) * 0.5;
        wp *= w2;
        wm *= wi2;
    }
    (th, dth)
}

/// Shape of the torus Green kernel before fitting: `log|θ₁(πz)| − πy²`.
pub fn kernel_shape(p: &Point, q: &Point) -> f64 {
    let dx = wrap_half(p[0] - q[0]);
    let dy = wrap_half(p[1] - q[1]);
    let (th, _) = theta1(dx, dy);
    th.norm().ln() - PI * dy * dy
}

/// Gradient in the first argument of [`kernel_shape`].
pub fn kernel_shape_gradient(p: &Point, q: &Point) -> [f64; 2] {
    let dx = wrap_half(p[0] - q[0]);
    let dy = wrap_half(p[1] - q[1]);
    let (th, dth) = theta1(dx, dy);
    let r = dth / th * PI;
    [r.re, -r.im - 2.0 * PI * dy]
}

impl SpectralGrid for TorusGrid {
    fn len(&self) -> usize {
        self.n * self.n
    }

    fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    fn ref_weights(&self) -> &[f64] {
        &self.weights
    }

    fn lap(&self, u: &[f64]) -> Vec<f64> {
        self.map_modes(u, |kx, ky, _| Self::ddc_eigenvalue(kx, ky))
    }

    fn lap_inv(&self, f: &[f64]) -> Vec<f64> {
        self.map_modes(f, |kx, ky, _| {
            if kx == 0 && ky == 0 {
                0.0
            } else {
                1.0 / Self::ddc_eigenvalue(kx, ky)
            }
        })
    }

    fn hminus_sq(&self, f: &[f64]) -> f64 {
        let c = self.forward(f);
        c.iter()
            .enumerate()
            .filter_map(|(idx, ck)| {
                let (kx, ky, _) = self.mode(idx);
                (kx != 0 || ky != 0).then(|| ck.norm_sqr() / -Self::ddc_eigenvalue(kx, ky))
            })
            .sum()
    }

    fn heat(&self, f: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(self.map_modes(f, |kx, ky, _| {
            (-t * 4.0 * PI * PI * (kx * kx + ky * ky) as f64).exp()
        }))
    }

    fn bracket(&self, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        let df = self.gradient_packed(&self.forward(f));
        let dg = self.gradient_packed(&self.forward(g));
        Ok(df
            .iter()
            .zip(&dg)
            .map(|(a, b)| a.re * b.im - a.im * b.re)
            .collect())
    }

    fn bracket_dealiased(&self, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        let mut cf = self.forward(f);
        let mut cg = self.forward(g);
        self.dealias(&mut cf);
        self.dealias(&mut cg);
        let df = self.gradient_packed(&cf);
        let dg = self.gradient_packed(&cg);
        let prod: Vec<f64> = df
            .iter()
            .zip(&dg)
            .map(|(a, b)| a.re * b.im - a.im * b.re)
            .collect();
        let mut c = self.forward(&prod);
        self.dealias(&mut c);
        Ok(self.inverse(&c))
    }

    fn deposit(&self, points: &[Point], t: f64) -> Vec<f64> {
        let n = self.n;
        let mut c = vec![Complex64::new(0.0, 0.0); n * n];
        let mut ex = vec![Complex64::new(0.0, 0.0); n];
        let mut ey = vec![Complex64::new(0.0, 0.0); n];
        let inv_n = 1.0 / points.len() as f64;
        for p in points {
            for i in 0..n {
                let k = wavenumber(i, n) as f64;
                ex[i] = Complex64::from_polar(1.0, -2.0 * PI * k * p[0]);
                ey[i] = Complex64::from_polar(1.0, -2.0 * PI * k * p[1]);
            }
            for iy in 0..n {
                let row = &mut c[iy * n..(iy + 1) * n];
                let e = ey[iy] * inv_n;
                for ix in 0..n {
                    row[ix] += e * ex[ix];
                }
            }
        }
        for (idx, ck) in c.iter_mut().enumerate() {
            let (kx, ky, nyq) = self.mode(idx);
            if nyq {
                *ck = Complex64::new(0.0, 0.0);
            } else {
                *ck *= (-t * 4.0 * PI * PI * (kx * kx + ky * ky) as f64).exp();
            }
        }
        self.inverse(&c)
    }

    fn evaluator(&self, f: &[f64]) -> Evaluator {
        let c = self.forward(f);
        let scale = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut modes = Vec::new();
        for (idx, ck) in c.iter().enumerate() {
            let (kx, ky, nyq) = self.mode(idx);
            if !nyq && ck.norm() > 1e-15 * scale {
                modes.push((kx, ky, *ck));
            }
        }
        Evaluator::Torus(modes)
    }

    fn spectral_tail(&self, f: &[f64]) -> f64 {
        let c = self.forward(f);
        let cut = self.n as i64 / 3;
        let (mut hi, mut all) = (0.0, 0.0);
        for (idx, ck) in c.iter().enumerate() {
            let (kx, ky, _) = self.mode(idx);
            all += ck.norm_sqr();
            if kx.abs() > cut || ky.abs() > cut {
                hi += ck.norm_sqr();
            }
        }
        if all == 0.0 {
            0.0
        } else {
            hi / all
        }
    }

    fn project(&self, f: &[f64]) -> Vec<f64> {
        f.to_vec()
    }

    fn cell_radius(&self) -> f64 {
        1.0 / self.n as f64
    }

    fn eigen_coefficients(&self, f: &[f64]) -> Vec<(f64, f64)> {
        let c = self.forward(f);
        c.iter()
            .enumerate()
            .map(|(idx, ck)| {
                let (kx, ky, _) = self.mode(idx);
                (-Self::ddc_eigenvalue(kx, ky), ck.norm_sqr())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_kernel_is_periodic() {
        let p = [0.13, 0.27, 0.0];
        let q = [0.71, 0.92, 0.0];
        let a = kernel_shape(&p, &q);
        let b = kernel_shape(&[p[0] + 1.0, p[1] - 1.0, 0.0], &q);
        assert!((a - b).abs() < 1e-13);
        // continuity across the cell edge in y
        let e1 = kernel_shape(&[0.3, 0.5 - 1e-9, 0.0], &[0.0, 0.0, 0.0]);
        let e2 = kernel_shape(&[0.3, 0.5 + 1e-9, 0.0], &[0.0, 0.0, 0.0]);
        assert!((e1 - e2).abs() < 1e-7);
    }

    #[test]
    fn kernel_gradient_matches_finite_difference() {
        let q = [0.4, 0.1, 0.0];
        let p = [0.05, 0.83, 0.0];
        let g = kernel_shape_gradient(&p, &q);
        let h = 1e-6;
        let fx = (kernel_shape(&[p[0] + h, p[1], 0.0], &q) - kernel_shape(&[p[0] - h, p[1], 0.0], &q)) / (2.0 * h);
        let fy = (kernel_shape(&[p[0], p[1] + h, 0.0], &q) - kernel_shape(&[p[0], p[1] - h, 0.0], &q)) / (2.0 * h);
        assert!((g[0] - fx).abs() < 1e-6 && (g[1] - fy).abs() < 1e-6);
    }

    #[test]
    fn fft_roundtrip() {
        let g = TorusGrid::new(8);
        let f: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64 - 3.0).collect();
        let back = g.inverse(&g.forward(&f));
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
