//! Unit disk on a polar Chebyshev × Fourier grid with Dirichlet operators.
//!
//! The radial direction uses the Chebyshev points of `[−1, 1]` with an odd
//! count so that `r = 0` is never a node; each Fourier mode is folded onto
//! `r > 0` using the parity `u_m(−r) = (−1)^m u_m(r)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Evaluator, Point, SpectralGrid};
use crate::error::{Error, Result};
use crate::quadrature::chebyshev_diff;

pub struct DiskGrid {
    nr: usize,
    nphi: usize,
    r: Vec<f64>,
    ops: Vec<DMatrix<f64>>,
    inverses: Vec<DMatrix<f64>>,
    /// Chebyshev coefficients of the interpolant through the interior line points.
    cheb_fit: DMatrix<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    nodes: Vec<Point>,
    weights: Vec<f64>,
}

impl DiskGrid {
    pub fn new(nr: usize, nphi: usize) -> Result<Self> {
        if nr < 4 || nphi < 4 {
            return Err(Error::InvalidResolution(format!("disk grid {nr}x{nphi} too small")));
        }
        let cheb_m = 2 * nr + 1;
        let (x, d) = chebyshev_diff(cheb_m);
        let n = cheb_m + 1;
        let dm = DMatrix::from_row_slice(n, n, &d);
        let d2 = &dm * &dm;
        let r: Vec<f64> = (1..=nr).map(|j| x[j]).collect();
        let mmax = nphi / 2;
        let mut ops = Vec::with_capacity(mmax + 1);
        let mut inverses = Vec::with_capacity(mmax + 1);
        for m in 0..=mmax {
            let p = if m % 2 == 0 { 1.0 } else { -1.0 };
            let mut a = DMatrix::zeros(nr, nr);
            for i in 0..nr {
                let (gi, ri) = (i + 1, r[i]);
                for j in 0..nr {
                    let gj = j + 1;
                    let d1 = dm[(gi, gj)] + p * dm[(gi, cheb_m - gj)];
                    let dd = d2[(gi, gj)] + p * d2[(gi, cheb_m - gj)];
                    a[(i, j)] = dd + d1 / ri;
                }
                a[(i, i)] -= (m * m) as f64 / (ri * ri);
            }
            a *= 0.125;
            let ainv = a
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::InvalidResolution(format!("singular radial operator m={m}")))?;
            ops.push(a);
            inverses.push(ainv);
        }
        let ws = radial_weights(&r)?;
        let line: Vec<f64> = (0..2 * nr).map(|j| if j < nr { r[j] } else { -r[2 * nr - 1 - j] }).collect();
        let vander = DMatrix::from_fn(2 * nr, 2 * nr, |j, k| (k as f64 * line[j].acos()).cos());
        let cheb_fit = vander
            .try_inverse()
            .ok_or_else(|| Error::InvalidResolution("singular Chebyshev fit".into()))?;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(nphi);
        let inv = planner.plan_fft_inverse(nphi);
        let mut nodes = Vec::with_capacity(nr * nphi);
        let mut weights = Vec::with_capacity(nr * nphi);
        for j in 0..nr {
            for k in 0..nphi {
                let phi = 2.0 * PI * k as f64 / nphi as f64;
                nodes.push([r[j] * phi.cos(), r[j] * phi.sin(), 0.0]);
                weights.push(ws[j] / nphi as f64);
            }
        }
        Ok(Self {
            nr,
            nphi,
            r,
            ops,
            inverses,
            cheb_fit,
            fwd,
            inv,
            nodes,
            weights,
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nr, self.nphi)
    }

    fn mode_of(&self, i: usize) -> usize {
        i.min(self.nphi - i)
    }

    /// Ring Fourier coefficients, laid out `[angular index][radial]`.
    fn rings_forward(&self, f: &[f64]) -> Vec<Complex64> {
        let (nr, nphi) = (self.nr, self.nphi);
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v / nphi as f64, 0.0)).collect();
        self.fwd.process(&mut buf);
        let mut out = vec![Complex64::new(0.0, 0.0); nr * nphi];
        for j in 0..nr {
            for i in 0..nphi {
                out[i * nr + j] = buf[j * nphi + i];
            }
        }
        out
    }

    fn rings_inverse(&self, c: &[Complex64]) -> Vec<f64> {
        let (nr, nphi) = (self.nr, self.nphi);
        let mut buf = vec![Complex64::new(0.0, 0.0); nr * nphi];
        for j in 0..nr {
            for i in 0..nphi {
                buf[j * nphi + i] = c[i * nr + j];
            }
        }
        self.inv.process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    fn apply(&self, f: &[f64], mats: &[DMatrix<f64>]) -> Vec<f64> {
        let nr = self.nr;
        let c = self.rings_forward(f);
        let mut out = vec![Complex64::new(0.0, 0.0); c.len()];
        for i in 0..self.nphi {
            let a = &mats[self.mode_of(i)];
            let col = &c[i * nr..(i + 1) * nr];
            let dst = &mut out[i * nr..(i + 1) * nr];
            for row in 0..nr {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..nr {
                    acc += col[k] * a[(row, k)];
                }
                dst[row] = acc;
            }
        }
        self.rings_inverse(&out)
    }
}

fn radial_weights(r: &[f64]) -> Result<Vec<f64>> {
    let n = r.len();
    let mut a = DMatrix::zeros(n, n);
    let mut b = nalgebra::DVector::zeros(n);
    for k in 0..n {
        for (j, rj) in r.iter().enumerate() {
            let t = 2.0 * rj * rj - 1.0;
            a[(k, j)] = (k as f64 * t.clamp(-1.0, 1.0).acos()).cos();
        }
        b[k] = if k % 2 == 0 { 1.0 / (1.0 - (k * k) as f64) } else { 0.0 };
    }
    let w = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidResolution("singular radial quadrature".into()))?;
    Ok(w.iter().copied().collect())
}

/// Disk Green kernel shape `log(|x − y| / |1 − x ȳ|)`.
pub fn kernel_shape(p: &Point, q: &Point) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    // 1 − x ȳ with x = p, y = q as complex numbers
    let re = 1.0 - (p[0] * q[0] + p[1] * q[1]);
    let im = -(p[1] * q[0] - p[0] * q[1]);
    0.5 * ((dx * dx + dy * dy) / (re * re + im * im)).ln()
}

/// `log(1 − |x|²)`: the diagonal of the regular part, up to the kernel scale.
pub fn robin_shape(p: &Point) -> f64 {
    (1.0 - p[0] * p[0] - p[1] * p[1]).ln()
}

impl SpectralGrid for DiskGrid {
    fn len(&self) -> usize {
        self.nr * self.nphi
    }

    fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    fn ref_weights(&self) -> &[f64] {
        &self.weights
    }

    fn lap(&self, u: &[f64]) -> Vec<f64> {
        self.apply(u, &self.ops)
    }

    fn lap_inv(&self, f: &[f64]) -> Vec<f64> {
        self.apply(f, &self.inverses)
    }

    fn hminus_sq(&self, f: &[f64]) -> f64 {
        let u = self.lap_inv(f);
        -u.iter()
            .zip(f)
            .zip(&self.weights)
            .map(|((a, b), w)| a * b * w)
            .sum::<f64>()
    }

    fn heat(&self, _f: &[f64], _t: f64) -> Result<Vec<f64>> {
        Err(Error::UnsupportedGeometry("heat smoothing of fields on the disk".into()))
    }

    fn bracket(&self, _f: &[f64], _g: &[f64]) -> Result<Vec<f64>> {
        Err(Error::UnsupportedGeometry("Poisson bracket on the disk".into()))
    }

    fn bracket_dealiased(&self, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        self.bracket(f, g)
    }

    fn deposit(&self, points: &[Point], t: f64) -> Vec<f64> {
        // heat time t in the area-one metric ↔ Euclidean variance 2πt
        let var = 2.0 * PI * t;
        let mut out = vec![0.0; self.len()];
        let mut bump = vec![0.0; self.len()];
        for p in points {
            let mut mass = 0.0;
            for (i, x) in self.nodes.iter().enumerate() {
                let d2 = (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2);
                bump[i] = (-0.5 * d2 / var).exp();
                mass += bump[i] * self.weights[i];
            }
            if mass > 0.0 {
                let s = 1.0 / (mass * points.len() as f64);
                for (o, b) in out.iter_mut().zip(&bump) {
                    *o += b * s;
                }
            }
        }
        out
    }

    fn evaluator(&self, f: &[f64]) -> Evaluator {
        let c = self.rings_forward(f);
        let nodes: Vec<f64> = (1..=self.nr)
            .map(|j| self.r[j - 1])
            .chain((1..=self.nr).map(|j| -self.r[self.nr - j]))
            .collect();
        let mut modes = Vec::new();
        for i in 0..self.nphi {
            let m = self.mode_of(i);
            if self.nphi % 2 == 0 && i == self.nphi / 2 {
                continue;
            }
            let p = if m % 2 == 0 { 1.0 } else { -1.0 };
            let col = &c[i * self.nr..(i + 1) * self.nr];
            let vals: Vec<Complex64> = col
                .iter()
                .copied()
                .chain((0..self.nr).map(|j| col[self.nr - 1 - j] * p))
                .collect();
            let signed = if i <= self.nphi / 2 { i as i64 } else { i as i64 - self.nphi as i64 };
            modes.push((signed, vals));
        }
        Evaluator::Disk {
            nodes: nodes.clone(),
            bary: barycentric_weights(&nodes),
            modes,
        }
    }

    fn spectral_tail(&self, f: &[f64]) -> f64 {
        let c = self.rings_forward(f);
        let deg = 2 * self.nr - 1;
        let kcut = 2 * deg / 3;
        let mcut = self.nphi / 3;
        let (mut hi, mut all) = (0.0, 0.0);
        for i in 0..self.nphi {
            let m = self.mode_of(i);
            let p = if m % 2 == 0 { 1.0 } else { -1.0 };
            let col = &c[i * self.nr..(i + 1) * self.nr];
            // values on the 2nr interior points of the full line, parity-extended
            let line: Vec<Complex64> = (0..2 * self.nr)
                .map(|j| if j < self.nr { col[j] } else { col[2 * self.nr - 1 - j] * p })
                .collect();
            for k in 0..=deg {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, vj) in line.iter().enumerate() {
                    acc += vj * self.cheb_fit[(k, j)];
                }
                let e = acc.norm_sqr();
                all += e;
                if k > kcut || m > mcut {
                    hi += e;
                }
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
        (1.0 / self.nr as f64).min(2.0 * PI / self.nphi as f64) / PI.sqrt()
    }

    fn eigen_coefficients(&self, _f: &[f64]) -> Vec<(f64, f64)> {
        Vec::new()
    }
}

pub(crate) fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                w[j] /= x[j] - x[k];
            }
        }
    }
    let scale = w.iter().map(|v| v.abs()).fold(0.0, f64::max);
    w.iter().map(|v| v / scale).collect()
}

pub(crate) fn barycentric_eval(x: &[f64], w: &[f64], v: &[Complex64], t: f64) -> Complex64 {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for j in 0..x.len() {
        let d = t - x[j];
        if d == 0.0 {
            return v[j];
        }
        let c = w[j] / d;
        num += v[j] * c;
        den += c;
    }
    num / den
}
