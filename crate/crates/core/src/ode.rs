//! Dormand–Prince 5(4) integrator with adaptive steps and a projection hook.
//!
//! The state is split into fixed-size blocks (one per particle) and the local
//! error is measured as the largest Euclidean block error, which keeps the
//! controller invariant under rotations of each block and permutations of
//! the blocks.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Differences between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    /// Absolute tolerance on each block's local error.
    pub atol: f64,
    /// Relative tolerance scaled by the block norm.
    pub rtol: f64,
    /// Components per block.
    pub block: usize,
    /// Smallest admissible step relative to the integration span.
    pub min_step_fraction: f64,
    pub max_steps: usize,
}

impl Dopri5Options {
    pub fn new(atol: f64, block: usize) -> Self {
        Self {
            atol,
            rtol: 0.0,
            block,
            min_step_fraction: 1e-14,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dopri5Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub last_step: f64,
    pub smallest_step: f64,
}

/// Outcome of [`Dopri5::advance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advance {
    Reached,
    /// The observer asked to stop after an accepted step.
    Stopped,
}

/// Stateful stepper; the step size carries over between calls so that a
/// trajectory can be advanced stamp by stamp.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    opts: Dopri5Options,
    h: Option<f64>,
    pub stats: Dopri5Stats,
}

impl Dopri5 {
    pub fn new(opts: Dopri5Options) -> Self {
        assert!(opts.block > 0);
        Self {
            opts,
            h: None,
            stats: Dopri5Stats {
                smallest_step: f64::INFINITY,
                ..Default::default()
            },
        }
    }

    fn error_norm(&self, y: &[f64], y_new: &[f64], err: &[f64]) -> f64 {
        let b = self.opts.block;
        let mut worst: f64 = 0.0;
        for ((e, a), c) in err.chunks(b).zip(y.chunks(b)).zip(y_new.chunks(b)) {
            let en = norm(e);
            let sc = self.opts.atol + self.opts.rtol * norm(a).max(norm(c));
            worst = worst.max(en / sc);
        }
        worst
    }

    fn initial_step<F>(&mut self, f: &mut F, t: f64, y: &[f64], f0: &[f64], span: f64) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let sc = |v: &[f64]| {
            v.chunks(self.opts.block)
                .map(|c| norm(c) / (self.opts.atol + self.opts.rtol * norm(c)))
                .fold(0.0, f64::max)
        };
        let d0 = sc(y);
        let d1 = sc(f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span.abs());
        let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
        let mut f1 = vec![0.0; y.len()];
        f(t + h0, &y1, &mut f1);
        self.stats.evaluations += 1;
        let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = sc(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span.abs())
    }

    /// Advance `y` from `*t` to `t_end` (forward or backward). `project` is
    /// applied to every accepted state; `observe` may stop the integration.
    pub fn advance<F, P, O>(
        &mut self,
        f: &mut F,
        project: &mut P,
        observe: &mut O,
        t: &mut f64,
        y: &mut Vec<f64>,
        t_end: f64,
    ) -> Result<Advance>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        P: FnMut(&mut [f64]),
        O: FnMut(f64, &[f64]) -> bool,
    {
        let span = t_end - *t;
        if span == 0.0 {
            return Ok(Advance::Reached);
        }
        let dir = span.signum();
        let n = y.len();
        let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        let mut y_new = vec![0.0; n];
        let mut err = vec![0.0; n];
        f(*t, y, &mut k[0]);
        self.stats.evaluations += 1;
        let mut h = match self.h {
            Some(h) => h.abs(),
            None => self.initial_step(f, *t, y, &k[0].clone(), span),
        };
        let h_min = self.opts.min_step_fraction * span.abs().max(t_end.abs());
        let mut steps = 0usize;
        let mut retried = false;
        loop {
            let remaining = (t_end - *t) * dir;
            if remaining <= 0.0 {
                return Ok(Advance::Reached);
            }
            let last = h >= remaining;
            let hs = if last { remaining } else { h } * dir;
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(Error::ToleranceUnreachable(*t));
            }
            let stage = |tmp: &mut Vec<f64>, k: &[Vec<f64>], coeffs: &[f64]| {
                for i in 0..n {
                    let mut s = 0.0;
                    for (c, kj) in coeffs.iter().zip(k) {
                        s += c * kj[i];
                    }
                    tmp[i] = y[i] + hs * s;
                }
            };
            stage(&mut tmp, &k, &[A21]);
            f(*t + C2 * hs, &tmp, &mut k[1]);
            stage(&mut tmp, &k, &[A31, A32]);
            f(*t + C3 * hs, &tmp, &mut k[2]);
            stage(&mut tmp, &k, &[A41, A42, A43]);
            f(*t + C4 * hs, &tmp, &mut k[3]);
            stage(&mut tmp, &k, &[A51, A52, A53, A54]);
            f(*t + C5 * hs, &tmp, &mut k[4]);
            stage(&mut tmp, &k, &[A61, A62, A63, A64, A65]);
            f(*t + hs, &tmp, &mut k[5]);
            stage(&mut y_new, &k, &[B1, 0.0, B3, B4, B5, B6]);
            f(*t + hs, &y_new, &mut k[6]);
            self.stats.evaluations += 6;
            for i in 0..n {
                err[i] = hs
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            }
            let en = self.error_norm(y, &y_new, &err);
            if !en.is_finite() {
                h *= 0.2;
                retried = true;
                self.stats.rejected += 1;
                if h < h_min {
                    return Err(Error::ToleranceUnreachable(*t));
                }
                continue;
            }
            let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
            if en <= 1.0 {
                *t = if last { t_end } else { *t + hs };
                std::mem::swap(y, &mut y_new);
                project(y);
                self.stats.accepted += 1;
                self.stats.last_step = hs.abs();
                self.stats.smallest_step = self.stats.smallest_step.min(hs.abs());
                // A clipped final step keeps the controller's step for the next call.
                if !last {
                    h *= if retried { factor.min(1.0) } else { factor };
                }
                retried = false;
                self.h = Some(h);
                if !observe(*t, y) {
                    return Ok(Advance::Stopped);
                }
                f(*t, y, &mut k[0]);
                self.stats.evaluations += 1;
            } else {
                h *= factor.min(1.0);
                retried = true;
                self.stats.rejected += 1;
                if h < h_min {
                    return Err(Error::ToleranceUnreachable(*t));
                }
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
