//! Legendre duality between `F(β)` and `S(e)`, concave envelopes and the
//! algebraic criteria for weighted points on the sphere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::ThermoCurve;
use crate::quadrature::{lagrange_derivative, Pchip};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    LegendreFromF,
    WangLandau,
    Direct,
}

/// Samples `(e_j, S_j)` on an increasing energy grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyCurve {
    pub e: Vec<f64>,
    pub s: Vec<f64>,
    pub provenance: Provenance,
    pub e0: f64,
    /// `concave[j]` is true when the second divided difference at interior
    /// sample `j + 1` is strictly negative.
    pub concave: Vec<bool>,
}

/// Tolerance used for equality and concavity verdicts.
pub const THERMO_TOLERANCE: f64 = 1e-3;

fn second_differences(x: &[f64], y: &[f64]) -> Vec<f64> {
    (1..x.len().saturating_sub(1))
        .map(|i| {
            let d1 = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
            let d2 = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
            2.0 * (d2 - d1) / (x[i + 1] - x[i - 1])
        })
        .collect()
}

impl EntropyCurve {
    pub fn new(e: Vec<f64>, s: Vec<f64>, provenance: Provenance, e0: f64) -> Result<Self> {
        if e.len() != s.len() {
            return Err(Error::ShapeMismatch {
                expected: e.len(),
                got: s.len(),
            });
        }
        if e.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::ConfigInvalid("energy grid must be strictly increasing".into()));
        }
        let concave = second_differences(&e, &s).iter().map(|d| *d < 0.0).collect();
        Ok(Self {
            e,
            s,
            provenance,
            e0,
            concave,
        })
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    /// Second divided differences at the interior samples.
    pub fn second_differences(&self) -> Vec<f64> {
        second_differences(&self.e, &self.s)
    }

    /// True when every interior sample with `lo ≤ e ≤ hi` is strictly concave.
    pub fn strictly_concave_on(&self, lo: f64, hi: f64) -> bool {
        self.second_differences()
            .iter()
            .enumerate()
            .filter(|(i, _)| (lo..=hi).contains(&self.e[i + 1]))
            .all(|(_, d)| *d < 0.0)
    }

    /// Energy of the largest sample.
    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for i in 1..self.len() {
            if self.s[i] > self.s[best] {
                best = i;
            }
        }
        self.e[best]
    }

    /// Linear interpolation of `S` (used for comparisons between curves).
    pub fn value_at(&self, e: f64) -> Result<f64> {
        let n = self.len();
        if n == 0 || e < self.e[0] || e > self.e[n - 1] {
            return Err(Error::OutOfRange {
                value: e,
                lo: self.e.first().copied().unwrap_or(f64::NAN),
                hi: self.e.last().copied().unwrap_or(f64::NAN),
            });
        }
        if n == 1 {
            return Ok(self.s[0]);
        }
        let k = self.e.partition_point(|x| *x <= e).clamp(1, n - 1);
        let t = (e - self.e[k - 1]) / (self.e[k] - self.e[k - 1]);
        Ok(self.s[k - 1] + t * (self.s[k] - self.s[k - 1]))
    }
}

/// Smooth interpolation of `e(β)` and `F(β)` from a continuation curve.
pub struct FreeEnergyInterpolant {
    beta: Vec<f64>,
    e: Vec<f64>,
    f: Vec<f64>,
    e_of_beta: Pchip,
}

impl FreeEnergyInterpolant {
    pub fn new(curve: &ThermoCurve) -> Result<Self> {
        let mut rows: Vec<(f64, f64, f64)> = curve.samples.iter().map(|s| (s.beta, s.e, s.f)).collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        rows.dedup_by(|a, b| a.0 == b.0);
        if rows.len() < 3 {
            return Err(Error::InsufficientData(format!("{} curve samples, need 3", rows.len())));
        }
        let beta: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let e: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let f: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let e_of_beta = Pchip::new(&beta, &e);
        Ok(Self { beta, e, f, e_of_beta })
    }

    pub fn beta_range(&self) -> (f64, f64) {
        (self.beta[0], *self.beta.last().unwrap())
    }

    pub fn energy_range(&self) -> (f64, f64) {
        let lo = self.e.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn energy(&self, beta: f64) -> f64 {
        self.e_of_beta.eval(beta)
    }

    /// Cubic Hermite interpolation of `F` with the exact slopes `F' = e`.
    pub fn free_energy(&self, beta: f64) -> f64 {
        let n = self.beta.len();
        let i = match self.beta.partition_point(|&b| b <= beta) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.beta[i + 1] - self.beta[i];
        let s = (beta - self.beta[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.f[i] + h10 * h * self.e[i] + h01 * self.f[i + 1] + h11 * h * self.e[i + 1]
    }

    /// β with `e(β) = e`, by bisection on the monotone interpolant.
    pub fn beta_for_energy(&self, e: f64) -> Result<f64> {
        let (lo, hi) = self.energy_range();
        if e < lo || e > hi {
            return Err(Error::OutOfRange { value: e, lo, hi });
        }
        let (mut a, mut b) = self.beta_range();
        // e decreases in β
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.energy(m) > e {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-15 * (1.0 + m.abs()) {
                break;
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// `S(e) = β e − F(β)` at `e(β) = e`, for each entry of `e_grid`.
pub fn legendre_s_from_f(curve: &ThermoCurve, e_grid: &[f64]) -> Result<EntropyCurve> {
    let interp = FreeEnergyInterpolant::new(curve)?;
    let (lo, hi) = interp.energy_range();
    if hi - lo <= 1e-10 * (1.0 + hi.abs()) {
        // all solutions coincide: the curve collapses to one point
        return EntropyCurve::new(vec![curve.e0], vec![0.0], Provenance::LegendreFromF, curve.e0);
    }
    let mut s = Vec::with_capacity(e_grid.len());
    for &e in e_grid {
        let beta = interp.beta_for_energy(e)?;
        s.push(beta * e - interp.free_energy(beta));
    }
    EntropyCurve::new(e_grid.to_vec(), s, Provenance::LegendreFromF, curve.e0)
}

/// Evenly spaced energies.
pub fn energy_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// `F**(β) = min_j (β e_j − S_j)`, the Legendre transform of a sampled entropy.
pub fn free_energy_from_entropy(curve: &EntropyCurve, beta: f64) -> f64 {
    curve
        .e
        .iter()
        .zip(&curve.s)
        .map(|(e, s)| beta * e - s)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub values: Vec<f64>,
    pub equal: Vec<bool>,
}

/// Least concave majorant of `(x_j, y_j)` evaluated on the samples.
pub fn concave_envelope(x: &[f64], y: &[f64], tol: f64) -> Result<Envelope> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!("{} samples, need 3", x.len())));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[b].total_cmp(&y[a])));
    let mut hull: Vec<usize> = Vec::new();
    for &i in &order {
        if hull.last().is_some_and(|&k| x[k] == x[i]) {
            continue;
        }
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let values: Vec<f64> = x
        .iter()
        .map(|&t| {
            let k = hull.partition_point(|&h| x[h] <= t);
            if k == 0 {
                return y[hull[0]];
            }
            if k == hull.len() {
                return y[hull[k - 1]];
            }
            let (a, b) = (hull[k - 1], hull[k]);
            y[a] + (y[b] - y[a]) * (t - x[a]) / (x[b] - x[a])
        })
        .collect();
    let equal = values.iter().zip(y).map(|(v, w)| (v - w).abs() <= tol).collect();
    Ok(Envelope { values, equal })
}

/// `β(e) = dS/de` from the five nearest samples; the stencil becomes
/// one-sided at the ends of the sampled range.
pub fn beta_of_e(curve: &EntropyCurve, e: f64) -> Result<f64> {
    let n = curve.len();
    // round-off at the ends of the range is clamped
    let slack = 1e-12 * curve.e.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let e = match (curve.e.first(), curve.e.last()) {
        (Some(&lo), _) if e < lo && e >= lo - slack => lo,
        (_, Some(&hi)) if e > hi && e <= hi + slack => hi,
        _ => e,
    };
    if n < 3 || e < curve.e[0] || e > curve.e[n - 1] {
        return Err(Error::OutOfRange {
            value: e,
            lo: curve.e.first().copied().unwrap_or(f64::NAN),
            hi: curve.e.last().copied().unwrap_or(f64::NAN),
        });
    }
    let near = curve
        .e
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - e).abs().total_cmp(&(b.1 - e).abs()))
        .map(|p| p.0)
        .unwrap();
    let half = if n >= 5 { 2 } else { 1 };
    let start = near.saturating_sub(half).min(n - (2 * half + 1));
    let idx = start..start + 2 * half + 1;
    let xs = &curve.e[idx.clone()];
    let ys = &curve.s[idx];
    let dd = second_differences(xs, ys);
    let scale = ys.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if dd.iter().any(|d| *d > THERMO_TOLERANCE * scale) {
        return Err(Error::NonConcaveNeighborhood(e));
    }
    Ok(lagrange_derivative(xs, ys, e))
}

/// Weighted points on the Riemann sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogFanoCurveSpec {
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TroyanovVerdict {
    pub polystable: bool,
    /// `R` clamped to `[0, 1]`.
    pub r: f64,
    pub r_raw: f64,
    pub clamped: bool,
}

/// Weight condition `w_i < Σ_{j≠i} w_j` (non-strict for at most two points)
/// and the invariant `R = 2(1 − max w)/(2 − Σ w)`.
pub fn troyanov_check(spec: &LogFanoCurveSpec) -> Result<TroyanovVerdict> {
    let w = &spec.weights;
    if let Some(bad) = w.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(Error::InvalidWeights(format!("weight {bad} outside (0, 1)")));
    }
    let total: f64 = w.iter().sum();
    if total >= 2.0 {
        return Err(Error::NotLogFano(total));
    }
    let strict = w.len() >= 3;
    let polystable = w.iter().all(|&wi| {
        let rest = total - wi;
        if strict {
            wi < rest
        } else {
            wi <= rest
        }
    });
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    let r_raw = 2.0 * (1.0 - wmax) / (2.0 - total);
    let r = r_raw.clamp(0.0, 1.0);
    Ok(TroyanovVerdict {
        polystable,
        r,
        r_raw,
        clamped: r != r_raw,
    })
}
