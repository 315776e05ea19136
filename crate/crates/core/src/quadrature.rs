//! One-dimensional quadrature rules and small interpolation helpers.

/// Gauss–Legendre nodes on (−1, 1) in descending order, with weights summing to 2.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Chebyshev–Gauss–Lobatto points `cos(πj/m)` and the spectral
/// differentiation matrix on them (row-major, `(m+1)²` entries).
pub fn chebyshev_diff(m: usize) -> (Vec<f64>, Vec<f64>) {
    let n = m + 1;
    let x: Vec<f64> = (0..n)
        .map(|j| (std::f64::consts::PI * j as f64 / m as f64).cos())
        .collect();
    let c = |j: usize| {
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == m {
            2.0 * s
        } else {
            s
        }
    };
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            if i != j {
                let v = c(i) / c(j) / (x[i] - x[j]);
                d[i * n + j] = v;
                row += v;
            }
        }
        d[i * n + i] = -row;
    }
    (x, d)
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// `x` must be strictly increasing with at least two entries.
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = del[0];
            d[1] = del[0];
        } else {
            for i in 1..n - 1 {
                if del[i - 1] * del[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
                }
            }
            d[0] = end_slope(h[0], h[1], del[0], del[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Self {
            x: x.to_vec(),
            y: y.to_vec(),
            d,
        }
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            k if k >= self.x.len() => self.x.len() - 2,
            k => k - 1,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }

    /// Exact integral of the interpolant from `x[0]` to `t`.
    pub fn integral_to(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let last = self.segment(t);
        for i in 0..=last {
            let a = self.x[i];
            let b = if i == last { t } else { self.x[i + 1] };
            // Simpson is exact for cubics.
            let m = 0.5 * (a + b);
            acc += (b - a) / 6.0 * (self.eval(a) + 4.0 * self.eval(m) + self.eval(b));
        }
        acc
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Derivative at `t` of the Lagrange polynomial through the given nodes.
pub fn lagrange_derivative(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let n = xs.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut di = 0.0;
        for k in 0..n {
            if k == i {
                continue;
            }
            let mut term = 1.0 / (xs[i] - xs[k]);
            for j in 0..n {
                if j != i && j != k {
                    term *= (t - xs[j]) / (xs[i] - xs[j]);
                }
            }
            di += term;
        }
        total += ys[i] * di;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for deg in 0..24 {
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg)).sum();
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            assert!((q - exact).abs() < 1e-13, "degree {deg}: {q} vs {exact}");
        }
        assert!(x.windows(2).all(|p| p[0] > p[1]));
    }

    #[test]
    fn chebyshev_matrix_differentiates_exactly() {
        let (x, d) = chebyshev_diff(9);
        let n = x.len();
        let f: Vec<f64> = x.iter().map(|t| t.powi(5) - 2.0 * t).collect();
        for i in 0..n {
            let df: f64 = (0..n).map(|j| d[i * n + j] * f[j]).sum();
            assert!((df - (5.0 * x[i].powi(4) - 2.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn pchip_reproduces_monotone_data_and_integrates() {
        let x: Vec<f64> = (0..8).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|t| t * t * t).collect();
        let p = Pchip::new(&x, &y);
        for (xi, yi) in x.iter().zip(&y) {
            assert!((p.eval(*xi) - yi).abs() < 1e-14);
        }
        let mut prev = f64::NEG_INFINITY;
        for k in 0..200 {
            let v = p.eval(3.5 * k as f64 / 199.0);
            assert!(v >= prev - 1e-14);
            prev = v;
        }
        let exact = 3.5f64.powi(4) / 4.0;
        assert!((p.integral_to(3.5) - exact).abs() / exact < 1e-2);
    }

    #[test]
    fn lagrange_derivative_matches_five_point_stencil() {
        let h = 0.1;
        let xs: Vec<f64> = (-2..=2).map(|k| 1.0 + k as f64 * h).collect();
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.sin()).collect();
        let stencil = (-ys[4] + 8.0 * ys[3] - 8.0 * ys[1] + ys[0]) / (12.0 * h);
        assert!((lagrange_derivative(&xs, &ys, 1.0) - stencil).abs() < 1e-12);
    }
}
