//! Restarted GMRES for the Newton steps of the mean-field solver.

/// Outcome of a linear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = b` starting from `x`, with `apply(v) = A v`.
pub fn gmres<F>(apply: F, b: &[f64], x: &mut [f64], rtol: f64, restart: usize, max_iter: usize) -> GmresReport
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return GmresReport {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let m = restart.max(1);
    let mut total = 0;
    let mut rel;
    loop {
        let ax = apply(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= rtol || total >= max_iter {
            return GmresReport {
                iterations: total,
                relative_residual: rel,
                converged: rel <= rtol,
            };
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && total < max_iter {
            let mut w = apply(&basis[k]);
            // modified Gram–Schmidt, applied twice for stability
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let hij = dot(&w, q);
                    hess[i][k] += hij;
                    w.iter_mut().zip(q).for_each(|(a, b)| *a -= hij * b);
                }
            }
            let wn = norm(&w);
            hess[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let d = hess[k][k].hypot(hess[k + 1][k]);
            cs[k] = if d == 0.0 { 1.0 } else { hess[k][k] / d };
            sn[k] = if d == 0.0 { 0.0 } else { hess[k + 1][k] / d };
            hess[k][k] = d;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k += 1;
            total += 1;
            if g[k].abs() / bnorm <= rtol || wn <= 1e-300 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution on the k×k triangle
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += yj * basis[j][i];
            }
        }
    }
}
