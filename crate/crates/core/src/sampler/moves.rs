//! Random numbers, reference-measure draws and single-site proposals.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{wrap_unit, Geometry, Kind, Point};

/// The counter-based generator behind every random choice: one `seed`
/// selects the key, `stream` separates independent uses of the same seed.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A point drawn from the reference area measure.
pub fn reference_point<R: Rng>(kind: Kind, rng: &mut R) -> Point {
    match kind {
        Kind::Sphere => {
            let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let phi = 2.0 * PI * rng.random::<f64>();
            let s = (1.0 - z * z).max(0.0).sqrt();
            [s * phi.cos(), s * phi.sin(), z]
        }
        Kind::Torus => [rng.random(), rng.random(), 0.0],
        Kind::Disk => loop {
            let x = 2.0 * rng.random::<f64>() - 1.0;
            let y = 2.0 * rng.random::<f64>() - 1.0;
            if x * x + y * y < 1.0 {
                break [x, y, 0.0];
            }
        },
    }
}

/// A point drawn from `dV` by rejection against the reference measure.
pub fn dv_point<R: Rng>(geom: &Geometry, rng: &mut R) -> Point {
    let top = geom.dv_max();
    loop {
        let p = reference_point(geom.kind(), rng);
        if rng.random::<f64>() * top < geom.dv_at(&p) {
            return p;
        }
    }
}

/// `n` independent draws from `dV`.
pub fn dv_config<R: Rng>(geom: &Geometry, n: usize, rng: &mut R) -> Vec<Point> {
    (0..n).map(|_| dv_point(geom, rng)).collect()
}

/// Largest useful proposal scale on each surface.
pub fn max_scale(kind: Kind) -> f64 {
    match kind {
        Kind::Sphere => PI,
        Kind::Torus => 0.5,
        Kind::Disk => 1.0,
    }
}

/// Single-site proposal, symmetric with respect to the reference measure.
/// Sphere: von Mises–Fisher step with angular scale `scale`; torus: wrapped
/// Gaussian; disk: Gaussian step, `None` when it leaves the disk (the move is
/// then rejected, which keeps the kernel symmetric).
pub fn propose<R: Rng>(kind: Kind, x: &Point, scale: f64, rng: &mut R) -> Option<Point> {
    match kind {
        Kind::Torus => {
            let dx: f64 = StandardNormal.sample(rng);
            let dy: f64 = StandardNormal.sample(rng);
            Some([wrap_unit(x[0] + scale * dx), wrap_unit(x[1] + scale * dy), 0.0])
        }
        Kind::Disk => {
            let dx: f64 = StandardNormal.sample(rng);
            let dy: f64 = StandardNormal.sample(rng);
            let p = [x[0] + scale * dx, x[1] + scale * dy, 0.0];
            (p[0] * p[0] + p[1] * p[1] < 1.0).then_some(p)
        }
        Kind::Sphere => Some(von_mises_fisher(x, 1.0 / (scale * scale), rng)),
    }
}

/// Wood's sampler for the von Mises–Fisher law on S² with mean `mu`.
fn von_mises_fisher<R: Rng>(mu: &Point, kappa: f64, rng: &mut R) -> Point {
    let u: f64 = rng.random();
    // w = cos of the angle to mu, from the exact inverse CDF
    let w = if kappa > 1e-8 {
        (1.0 + (u + (1.0 - u) * (-2.0 * kappa).exp()).ln() / kappa).clamp(-1.0, 1.0)
    } else {
        2.0 * u - 1.0
    };
    let phi = 2.0 * PI * rng.random::<f64>();
    let s = (1.0 - w * w).max(0.0).sqrt();
    let (e1, e2) = tangent_frame(mu);
    let p = [
        w * mu[0] + s * (phi.cos() * e1[0] + phi.sin() * e2[0]),
        w * mu[1] + s * (phi.cos() * e1[1] + phi.sin() * e2[1]),
        w * mu[2] + s * (phi.cos() * e1[2] + phi.sin() * e2[2]),
    ];
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

/// Orthonormal basis of the tangent plane at a unit vector.
pub fn tangent_frame(mu: &Point) -> (Point, Point) {
    let a = if mu[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = a[0] * mu[0] + a[1] * mu[1] + a[2] * mu[2];
    let mut e1 = [a[0] - d * mu[0], a[1] - d * mu[1], a[2] - d * mu[2]];
    let n = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|x| *x /= n);
    let e2 = [
        mu[1] * e1[2] - mu[2] * e1[1],
        mu[2] * e1[0] - mu[0] * e1[2],
        mu[0] * e1[1] - mu[1] * e1[0],
    ];
    (e1, e2)
}

/// Metropolis acceptance probability for a log target ratio.
pub fn acceptance(log_ratio: f64) -> f64 {
    if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}
