//! Wang–Landau estimate of the `dV^⊗N`-mass of energy bins.
//!
//! The walk runs over the full configuration space. Besides the requested
//! bins there is one underflow bin (`E < edges[0]`) and one overflow bin
//! (`E ≥ edges[last]`), so the estimate can be normalized by the total mass.
//! Modification factors are halved at each flat histogram and the run
//! switches to the `1/t` schedule once that is smaller.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::moves::{acceptance, dv_config, propose, rng_for};
use crate::error::{Error, Result};
use crate::functionals::{energy_of_points, particle_term};
use crate::geometry::{Geometry, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WlMode {
    /// Particles live on grid nodes, weighted by the quadrature weights of `dV`.
    Lattice,
    /// Particles move continuously with `dV`-reversible proposals.
    Continuous,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WangLandauConfig {
    pub n: usize,
    /// Increasing bin edges.
    pub edges: Vec<f64>,
    /// Minimum histogram entry relative to the mean over visited bins.
    pub flatness: f64,
    pub ln_f_initial: f64,
    pub ln_f_final: f64,
    /// Sweeps between flatness checks.
    pub check_every: usize,
    pub max_sweeps: usize,
    pub seed: u64,
    pub mode: WlMode,
    pub proposal_scale: f64,
}

impl WangLandauConfig {
    pub fn new(n: usize, edges: Vec<f64>, seed: u64, mode: WlMode) -> Self {
        Self {
            n,
            edges,
            flatness: 0.8,
            ln_f_initial: 1.0,
            ln_f_final: 1e-6,
            check_every: 500,
            max_sweeps: 50_000_000,
            seed,
            mode,
            proposal_scale: 0.1,
        }
    }
}

/// Estimated log-volumes per bin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DosEstimate {
    pub n: usize,
    pub edges: Vec<f64>,
    /// Natural log of the mass of each of the `edges.len() − 1` bins.
    pub log_mass: Vec<f64>,
    pub underflow_log_mass: f64,
    pub overflow_log_mass: f64,
    /// `N⁻¹ log mass(bin)`.
    pub s_bin: Vec<f64>,
    /// `N⁻¹ log mass{E < upper edge}` (cumulative convention).
    pub s_cumulative: Vec<f64>,
    pub visited: Vec<bool>,
    /// Histogram flatness at each reduction of the modification factor.
    pub flatness_history: Vec<f64>,
    /// Modification factors in the order they were used.
    pub ln_f_schedule: Vec<f64>,
    pub sweeps: usize,
    /// Total mass the estimate is normalized to.
    pub total_mass: f64,
}

fn log_sum_exp(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl DosEstimate {
    /// Build the estimate from raw log weights over `[underflow, bins…, overflow]`.
    pub fn from_log_weights(n: usize, edges: Vec<f64>, ln_g: &[f64], visited: &[bool], total_mass: f64) -> Self {
        let k = edges.len() - 1;
        assert_eq!(ln_g.len(), k + 2);
        let lz = log_sum_exp(ln_g.iter().zip(visited).filter(|p| *p.1).map(|p| *p.0));
        let lt = total_mass.ln();
        let lm: Vec<f64> = ln_g
            .iter()
            .zip(visited)
            .map(|(g, v)| if *v { g - lz + lt } else { f64::NEG_INFINITY })
            .collect();
        let nf = n as f64;
        let s_bin = lm[1..=k].iter().map(|x| x / nf).collect();
        let mut s_cum = Vec::with_capacity(k);
        for b in 1..=k {
            s_cum.push(log_sum_exp(lm[..=b].iter().cloned()) / nf);
        }
        Self {
            n,
            edges,
            log_mass: lm[1..=k].to_vec(),
            underflow_log_mass: lm[0],
            overflow_log_mass: lm[k + 1],
            s_bin,
            s_cumulative: s_cum,
            visited: visited[1..=k].to_vec(),
            flatness_history: Vec::new(),
            ln_f_schedule: Vec::new(),
            sweeps: 0,
            total_mass,
        }
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

pub(crate) fn bin_of(edges: &[f64], e: f64) -> usize {
    // 0 = underflow, edges.len() = overflow
    edges.partition_point(|x| *x <= e)
}

trait Walk {
    fn energy(&self) -> f64;
    /// Propose a move; returns the new energy and log `dV` ratio.
    fn trial(&mut self, rng: &mut ChaCha8Rng) -> Option<(f64, f64)>;
    fn commit(&mut self);
    fn resync(&mut self);
}

struct Continuous {
    geom: Arc<Geometry>,
    pts: Vec<Point>,
    energy: f64,
    scale: f64,
    pending: Option<(usize, Point, f64)>,
}

impl Walk for Continuous {
    fn energy(&self) -> f64 {
        self.energy
    }

    fn trial(&mut self, rng: &mut ChaCha8Rng) -> Option<(f64, f64)> {
        let i = rng.random_range(0..self.pts.len());
        let x = propose(self.geom.kind(), &self.pts[i], self.scale, rng)?;
        let new = particle_term(&self.geom, &self.pts, i, &x).ok()?;
        let old = particle_term(&self.geom, &self.pts, i, &self.pts[i]).expect("collision free");
        let e = self.energy + new - old;
        let lv = self.geom.dv_at(&x).ln() - self.geom.dv_at(&self.pts[i]).ln();
        self.pending = Some((i, x, e));
        Some((e, lv))
    }

    fn commit(&mut self) {
        let (i, x, e) = self.pending.take().expect("trial before commit");
        self.pts[i] = x;
        self.energy = e;
    }

    fn resync(&mut self) {
        self.energy = energy_of_points(&self.geom, &self.pts).expect("collision free");
    }
}

struct Lattice {
    geom: Arc<Geometry>,
    nodes: Vec<usize>,
    energy: f64,
    pending: Option<(usize, usize, f64)>,
}

impl Lattice {
    fn points(&self) -> Vec<Point> {
        self.nodes.iter().map(|&k| self.geom.nodes()[k]).collect()
    }
}

impl Walk for Lattice {
    fn energy(&self) -> f64 {
        self.energy
    }

    fn trial(&mut self, rng: &mut ChaCha8Rng) -> Option<(f64, f64)> {
        let i = rng.random_range(0..self.nodes.len());
        let k = rng.random_range(0..self.geom.len());
        if self.nodes.contains(&k) {
            return None;
        }
        let pts = self.points();
        let x = self.geom.nodes()[k];
        let new = particle_term(&self.geom, &pts, i, &x).ok()?;
        let old = particle_term(&self.geom, &pts, i, &pts[i]).expect("collision free");
        let w = self.geom.weights();
        let lv = w[k].ln() - w[self.nodes[i]].ln();
        let e = self.energy + new - old;
        self.pending = Some((i, k, e));
        Some((e, lv))
    }

    fn commit(&mut self) {
        let (i, k, e) = self.pending.take().expect("trial before commit");
        self.nodes[i] = k;
        self.energy = e;
    }

    fn resync(&mut self) {
        self.energy = energy_of_points(&self.geom, &self.points()).expect("distinct nodes");
    }
}

/// Probability that `n` independent lattice draws with weights `w` are distinct.
fn distinct_probability(w: &[f64], n: usize) -> f64 {
    // n! e_n(w) through the elementary symmetric polynomials
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for &x in w {
        for k in (1..=n).rev() {
            e[k] += x * e[k - 1];
        }
    }
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    fact * e[n]
}

pub fn wang_landau(geom: &Arc<Geometry>, cfg: &WangLandauConfig) -> Result<DosEstimate> {
    if cfg.n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: cfg.n });
    }
    if cfg.edges.len() < 2 || cfg.edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ConfigInvalid("bin edges must be increasing".into()));
    }
    if !(cfg.flatness > 0.0 && cfg.flatness < 1.0) || !(cfg.ln_f_final > 0.0) || cfg.ln_f_initial <= cfg.ln_f_final {
        return Err(Error::ConfigInvalid("invalid Wang-Landau schedule".into()));
    }
    let mut rng = rng_for(cfg.seed, 2);
    let (mut walk, total): (Box<dyn Walk>, f64) = match cfg.mode {
        WlMode::Continuous => {
            let pts = loop {
                let p = dv_config(geom, cfg.n, &mut rng);
                if energy_of_points(geom, &p).is_ok() {
                    break p;
                }
            };
            let energy = energy_of_points(geom, &pts)?;
            let w = Continuous {
                geom: geom.clone(),
                pts,
                energy,
                scale: cfg.proposal_scale,
                pending: None,
            };
            (Box::new(w), 1.0)
        }
        WlMode::Lattice => {
            if cfg.n > geom.len() {
                return Err(Error::ConfigInvalid("more particles than lattice sites".into()));
            }
            let mut nodes: Vec<usize> = Vec::with_capacity(cfg.n);
            while nodes.len() < cfg.n {
                let k = rng.random_range(0..geom.len());
                if !nodes.contains(&k) {
                    nodes.push(k);
                }
            }
            let mut w = Lattice {
                geom: geom.clone(),
                nodes,
                energy: 0.0,
                pending: None,
            };
            w.resync();
            (Box::new(w), distinct_probability(geom.weights(), cfg.n))
        }
    };
    let nb = cfg.edges.len() + 1;
    let mut ln_g = vec![0.0; nb];
    let mut hist = vec![0u64; nb];
    let mut visited = vec![false; nb];
    let mut ln_f = cfg.ln_f_initial;
    let mut schedule = vec![ln_f];
    let mut flat_hist = Vec::new();
    let mut moves: u64 = 0;
    let mut one_over_t = false;
    let mut sweeps = 0;
    let mut cur = bin_of(&cfg.edges, walk.energy());
    loop {
        for _ in 0..cfg.n {
            if let Some((e_new, lv)) = walk.trial(&mut rng) {
                let b = bin_of(&cfg.edges, e_new);
                let u: f64 = rng.random();
                if u < acceptance(lv + ln_g[cur] - ln_g[b]) {
                    walk.commit();
                    cur = b;
                }
            }
            ln_g[cur] += ln_f;
            hist[cur] += 1;
            visited[cur] = true;
            moves += 1;
            if one_over_t {
                let nv = visited.iter().filter(|v| **v).count() as f64;
                ln_f = nv / moves as f64;
            }
        }
        sweeps += 1;
        if sweeps % 100 == 0 {
            walk.resync();
            cur = bin_of(&cfg.edges, walk.energy());
        }
        if one_over_t {
            if ln_f < cfg.ln_f_final {
                break;
            }
        } else if sweeps % cfg.check_every == 0 {
            let vis: Vec<u64> = hist.iter().zip(&visited).filter(|p| *p.1).map(|p| *p.0).collect();
            let mean = vis.iter().sum::<u64>() as f64 / vis.len() as f64;
            let min = *vis.iter().min().unwrap() as f64;
            if min >= cfg.flatness * mean {
                flat_hist.push(min / mean);
                ln_f *= 0.5;
                hist.iter_mut().for_each(|h| *h = 0);
                let nv = vis.len() as f64;
                if ln_f < nv / moves as f64 {
                    one_over_t = true;
                    ln_f = nv / moves as f64;
                }
                schedule.push(ln_f);
                if ln_f < cfg.ln_f_final {
                    break;
                }
            }
        }
        if sweeps >= cfg.max_sweeps {
            return Err(Error::NotConverged(format!(
                "ln f = {ln_f:.3e} after {sweeps} sweeps"
            )));
        }
    }
    schedule.push(ln_f);
    let mut est = DosEstimate::from_log_weights(cfg.n, cfg.edges.clone(), &ln_g, &visited, total);
    est.flatness_history = flat_hist;
    est.ln_f_schedule = schedule;
    est.sweeps = sweeps;
    Ok(est)
}
