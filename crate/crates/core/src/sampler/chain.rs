//! Metropolis chains for the canonical and the energy-shell ensembles.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::moves::{acceptance, dv_config, max_scale, propose, rng_for};
use crate::error::{Error, Result};
use crate::functionals::{energy_of_points, particle_term};
use crate::geometry::{Geometry, Kind, Point, ThetaMode};

/// Settings shared by all chains.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub geom: Arc<Geometry>,
    pub n: usize,
    pub seed: u64,
    /// Sweeps (N single-site proposals each), burn-in included.
    pub n_steps: usize,
    pub burn_in: usize,
    /// Initial proposal scale; tuned toward 20–40 % acceptance during burn-in.
    pub proposal_scale: f64,
    /// Keep every `thinning`-th configuration after burn-in.
    pub thinning: usize,
    /// Lower admissible β, i.e. `−R` (defaults to −1).
    pub beta_floor: f64,
    /// Sweep budget for reaching an energy shell.
    pub entry_budget: usize,
    /// Temperature at which the shell entry anneal starts.
    pub entry_beta: Option<f64>,
    /// Starting configuration (otherwise drawn from `dV`).
    pub initial: Option<Vec<Point>>,
}

impl ChainConfig {
    pub fn new(geom: Arc<Geometry>, n: usize, seed: u64) -> Self {
        let scale = match geom.kind() {
            Kind::Sphere => 0.5,
            Kind::Torus => 0.15,
            Kind::Disk => 0.3,
        };
        Self {
            geom,
            n,
            seed,
            n_steps: 2000,
            burn_in: 500,
            proposal_scale: scale,
            thinning: 10,
            beta_floor: -1.0,
            entry_budget: 5000,
            entry_beta: None,
            initial: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: self.n });
        }
        if self.n_steps <= self.burn_in {
            return Err(Error::ConfigInvalid("n_steps must exceed burn_in".into()));
        }
        if self.thinning == 0 {
            return Err(Error::ConfigInvalid("thinning must be positive".into()));
        }
        if !(self.proposal_scale > 0.0) {
            return Err(Error::ConfigInvalid("proposal scale must be positive".into()));
        }
        if let Some(init) = &self.initial {
            if init.len() != self.n {
                return Err(Error::ShapeMismatch {
                    expected: self.n,
                    got: init.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `]e − ε, e[`
    Lower,
    /// `]e, e + ε[`
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSpec {
    pub e: f64,
    /// Thickness; `f64::INFINITY` gives a half-line.
    pub eps: f64,
    pub side: Side,
}

impl ShellSpec {
    pub fn new(e: f64, eps: f64, side: Side) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::ConfigInvalid(format!("shell thickness {eps} must be positive")));
        }
        if side == Side::Lower && !(e > 0.0) {
            return Err(Error::ConfigInvalid("lower shells need e > 0".into()));
        }
        Ok(Self { e, eps, side })
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self.side {
            Side::Lower => (self.e - self.eps, self.e),
            Side::Upper => (self.e, self.e + self.eps),
        }
    }

    pub fn contains(&self, energy: f64) -> bool {
        let (lo, hi) = self.bounds();
        energy > lo && energy < hi
    }
}

/// Output of one chain.
#[derive(Debug, Clone)]
pub struct ChainStats {
    pub geom: Arc<Geometry>,
    pub n: usize,
    pub seed: u64,
    pub beta: Option<f64>,
    pub shell: Option<ShellSpec>,
    /// Energy after every post-burn-in sweep.
    pub energy_trace: Vec<f64>,
    /// Accepted moves in every post-burn-in sweep.
    pub accepted_trace: Vec<usize>,
    pub acceptance_rate: f64,
    pub mean_energy: f64,
    pub stderr: f64,
    pub effective_samples: f64,
    pub configs: Vec<Vec<Point>>,
    pub proposal_scale: f64,
    /// β reached by the shell entry anneal.
    pub entry_beta: Option<f64>,
    pub warnings: Vec<String>,
}

impl ChainStats {
    pub fn non_ergodic(&self) -> bool {
        self.acceptance_rate < 0.01
    }
}

/// Mean and batch-means standard error with `batches` batches.
pub fn batch_means(trace: &[f64], batches: usize) -> (f64, f64) {
    let n = trace.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = trace.iter().sum::<f64>() / n as f64;
    let b = batches.min(n).max(1);
    let len = n / b;
    if b < 2 || len == 0 {
        return (mean, f64::NAN);
    }
    let means: Vec<f64> = (0..b)
        .map(|k| trace[k * len..(k + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let mm = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mm).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

/// Mutable chain state with an incrementally tracked energy.
pub(crate) struct Walker {
    pub geom: Arc<Geometry>,
    pub pts: Vec<Point>,
    pub energy: f64,
    pub scale: f64,
    pub rng: ChaCha8Rng,
    window_acc: usize,
    window_prop: usize,
}

/// Sweeps between exact energy recomputations.
const RESYNC: usize = 10;

impl Walker {
    pub fn new(geom: Arc<Geometry>, pts: Vec<Point>, scale: f64, rng: ChaCha8Rng) -> Result<Self> {
        let energy = energy_of_points(&geom, &pts)?;
        Ok(Self {
            geom,
            pts,
            energy,
            scale,
            rng,
            window_acc: 0,
            window_prop: 0,
        })
    }

    pub fn resync(&mut self) {
        self.energy = energy_of_points(&self.geom, &self.pts).expect("collisions are never accepted");
    }

    /// One move of a random particle. `log_target(E')` is the log weight of
    /// the energy factor relative to the current state (−∞ forbids the move).
    pub fn step<F: Fn(f64, f64) -> f64>(&mut self, log_target: &F) -> bool {
        let n = self.pts.len();
        let i = self.rng.random_range(0..n);
        let kind = self.geom.kind();
        self.window_prop += 1;
        let Some(x) = propose(kind, &self.pts[i], self.scale, &mut self.rng) else {
            return false;
        };
        let new_term = match particle_term(&self.geom, &self.pts, i, &x) {
            Ok(t) => t,
            Err(_) => return false,
        };
        let old_term = particle_term(&self.geom, &self.pts, i, &self.pts[i]).expect("current state is collision free");
        let e_new = self.energy + (new_term - old_term);
        let lw = log_target(self.energy, e_new);
        if lw == f64::NEG_INFINITY {
            return false;
        }
        let lv = self.geom.dv_at(&x).ln() - self.geom.dv_at(&self.pts[i]).ln();
        let u: f64 = self.rng.random();
        if u < acceptance(lv + lw) {
            self.pts[i] = x;
            self.energy = e_new;
            self.window_acc += 1;
            true
        } else {
            false
        }
    }

    pub fn sweep<F: Fn(f64, f64) -> f64>(&mut self, log_target: &F) -> usize {
        (0..self.pts.len()).filter(|_| self.step(log_target)).count()
    }

    /// Adjust the proposal scale toward 30 % acceptance.
    pub fn tune(&mut self) {
        if self.window_prop == 0 {
            return;
        }
        let a = self.window_acc as f64 / self.window_prop as f64;
        let top = max_scale(self.geom.kind());
        self.scale = (self.scale * (2.0 * (a - 0.3)).exp()).clamp(1e-5, top);
        self.window_acc = 0;
        self.window_prop = 0;
    }
}

fn start(cfg: &ChainConfig, stream: u64) -> Result<Walker> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, stream);
    let pts = match &cfg.initial {
        Some(p) => p.clone(),
        None => loop {
            let p = dv_config(&cfg.geom, cfg.n, &mut rng);
            if energy_of_points(&cfg.geom, &p).is_ok() {
                break p;
            }
        },
    };
    Walker::new(cfg.geom.clone(), pts, cfg.proposal_scale, rng)
}

/// Sign conventions that make `e^{−βN E}` normalizable.
pub fn check_beta(geom: &Geometry, beta: f64, floor: f64) -> Result<()> {
    if !beta.is_finite() {
        return Err(Error::BetaOutOfRange {
            beta,
            reason: "not finite".into(),
        });
    }
    if beta >= 0.0 {
        return Ok(());
    }
    match geom.kind() {
        Kind::Torus => Err(Error::BetaOutOfRange {
            beta,
            reason: "negative temperatures need a Fano-compatible surface".into(),
        }),
        Kind::Sphere if geom.spec().theta != ThetaMode::Fano && !geom.h().iter().all(|x| (x - 1.0).abs() < 1e-12) => {
            Err(Error::BetaOutOfRange {
                beta,
                reason: "negative temperatures need a Fano-compatible background".into(),
            })
        }
        _ if beta <= floor.max(-1.0) => Err(Error::BetaOutOfRange {
            beta,
            reason: format!("β must exceed {}", floor.max(-1.0)),
        }),
        _ => Ok(()),
    }
}

fn finish(cfg: &ChainConfig, w: &Walker, trace: Vec<f64>, acc: Vec<usize>, configs: Vec<Vec<Point>>) -> ChainStats {
    let (mean, stderr) = batch_means(&trace, 20);
    let m = trace.len() as f64;
    let var = trace.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let ess = if stderr > 0.0 { (var / (stderr * stderr)).min(m) } else { m };
    let rate = acc.iter().sum::<usize>() as f64 / (acc.len() * cfg.n).max(1) as f64;
    let mut warnings = Vec::new();
    if rate < 0.01 {
        warnings.push(format!("acceptance {rate:.4} below 1%: chain may not be ergodic"));
    }
    ChainStats {
        geom: cfg.geom.clone(),
        n: cfg.n,
        seed: cfg.seed,
        beta: None,
        shell: None,
        energy_trace: trace,
        accepted_trace: acc,
        acceptance_rate: rate,
        mean_energy: mean,
        stderr,
        effective_samples: ess,
        configs,
        proposal_scale: w.scale,
        entry_beta: None,
        warnings,
    }
}

fn run<F: Fn(f64, f64) -> f64>(cfg: &ChainConfig, w: &mut Walker, target: &F, check: Option<&ShellSpec>) -> Result<ChainStats> {
    let mut trace = Vec::with_capacity(cfg.n_steps - cfg.burn_in);
    let mut acc = Vec::with_capacity(cfg.n_steps - cfg.burn_in);
    let mut configs = Vec::new();
    for sweep in 0..cfg.n_steps {
        let a = w.sweep(target);
        if sweep < cfg.burn_in && (sweep + 1) % 20 == 0 {
            w.tune();
        }
        if sweep % RESYNC == RESYNC - 1 {
            w.resync();
        }
        if sweep < cfg.burn_in {
            continue;
        }
        trace.push(w.energy);
        acc.push(a);
        if (sweep - cfg.burn_in) % cfg.thinning == cfg.thinning - 1 {
            w.resync();
            if let Some(shell) = check {
                assert!(shell.contains(w.energy), "shell chain left its shell");
            }
            configs.push(w.pts.clone());
        }
    }
    Ok(finish(cfg, w, trace, acc, configs))
}

/// Metropolis–Hastings chain for `ν_β ∝ e^{−βN E^(N)} dV^⊗N`.
pub fn gibbs_mcmc(cfg: &ChainConfig, beta: f64) -> Result<ChainStats> {
    check_beta(&cfg.geom, beta, cfg.beta_floor)?;
    let mut w = start(cfg, 0)?;
    let bn = beta * cfg.n as f64;
    let target = move |e: f64, e_new: f64| -bn * (e_new - e);
    let mut stats = run(cfg, &mut w, &target, None)?;
    stats.beta = Some(beta);
    Ok(stats)
}

/// Uniform `dV^⊗N` conditioned on `E^(N)` lying in the shell.
pub fn shell_mcmc(cfg: &ChainConfig, shell: &ShellSpec) -> Result<ChainStats> {
    let mut w = start(cfg, 1)?;
    let (lo, hi) = shell.bounds();
    let n = cfg.n as f64;
    // anneal at a feedback-controlled temperature until the shell is reached
    let mut beta = cfg.entry_beta.unwrap_or(0.0);
    let floor = cfg.beta_floor.max(-1.0);
    let min_beta = if check_beta(&w.geom, 0.5 * floor, floor).is_ok() { 0.9 * floor } else { 0.0 };
    let mut step = 0.5;
    let mut last_dir = 0i32;
    let mut entered = shell.contains(w.energy);
    let mut sweeps = 0;
    while !entered {
        if sweeps >= cfg.entry_budget {
            return Err(Error::EmptyShell);
        }
        let bn = beta * n;
        let target = move |e: f64, e_new: f64| -bn * (e_new - e);
        for _ in 0..cfg.n {
            w.step(&target);
            if shell.contains(w.energy) {
                entered = true;
                break;
            }
        }
        sweeps += 1;
        if sweeps % 20 == 0 {
            w.tune();
        }
        if !entered && sweeps % 10 == 0 {
            let dir = if w.energy >= hi { 1 } else if w.energy <= lo { -1 } else { 0 };
            if dir != 0 {
                if last_dir != 0 && dir != last_dir {
                    step *= 0.5;
                }
                last_dir = dir;
                beta = (beta + dir as f64 * step * (1.0 + beta.abs())).max(min_beta);
            }
        }
    }
    w.resync();
    if !shell.contains(w.energy) {
        return Err(Error::EmptyShell);
    }
    let target = move |_e: f64, e_new: f64| if e_new > lo && e_new < hi { 0.0 } else { f64::NEG_INFINITY };
    let mut stats = run(cfg, &mut w, &target, Some(shell))?;
    if stats.accepted_trace.iter().all(|a| *a == 0) {
        return Err(Error::StuckChain("no move accepted after burn-in".into()));
    }
    stats.shell = Some(*shell);
    stats.entry_beta = Some(beta);
    Ok(stats)
}
