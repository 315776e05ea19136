//! Acceptance suite. Each criterion is one test that prints a single
//! `PASS`/`FAIL` line with its measured numbers and then asserts.
//!
//! Every criterion is written as a function of a [`Scale`]: the full scale
//! uses the stated sizes and tolerances, the smoke scale shrinks the sizes so
//! that the reproducibility check can rerun every suite twice.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use vortexlab::dynamics::{conserved_report, vortex_flow_with, VortexOptions};
use vortexlab::euler::{casimir_report, euler_integrate, random_smooth_density, stability_experiment, EulerOptions};
use vortexlab::functionals::energy_n;
use vortexlab::geometry::Surface;
use vortexlab::io::Table;
use vortexlab::meanfield::{continuation, detect_critical, linear_schedule, solve_meanfield, ThermoCurve};
use vortexlab::sampler::{
    dv_config, gibbs_seeds, marginal_estimate, rng_for, shell_seeds, thermo_integration, wang_landau, ChainConfig, ChainStats,
    ShellSpec, Side, WangLandauConfig, WlMode,
};
use vortexlab::thermo::{beta_of_e, energy_grid, legendre_s_from_f, troyanov_check, EntropyCurve, LogFanoCurveSpec};
use vortexlab::{Density, Geometry, PointConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scale {
    Full,
    Smoke,
}

impl Scale {
    fn pick<T>(self, full: T, smoke: T) -> T {
        match self {
            Scale::Full => full,
            Scale::Smoke => smoke,
        }
    }
}

/// Result of one criterion: the verdict, a human-readable summary and the
/// CSV tables it produced.
struct Outcome {
    checks: Vec<(String, bool)>,
    notes: Vec<String>,
    tables: Vec<(String, Table)>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            checks: Vec::new(),
            notes: Vec::new(),
            tables: Vec::new(),
        }
    }

    fn check(&mut self, label: impl Into<String>, ok: bool) {
        self.checks.push((label.into(), ok));
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }

    fn csv(&self) -> Vec<(String, String)> {
        self.tables.iter().map(|(n, t)| (n.clone(), t.to_csv_string())).collect()
    }
}

/// Print the verdict line outside the test harness capture and assert.
fn report(id: u32, title: &str, start: Instant, out: &Outcome) {
    let failed: Vec<&str> = out.checks.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
    let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
    let mut line = format!(
        "criterion {id:>2} {verdict} {title} [{:.1} s] {}",
        start.elapsed().as_secs_f64(),
        out.notes.join("; ")
    );
    if !failed.is_empty() {
        line.push_str(&format!(" | failed: {}", failed.join(", ")));
    }
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
    let _ = err.flush();
    assert!(failed.is_empty(), "{line}");
}

fn geom(name: &str, surface: Surface) -> Arc<Geometry> {
    Arc::new(Geometry::preset(name, Some(surface)).unwrap())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn curve_table(c: &ThermoCurve) -> Table {
    let mut t = Table::new(&["beta", "energy", "free_energy", "entropy"]);
    for s in &c.samples {
        t.push(vec![s.beta, s.e, s.f, s.s]);
    }
    t
}

fn entropy_table(s: &EntropyCurve) -> Table {
    let mut t = Table::new(&["energy", "entropy"]);
    for (e, v) in s.e.iter().zip(&s.s) {
        t.push(vec![*e, *v]);
    }
    t
}

fn entropy_of(curve: &ThermoCurve, n: usize) -> EntropyCurve {
    let es = curve.energies();
    let lo = es.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = es.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    legendre_s_from_f(curve, &energy_grid(lo, hi, n)).unwrap()
}

// ---------------------------------------------------------------- criterion 1

fn c1_beta_zero(scale: Scale) -> Outcome {
    let mut out = Outcome::new();
    let (l, n, nr) = scale.pick((24, 48, 32), (8, 16, 12));
    let cases = [
        ("sphere-round", Surface::Sphere { lmax: l }),
        ("sphere-zonal(0.5)", Surface::Sphere { lmax: l }),
        ("sphere-zonal-fano(0.5)", Surface::Sphere { lmax: l }),
        ("torus-flat", Surface::Torus { n }),
        ("torus-bump(0.5)", Surface::Torus { n }),
        ("disk-uniform", Surface::Disk { n_r: nr, n_phi: 2 * nr }),
    ];
    let mut t = Table::new(&["case", "rho_error", "free_energy", "entropy", "residual"]);
    let mut worst = 0.0f64;
    for (k, (name, s)) in cases.into_iter().enumerate() {
        let g = geom(name, s);
        let sol = solve_meanfield(&g, 0.0, None).unwrap();
        let err = sol.rho.values().iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
        let m = err.max(sol.f.abs()).max(sol.s.abs()).max(sol.residual);
        worst = worst.max(m);
        out.check(format!("{name} exact"), m <= 1e-10);
        t.push(vec![k as f64, err, sol.f, sol.s, sol.residual]);
    }
    out.note(format!("worst deviation {worst:.2e} (tol 1e-10) over six presets"));
    out.table("beta_zero.csv", t);
    out
}

#[test]
fn criterion_01_exactness_at_beta_zero() {
    let s = Instant::now();
    report(1, "exactness at beta = 0", s, &c1_beta_zero(Scale::Full));
}

// ---------------------------------------------------------------- criterion 2

fn c2_round_sphere_flat(scale: Scale) -> Outcome {
    let mut out = Outcome::new();
    let g = geom("sphere-round", Surface::Sphere { lmax: scale.pick(24, 8) });
    let curve = continuation(&g, &linear_schedule(10.0, -0.9, scale.pick(80, 12))).unwrap();
    let e = curve.energies();
    let spread = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - e.iter().cloned().fold(f64::INFINITY, f64::min);
    out.check("continuation reaches -0.9", curve.samples.last().is_some_and(|s| (s.beta + 0.9).abs() < 1e-12));
    out.check("e(beta) constant", spread <= 1e-8);
    out.note(format!("max |e(b) - e(b')| = {spread:.2e} over {} samples (tol 1e-8)", e.len()));
    out.table("round_sphere_curve.csv", curve_table(&curve));
    out
}

#[test]
fn criterion_02_round_sphere_energy_is_flat() {
    let s = Instant::now();
    report(2, "degenerate round sphere", s, &c2_round_sphere_flat(Scale::Full));
}

// ---------------------------------------------------------------- criterion 3

fn c3_monotone_concave(scale: Scale) -> Outcome {
    let mut out = Outcome::new();
    let cases = [
        ("torus-bump(0.5)", Surface::Torus { n: scale.pick(48, 16) }, 0.0),
        ("sphere-zonal(0.5)", Surface::Sphere { lmax: scale.pick(24, 8) }, -0.5),
    ];
    for (name, surface, lo) in cases {
        let g = geom(name, surface);
        let e0 = g.e0();
        let curve = continuation(&g, &linear_schedule(10.0, lo, scale.pick(81, 16))).unwrap();
        out.check(format!("{name} reaches beta = {lo}"), curve.failure.is_none());
        let e = curve.energies();
        let b = curve.betas();
        let f = curve.free_energies();
        // samples come in decreasing β, so e must increase along them
        let decreasing = e.windows(2).all(|w| w[1] > w[0]);
        out.check(format!("{name} e strictly decreasing"), decreasing);
        let d2 = (1..b.len() - 1)
            .map(|i| {
                let s1 = (f[i] - f[i - 1]) / (b[i] - b[i - 1]);
                let s2 = (f[i + 1] - f[i]) / (b[i + 1] - b[i]);
                2.0 * (s2 - s1) / (b[i + 1] - b[i - 1])
            })
            .fold(f64::NEG_INFINITY, f64::max);
        out.check(format!("{name} F concave"), d2 <= 1e-6);
        let s = entropy_of(&curve, scale.pick(401, 101));
        let covers = s.e[0] <= 0.1 * e0;
        out.check(format!("{name} energy range covers 0.1 e0"), covers);
        let concave = s.strictly_concave_on(0.1 * e0, 0.9 * e0);
        out.check(format!("{name} S strictly concave on [0.1e0, 0.9e0]"), concave);
        let beta_e0 = beta_of_e(&s, e0).unwrap();
        out.check(format!("{name} beta(e0) = 0"), beta_e0.abs() <= 1e-3);
        let step = s.e[1] - s.e[0];
        let am = s.argmax();
        out.check(format!("{name} argmax S = e0"), (am - e0).abs() <= step * (1.0 + 1e-9));
        out.note(format!(
            "{name}: max F'' = {d2:.1e}, beta(e0) = {beta_e0:.1e}, argmax S - e0 = {:.1e} (step {step:.1e})",
            am - e0
        ));
        let tag = name.split('(').next().unwrap();
        out.table(&format!("{tag}_curve.csv"), curve_table(&curve));
        out.table(&format!("{tag}_entropy.csv"), entropy_table(&s));
    }
    out
}

#[test]
fn criterion_03_monotonicity_and_concavity() {
    let s = Instant::now();
    report(3, "monotonicity and concavity", s, &c3_monotone_concave(Scale::Full));
}

// ---------------------------------------------------------------- criterion 4

fn c4_disk_threshold(scale: Scale) -> Outcome {
    let mut out = Outcome::new();
    let g = geom("disk-uniform", Surface::Disk { n_r: scale.pick(48, 16), n_phi: 16 });
    let curve = continuation(&g, &linear_schedule(0.0, -1.0, scale.pick(41, 11))).unwrap();
    let bs = curve.beta_star.unwrap_or(f64::NAN);
    out.check("beta_* in [-1.05, -0.95]", (-1.05..=-0.95).contains(&bs));
    let e = curve.energies();
    out.check("e increasing toward beta_*", e.windows(2).all(|w| w[1] > w[0]));
    let crit = detect_critical(&curve);
    let unbounded = crit.as_ref().map(|c| c.e_c.is_infinite()).unwrap_or(false);
    out.check("e(beta) unbounded", unbounded);
    out.note(format!(
        "beta_* = {bs:.4}, last e = {:.3}, blow-up indicator {:.2}",
        e.last().unwrap(),
        crit.map(|c| c.blow_up_indicator).unwrap_or(f64::NAN)
    ));
    out.table("disk_curve.csv", curve_table(&curve));
    out
}

#[test]
fn criterion_04_disk_critical_temperature() {
    let s = Instant::now();
    report(4, "disk critical temperature", s, &c4_disk_threshold(Scale::Full));
}

// ---------------------------------------------------------------- criterion 5

/// Exhaustive enumeration of ordered pairs of distinct lattice nodes.
fn pair_masses(g: &Arc<Geometry>, edges: &[f64]) -> Vec<f64> {
    let (nodes, w) = (g.nodes(), g.weights());
    let mut mass = vec![0.0; edges.len() + 1];
    for i in 0..nodes.len() {
        for j in 0..nodes.len() {
            if i == j {
                continue;
            }
            let e = energy_n(&PointConfig::new(g.clone(), vec![nodes[i], nodes[j]]).unwrap()).unwrap();
            mass[edges.partition_point(|x| *x <= e)] += w[i] * w[j];
        }
    }
    mass
}

fn c5_wang_landau_pairs(scale: Scale) -> Outcome {
    let mut out = Outcome::new();
    let g = geom("torus-bump(0.5)", Surface::Torus { n: scale.pick(16, 8) });
    // energy range from the exhaustive list itself
    let (nodes, mut lo, mut hi) = (g.nodes(), f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let e = energy_n(&PointConfig::new(g.clone(), vec![nodes[i], nodes[j]]).unwrap()).unwrap();
            lo = lo.min(e);
            hi = hi.max(e);
        }
    }
    let bins = scale.pick(24, 8);
    let edges: Vec<f64> = (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect();
    let mut edges = edges;
    edges[0] -= 1e-9;
    edges[bins] += 1e-9;
    let mut cfg = WangLandauConfig::new(2, edges.clone(), 5, WlMode::Lattice);
    cfg.ln_f_final = scale.pick(1e-6, 1e-4);
    cfg.check_every = 200;
    let dos = wang_landau(&g, &cfg).unwrap();
    let exact = pair_masses(&g, &edges);
    let total: f64 = exact.iter().sum();
    let mut t = Table::new(&["e_center", "s_wang_landau", "s_exact", "relative_mass"]);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (b, c) in dos.bin_centers().iter().enumerate() {
        let m = exact[b + 1];
        let s = 0.5 * m.ln();
        if m >= 1e-6 * total {
            worst = worst.max((dos.s_bin[b] - s).abs());
            checked += 1;
        }
        t.push(vec![*c, dos.s_bin[b], s, m / total]);
    }
    out.check("mass outside the range", exact[0] == 0.0 && exact[bins + 1] == 0.0);
    out.check("|s_WL - s_exact| <= 0.02", worst <= 0.02);
    out.note(format!("max |s_WL - s_exact| = {worst:.4} over {checked} bins (tol 0.02), {} sweeps", dos.sweeps));
    out.table("pair_dos.csv", t);
    out
}

#[test]
fn criterion_05_wang_landau_oracle() {
    let s = Instant::now();
    report(5, "Wang-Landau vs enumeration, N = 2", s, &c5_wang_landau_pairs(Scale::Full));
}

// ---------------------------------------------------------------- criterion 6

const BANDWIDTH: f64 = 0.05;

struct Ladder {
    ns: Vec<usize>,
    medians: Vec<f64>,
    tables: Vec<(String, Table)>,
    beta_e: f64,
    entropy: EntropyCurve,
    torus: Arc<Geometry>,
}

fn chain_base(g: &Arc<Geometry>, n: usize, scale: Scale) -> ChainConfig {
    let mut c = ChainConfig::new(g.clone(), n, 0);
    c.n_steps = scale.pick(1200, 200);
    c.burn_in = scale.pick(200, 50);
    c.thinning = scale.pick(10, 5);
    c
}

fn seeds(k: usize, base: u64) -> Vec<u64> {
    (0..k as u64).map(|s| base + s).collect()
}

fn marginal_distances(chains: &[ChainStats], target: &[f64]) -> Vec<f64> {
    chains
        .iter()
        .map(|c| {
            let m = marginal_estimate(c, BANDWIDTH).unwrap();
            c.geom.hminus_distance(m.values(), target).unwrap()
        })
        .collect()
}

fn shell_ladder(scale: Scale) -> Ladder {
    let g = geom("torus-bump(0.5)", Surface::Torus { n: scale.pick(32, 16) });
    let e0 = g.e0();
    let curve = continuation(&g, &linear_schedule(40.0, 0.0, scale.pick(121, 30))).unwrap();
    let entropy = entropy_of(&curve, scale.pick(801, 201));
    let e = 0.5 * e0;
    let beta_e = beta_of_e(&entropy, e).unwrap();
    let target = solve_meanfield(&g, beta_e, None).unwrap();
    let smooth_target = g.smooth(target.rho.values(), BANDWIDTH).unwrap();
    let shell = ShellSpec::new(e, 0.05 * e0, Side::Lower).unwrap();
    let ns = scale.pick(vec![32, 64, 128, 256], vec![8, 16]);
    let k = scale.pick(10, 2);
    let mut medians = Vec::new();
    let mut t = Table::new(&["n", "seed", "hminus_distance", "mean_energy", "acceptance"]);
    for &n in &ns {
        let mut base = chain_base(&g, n, scale);
        base.entry_beta = Some(beta_e);
        let chains = shell_seeds(&base, &shell, &seeds(k, 100)).unwrap();
        let d = marginal_distances(&chains, &smooth_target);
        for (c, di) in chains.iter().zip(&d) {
            t.push(vec![n as f64, c.seed as f64, *di, c.mean_energy, c.acceptance_rate]);
        }
        medians.push(median(d));
    }
    Ladder {
        ns,
        medians,
        tables: vec![("shell_ladder.csv".into(), t), ("ladder_entropy.csv".into(), entropy_table(&entropy))],
        beta_e,
        entropy,
        torus: g,
    }
}

static LADDER: OnceLock<Ladder> = OnceLock::new();

fn ladder() -> &'static Ladder {
    LADDER.get_or_init(|| shell_ladder(Scale::Full))
}

fn c6_shell_vs_meanfield(scale: Scale, ladder: &Ladder) -> Outcome {
    let mut out = Outcome::new();
    for (name, t) in &ladder.tables {
        out.table(name, t.clone());
    }
    let dec = ladder.medians.windows(2).all(|w| w[1] < w[0]);
    out.check("median distance strictly decreasing in N", dec);
    out.note(format!(
        "beta(0.5 e0) = {:.4}; medians {}",
        ladder.beta_e,
        ladder
            .ns
            .iter()
            .zip(&ladder.medians)
            .map(|(n, m)| format!("N={n}: {m:.3e}"))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    // Wang–Landau entropy at N = 64 against the Legendre entropy
    let g = &ladder.torus;
    let e0 = g.e0();
    let bins = scale.pick(34, 10);
    let (lo, hi) = (0.15 * e0, 1.0 * e0);
    let edges: Vec<f64> = (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect();
    let mut cfg = WangLandauConfig::new(scale.pick(64, 16), edges.clone(), 17, WlMode::Continuous);
    cfg.ln_f_final = scale.pick(1e-5, 1e-3);
    let dos = wang_landau(g, &cfg).unwrap();
    let mut t = Table::new(&["energy", "s_wang_landau", "s_legendre"]);
    let mut worst = 0.0f64;
    for k in 0..bins {
        let e = edges[k + 1];
        let s_wl = dos.s_cumulative[k];
        let s_lg = ladder.entropy.value_at(e).unwrap_or(f64::NAN);
        if (0.2 * e0 - 1e-12..=0.9 * e0 + 1e-12).contains(&e) {
            worst = worst.max((s_wl - s_lg).abs());
        }
        t.push(vec![e, s_wl, s_lg]);
    }
    out.check("|s_64 - S| <= 0.1 on [0.2e0, 0.9e0]", worst <= 0.1);
    out.note(format!("max |s_64 - S| = {worst:.4} (tol 0.1), {} sweeps", dos.sweeps));
    out.table("wl_entropy.csv", t);
    out
}

#[test]
fn criterion_06_shell_vs_meanfield() {
    let s = Instant::now();
    report(6, "shell marginals vs mean field", s, &c6_shell_vs_meanfield(Scale::Full, ladder()));
}

// ---------------------------------------------------------------- criterion 7

fn c7_negative_temperature(scale: Scale, ladder: &Ladder) -> Outcome {
    let mut out = Outcome::new();
    let g = geom("sphere-zonal-fano(0.5)", Surface::Sphere { lmax: scale.pick(24, 10) });
    let e0 = g.e0();
    let curve = continuation(&g, &linear_schedule(4.0, -0.98, scale.pick(100, 30))).unwrap();
    let crit = detect_critical(&curve).unwrap();
    let e = 1.1 * e0;
    out.check("1.1 e0 below e_c", e < crit.e_c);
    let entropy = entropy_of(&curve, scale.pick(801, 201));
    let beta = beta_of_e(&entropy, e).unwrap();
    out.check("beta(1.1 e0) < 0", beta < 0.0);
    let n = scale.pick(64, 16);
    let k = scale.pick(10, 2);
    let base = chain_base(&g, n, scale);
    let gibbs = gibbs_seeds(&base, beta, &seeds(k, 200)).unwrap();
    let mut sbase = base.clone();
    sbase.entry_beta = Some(beta);
    let shell = ShellSpec::new(e, 0.05 * e0, Side::Upper).unwrap();
    let micro = shell_seeds(&sbase, &shell, &seeds(k, 300)).unwrap();
    let mut t = Table::new(&["pair", "hminus_distance", "gibbs_mean_energy", "shell_mean_energy"]);
    let mut d = Vec::new();
    for (i, (a, b)) in gibbs.iter().zip(&micro).enumerate() {
        let ma = marginal_estimate(a, BANDWIDTH).unwrap();
        let mb = marginal_estimate(b, BANDWIDTH).unwrap();
        let di = g.hminus_distance(ma.values(), mb.values()).unwrap();
        t.push(vec![i as f64, di, a.mean_energy, b.mean_energy]);
        d.push(di);
    }
    let dm = median(d);
    let reference = ladder.ns.iter().position(|&m| m == n).map(|i| ladder.medians[i]).unwrap_or(ladder.medians[0]);
    out.check("Gibbs and shell marginals within 2x the shell-ladder distance", dm <= 2.0 * reference);
    let gibbs_e = gibbs.iter().map(|c| c.mean_energy).sum::<f64>() / gibbs.len() as f64;
    out.note(format!(
        "e_c = {:.4}, 1.1 e0 = {e:.4}, beta(e) = {beta:.4}, median distance {dm:.3e} vs 2 x {reference:.3e}; \
         Gibbs mean energy {gibbs_e:.4} (N x offset = {:.2})",
        crit.e_c,
        n as f64 * (gibbs_e - e)
    ));
    out.table("fano_curve.csv", curve_table(&curve));
    out.table("ensemble_pairs.csv", t);
    out
}

#[test]
fn criterion_07_negative_temperature() {
    let s = Instant::now();
    report(7, "negative temperature ensembles", s, &c7_negative_temperature(Scale::Full, ladder()));
}

// ---------------------------------------------------------------- criterion 8

fn c8_thermo_integration(scale: Scale) -> Outcome {
    let mut out = Outcome::new();
    let g = geom("torus-bump(0.5)", Surface::Torus { n: scale.pick(32, 16) });
    let n = scale.pick(64, 16);
    let mut base = ChainConfig::new(g.clone(), n, 0);
    base.n_steps = scale.pick(3000, 300);
    base.burn_in = scale.pick(500, 100);
    let steps = scale.pick(20, 4);
    let grid: Vec<f64> = (0..=steps).map(|k| 2.0 * k as f64 / steps as f64).collect();
    let table = thermo_integration(&base, &grid, &seeds(scale.pick(4, 2), 400)).unwrap();
    let mut t = Table::new(&["beta", "minus_log_z", "stderr", "free_energy"]);
    for r in &table.rows {
        let f = solve_meanfield(&g, r.beta, None).unwrap().f;
        t.push(vec![r.beta, -r.log_z, r.log_z_stderr, f]);
        if [0.5, 1.0, 2.0].iter().any(|b| (r.beta - b).abs() < 1e-12) {
            let gap = (-r.log_z - f).abs();
            let allowed = 3.0 * r.log_z_stderr + 0.01;
            out.check(format!("beta = {}", r.beta), gap <= allowed);
            out.note(format!(
                "beta {}: |-log Z/N - F| = {gap:.4} (allowed {allowed:.4}, N x gap = {:.2})",
                r.beta,
                n as f64 * gap
            ));
        }
    }
    out.note(format!("quadrature error {:.1e}", table.quadrature_error));
    out.table("thermo_integration.csv", t);
    out
}

#[test]
fn criterion_08_thermodynamic_integration() {
    let s = Instant::now();
    report(8, "thermodynamic integration", s, &c8_thermo_integration(Scale::Full));
}

// ---------------------------------------------------------------- criterion 9

fn unit(v: [f64; 3]) -> [f64; 3] {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / r, v[1] / r, v[2] / r]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn c9_vortex_dynamics(scale: Scale) -> Outcome {
    let mut out = Outcome::new();
    let round = geom("sphere-round", Surface::Sphere { lmax: 8 });
    let t_final = scale.pick(10.0, 1.0);
    // two vortices: on the round sphere the pair energy is −log(1 − d) + const,
    // so the pair rotates about its midpoint at Ω = 8π √(2(1+d)) / (1 − d)
    let mut t = Table::new(&["d", "omega_closed_form", "omega_measured", "relative_error"]);
    let mut worst = 0.0f64;
    for &d in &[-0.5, 0.0, 0.6] {
        let a = f64::acos(d);
        let x1 = unit([0.3, -0.2, 0.9]);
        let side = unit(cross(&x1, &[0.0, 1.0, 0.0]));
        let x2 = unit([
            x1[0] * a.cos() + side[0] * a.sin(),
            x1[1] * a.cos() + side[1] * a.sin(),
            x1[2] * a.cos() + side[2] * a.sin(),
        ]);
        let omega = 8.0 * PI * (2.0 * (1.0 + d)).sqrt() / (1.0 - d);
        let stamps = (omega * t_final).ceil() as usize * 2;
        let opts = VortexOptions {
            tol: 1e-11,
            stamps,
            ..VortexOptions::default()
        };
        let c = PointConfig::new(round.clone(), vec![x1, x2]).unwrap();
        let tr = vortex_flow_with(&c, t_final, &opts).unwrap();
        let m = unit([x1[0] + x2[0], x1[1] + x2[1], x1[2] + x2[2]]);
        let s = dot(&x1, &m);
        let e1 = unit([x1[0] - s * m[0], x1[1] - s * m[1], x1[2] - s * m[2]]);
        let e2 = cross(&m, &e1);
        let (mut total, mut prev) = (0.0, 0.0);
        for cfg in &tr.configs {
            let p = cfg.points()[0];
            let ang = dot(&p, &e2).atan2(dot(&p, &e1));
            let mut step = ang - prev;
            step -= 2.0 * PI * (step / (2.0 * PI)).round();
            total += step;
            prev = ang;
        }
        let measured = total / t_final;
        let rel = (measured - omega).abs() / omega;
        worst = worst.max(rel);
        t.push(vec![d, omega, measured, rel]);
    }
    out.check("two-vortex rate within 1e-6", worst <= 1e-6);
    out.note(format!("two-vortex relative rate error {worst:.1e} (tol 1e-6)"));
    out.table("two_vortex.csv", t);

    let n = scale.pick(20, 8);
    let mut t = Table::new(&["case", "energy_drift", "moment_drift", "min_distance"]);
    let cases = [
        geom("sphere-round", Surface::Sphere { lmax: 8 }),
        geom("sphere-zonal-fano(0.4)", Surface::Sphere { lmax: 16 }),
        geom("torus-bump(0.5)", Surface::Torus { n: 32 }),
    ];
    for (k, g) in cases.iter().enumerate() {
        let pts = dv_config(g, n, &mut rng_for(21, 0));
        let c = PointConfig::new(g.clone(), pts).unwrap();
        let tr = vortex_flow_with(
            &c,
            t_final,
            &VortexOptions {
                max_refinements: 0,
                ..VortexOptions::with_tol(1e-8)
            },
        )
        .unwrap();
        let r = conserved_report(&tr);
        out.check(format!("case {k} ran to T"), tr.halted.is_none());
        out.check(format!("case {k} energy drift <= 1e-6"), r.energy_drift <= 1e-6);
        if let Some(md) = r.moment_drift {
            out.check("round-sphere moment drift <= 1e-6", md <= 1e-6);
            out.note(format!("round sphere: energy drift {:.1e}, moment drift {md:.1e}", r.energy_drift));
        } else {
            out.note(format!("case {k}: energy drift {:.1e}", r.energy_drift));
        }
        t.push(vec![k as f64, r.energy_drift, r.moment_drift.unwrap_or(f64::NAN), r.min_distance]);
    }
    out.table("vortex_drift.csv", t);
    out
}

#[test]
fn criterion_09_vortex_dynamics() {
    let s = Instant::now();
    report(9, "point-vortex dynamics", s, &c9_vortex_dynamics(Scale::Full));
}

// ---------------------------------------------------------------- criterion 10

fn c10_euler(scale: Scale) -> Outcome {
    let mut out = Outcome::new();
    let opts = |dt: f64, stamps: usize| EulerOptions {
        dt,
        stamps,
        ..EulerOptions::default()
    };
    let n_ref = scale.pick(128, 32);
    let t_final = scale.pick(5.0, 1.0);
    let mut t = Table::new(&["case", "n", "energy", "i2", "i3", "entropy", "sup_rho", "inf_rho"]);
    let mut refinement = Vec::new();
    // the flat torus is the reference case; the bump background is reported
    // alongside it without gating the verdict
    for (k, (name, gating)) in [("torus-flat", true), ("torus-bump(0.5)", false)].into_iter().enumerate() {
        for n in [n_ref / 2, n_ref] {
            let g = geom(name, Surface::Torus { n });
            let rho = random_smooth_density(&g, 7, 0.05).unwrap();
            let run = euler_integrate(&rho, t_final, &opts(0.05, 10)).unwrap();
            let d = casimir_report(&run.report);
            t.push(vec![k as f64, n as f64, d.energy, d.i2, d.i3, d.entropy, d.sup_rho, d.inf_rho]);
            if gating {
                refinement.push(d.i3.max(d.entropy));
            }
            if n == n_ref {
                if gating {
                    out.check(format!("{name} drifts <= 1e-4"), d.worst() <= 1e-4);
                    out.check(format!("{name} sup/inf drift <= 1e-3"), d.sup_rho.max(d.inf_rho) <= 1e-3);
                }
                out.note(format!(
                    "{name} {n}^2{}: worst Casimir drift {:.1e}, sup/inf drift {:.1e}",
                    if gating { "" } else { " (informational)" },
                    d.worst(),
                    d.sup_rho.max(d.inf_rho)
                ));
            }
        }
    }
    out.check("drifts shrink under refinement", refinement[1] < refinement[0]);
    out.table("casimir_drift.csv", t);

    // stationary states
    let g = geom("torus-bump(0.5)", Surface::Torus { n: scale.pick(64, 16) });
    let mf = solve_meanfield(&g, 1.0, None).unwrap();
    let run = euler_integrate(&mf.rho, t_final, &opts(0.05, 10)).unwrap();
    let d_mf = run
        .states
        .iter()
        .map(|s| g.hminus_distance(s.rho.values(), mf.rho.values()).unwrap())
        .fold(0.0, f64::max);
    out.check("mean-field state stationary to 1e-6", d_mf <= 1e-6);
    let mut worst_stat = 0.0f64;
    let stationary: Vec<Density> = vec![
        Density::uniform(geom("torus-flat", Surface::Torus { n: 32 })),
        Density::uniform(geom("sphere-round", Surface::Sphere { lmax: 12 })),
        {
            let s = geom("sphere-zonal(0.4)", Surface::Sphere { lmax: 16 });
            let v: Vec<f64> = s.nodes().iter().map(|p| 1.0 + 0.3 * p[2] + 0.2 * p[2] * p[2]).collect();
            Density::normalized(s, v).unwrap()
        },
    ];
    for rho in &stationary {
        let run = euler_integrate(rho, scale.pick(2.0, 0.5), &opts(0.02, 4)).unwrap();
        let last = run.states.last().unwrap();
        worst_stat = worst_stat.max(max_abs_diff(last.rho.values(), rho.values()));
    }
    out.check("uniform and zonal states stationary", worst_stat <= 1e-12);
    out.note(format!("mean-field H^-1 drift {d_mf:.1e}, uniform/zonal max change {worst_stat:.1e}"));
    out
}

#[test]
fn criterion_10_euler_conservation() {
    let s = Instant::now();
    report(10, "Euler conservation and stationarity", s, &c10_euler(Scale::Full));
}

// ---------------------------------------------------------------- criterion 11

fn c11_stability(scale: Scale) -> Outcome {
    let mut out = Outcome::new();
    let g = geom("torus-bump(0.5)", Surface::Torus { n: scale.pick(64, 16) });
    let rho = random_smooth_density(&g, 2, 0.3).unwrap();
    let opts = |dt: f64| EulerOptions {
        dt,
        stamps: 30,
        ..EulerOptions::default()
    };
    let t_final = scale.pick(3.0, 0.5);
    let same = stability_experiment(&rho, &rho, t_final, &opts(0.05)).unwrap();
    out.check("identical data stay at distance 0", same.distances.iter().all(|d| *d == 0.0));
    let pert = random_smooth_density(&g, 9, 0.9).unwrap();
    let vals: Vec<f64> = rho.values().iter().zip(pert.values()).map(|(a, p)| a + 1e-4 * (p - 1.0)).collect();
    let rho_b = Density::normalized(g.clone(), vals).unwrap();
    let coarse = stability_experiment(&rho, &rho_b, t_final, &opts(0.05)).unwrap();
    let fine = stability_experiment(&rho, &rho_b, t_final, &opts(0.025)).unwrap();
    out.check("finite C_fit", coarse.c_fit.is_finite() && fine.c_fit.is_finite());
    out.check("dominated by d(0) exp(C t)", coarse.dominated && fine.dominated);
    let rel = (fine.c_fit - coarse.c_fit).abs() / coarse.c_fit.abs();
    out.check("C_fit stable to 20% under dt halving", rel <= 0.2);
    out.note(format!(
        "C_fit = {:.4} (dt 0.05), {:.4} (dt 0.025), change {:.1}%",
        coarse.c_fit,
        fine.c_fit,
        100.0 * rel
    ));
    let mut t = Table::new(&["t", "distance_dt_0.05", "distance_dt_0.025"]);
    for k in 0..coarse.times.len() {
        t.push(vec![coarse.times[k], coarse.distances[k], fine.distances[k]]);
    }
    out.table("stability.csv", t);
    out
}

#[test]
fn criterion_11_hminus_stability() {
    let s = Instant::now();
    report(11, "H^-1 stability", s, &c11_stability(Scale::Full));
}

// ---------------------------------------------------------------- criterion 12

fn c12_logfano(_scale: Scale) -> Outcome {
    let mut out = Outcome::new();
    let mut t = Table::new(&["example", "polystable", "r"]);
    let cases: [(&[f64], bool, f64); 3] = [(&[0.5, 0.5, 0.5], true, 1.0), (&[0.9, 0.3, 0.3], false, 0.4), (&[0.5, 0.5], true, 1.0)];
    for (k, (w, poly, r)) in cases.into_iter().enumerate() {
        let v = troyanov_check(&LogFanoCurveSpec { weights: w.to_vec() }).unwrap();
        out.check(format!("{w:?}"), v.polystable == poly && (v.r - r).abs() <= 1e-12);
        t.push(vec![k as f64, if v.polystable { 1.0 } else { 0.0 }, v.r]);
    }
    out.note("three weighted-sphere examples reproduced");
    out.table("logfano.csv", t);
    out
}

#[test]
fn criterion_12_logfano() {
    let s = Instant::now();
    report(12, "log-Fano criteria", s, &c12_logfano(Scale::Full));
}

// ---------------------------------------------------------------- criterion 13

fn all_suites(scale: Scale) -> Vec<(String, String)> {
    let ladder = shell_ladder(scale);
    let outcomes = [
        c1_beta_zero(scale),
        c2_round_sphere_flat(scale),
        c3_monotone_concave(scale),
        c4_disk_threshold(scale),
        c5_wang_landau_pairs(scale),
        c6_shell_vs_meanfield(scale, &ladder),
        c7_negative_temperature(scale, &ladder),
        c8_thermo_integration(scale),
        c9_vortex_dynamics(scale),
        c10_euler(scale),
        c11_stability(scale),
        c12_logfano(scale),
    ];
    outcomes.iter().flat_map(|o| o.csv()).collect()
}

#[test]
fn criterion_13_reproducibility() {
    let s = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = pool.install(|| all_suites(Scale::Smoke));
    let b = pool.install(|| all_suites(Scale::Smoke));
    let mut out = Outcome::new();
    out.check("same file list", a.len() == b.len());
    let mut differing = Vec::new();
    for ((na, ca), (nb, cb)) in a.iter().zip(&b) {
        if na != nb || ca != cb {
            differing.push(na.clone());
        }
    }
    out.check(format!("bitwise identical CSVs ({})", differing.join(", ")), differing.is_empty());
    out.note(format!(
        "{} CSV files from all suites at reduced size, run twice on one thread: {} differ",
        a.len(),
        differing.len()
    ));
    report(13, "reproducibility", s, &out);
}
