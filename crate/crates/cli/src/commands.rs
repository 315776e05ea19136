//! One function per subcommand.

use std::fs;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use vortexlab::dynamics::{conserved_report, time_average_density, vortex_flow_with, VortexTrajectory};
use vortexlab::euler::{casimir_report, euler_integrate, random_smooth_density, stability_experiment, EulerRunReport};
use vortexlab::io::Table;
use vortexlab::meanfield::{continuation_with, detect_critical, linear_schedule, solve_with, ContinuationOptions, SolverOptions};
use vortexlab::sampler::{
    concentration_probe, dv_config, gibbs_seeds, marginal_estimate, rng_for, shell_seeds, thermo_integration, wang_landau,
    ChainConfig, ChainStats, ConcentrationSummary, ShellSpec, WangLandauConfig,
};
use vortexlab::thermo::{energy_grid, legendre_s_from_f, troyanov_check, LogFanoCurveSpec};
use vortexlab::{Density, Error, Geometry, PointConfig, Result};

use crate::config::{InitialDensity, RunConfig};
use crate::manifest::{sha256_hex, Manifest, Normalization, OutputDir};
use crate::{Cli, Command, Ensemble, Flow};

/// What a successful invocation produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Text for standard output.
    pub stdout: String,
    pub manifest: Option<Manifest>,
}

/// Run the parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Schema => {
            return Ok(Outcome {
                stdout: pretty(&crate::config::schema())?,
                manifest: None,
            })
        }
        Command::Logfano { weights } => {
            let v = troyanov_check(&LogFanoCurveSpec { weights: weights.clone() })?;
            let out = json!({"polystable": v.polystable, "R": v.r, "R_raw": v.r_raw, "clamped": v.clamped});
            return Ok(Outcome {
                stdout: pretty(&out)?,
                manifest: None,
            });
        }
        _ => {}
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::ConfigInvalid(format!("{} needs --config", cli.command.name())))?;
    let text = fs::read_to_string(path)?;
    let cfg = RunConfig::parse(&text)?;
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    pool.install(|| execute(cli, &cfg, pool.current_num_threads()))
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
    s.as_ref()
        .ok_or_else(|| Error::ConfigInvalid(format!("configuration has no `{name}` section")))
}

/// Per-command results handed back to the manifest writer.
#[derive(Default)]
struct Record {
    seeds: Vec<u64>,
    steps: Option<u64>,
    warnings: Vec<String>,
}

fn execute(cli: &Cli, cfg: &RunConfig, threads: usize) -> Result<Outcome> {
    let start = Instant::now();
    let geom = cfg.geometry.build()?;
    if cli.validate_only {
        check_sections(&cli.command, cfg)?;
        let report = json!({
            "valid": true,
            "command": cli.command.name(),
            "geometry_fingerprint": geom.fingerprint(),
            "nodes": geom.len(),
            "normalization": Normalization::of(&geom),
        });
        return Ok(Outcome {
            stdout: pretty(&report)?,
            manifest: None,
        });
    }
    let mut out = OutputDir::create(&cli.out)?;
    let rec = match &cli.command {
        Command::GeometryCheck => geometry_check(&geom, &mut out)?,
        Command::Meanfield => meanfield(&geom, cfg, &mut out)?,
        Command::ThermoCurve => thermo_curve(&geom, cfg, &mut out)?,
        Command::Sample { ensemble } => sample(&geom, cfg, ensemble, &mut out)?,
        Command::WangLandau => run_wang_landau(&geom, cfg, &mut out)?,
        Command::ThermoIntegrate => thermo_integrate(&geom, cfg, &mut out)?,
        Command::Dynamics { flow: Flow::Vortex } => vortex(&geom, cfg, &mut out)?,
        Command::Dynamics { flow: Flow::Euler } => euler(&geom, cfg, &mut out)?,
        Command::Stability => stability(&geom, cfg, &mut out)?,
        Command::Logfano { .. } | Command::Schema => unreachable!("handled before configuration is read"),
    };
    let config = serde_json::to_value(cfg).map_err(|e| Error::Io(e.to_string()))?;
    let manifest = Manifest {
        tool: "vortexlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.command.name(),
        config_sha256: sha256_hex(cfg.canonical_json().as_bytes()),
        config,
        geometry_fingerprint: geom.fingerprint(),
        seeds: rec.seeds,
        normalization: Normalization::of(&geom),
        outputs: out.entries().to_vec(),
        steps: rec.steps,
        threads,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        warnings: rec.warnings,
    };
    let stdout = format!(
        "{}: wrote {} files to {}",
        manifest.command,
        manifest.outputs.len() + 1,
        out.root().display()
    );
    out.finish(&manifest)?;
    Ok(Outcome {
        stdout,
        manifest: Some(manifest),
    })
}

fn check_sections(cmd: &Command, cfg: &RunConfig) -> Result<()> {
    match cmd {
        Command::Meanfield => section(&cfg.meanfield, "meanfield").map(drop),
        Command::ThermoCurve => section(&cfg.thermo_curve, "thermo_curve").map(drop),
        Command::Sample { ensemble } => {
            let s = section(&cfg.sample, "sample")?;
            match ensemble {
                Ensemble::Gibbs { .. } if s.beta.is_none() => Err(Error::ConfigInvalid("sample.beta is required".into())),
                Ensemble::Shell { .. } if s.shell.is_none() => Err(Error::ConfigInvalid("sample.shell is required".into())),
                _ => Ok(()),
            }
        }
        Command::WangLandau => section(&cfg.wang_landau, "wang_landau").map(drop),
        Command::ThermoIntegrate => section(&cfg.thermo_integrate, "thermo_integrate").map(drop),
        Command::Dynamics { flow: Flow::Vortex } => section(&cfg.vortex, "vortex").map(drop),
        Command::Dynamics { flow: Flow::Euler } => section(&cfg.euler, "euler").map(drop),
        Command::Stability => section(&cfg.stability, "stability").map(drop),
        _ => Ok(()),
    }
}

fn field_table(geom: &Geometry, columns: &[(&str, &[f64])]) -> Table {
    let mut header = vec!["x", "y", "z"];
    header.extend(columns.iter().map(|c| c.0));
    let mut t = Table::new(&header);
    for (i, p) in geom.nodes().iter().enumerate() {
        let mut row = p.to_vec();
        row.extend(columns.iter().map(|c| c.1[i]));
        t.push(row);
    }
    t
}

fn geometry_check(geom: &Arc<Geometry>, out: &mut OutputDir) -> Result<Record> {
    out.json(
        "geometry.json",
        &json!({
            "spec": geom.spec(),
            "kind": geom.kind(),
            "nodes": geom.len(),
            "fingerprint": geom.fingerprint(),
            "normalization": Normalization::of(geom),
            "kernel_constants": geom.kernel_constants(),
            "cell_radius": geom.cell_radius(),
            "collision_floor": geom.collision_floor(),
            "total_dv": geom.integrate(&vec![1.0; geom.len()]),
            "total_theta": geom.integrate(geom.h()),
        }),
    )?;
    out.table(
        "nodes.csv",
        &field_table(geom, &[("weight", geom.weights()), ("dv", geom.dv()), ("h", geom.h())]),
    )?;
    Ok(Record::default())
}

fn meanfield(geom: &Arc<Geometry>, cfg: &RunConfig, out: &mut OutputDir) -> Result<Record> {
    let m = section(&cfg.meanfield, "meanfield")?;
    let sol = solve_with(geom, m.beta, None, &m.solver)?;
    out.table("meanfield.csv", &field_table(geom, &[("rho", sol.rho.values()), ("u", &sol.u)]))?;
    out.json(
        "meanfield.json",
        &json!({
            "beta": sol.beta,
            "energy": sol.e,
            "entropy": sol.s,
            "free_energy": sol.f,
            "newton_iterations": sol.newton_iterations,
            "residual": sol.residual,
        }),
    )?;
    Ok(Record {
        steps: Some(sol.newton_iterations as u64),
        ..Record::default()
    })
}

fn thermo_curve(geom: &Arc<Geometry>, cfg: &RunConfig, out: &mut OutputDir) -> Result<Record> {
    let tc = section(&cfg.thermo_curve, "thermo_curve")?;
    let opts = ContinuationOptions {
        solver: tc.solver.clone(),
        ..ContinuationOptions::default()
    };
    let curve = continuation_with(geom, &linear_schedule(tc.beta_hi, tc.beta_lo, tc.points), &opts)?;
    let mut t = Table::new(&["beta", "energy", "free_energy", "entropy", "newton_iterations", "residual"]);
    for s in &curve.samples {
        t.push(vec![s.beta, s.e, s.f, s.s, s.newton_iterations as f64, s.residual]);
    }
    out.table("thermo_curve.csv", &t)?;
    let mut warnings = Vec::new();
    let es = curve.energies();
    let (lo, hi) = es.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(*e), b.max(*e)));
    match legendre_s_from_f(&curve, &energy_grid(lo, hi, tc.e_points)) {
        Ok(s) => {
            let mut t = Table::new(&["energy", "entropy"]);
            for (e, v) in s.e.iter().zip(&s.s) {
                t.push(vec![*e, *v]);
            }
            out.table("entropy_curve.csv", &t)?;
        }
        Err(e) => warnings.push(format!("entropy curve: {e}")),
    }
    let critical = match detect_critical(&curve) {
        Ok(c) => serde_json::to_value(c).map_err(|e| Error::Io(e.to_string()))?,
        Err(e) => {
            warnings.push(format!("critical estimate: {e}"));
            serde_json::Value::Null
        }
    };
    out.json(
        "critical.json",
        &json!({
            "estimate": critical,
            "e0": curve.e0,
            "e_min": curve.e_min,
            "beta_star": curve.beta_star,
            "failure": curve.failure,
            "outside_theory": curve.outside_theory,
        }),
    )?;
    Ok(Record {
        steps: Some(curve.samples.iter().map(|s| s.newton_iterations as u64).sum()),
        warnings,
        ..Record::default()
    })
}

fn seed_list(base: u64, k: usize) -> Vec<u64> {
    (0..k.max(1) as u64).map(|i| base.wrapping_add(i)).collect()
}

fn sample(geom: &Arc<Geometry>, cfg: &RunConfig, ensemble: &Ensemble, out: &mut OutputDir) -> Result<Record> {
    let s = section(&cfg.sample, "sample")?;
    let mut base = ChainConfig::new(geom.clone(), s.n, cfg.seed);
    if let Some(v) = s.sweeps {
        base.n_steps = v;
    }
    if let Some(v) = s.burn_in {
        base.burn_in = v;
    }
    if let Some(v) = s.thinning {
        base.thinning = v;
    }
    if let Some(v) = s.proposal_scale {
        base.proposal_scale = v;
    }
    base.entry_beta = s.entry_beta;
    let (chains, seeds) = match ensemble {
        Ensemble::Gibbs { seeds } => {
            let beta = s.beta.ok_or_else(|| Error::ConfigInvalid("sample.beta is required".into()))?;
            let seeds = seed_list(cfg.seed, *seeds);
            (gibbs_seeds(&base, beta, &seeds)?, seeds)
        }
        Ensemble::Shell { seeds } => {
            let sh = s.shell.ok_or_else(|| Error::ConfigInvalid("sample.shell is required".into()))?;
            let spec = ShellSpec::new(sh.e, sh.eps, sh.side)?;
            let seeds = seed_list(cfg.seed, *seeds);
            (shell_seeds(&base, &spec, &seeds)?, seeds)
        }
    };
    let mut warnings = Vec::new();
    for c in &chains {
        let mut t = Table::new(&["sweep", "energy", "accepted"]);
        for (k, (e, a)) in c.energy_trace.iter().zip(&c.accepted_trace).enumerate() {
            t.push(vec![k as f64, *e, *a as f64]);
        }
        out.table(&format!("chain_{}.csv", c.seed), &t)?;
        warnings.extend(c.warnings.iter().map(|w| format!("seed {}: {w}", c.seed)));
        if c.non_ergodic() {
            warnings.push(format!("seed {}: acceptance rate {:.4} is too low", c.seed, c.acceptance_rate));
        }
    }
    let marginal = pooled_marginal(geom, &chains, s.bandwidth)?;
    out.table("marginal.csv", &field_table(geom, &[("rho", marginal.values())]))?;
    let summaries: Vec<_> = chains.iter().map(chain_summary).collect();
    let mut report = json!({ "chains": summaries });
    if let Some(tb) = s.target_beta {
        let target = solve_with(geom, tb, None, &SolverOptions::default())?;
        let mut all = Vec::new();
        for c in &chains {
            all.extend(concentration_probe(c, &target.rho, s.bandwidth)?.distances);
        }
        let pooled = ConcentrationSummary::from_distances(all);
        report["target_beta"] = json!(tb);
        report["marginal_distance"] = json!(geom.hminus_distance(
            marginal.values(),
            &geom.smooth(target.rho.values(), s.bandwidth)?
        )?);
        report["concentration"] = json!({
            "median": pooled.median, "q10": pooled.q10, "q90": pooled.q90, "mean": pooled.mean,
            "samples": pooled.distances.len(),
        });
    }
    out.json("concentration.json", &report)?;
    Ok(Record {
        steps: Some(chains.len() as u64 * base.n_steps as u64),
        seeds,
        warnings,
    })
}

fn pooled_marginal(geom: &Arc<Geometry>, chains: &[ChainStats], bandwidth: f64) -> Result<Density> {
    let mut acc = vec![0.0; geom.len()];
    for c in chains {
        let m = marginal_estimate(c, bandwidth)?;
        for (a, v) in acc.iter_mut().zip(m.values()) {
            *a += v / chains.len() as f64;
        }
    }
    Density::normalized(geom.clone(), acc)
}

fn chain_summary(c: &ChainStats) -> serde_json::Value {
    json!({
        "seed": c.seed,
        "beta": c.beta,
        "shell": c.shell.map(|s| s.bounds()),
        "mean_energy": c.mean_energy,
        "stderr": c.stderr,
        "effective_samples": c.effective_samples,
        "acceptance_rate": c.acceptance_rate,
        "proposal_scale": c.proposal_scale,
        "entry_beta": c.entry_beta,
        "configs": c.configs.len(),
    })
}

fn run_wang_landau(geom: &Arc<Geometry>, cfg: &RunConfig, out: &mut OutputDir) -> Result<Record> {
    let w = section(&cfg.wang_landau, "wang_landau")?;
    let edges: Vec<f64> = (0..=w.bins)
        .map(|k| w.e_lo + (w.e_hi - w.e_lo) * k as f64 / w.bins as f64)
        .collect();
    let mut wl = WangLandauConfig::new(w.n, edges, cfg.seed, w.mode);
    if let Some(v) = w.max_sweeps {
        wl.max_sweeps = v;
    }
    if let Some(v) = w.ln_f_final {
        wl.ln_f_final = v;
    }
    if let Some(v) = w.flatness {
        wl.flatness = v;
    }
    let dos = wang_landau(geom, &wl)?;
    let mut t = Table::new(&["e_lo", "e_hi", "e_center", "log_mass", "s_bin", "s_cumulative", "visited"]);
    let centers = dos.bin_centers();
    for k in 0..centers.len() {
        t.push(vec![
            dos.edges[k],
            dos.edges[k + 1],
            centers[k],
            dos.log_mass[k],
            dos.s_bin[k],
            dos.s_cumulative[k],
            if dos.visited[k] { 1.0 } else { 0.0 },
        ]);
    }
    out.table("dos.csv", &t)?;
    out.json(
        "wang_landau.json",
        &json!({
            "n": dos.n,
            "sweeps": dos.sweeps,
            "underflow_log_mass": dos.underflow_log_mass,
            "overflow_log_mass": dos.overflow_log_mass,
            "total_mass": dos.total_mass,
            "flatness_history": dos.flatness_history,
            "ln_f_schedule": dos.ln_f_schedule,
        }),
    )?;
    Ok(Record {
        seeds: vec![cfg.seed],
        steps: Some(dos.sweeps as u64),
        ..Record::default()
    })
}

fn thermo_integrate(geom: &Arc<Geometry>, cfg: &RunConfig, out: &mut OutputDir) -> Result<Record> {
    let ti = section(&cfg.thermo_integrate, "thermo_integrate")?;
    let mut base = ChainConfig::new(geom.clone(), ti.n, cfg.seed);
    if let Some(v) = ti.sweeps {
        base.n_steps = v;
    }
    if let Some(v) = ti.burn_in {
        base.burn_in = v;
    }
    let seeds = seed_list(cfg.seed, ti.seed_count);
    let table = thermo_integration(&base, &ti.betas, &seeds)?;
    let mut t = Table::new(&["beta", "mean_energy", "stderr", "log_z", "log_z_stderr"]);
    for r in &table.rows {
        t.push(vec![r.beta, r.mean_energy, r.stderr, r.log_z, r.log_z_stderr]);
    }
    out.table("thermo_integration.csv", &t)?;
    out.json(
        "thermo_integration.json",
        &json!({"n": table.n, "quadrature_error": table.quadrature_error}),
    )?;
    Ok(Record {
        steps: Some((ti.betas.len() * seeds.len() * base.n_steps) as u64),
        seeds,
        ..Record::default()
    })
}

/// Little-endian snapshot layout: magic `VXSN`, `u32` version, `u64` point
/// count, `u64` frame count, then per frame `f64` time and `3N` coordinates.
pub const SNAPSHOT_MAGIC: &[u8; 4] = b"VXSN";

fn snapshot_bytes(traj: &VortexTrajectory, stride: usize) -> (Vec<u8>, Vec<usize>) {
    let frames: Vec<usize> = (0..traj.len()).step_by(stride).collect();
    let n = traj.configs[0].len();
    let mut b = Vec::with_capacity(24 + frames.len() * (8 + 24 * n));
    b.extend_from_slice(SNAPSHOT_MAGIC);
    b.extend_from_slice(&1u32.to_le_bytes());
    b.extend_from_slice(&(n as u64).to_le_bytes());
    b.extend_from_slice(&(frames.len() as u64).to_le_bytes());
    for &k in &frames {
        b.extend_from_slice(&traj.times[k].to_le_bytes());
        for p in traj.configs[k].points() {
            for c in p {
                b.extend_from_slice(&c.to_le_bytes());
            }
        }
    }
    (b, frames)
}

fn vortex(geom: &Arc<Geometry>, cfg: &RunConfig, out: &mut OutputDir) -> Result<Record> {
    let v = section(&cfg.vortex, "vortex")?;
    let pts = match &v.initial {
        Some(p) => p.clone(),
        None => dv_config(geom, v.n, &mut rng_for(cfg.seed, 0)),
    };
    let config0 = PointConfig::new(geom.clone(), pts)?;
    let traj = vortex_flow_with(&config0, v.t, &v.options)?;
    let mut t = Table::new(&["t", "energy", "min_distance", "mx", "my", "mz"]);
    for k in 0..traj.len() {
        let m = traj.moments.as_ref().map_or([f64::NAN; 3], |m| m[k]);
        t.push(vec![traj.times[k], traj.energies[k], traj.min_distances[k], m[0], m[1], m[2]]);
    }
    out.table("trajectory.csv", &t)?;
    let (bytes, frames) = snapshot_bytes(&traj, v.snapshot_stride);
    out.bytes("snapshots.bin", &bytes)?;
    out.json(
        "snapshots.json",
        &json!({
            "format": "little-endian; magic VXSN, u32 version, u64 points, u64 frames, then per frame f64 t and 3*points f64 coordinates",
            "version": 1,
            "points": config0.len(),
            "frames": frames.len(),
            "stamps": frames,
        }),
    )?;
    let mut warnings = Vec::new();
    let report = conserved_report(&traj);
    if let Some(e) = &traj.halted {
        warnings.push(format!("run halted: {e}"));
    }
    let mut summary = json!({
        "report": report,
        "tol": traj.tol,
        "collision_floor": traj.collision_floor,
        "velocity_scale": traj.velocity_scale,
        "characteristic_period": traj.characteristic_period,
        "halted": traj.halted.as_ref().map(|e| e.to_string()),
        "controller": traj.controller.last(),
    });
    if let Some(t_burn) = v.t_burn {
        match time_average_density(&traj, v.bandwidth, t_burn) {
            Ok(avg) => {
                out.table("time_average.csv", &field_table(geom, &[("rho", avg.density.values())]))?;
                summary["time_average"] = json!({"periods": avg.periods, "stamps_used": avg.stamps_used});
                warnings.extend(avg.warnings);
            }
            Err(e) => warnings.push(format!("time average: {e}")),
        }
    }
    out.json("conserved.json", &summary)?;
    let steps = traj.controller.last().map(|c| c.accepted as u64);
    Ok(Record {
        seeds: if v.initial.is_some() { vec![] } else { vec![cfg.seed] },
        steps,
        warnings,
    })
}

fn initial_density(geom: &Arc<Geometry>, init: &InitialDensity, seed: u64) -> Result<Density> {
    match init {
        InitialDensity::Uniform => Ok(Density::uniform(geom.clone())),
        InitialDensity::Meanfield { beta } => Ok(solve_with(geom, *beta, None, &SolverOptions::default())?.rho),
        InitialDensity::Random { amplitude } => random_smooth_density(geom, seed, *amplitude),
    }
}

fn run_table(r: &EulerRunReport) -> Table {
    let mut t = Table::new(&["t", "energy", "i2", "i3", "entropy", "min_rho", "max_rho"]);
    for k in 0..r.times.len() {
        t.push(vec![r.times[k], r.energy[k], r.i2[k], r.i3[k], r.entropy[k], r.min_rho[k], r.max_rho[k]]);
    }
    t
}

fn run_summary(r: &EulerRunReport) -> serde_json::Value {
    json!({
        "drift": casimir_report(r),
        "worst": casimir_report(r).worst(),
        "steps": r.steps,
        "rejected_steps": r.rejected_steps,
        "smallest_dt": r.smallest_dt,
        "filter_strength": r.filter_strength,
    })
}

fn euler(geom: &Arc<Geometry>, cfg: &RunConfig, out: &mut OutputDir) -> Result<Record> {
    let e = section(&cfg.euler, "euler")?;
    let rho0 = initial_density(geom, &e.initial, cfg.seed)?;
    let run = euler_integrate(&rho0, e.t, &e.options)?;
    out.table("euler_run.csv", &run_table(&run.report))?;
    let last = run.states.last().expect("a run has at least one state");
    out.table("final_density.csv", &field_table(geom, &[("rho", last.rho.values()), ("u", &last.u)]))?;
    out.json("casimir.json", &run_summary(&run.report))?;
    Ok(Record {
        seeds: vec![cfg.seed],
        steps: Some(run.report.steps as u64),
        ..Record::default()
    })
}

fn stability(geom: &Arc<Geometry>, cfg: &RunConfig, out: &mut OutputDir) -> Result<Record> {
    let s = section(&cfg.stability, "stability")?;
    let rho_a = initial_density(geom, &s.initial, cfg.seed)?;
    let pert = random_smooth_density(geom, cfg.seed.wrapping_add(1), 0.9)?;
    let vals: Vec<f64> = rho_a
        .values()
        .iter()
        .zip(pert.values())
        .map(|(a, p)| a + s.perturbation * (p - 1.0))
        .collect();
    let rho_b = Density::normalized(geom.clone(), vals)?;
    let rep = stability_experiment(&rho_a, &rho_b, s.t, &s.options)?;
    let mut t = Table::new(&["t", "hminus_distance"]);
    for (ti, d) in rep.times.iter().zip(&rep.distances) {
        t.push(vec![*ti, *d]);
    }
    out.table("pair_distance.csv", &t)?;
    out.json(
        "stability.json",
        &json!({
            "initial_distance": rep.distances[0],
            "slope_fit": rep.slope_fit,
            "c_fit": rep.c_fit,
            "dominated": rep.dominated,
            "run_a": run_summary(&rep.run_a),
            "run_b": run_summary(&rep.run_b),
        }),
    )?;
    Ok(Record {
        seeds: vec![cfg.seed, cfg.seed.wrapping_add(1)],
        steps: Some((rep.run_a.steps + rep.run_b.steps) as u64),
        ..Record::default()
    })
}
