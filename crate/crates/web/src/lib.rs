//! WebAssembly bindings for the browser demo.
//!
//! Each export takes plain numbers and returns a JSON string. Failures come
//! back as `{"error": "..."}` so the page never has to catch exceptions.

use std::sync::Arc;

use serde_json::{json, Value};
use vortexlab::geometry::Surface;
use vortexlab::meanfield::{continuation, detect_critical, linear_schedule, solve_meanfield};
use vortexlab::thermo::{energy_grid, legendre_s_from_f, troyanov_check, LogFanoCurveSpec};
use vortexlab::{Error, Geometry, Result};
use wasm_bindgen::prelude::wasm_bindgen;

/// Largest grid the page may request.
pub const MAX_TORUS_N: usize = 128;
pub const MAX_SPHERE_LMAX: usize = 48;

fn respond(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Polystability verdict and `R` for comma-separated weights.
pub fn logfano_json(weights: &str) -> Result<Value> {
    let w = weights
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|e| Error::ConfigInvalid(format!("weights: {e}")))?;
    let v = troyanov_check(&LogFanoCurveSpec { weights: w })?;
    Ok(json!({"polystable": v.polystable, "R": v.r, "R_raw": v.r_raw, "clamped": v.clamped}))
}

/// Mean-field density at β on the `n × n` torus with `θ = (1 + a cos 2πx) dV`
/// (`a = 0` gives the flat background). Values are row-major, `y` slowest.
pub fn torus_density_json(beta: f64, bump: f64, n: usize) -> Result<Value> {
    if n < 8 || n > MAX_TORUS_N {
        return Err(Error::InvalidResolution(format!("n must lie in [8, {MAX_TORUS_N}]")));
    }
    let name = if bump == 0.0 { "torus-flat".to_string() } else { format!("torus-bump({bump})") };
    let geom = Arc::new(Geometry::preset(&name, Some(Surface::Torus { n }))?);
    let sol = solve_meanfield(&geom, beta, None)?;
    let mut grid = vec![0.0; n * n];
    for (p, r) in geom.nodes().iter().zip(sol.rho.values()) {
        let i = (p[0] * n as f64).round() as usize % n;
        let j = (p[1] * n as f64).round() as usize % n;
        grid[j * n + i] = *r;
    }
    Ok(json!({
        "n": n,
        "beta": beta,
        "rho": grid,
        "energy": sol.e,
        "entropy": sol.s,
        "free_energy": sol.f,
        "newton_iterations": sol.newton_iterations,
    }))
}

/// Continuation in β from `beta_hi` down to `beta_lo`, with `e(β)` and the
/// entropy `S(e)` obtained by Legendre transform. `preset` is any geometry
/// preset name; `resolution` is `lmax` on the sphere and `n` on the torus.
pub fn continuation_json(preset: &str, resolution: usize, beta_hi: f64, beta_lo: f64, points: usize) -> Result<Value> {
    let surface = if preset.starts_with("sphere") {
        if resolution < 4 || resolution > MAX_SPHERE_LMAX {
            return Err(Error::InvalidResolution(format!("lmax must lie in [4, {MAX_SPHERE_LMAX}]")));
        }
        Surface::Sphere { lmax: resolution }
    } else if preset.starts_with("torus") {
        if resolution < 8 || resolution > MAX_TORUS_N {
            return Err(Error::InvalidResolution(format!("n must lie in [8, {MAX_TORUS_N}]")));
        }
        Surface::Torus { n: resolution }
    } else {
        return Err(Error::ConfigInvalid(format!("the demo supports sphere and torus presets, not {preset}")));
    };
    if !(beta_hi > beta_lo) || !(2..=200).contains(&points) {
        return Err(Error::ConfigInvalid("need beta_hi > beta_lo and 2 to 200 points".into()));
    }
    let geom = Arc::new(Geometry::preset(preset, Some(surface))?);
    let curve = continuation(&geom, &linear_schedule(beta_hi, beta_lo, points))?;
    let es = curve.energies();
    let (lo, hi) = es.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(*e), b.max(*e)));
    let entropy = if curve.len() >= 3 && hi > lo {
        legendre_s_from_f(&curve, &energy_grid(lo, hi, 101))
            .map(|s| json!({"e": s.e, "s": s.s}))
            .unwrap_or(Value::Null)
    } else {
        Value::Null
    };
    let critical = detect_critical(&curve).ok().map(|c| json!({"e_c": c.e_c.is_finite().then_some(c.e_c), "R": c.r_est}));
    Ok(json!({
        "beta": curve.betas(),
        "energy": es,
        "entropy_of_beta": curve.entropies(),
        "entropy_curve": entropy,
        "e0": curve.e0,
        "beta_star": curve.beta_star,
        "failure": curve.failure,
        "critical": critical,
    }))
}

#[wasm_bindgen]
pub fn logfano(weights: &str) -> String {
    respond(logfano_json(weights))
}

#[wasm_bindgen]
pub fn torus_density(beta: f64, bump: f64, n: usize) -> String {
    respond(torus_density_json(beta, bump, n))
}

#[wasm_bindgen]
pub fn continuation_curve(preset: &str, resolution: usize, beta_hi: f64, beta_lo: f64, points: usize) -> String {
    respond(continuation_json(preset, resolution, beta_hi, beta_lo, points))
}
