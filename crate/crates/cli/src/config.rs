//! Run configuration: one JSON document with a geometry and one optional
//! section per experiment.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use vortexlab::dynamics::VortexOptions;
use vortexlab::euler::EulerOptions;
use vortexlab::geometry::Surface;
use vortexlab::meanfield::SolverOptions;
use vortexlab::sampler::{Side, WlMode};
use vortexlab::{Error, Geometry, GeometrySpec, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometryConfig {
    Preset {
        preset: String,
        #[serde(default)]
        surface: Option<Surface>,
    },
    Spec(GeometrySpec),
}

impl GeometryConfig {
    pub fn spec(&self) -> Result<GeometrySpec> {
        match self {
            GeometryConfig::Preset { preset, surface } => GeometrySpec::preset(preset, surface.clone()),
            GeometryConfig::Spec(s) => Ok(s.clone()),
        }
    }

    pub fn build(&self) -> Result<Arc<Geometry>> {
        Ok(Arc::new(Geometry::build(self.spec()?)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldSection {
    pub beta: f64,
    #[serde(default)]
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoCurveSection {
    pub beta_hi: f64,
    pub beta_lo: f64,
    pub points: usize,
    /// Energy grid size for the Legendre transform.
    #[serde(default = "default_e_points")]
    pub e_points: usize,
    #[serde(default)]
    pub solver: SolverOptions,
}

fn default_e_points() -> usize {
    201
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSection {
    pub e: f64,
    pub eps: f64,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    pub n: usize,
    /// Inverse temperature for `sample gibbs`.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Energy shell for `sample shell`.
    #[serde(default)]
    pub shell: Option<ShellSection>,
    #[serde(default)]
    pub sweeps: Option<usize>,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub thinning: Option<usize>,
    #[serde(default)]
    pub proposal_scale: Option<f64>,
    #[serde(default)]
    pub entry_beta: Option<f64>,
    /// Heat-kernel bandwidth for marginals.
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    /// Compare samples with the mean-field density at this β.
    #[serde(default)]
    pub target_beta: Option<f64>,
}

fn default_bandwidth() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WangLandauSection {
    pub n: usize,
    pub e_lo: f64,
    pub e_hi: f64,
    pub bins: usize,
    pub mode: WlMode,
    #[serde(default)]
    pub max_sweeps: Option<usize>,
    #[serde(default)]
    pub ln_f_final: Option<f64>,
    #[serde(default)]
    pub flatness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoIntegrateSection {
    pub n: usize,
    /// β grid; must start at 0.
    pub betas: Vec<f64>,
    #[serde(default)]
    pub sweeps: Option<usize>,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default = "default_seed_count")]
    pub seed_count: usize,
}

fn default_seed_count() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexSection {
    pub n: usize,
    pub t: f64,
    #[serde(default)]
    pub options: VortexOptions,
    /// Explicit start; otherwise `n` points drawn from `dV` with the run seed.
    #[serde(default)]
    pub initial: Option<Vec<[f64; 3]>>,
    /// Write every `snapshot_stride`-th configuration to the binary snapshot file.
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    /// Start of the time-averaging window.
    #[serde(default)]
    pub t_burn: Option<f64>,
}

fn default_stride() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialDensity {
    Uniform,
    /// Mean-field density at β.
    Meanfield { beta: f64 },
    /// Smooth random density with relative amplitude in `[0, 1)`.
    Random { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerSection {
    pub t: f64,
    pub initial: InitialDensity,
    #[serde(default)]
    pub options: EulerOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub t: f64,
    pub initial: InitialDensity,
    /// Size of the zero-mean perturbation added to the second run.
    pub perturbation: f64,
    #[serde(default)]
    pub options: EulerOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub meanfield: Option<MeanfieldSection>,
    #[serde(default)]
    pub thermo_curve: Option<ThermoCurveSection>,
    #[serde(default)]
    pub sample: Option<SampleSection>,
    #[serde(default)]
    pub wang_landau: Option<WangLandauSection>,
    #[serde(default)]
    pub thermo_integrate: Option<ThermoIntegrateSection>,
    #[serde(default)]
    pub vortex: Option<VortexSection>,
    #[serde(default)]
    pub euler: Option<EulerSection>,
    #[serde(default)]
    pub stability: Option<StabilitySection>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Static checks that do not need the geometry.
    pub fn validate(&self) -> Result<()> {
        self.geometry.spec()?;
        if let Some(m) = &self.meanfield {
            finite("meanfield.beta", m.beta)?;
        }
        if let Some(t) = &self.thermo_curve {
            finite("thermo_curve.beta_hi", t.beta_hi)?;
            finite("thermo_curve.beta_lo", t.beta_lo)?;
            if t.beta_hi <= t.beta_lo || t.points < 2 || t.e_points < 5 {
                return Err(invalid("thermo_curve needs beta_hi > beta_lo, points ≥ 2, e_points ≥ 5"));
            }
        }
        if let Some(s) = &self.sample {
            if s.n < 2 {
                return Err(invalid("sample.n must be at least 2"));
            }
            if !(s.bandwidth > 0.0) {
                return Err(invalid("sample.bandwidth must be positive"));
            }
            if let Some(sh) = &s.shell {
                vortexlab::sampler::ShellSpec::new(sh.e, sh.eps, sh.side)?;
            }
        }
        if let Some(w) = &self.wang_landau {
            if !(w.e_lo < w.e_hi) || w.bins < 2 || w.n < 2 {
                return Err(invalid("wang_landau needs e_lo < e_hi, bins ≥ 2, n ≥ 2"));
            }
        }
        if let Some(ti) = &self.thermo_integrate {
            if ti.betas.first() != Some(&0.0) || ti.betas.len() < 2 || ti.seed_count == 0 {
                return Err(invalid("thermo_integrate.betas must start at 0 and have two or more entries"));
            }
        }
        if let Some(v) = &self.vortex {
            finite("vortex.t", v.t)?;
            if v.snapshot_stride == 0 {
                return Err(invalid("vortex.snapshot_stride must be positive"));
            }
            if let Some(p) = &v.initial {
                if p.len() != v.n {
                    return Err(invalid("vortex.initial must list n points"));
                }
            }
        }
        for (name, init) in [
            ("euler", self.euler.as_ref().map(|e| &e.initial)),
            ("stability", self.stability.as_ref().map(|e| &e.initial)),
        ] {
            if let Some(InitialDensity::Random { amplitude }) = init {
                if !(0.0..1.0).contains(amplitude) {
                    return Err(invalid(format!("{name}.initial.amplitude must lie in [0, 1)")));
                }
            }
        }
        if let Some(s) = &self.stability {
            if !(s.perturbation >= 0.0 && s.perturbation < 1.0) {
                return Err(invalid("stability.perturbation must lie in [0, 1)"));
            }
        }
        Ok(())
    }

    /// Canonical serialization used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&serde_json::to_value(self).expect("config serializes")).expect("value serializes")
    }
}

/// JSON schema of the configuration file.
pub fn schema() -> serde_json::Value {
    use serde_json::json;
    let num = json!({"type": "number"});
    let int = json!({"type": "integer", "minimum": 0});
    let initial = json!({
        "type": "object",
        "required": ["kind"],
        "properties": {
            "kind": {"enum": ["uniform", "meanfield", "random"]},
            "beta": num,
            "amplitude": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}
        }
    });
    let euler_opts = json!({
        "type": "object",
        "properties": {"dt": num, "dt_min": num, "cfl": num, "stamps": int, "positivity_tol": num},
        "additionalProperties": false
    });
    let solver = json!({
        "type": "object",
        "properties": {
            "tolerance": num, "max_newton": int, "max_damping": int, "u_cap": num,
            "tail_limit": num, "allow_negative_torus": {"type": "boolean"}
        },
        "additionalProperties": false
    });
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "vortexlab run configuration",
        "type": "object",
        "required": ["geometry"],
        "additionalProperties": false,
        "properties": {
            "geometry": {
                "oneOf": [
                    {
                        "type": "object",
                        "required": ["preset"],
                        "properties": {
                            "preset": {"type": "string", "description": "sphere-round, sphere-zonal(a), sphere-zonal-fano(a), torus-flat, torus-bump(a), disk-uniform"},
                            "surface": {"$ref": "#/$defs/surface"}
                        }
                    },
                    {
                        "type": "object",
                        "required": ["surface", "dv", "theta"],
                        "properties": {
                            "surface": {"$ref": "#/$defs/surface"},
                            "dv": {"$ref": "#/$defs/profile"},
                            "theta": {
                                "type": "object",
                                "required": ["mode"],
                                "properties": {"mode": {"enum": ["explicit", "fano"]}, "h": {"$ref": "#/$defs/profile"}}
                            },
                            "degenerate_allowed": {"type": "boolean"}
                        }
                    }
                ]
            },
            "seed": int,
            "meanfield": {"type": "object", "required": ["beta"], "properties": {"beta": num, "solver": solver}},
            "thermo_curve": {
                "type": "object",
                "required": ["beta_hi", "beta_lo", "points"],
                "properties": {"beta_hi": num, "beta_lo": num, "points": int, "e_points": int, "solver": solver}
            },
            "sample": {
                "type": "object",
                "required": ["n"],
                "properties": {
                    "n": int, "beta": num, "sweeps": int, "burn_in": int, "thinning": int,
                    "proposal_scale": num, "entry_beta": num, "bandwidth": num, "target_beta": num,
                    "shell": {
                        "type": "object",
                        "required": ["e", "eps", "side"],
                        "properties": {"e": num, "eps": num, "side": {"enum": ["lower", "upper"]}}
                    }
                }
            },
            "wang_landau": {
                "type": "object",
                "required": ["n", "e_lo", "e_hi", "bins", "mode"],
                "properties": {
                    "n": int, "e_lo": num, "e_hi": num, "bins": int,
                    "mode": {"enum": ["lattice", "continuous"]},
                    "max_sweeps": int, "ln_f_final": num, "flatness": num
                }
            },
            "thermo_integrate": {
                "type": "object",
                "required": ["n", "betas"],
                "properties": {"n": int, "betas": {"type": "array", "items": num}, "sweeps": int, "burn_in": int, "seed_count": int}
            },
            "vortex": {
                "type": "object",
                "required": ["n", "t"],
                "properties": {
                    "n": int, "t": num, "snapshot_stride": int, "bandwidth": num, "t_burn": num,
                    "initial": {"type": "array", "items": {"type": "array", "items": num, "minItems": 3, "maxItems": 3}},
                    "options": {
                        "type": "object",
                        "properties": {"tol": num, "stamps": int, "floor_factor": num, "budget_factor": num, "max_refinements": int},
                        "additionalProperties": false
                    }
                }
            },
            "euler": {"type": "object", "required": ["t", "initial"], "properties": {"t": num, "initial": initial, "options": euler_opts}},
            "stability": {
                "type": "object",
                "required": ["t", "initial", "perturbation"],
                "properties": {"t": num, "initial": initial, "perturbation": num, "options": euler_opts}
            }
        },
        "$defs": {
            "surface": {
                "type": "object",
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["sphere", "torus", "disk"]},
                    "lmax": int, "n": int, "n_r": int, "n_phi": int
                }
            },
            "profile": {
                "type": "object",
                "required": ["profile"],
                "properties": {
                    "profile": {"enum": ["uniform", "zonal", "bump", "values"]},
                    "a": num,
                    "values": {"type": "array", "items": num}
                }
            }
        }
    })
}
