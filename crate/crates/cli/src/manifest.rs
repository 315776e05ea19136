//! Output directory bookkeeping and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vortexlab::geometry::DDC_CONSTANT;
use vortexlab::io::Table;
use vortexlab::{Error, Geometry, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub ddc_constant: f64,
    pub e_min_raw: f64,
    pub e0: f64,
    pub c_theta: f64,
    pub green_residual: f64,
}

impl Normalization {
    pub fn of(geom: &Geometry) -> Self {
        Self {
            ddc_constant: DDC_CONSTANT,
            e_min_raw: geom.e_min_raw(),
            e0: geom.e0(),
            c_theta: geom.c_theta(),
            green_residual: geom.green_residual(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub geometry_fingerprint: String,
    pub seeds: Vec<u64>,
    pub normalization: Normalization,
    pub outputs: Vec<OutputEntry>,
    /// Integrator steps or chain sweeps, when the command has such a count.
    pub steps: Option<u64>,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))
    }

    /// Recompute every output hash and compare with the recorded one.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for o in &self.outputs {
            let bytes = fs::read(dir.join(&o.file))?;
            if sha256_hex(&bytes) != o.sha256 {
                return Err(Error::Io(format!("{} does not match its recorded hash", o.file)));
            }
        }
        Ok(())
    }
}

/// Writes files into the output directory and remembers their hashes.
pub struct OutputDir {
    root: PathBuf,
    entries: Vec<OutputEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<()> {
        fs::write(self.root.join(name), data)?;
        self.entries.push(OutputEntry {
            file: name.to_string(),
            sha256: sha256_hex(data),
            bytes: data.len() as u64,
        });
        Ok(())
    }

    pub fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        self.bytes(name, t.to_csv_string().as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        self.bytes(name, s.as_bytes())
    }

    pub fn entries(&self) -> &[OutputEntry] {
        &self.entries
    }

    pub fn finish(self, manifest: &Manifest) -> Result<()> {
        let mut s = serde_json::to_string_pretty(manifest).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        fs::write(self.root.join(MANIFEST_FILE), s)?;
        Ok(())
    }
}
