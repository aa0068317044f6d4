//! Run configuration: a flat TOML file, `key=value` overrides, exhaustive
//! validation and a content hash that is embedded in every output.

use crate::kh;
use crate::perturb::PerturbationSpec;
use crate::system::Formulation;
use crate::Error;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Fem,
    Oracle,
}

/// Snapshot times of the reference figures, in units of `t̄`.
pub const DEFAULT_SNAPSHOTS: [f64; 9] = [5.0, 10.0, 17.0, 34.0, 56.0, 200.0, 240.0, 278.0, 400.0];

fn default_re() -> f64 {
    100.0
}
fn default_n() -> usize {
    16
}
fn default_k() -> usize {
    4
}
fn default_dt_factor() -> f64 {
    1.0
}
fn default_end() -> f64 {
    5.0
}
fn default_engine() -> Engine {
    Engine::Fem
}
fn default_formulation() -> Formulation {
    Formulation::Saddle
}
fn default_penalty() -> f64 {
    crate::assembly::DEFAULT_PENALTY
}
fn default_true() -> bool {
    true
}
fn default_cn() -> f64 {
    kh::C_N
}
fn default_modes() -> usize {
    128
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_every() -> u64 {
    10
}
fn default_snapshots() -> Vec<f64> {
    DEFAULT_SNAPSHOTS.to_vec()
}
fn default_lines() -> usize {
    1024
}
fn default_grid() -> usize {
    128
}
fn default_rtol() -> f64 {
    1e-12
}
fn default_refinements() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_re")]
    pub re: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Time step in units of `δ₀·10⁻³`.
    #[serde(default = "default_dt_factor")]
    pub dt_factor: f64,
    /// End time in units of `t̄`.
    #[serde(default = "default_end")]
    pub end_tbar: f64,
    #[serde(default = "default_engine")]
    pub engine: Engine,
    #[serde(default = "default_formulation")]
    pub formulation: Formulation,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    #[serde(default = "default_true")]
    pub include_20pi: bool,
    #[serde(default = "default_cn")]
    pub c_n: f64,
    /// Fourier and sine modes of the oracle engine.
    #[serde(default = "default_modes")]
    pub oracle_modes: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// QoI sampling cadence in steps.
    #[serde(default = "default_every")]
    pub qoi_every: u64,
    #[serde(default = "default_snapshots")]
    pub snapshot_tbar: Vec<f64>,
    #[serde(default = "default_lines")]
    pub thickness_lines: usize,
    #[serde(default = "default_lines")]
    pub spectrum_lines: usize,
    #[serde(default = "default_lines")]
    pub spectrum_samples: usize,
    /// Samples per direction of the field snapshots.
    #[serde(default = "default_grid")]
    pub snapshot_grid: usize,
    #[serde(default = "default_rtol")]
    pub solver_rtol: f64,
    #[serde(default = "default_refinements")]
    pub max_refinements: usize,
    /// Checkpoint cadence in steps (0 disables checkpoints).
    #[serde(default)]
    pub checkpoint_every: u64,
    #[serde(default)]
    pub restart: Option<PathBuf>,
    /// Fixed-order reductions everywhere; the only supported mode.
    #[serde(default = "default_true")]
    pub deterministic: bool,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, Error> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))?;
        let mut errs = Vec::new();
        for o in overrides {
            if let Err(e) = apply_override(&mut table, o) {
                errs.push(e);
            }
        }
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn nu(&self) -> f64 {
        kh::viscosity(self.re)
    }

    pub fn dt(&self) -> f64 {
        kh::default_dt() * self.dt_factor
    }

    /// Number of steps to reach `end_tbar`.
    pub fn steps(&self) -> u64 {
        (self.end_tbar * kh::tbar() / self.dt()).round() as u64
    }

    pub fn steps_to(&self, tbar: f64) -> u64 {
        (tbar * kh::tbar() / self.dt()).round() as u64
    }

    pub fn is_reference_re(&self) -> bool {
        kh::REFERENCE_RE.contains(&self.re)
    }

    /// Lists every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<(), Error> {
        let mut e = Vec::new();
        if !(self.re > 0.0) || !self.re.is_finite() {
            e.push(format!("re must be positive and finite (got {})", self.re));
        }
        if self.n == 0 {
            e.push("n must be at least 1".into());
        }
        if !(1..=8).contains(&self.k) {
            e.push(format!("k must be in 1..=8 (got {})", self.k));
        }
        if !(self.dt_factor > 0.0) || !self.dt_factor.is_finite() {
            e.push(format!("dt_factor must be positive (got {})", self.dt_factor));
        }
        if !(self.end_tbar >= 0.0) || !self.end_tbar.is_finite() {
            e.push(format!("end_tbar must be non-negative (got {})", self.end_tbar));
        }
        if !(self.penalty > 0.0) {
            e.push(format!("penalty must be positive (got {})", self.penalty));
        }
        if !(self.c_n >= 0.0) || !self.c_n.is_finite() {
            e.push(format!("c_n must be non-negative (got {})", self.c_n));
        }
        if self.oracle_modes < 4 || self.oracle_modes % 2 != 0 {
            e.push(format!("oracle_modes must be even and at least 4 (got {})", self.oracle_modes));
        }
        if self.qoi_every == 0 {
            e.push("qoi_every must be at least 1".into());
        }
        if self.snapshot_tbar.iter().any(|t| !(*t >= 0.0)) {
            e.push("snapshot_tbar entries must be non-negative".into());
        }
        for (name, v) in [("thickness_lines", self.thickness_lines), ("spectrum_lines", self.spectrum_lines)] {
            if v < 2 {
                e.push(format!("{name} must be at least 2"));
            }
        }
        if self.spectrum_samples < 2 || self.snapshot_grid < 2 {
            e.push("spectrum_samples and snapshot_grid must be at least 2".into());
        }
        if !(self.solver_rtol > 0.0 && self.solver_rtol < 1.0) {
            e.push(format!("solver_rtol must be in (0, 1) (got {})", self.solver_rtol));
        }
        if !self.deterministic {
            e.push("deterministic = false is not supported; every reduction uses a fixed order".into());
        }
        if let Err(Error::Config(p)) = self.perturbation.validate(self) {
            e.extend(p);
        }
        if e.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(e))
        }
    }

    /// Hex SHA-256 of the canonical serialization, ignoring fields that do
    /// not affect the computed trajectory (output location, restart source,
    /// checkpoint cadence).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.restart = None;
        c.checkpoint_every = 0;
        let json = serde_json::to_string(&c).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }
}

/// Applies `a.b.c=value`; the value is parsed as a TOML value and falls
/// back to a plain string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), String> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| format!("override '{spec}' is not key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(format!("override '{spec}' has an empty key"));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| format!("override '{key}': '{p}' is not a table"))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
