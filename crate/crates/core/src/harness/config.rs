//! Experiment configuration files.
//!
//! A config is a TOML document with the sections below; unknown keys are
//! rejected so that a typo cannot silently change a study.
//!
//! ```toml
//! [model]
//! a_minus = 1.0
//! a_plus = 1.0
//! kind = "sigma_eta"        # sigma_eta | boundary_frame | comparison | absorbed
//! b_rate = 1.0              # absorbed only
//!
//! [profile]
//! preset = "asymmetric_step"
//! left = -0.6
//! right = 1.0
//!
//! [run]
//! n = [100, 200, 400]
//! l = 2.0
//! t = 0.25
//! sample_times = [0.1, 0.25]
//! seeds = [1, 2, 3]
//! block_width = 0.125       # macroscopic
//! workers = 4
//!
//! [pde]
//! dx = 0.00390625
//!
//! [couple]                  # optional, couple-check only
//! presets = [{ preset = "symmetric_step", theta = 1.0 }, { preset = "one_phase", theta = 0.8 }]
//! ```

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::Preset;
use crate::lattice::ProcessKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError { field: field.to_string(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error in `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    SigmaEta,
    BoundaryFrame,
    Comparison,
    Absorbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub a_minus: f64,
    pub a_plus: f64,
    #[serde(default = "default_kind")]
    pub kind: KindName,
    #[serde(default)]
    pub b_rate: Option<f64>,
}

fn default_kind() -> KindName {
    KindName::SigmaEta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub n: Vec<u32>,
    pub l: f64,
    pub t: f64,
    pub sample_times: Vec<f64>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_block_width")]
    pub block_width: f64,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_block_width() -> f64 {
    0.125
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSection {
    #[serde(default = "default_dx")]
    pub dx: f64,
    #[serde(default)]
    pub dt: Option<f64>,
}

fn default_dx() -> f64 {
    1.0 / 256.0
}

impl Default for PdeSection {
    fn default() -> Self {
        PdeSection { dx: default_dx(), dt: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CoupleSection {
    /// Presets cycled over the seed list; empty means `[profile]`.
    #[serde(default)]
    pub presets: Vec<Preset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub profile: Preset,
    pub run: RunSection,
    #[serde(default)]
    pub pde: PdeSection,
    #[serde(default)]
    pub couple: CoupleSection,
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| {
            let msg = e.message().to_string();
            // serde names the offending key in backticks
            let field = msg.split('`').nth(1).unwrap_or("document").to_string();
            ConfigError { field, message: e.to_string().trim().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.model;
        if !(m.a_plus > 0.0 && m.a_plus.is_finite()) {
            return Err(ConfigError::new("model.a_plus", format!("must be finite and > 0, got {}", m.a_plus)));
        }
        if !(m.a_minus >= 0.0 && m.a_minus.is_finite()) {
            return Err(ConfigError::new("model.a_minus", format!("must be finite and >= 0, got {}", m.a_minus)));
        }
        if let Some(b) = m.b_rate {
            if !(b > 0.0 && b.is_finite()) {
                return Err(ConfigError::new("model.b_rate", format!("must be finite and > 0, got {b}")));
            }
        }
        let r = &self.run;
        if r.n.is_empty() {
            return Err(ConfigError::new("run.n", "list must not be empty"));
        }
        if r.n.contains(&0) {
            return Err(ConfigError::new("run.n", "every N must be >= 1"));
        }
        if !(r.l > 0.0 && r.l.is_finite()) {
            return Err(ConfigError::new("run.l", format!("must be finite and > 0, got {}", r.l)));
        }
        if !(r.t > 0.0 && r.t.is_finite()) {
            return Err(ConfigError::new("run.t", format!("must be finite and > 0, got {}", r.t)));
        }
        if r.sample_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::new("run.sample_times", "must be strictly increasing"));
        }
        if r.sample_times.iter().any(|&s| !(0.0..=r.t).contains(&s)) {
            return Err(ConfigError::new("run.sample_times", format!("must lie in [0, {}]", r.t)));
        }
        if r.seeds.is_empty() {
            return Err(ConfigError::new("run.seeds", "list must not be empty"));
        }
        let distinct: HashSet<_> = r.seeds.iter().collect();
        if distinct.len() != r.seeds.len() {
            return Err(ConfigError::new("run.seeds", "seeds must be distinct"));
        }
        if !(r.block_width > 0.0 && r.block_width < r.l) {
            return Err(ConfigError::new("run.block_width", "must lie in (0, l)"));
        }
        if r.workers == Some(0) {
            return Err(ConfigError::new("run.workers", "must be >= 1"));
        }
        let p = &self.pde;
        let cells = 2.0 * r.l / p.dx;
        if !(p.dx > 0.0) || (cells - cells.round()).abs() > 1e-9 * cells || cells.round() as u64 % 2 != 0 {
            return Err(ConfigError::new("pde.dx", "2 l / dx must be an even integer"));
        }
        if let Some(dt) = p.dt {
            let limit = p.dx * p.dx / (2.0 * m.a_minus.max(m.a_plus));
            if !(dt > 0.0 && dt <= limit) {
                return Err(ConfigError::new("pde.dt", format!("must lie in (0, dx^2 / (2 a_max)] = (0, {limit:e}]")));
            }
        }
        Ok(())
    }

    pub fn process_kind(&self) -> ProcessKind {
        match self.model.kind {
            KindName::SigmaEta => ProcessKind::SigmaEta,
            KindName::BoundaryFrame => ProcessKind::BoundaryFrame,
            KindName::Comparison => ProcessKind::Comparison,
            KindName::Absorbed => ProcessKind::Absorbed { b_rate: self.model.b_rate.unwrap_or(1.0) },
        }
    }

    /// Hex SHA-256 of the canonical JSON form (after command-line overrides).
    /// The worker count is left out since it cannot change any result.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.run.workers = None;
        let json = serde_json::to_string(&c).expect("config serialises");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    /// Block width in lattice sites at scale `n`.
    pub fn block_sites(&self, n: u32) -> i64 {
        ((self.run.block_width * n as f64).round() as i64).max(1)
    }
}
