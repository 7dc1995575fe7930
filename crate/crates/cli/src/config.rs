//! Run configuration: a single self-describing, schema-versioned JSON
//! document. No positional system definitions; every numerical claim in
//! the outputs can be traced to one config file and its hash.

use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use thermofractal::potential::{JacobianPotential, Potential, PotentialFamily};
use thermofractal::sft::{Sft, MAX_ENUM_DEPTH};
use thermofractal::systems;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub system: SystemSpec,
    pub q_grid: QGrid,
    #[serde(default)]
    pub depths: Depths,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default = "default_outputs")]
    pub outputs: String,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    /// Optional frozen fixture values compared by the `fixtures` check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expected>,
}

fn default_outputs() -> String {
    "out".into()
}

pub fn default_checks() -> Vec<String> {
    [
        "gibbs",
        "conformality",
        "legendre",
        "completeness",
        "variational",
        "concentration",
        "irregular",
        "degeneracy",
        "fixtures",
    ]
    .map(String::from)
    .to_vec()
}

/// Either a bundled system by name or an inline definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Builtin {
        builtin: String,
    },
    Inline {
        sft: SftSpec,
        g: TableSpec,
        jac: TableSpec,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SftSpec {
    pub alphabet_size: usize,
    pub transitions: Vec<Vec<u8>>,
}

/// `{"depth": m, "values": {"<word>": v}}`, words as symbol strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableSpec {
    pub depth: usize,
    pub values: std::collections::BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl QGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step).round() as usize;
        (0..=n).map(|i| self.min + self.step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Depths {
    pub gibbs_depth: usize,
    pub endpoint_period: usize,
    pub conformality_depth: usize,
}

impl Default for Depths {
    fn default() -> Self {
        Depths {
            gibbs_depth: 12,
            endpoint_period: 12,
            conformality_depth: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Sampling {
    /// Birkhoff horizon per orbit.
    pub n: usize,
    /// Number of independent orbits.
    pub samples: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            n: 5000,
            samples: 2000,
            epsilon: 0.02,
            seed: 1,
        }
    }
}

/// Frozen expectations; any mismatch beyond `tolerance` fails the
/// `fixtures` check with the offending name and delta.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Expected {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_second_0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<bool>,
    #[serde(default = "default_fixture_tol")]
    pub tolerance: f64,
}

fn default_fixture_tol() -> f64 {
    1e-8
}

/// A parsed, validated run: the family plus bookkeeping for reports.
pub struct Run {
    pub config: RunConfig,
    pub family: PotentialFamily,
    pub system_name: String,
    pub config_hash: String,
}

pub fn load(
    path: &Path,
    seed_override: Option<u64>,
    checks_override: Option<Vec<String>>,
) -> Result<Run> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut config: RunConfig = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing config {}", path.display()))?;
    let config_hash = hex_digest(&bytes);
    if let Some(seed) = seed_override {
        config.sampling.seed = seed;
    }
    if let Some(checks) = checks_override {
        config.checks = checks;
    }
    validate(&config)?;
    let (family, system_name) = build_family(&config.system)?;
    Ok(Run {
        config,
        family,
        system_name,
        config_hash,
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

fn validate(config: &RunConfig) -> Result<()> {
    if config.schema_version != SCHEMA_VERSION {
        bail!(
            "config field `schema_version`: expected {SCHEMA_VERSION}, got {}",
            config.schema_version
        );
    }
    let g = &config.q_grid;
    if !(g.step > 0.0) {
        bail!(
            "config field `q_grid.step`: must be positive, got {}",
            g.step
        );
    }
    if !(g.min < 1.0 && 1.0 < g.max) {
        bail!(
            "config field `q_grid`: the grid [{}, {}] must straddle q = 1 so the T(1) = 0 certificate is exercised",
            g.min,
            g.max
        );
    }
    let d = &config.depths;
    for (name, v) in [
        ("depths.gibbs_depth", d.gibbs_depth),
        ("depths.endpoint_period", d.endpoint_period),
        ("depths.conformality_depth", d.conformality_depth),
    ] {
        if v == 0 || v > MAX_ENUM_DEPTH {
            bail!("config field `{name}`: {v} outside 1..={MAX_ENUM_DEPTH}");
        }
    }
    let s = &config.sampling;
    if s.n == 0 || s.samples == 0 {
        bail!("config field `sampling`: n and samples must be >= 1");
    }
    if !(s.epsilon > 0.0) {
        bail!("config field `sampling.epsilon`: must be positive");
    }
    let known = default_checks();
    for c in &config.checks {
        if !known.iter().any(|k| k == c) {
            bail!(
                "config field `checks`: unknown check `{c}` (known: {})",
                known.join(", ")
            );
        }
    }
    Ok(())
}

fn build_family(spec: &SystemSpec) -> Result<(PotentialFamily, String)> {
    match spec {
        SystemSpec::Builtin { builtin } => {
            let family = systems::by_name(builtin).ok_or_else(|| {
                anyhow!("unknown builtin system `{builtin}` (system_a, system_b, golden_mean)")
            })?;
            Ok((family, builtin.clone()))
        }
        SystemSpec::Inline { sft, g, jac } => {
            let shift = Sft::validate(sft.transitions.clone())
                .map_err(|e| anyhow!("config field `system.sft`: {e}"))?;
            let g = parse_table(&shift, g).map_err(|e| anyhow!("config field `system.g`: {e}"))?;
            let jac_pot =
                parse_table(&shift, jac).map_err(|e| anyhow!("config field `system.jac`: {e}"))?;
            let jac = JacobianPotential::new(jac_pot)
                .map_err(|e| anyhow!("config field `system.jac`: {e}"))?;
            let family =
                PotentialFamily::new(g, jac).map_err(|e| anyhow!("assembling the family: {e}"))?;
            Ok((family, "inline".into()))
        }
    }
}

fn parse_table(sft: &Arc<Sft>, table: &TableSpec) -> thermofractal::Result<Potential> {
    let json = serde_json::json!({"depth": table.depth, "values": table.values});
    Potential::from_json(sft.clone(), &json.to_string())
}
