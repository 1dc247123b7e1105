//! Suite configuration: TOML parsing, defaults and validation.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, SpaceTimeGridSpec};
use crate::harness::{DEFAULT_DRIFT, INEQUALITY_IDS};

/// Largest grid size a config may request.
pub const MAX_N: usize = 129;
/// Largest number of time nodes a config may request.
pub const MAX_M: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub half_extent: f64,
    pub n: usize,
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.d, self.half_extent, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlabConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub half_extent: f64,
    pub n: usize,
    pub t0: f64,
    pub t1: f64,
    pub m: usize,
}

impl SlabConfig {
    pub fn spec(&self) -> Result<SpaceTimeGridSpec> {
        SpaceTimeGridSpec::new(GridSpec::new(self.d, self.half_extent, self.n)?, self.t0, self.t1, self.m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kappas: Vec<f64>,
    pub p: f64,
    pub d: usize,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub scale_drift: f64,
    /// Per-suite replacements for `scale_drift`.
    pub drift_overrides: BTreeMap<String, f64>,
    pub fast_direct: f64,
    pub hardy_constant: f64,
    pub near_extremal: f64,
    pub truncated_slack: f64,
    pub truncated_slope: f64,
    pub sweep_slope: f64,
    pub sweep_u_drift: f64,
    pub trace_recovery: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            scale_drift: DEFAULT_DRIFT,
            drift_overrides: [("trace-remark-3.4".to_string(), 3.0)].into_iter().collect(),
            fast_direct: 1e-10,
            hardy_constant: 4.0 * 1.05,
            near_extremal: 3.0,
            truncated_slack: 0.05,
            truncated_slope: 0.05,
            sweep_slope: 0.15,
            sweep_u_drift: 2.0,
            trace_recovery: 1e-3,
        }
    }
}

impl Thresholds {
    pub fn drift_for(&self, id: &str) -> f64 {
        self.drift_overrides.get(id).copied().unwrap_or(self.scale_drift)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Inequalities to run, in order; empty means all.
    pub ids: Vec<String>,
    /// Number of dyadic scales `λ = 1, 2, 4, …`.
    pub scale_count: usize,
    pub elliptic_cases: usize,
    pub spacetime_cases: usize,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
    /// Elliptic suites (Adams, weighted, Hardy, truncated).
    pub grid: GridConfig,
    /// Sharp-maximal suite.
    pub planar_grid: GridConfig,
    /// Global and Morrey trace suites; `t = 0` must be an interior node.
    pub slab: SlabConfig,
    /// Local trace suite.
    pub local_slab: SlabConfig,
    /// Tail suite; `t = 0` must be a node.
    pub tail_slab: SlabConfig,
    pub sweep: SweepConfig,
    pub thresholds: Thresholds,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let tau = 1.0 / 256.0;
        let tau_local = 1.0 / 64.0;
        Self {
            seed: 0,
            ids: INEQUALITY_IDS.iter().map(|s| s.to_string()).collect(),
            scale_count: 3,
            elliptic_cases: 20,
            spacetime_cases: 10,
            output_dir: PathBuf::from("reports"),
            formats: vec![Format::Json, Format::Csv],
            grid: GridConfig { d: 3, half_extent: 2.0, n: 65 },
            planar_grid: GridConfig { d: 2, half_extent: 2.0, n: 65 },
            slab: SlabConfig { d: 2, half_extent: 2.0, n: 65, t0: -63.0 * tau, t1: 64.0 * tau, m: 128 },
            local_slab: SlabConfig { d: 2, half_extent: 2.0, n: 65, t0: -63.0 * tau_local, t1: 1.0, m: 128 },
            tail_slab: SlabConfig { d: 2, half_extent: 3.0, n: 65, t0: 0.0, t1: 4.0, m: 128 },
            sweep: SweepConfig { kappas: vec![0.25, 0.125, 0.0625], p: 2.0, d: 3, n: 65 },
            thresholds: Thresholds::default(),
        }
    }
}

fn registered() -> String {
    INEQUALITY_IDS.join(", ")
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        for id in &self.ids {
            if !INEQUALITY_IDS.contains(&id.as_str()) {
                return Err(Error::UnknownInequality { id: id.clone(), valid: registered() });
            }
        }
        for id in self.thresholds.drift_overrides.keys() {
            if !INEQUALITY_IDS.contains(&id.as_str()) {
                return Err(Error::UnknownInequality { id: id.clone(), valid: registered() });
            }
        }
        let ns = [self.grid.n, self.planar_grid.n, self.slab.n, self.local_slab.n, self.tail_slab.n, self.sweep.n];
        if let Some(n) = ns.iter().find(|&&n| n > MAX_N) {
            return Err(Error::Config(format!("n = {n} exceeds the cap {MAX_N}")));
        }
        let ms = [self.slab.m, self.local_slab.m, self.tail_slab.m];
        if let Some(m) = ms.iter().find(|&&m| m > MAX_M) {
            return Err(Error::Config(format!("m = {m} exceeds the cap {MAX_M}")));
        }
        if self.scale_count < 2 {
            return Err(Error::Config("scale_count must be at least 2".into()));
        }
        if self.elliptic_cases == 0 || self.spacetime_cases == 0 {
            return Err(Error::Config("corpus sizes must be positive".into()));
        }
        if self.formats.is_empty() {
            return Err(Error::Config("at least one output format is required".into()));
        }
        self.grid.spec()?;
        self.planar_grid.spec()?;
        self.slab.spec()?;
        self.local_slab.spec()?;
        self.tail_slab.spec()?;
        Ok(())
    }

    /// The config with every default spelled out.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the echoed config, hex encoded. The output directory is
    /// left out so that relocated runs carry the same hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        hex::encode(Sha256::digest(c.echo().as_bytes()))
    }

    /// Dyadic dilation factors `1, 2, 4, …`.
    pub fn lambdas(&self) -> Vec<f64> {
        (0..self.scale_count).map(|k| f64::powi(2.0, k as i32)).collect()
    }
}

/// Parses a TOML document; missing keys take their defaults and an empty
/// `ids` list selects every registered inequality.
pub fn parse_config(text: &str) -> Result<SuiteConfig> {
    let mut cfg: SuiteConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if cfg.ids.is_empty() {
        cfg.ids = SuiteConfig::default().ids;
    }
    cfg.validate()?;
    Ok(cfg)
}
