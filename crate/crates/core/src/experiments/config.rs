use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::{DiameterMethod, DEFAULT_MAX_EXACT_VERTICES};
use crate::params::{Delta, PAParams, Variant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    /// Replicates per cell.
    pub seeds: u64,
    pub models: Vec<Variant>,
    pub m: Vec<u32>,
    pub delta: Vec<Delta>,
    pub t_grid: TGrid,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub execution: Option<Execution>,
}

fn default_master_seed() -> u64 {
    1
}

/// Either explicit `values` or a geometric grid `start * factor^k <= stop`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGrid {
    #[serde(default)]
    pub values: Vec<u64>,
    pub start: Option<u64>,
    pub stop: Option<u64>,
    pub factor: Option<u64>,
}

impl TGrid {
    pub fn points(&self) -> Result<Vec<u64>> {
        let mut out = self.values.clone();
        match (self.start, self.stop, self.factor) {
            (Some(start), Some(stop), factor) => {
                let factor = factor.unwrap_or(2);
                if factor < 2 || start == 0 {
                    return Err(Error::Config("t_grid needs start >= 1 and factor >= 2".into()));
                }
                let mut t = start;
                while t <= stop {
                    out.push(t);
                    t = t.saturating_mul(factor);
                }
            }
            (None, None, None) => {}
            _ => return Err(Error::Config("t_grid needs both start and stop".into())),
        }
        out.sort_unstable();
        out.dedup();
        if out.is_empty() {
            return Err(Error::Config("t grid is empty".into()));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    /// `exact`, `bounds` or absent.
    pub diameter: Option<DiameterMethod>,
    #[serde(default = "default_max_exact")]
    pub max_exact_vertices: usize,
    /// BFS budget for the bounds method.
    pub max_bfs: Option<usize>,
    #[serde(default)]
    pub typical_pairs: usize,
    pub core_sigma: Option<f64>,
    pub layer_d: Option<f64>,
    /// Proper-tree count at this depth, for cells with m >= 2 and even t.
    pub exploration_depth: Option<u32>,
    #[serde(default)]
    pub components: bool,
}

fn default_max_exact() -> usize {
    DEFAULT_MAX_EXACT_VERTICES
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            diameter: Some(DiameterMethod::Bounds),
            max_exact_vertices: DEFAULT_MAX_EXACT_VERTICES,
            max_bfs: None,
            typical_pairs: 0,
            core_sigma: None,
            layer_d: None,
            exploration_depth: None,
            components: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

/// One `(model, m, delta, t)` combination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub params: PAParams,
    pub t: u64,
}

impl Cell {
    pub fn key(&self) -> String {
        format!(
            "model={},m={},delta={},t={}",
            self.params.variant, self.params.m, self.params.delta, self.t
        )
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if self.models.is_empty() || self.m.is_empty() || self.delta.is_empty() {
            return Err(Error::Config("models, m and delta must be non-empty".into()));
        }
        self.t_grid.points()?;
        self.cells().map(|_| ())
    }

    /// All cells in a fixed order: model, m, delta, t.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let ts = self.t_grid.points()?;
        let mut out = Vec::new();
        for &v in &self.models {
            for &m in &self.m {
                for &d in &self.delta {
                    let params = PAParams::new(v, m, d)
                        .map_err(|e| Error::Config(format!("model={v} m={m} delta={d}: {e}")))?;
                    for &t in &ts {
                        out.push(Cell { params, t });
                    }
                }
            }
        }
        Ok(out)
    }

    /// SHA-256 of the canonical JSON form of the parsed config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Seed of replicate `r` in a cell, derived from the master seed and the cell key.
pub fn replicate_seed(master: u64, cell_key: &str, r: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(cell_key.as_bytes());
    h.update(r.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}
