//! Run configuration: a TOML file plus dotted `key=value` overrides.
//!
//! ```toml
//! task = "sphere-vmf"
//! seed = 0
//! family = "logarithm"
//!
//! [manifold]
//! kind = "sphere"
//! dim = 2
//!
//! [schedule]
//! kind = "constant"
//! sigma = 1.0
//!
//! [data]
//! source = "vmf"
//! n = 5000
//! components = [{ mean = [0.0, 0.0, 1.0], kappa = 20.0 }]
//!
//! [train]
//! iterations = 2000
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bridges::{BridgeFamily, NoiseSchedule};
use crate::data::VmfComponent;
use crate::error::{Error, Result};
use crate::eval::MmdConfig;
use crate::manifold::ManifoldKind;
use crate::mesh::{EigenMethod, WeightKind};
use crate::net::NetConfig;
use crate::prior::PriorSpec;
use crate::sim::OdeMethod;
use crate::train::TrainConfig;

/// Environment variable consulted when neither the config nor the command
/// line sets a seed.
pub const SEED_ENV: &str = "MM_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "d_task")]
    pub task: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub manifold: ManifoldKind,
    /// Defaults to σ = 1 on closed-form manifolds and σ = 0.5 on meshes.
    #[serde(default)]
    pub schedule: Option<NoiseSchedule>,
    /// Defaults to the Logarithm bridge, or the Spectral bridge on meshes.
    #[serde(default)]
    pub family: Option<BridgeFamily>,
    #[serde(default)]
    pub prior: Option<PriorSpec>,
    #[serde(default)]
    pub ode_method: Option<OdeMethod>,
    #[serde(default)]
    pub net: NetConfig,
    #[serde(default)]
    pub train: TrainConfig,
    pub data: DataConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn d_task() -> String {
    "run".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    /// A point CSV in the manifold's format.
    File { path: PathBuf },
    /// Wrapped Gaussian on the torus; `mean = None` draws a uniform mean
    /// from the seed.
    WrappedGaussian {
        n: usize,
        #[serde(default)]
        mean: Option<Vec<f64>>,
        #[serde(default = "d_scale")]
        scale: f64,
        /// Generator seed, independent of the run seed so every split seed
        /// sees the same dataset.
        #[serde(default)]
        seed: u64,
    },
    /// vMF mixture on S².
    Vmf {
        n: usize,
        components: Vec<VmfComponent>,
        #[serde(default)]
        seed: u64,
    },
    /// Thresholded k-th eigenfunction density on a mesh, computed on a
    /// Loop-subdivided copy.
    MeshEigen {
        n: usize,
        k: usize,
        #[serde(default = "d_subdivisions")]
        subdivisions: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn d_scale() -> f64 {
    0.2
}
fn d_subdivisions() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Eigenpairs kept for the spectral distance.
    #[serde(default = "d_basis_k")]
    pub basis_k: usize,
    #[serde(default)]
    pub weight: WeightKind,
    #[serde(default)]
    pub eigen_method: EigenMethod,
    /// Cached basis file; computed and written when missing.
    #[serde(default)]
    pub basis_cache: Option<PathBuf>,
}

fn d_basis_k() -> usize {
    100
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            basis_k: d_basis_k(),
            weight: WeightKind::default(),
            eigen_method: EigenMethod::default(),
            basis_cache: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default = "d_nll_steps")]
    pub nll_steps: usize,
    /// Also score with twice the ODE steps.
    #[serde(default = "d_true")]
    pub check_doubling: bool,
    #[serde(default = "d_sample_steps")]
    pub sample_steps: usize,
    #[serde(default = "d_n_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub mmd: MmdConfig,
}

fn d_nll_steps() -> usize {
    100
}
fn d_true() -> bool {
    true
}
fn d_sample_steps() -> usize {
    200
}
fn d_n_samples() -> usize {
    1000
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            nll_steps: d_nll_steps(),
            check_doubling: true,
            sample_steps: d_sample_steps(),
            n_samples: d_n_samples(),
            mmd: MmdConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "d_out_dir")]
    pub dir: PathBuf,
}

fn d_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: d_out_dir() }
    }
}

const SCHEDULE_KEYS: [&str; 5] = ["kind", "sigma", "sigma0", "sigma1", "horizon"];

/// Set `a.b.c = value` in a TOML table. The value is parsed as TOML and
/// falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("bad override key {key:?}")));
    }
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key}: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    /// Parse TOML text with overrides applied. Relative paths are resolved
    /// against `base`.
    pub fn from_toml(text: &str, overrides: &[String], base: &Path) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        if let Some(s) = table.get("schedule").and_then(|v| v.as_table()) {
            if let Some(k) = s.keys().find(|k| !SCHEDULE_KEYS.contains(&k.as_str())) {
                return Err(Error::Config(format!("unknown key `schedule.{k}`")));
            }
        }
        let mut cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        if let ManifoldKind::Mesh { path } = &mut cfg.manifold {
            if !path.starts_with("square:") {
                let mut p = PathBuf::from(&*path);
                resolve(base, &mut p);
                *path = p.to_string_lossy().into_owned();
            }
        }
        if let DataConfig::File { path } = &mut cfg.data {
            resolve(base, path);
        }
        if let Some(p) = &mut cfg.mesh.basis_cache {
            resolve(base, p);
        }
        resolve(base, &mut cfg.output.dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, overrides, base)
    }

    fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.schedule().validate()?;
        let is_mesh = matches!(self.manifold, ManifoldKind::Mesh { .. });
        match (&self.data, &self.manifold) {
            (DataConfig::WrappedGaussian { .. }, ManifoldKind::FlatTorus { .. })
            | (DataConfig::Vmf { .. }, ManifoldKind::Sphere { dim: 2 })
            | (DataConfig::MeshEigen { .. }, ManifoldKind::Mesh { .. })
            | (DataConfig::File { .. }, _) => {}
            (d, m) => {
                return Err(Error::Config(format!(
                    "data source `{}` does not fit manifold `{}`",
                    data_source_name(d),
                    m.name()
                )))
            }
        }
        if self.family() == BridgeFamily::Spectral && !is_mesh {
            return Err(Error::Config("the spectral bridge needs a mesh manifold".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> NoiseSchedule {
        self.schedule.unwrap_or(match self.manifold {
            ManifoldKind::Mesh { .. } => NoiseSchedule::constant(0.5),
            _ => NoiseSchedule::constant(1.0),
        })
    }

    pub fn family(&self) -> BridgeFamily {
        self.family.unwrap_or(match self.manifold {
            ManifoldKind::Mesh { .. } => BridgeFamily::Spectral,
            _ => BridgeFamily::Logarithm,
        })
    }

    pub fn ode_method(&self) -> OdeMethod {
        self.ode_method.unwrap_or(OdeMethod::Rk4)
    }

    /// Seed from the command line, else the config, else `MM_SEED`, else 0.
    pub fn resolve_seed(&self, cli: Option<u64>) -> Result<u64> {
        if let Some(s) = cli.or(self.seed) {
            return Ok(s);
        }
        env_seed().map(|s| s.unwrap_or(0))
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// `MM_SEED`, if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn data_source_name(d: &DataConfig) -> &'static str {
    match d {
        DataConfig::File { .. } => "file",
        DataConfig::WrappedGaussian { .. } => "wrapped_gaussian",
        DataConfig::Vmf { .. } => "vmf",
        DataConfig::MeshEigen { .. } => "mesh_eigen",
    }
}
