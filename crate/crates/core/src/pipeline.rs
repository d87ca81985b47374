//! End-to-end runs assembled from a [`RunConfig`]: manifold and dataset
//! construction, training, checkpoints, sampling and scoring.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{DataConfig, MeshConfig, RunConfig};
use crate::data::{
    gen_vmf_mixture, gen_wrapped_gaussian, load_mesh_points, load_points, split, Dataset, MeshTarget, Splits,
    WrappedGaussianSpec,
};
use crate::error::{Error, Result};
use crate::eval::{mmd, model_nll, MmdConfig};
use crate::manifold::{Manifold, ManifoldKind, Point, Space};
use crate::mesh::{load_mesh, MeshManifold, MeshPoint, SpectralBasis, TriMesh};
use crate::net::{Architecture, Checkpoint, CheckpointHeader, CHECKPOINT_FORMAT};
use crate::prior::{Prior, PriorSpec};
use crate::rng::{derive_seed, substream};
use crate::sim::{prior_draws, sample_sde, solve_ode, ProbabilityFlow};
use crate::train::{fit, validation_nll, FitOutcome, FitStatus, ModelSpec, TrainConfig, TrainedPair};

const TAG_SAMPLES: u64 = 0x5AA;

/// `git describe` of the build.
pub fn git_describe() -> &'static str {
    env!("RDMIX_GIT_DESCRIBE")
}

/// Stamp written into every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub git: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Provenance {
            git: git_describe().to_string(),
            config_hash: config_hash.into(),
            seed,
        }
    }

    /// `# git=... config_hash=... seed=...` plus extra `key=value` pairs.
    pub fn comment(&self, extra: &[(&str, String)]) -> String {
        let mut s = format!("# git={} config_hash={} seed={}", self.git, self.config_hash, self.seed);
        for (k, v) in extra {
            s.push_str(&format!(" {k}={v}"));
        }
        s.push('\n');
        s
    }

    /// Add the stamp fields to a JSON object.
    pub fn stamp(&self, v: &mut serde_json::Value) {
        if let Some(o) = v.as_object_mut() {
            o.insert("git".into(), self.git.clone().into());
            o.insert("config_hash".into(), self.config_hash.clone().into());
            o.insert("seed".into(), self.seed.into());
        }
    }
}

/// Writer that appends the provenance fields to every JSON line.
pub struct StampedLines<W: Write> {
    inner: W,
    suffix: String,
    buf: Vec<u8>,
}

impl<W: Write> StampedLines<W> {
    pub fn new(inner: W, prov: &Provenance) -> Self {
        let suffix = format!(
            ",\"git\":{},\"config_hash\":{},\"seed\":{}}}",
            serde_json::Value::from(prov.git.clone()),
            serde_json::Value::from(prov.config_hash.clone()),
            prov.seed
        );
        StampedLines {
            inner,
            suffix,
            buf: Vec::new(),
        }
    }
}

impl<W: Write> Write for StampedLines<W> {
    fn write(&mut self, data: &[u8]) -> std::io::Result<usize> {
        for &b in data {
            if b == b'\n' {
                if self.buf.last() == Some(&b'}') {
                    self.buf.pop();
                    self.buf.extend_from_slice(self.suffix.as_bytes());
                }
                self.buf.push(b'\n');
                self.inner.write_all(&self.buf)?;
                self.buf.clear();
            } else {
                self.buf.push(b);
            }
        }
        Ok(data.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.write_all(&self.buf)?;
        self.buf.clear();
        self.inner.flush()
    }
}

/// A mesh given as a file path or `square:N` (an N×N flat grid on the unit
/// square).
pub fn load_mesh_source(path: &str) -> Result<TriMesh> {
    if let Some(n) = path.strip_prefix("square:") {
        let n: usize = n
            .parse()
            .map_err(|_| Error::Config(format!("bad grid size in mesh source {path:?}")))?;
        return TriMesh::square_grid(n);
    }
    let p = Path::new(path);
    if !p.exists() {
        return Err(Error::Config(format!("manifold.path: mesh file {path} does not exist")));
    }
    load_mesh(p)
}

/// Spectral basis from the cache when it matches, else computed (and cached
/// when a cache path is set).
pub fn mesh_basis(mesh: &TriMesh, cfg: &MeshConfig) -> Result<SpectralBasis> {
    if let Some(cache) = &cfg.basis_cache {
        if cache.exists() {
            let b = SpectralBasis::load(cache, mesh)?;
            if b.k() == cfg.basis_k && b.weight_kind == cfg.weight {
                return Ok(b);
            }
        }
    }
    let b = SpectralBasis::compute(mesh, cfg.basis_k, cfg.weight, cfg.eigen_method)?;
    if let Some(cache) = &cfg.basis_cache {
        b.save(cache)?;
    }
    Ok(b)
}

/// Mesh manifold for `path`, with a spectral basis when `cfg` is given.
pub fn mesh_manifold(path: &str, cfg: Option<&MeshConfig>) -> Result<MeshManifold> {
    let mesh = load_mesh_source(path)?;
    let basis = cfg.map(|c| mesh_basis(&mesh, c)).transpose()?;
    let m = MeshManifold::new(mesh, path);
    match basis {
        Some(b) => m.with_basis(b),
        None => Ok(m),
    }
}

/// Prior on a closed-form space from the config (or the default for it).
pub fn space_prior(space: &Space, spec: Option<&PriorSpec>) -> Result<(PriorSpec, Prior<Point>)> {
    let spec = spec.cloned().unwrap_or_else(|| PriorSpec::default_for(space));
    let prior = spec.build(space)?;
    Ok((spec, prior))
}

pub fn mesh_prior(spec: Option<&PriorSpec>) -> Result<(PriorSpec, Prior<MeshPoint>)> {
    match spec {
        None | Some(PriorSpec::Uniform) => Ok((PriorSpec::Uniform, Prior::Uniform)),
        Some(other) => Err(Error::Config(format!("prior {other:?} is not available on meshes"))),
    }
}

fn missing_data(path: &Path) -> Error {
    Error::Config(format!("data.path: dataset file {} does not exist", path.display()))
}

pub fn space_dataset(cfg: &RunConfig, space: &Space) -> Result<Dataset<Point>> {
    match &cfg.data {
        DataConfig::File { path } => {
            if !path.exists() {
                return Err(missing_data(path));
            }
            load_points(space, path)
        }
        DataConfig::WrappedGaussian { n, mean, scale, seed } => {
            let dim = space.kind().dim();
            let mean = match mean {
                Some(m) => m.clone(),
                None => {
                    let mut rng = substream(derive_seed(*seed, 0x3EA), 0);
                    space.sample_uniform(&mut rng, 1)?.remove(0).0
                }
            };
            if mean.len() != dim {
                return Err(Error::Config(format!("data.mean has {} entries, expected {dim}", mean.len())));
            }
            gen_wrapped_gaussian(&WrappedGaussianSpec { mean, scale: *scale }, *n, *seed)
        }
        DataConfig::Vmf { n, components, seed } => gen_vmf_mixture(components, *n, *seed),
        DataConfig::MeshEigen { .. } => Err(Error::Config("mesh_eigen data needs a mesh manifold".into())),
    }
}

/// Dataset on a mesh, plus the target when it was generated.
pub fn mesh_dataset(cfg: &RunConfig, m: &MeshManifold) -> Result<(Dataset<MeshPoint>, Option<MeshTarget>)> {
    match &cfg.data {
        DataConfig::File { path } => {
            if !path.exists() {
                return Err(missing_data(path));
            }
            Ok((load_mesh_points(m, path)?, None))
        }
        DataConfig::MeshEigen {
            n,
            k,
            subdivisions,
            seed,
        } => {
            let target = MeshTarget::new(&m.mesh, *k, *subdivisions, cfg.mesh.eigen_method)?;
            let pts = target.sample(&m.mesh, *n, &mut substream(*seed, 0));
            Ok((Dataset::new(format!("mesh-eigen-k{k}"), m.kind(), pts), Some(target)))
        }
        _ => Err(Error::Config("this data source needs a closed-form manifold".into())),
    }
}

pub fn model_spec<P>(cfg: &RunConfig, prior: Prior<P>) -> ModelSpec<P> {
    ModelSpec {
        family: cfg.family(),
        schedule: cfg.schedule(),
        prior,
        net: cfg.net.clone(),
        ode_method: cfg.ode_method(),
    }
}

pub fn train_config(cfg: &RunConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        ..cfg.train.clone()
    }
}

/// Split with `seed` and fit on the training part, validating on the
/// validation part.
pub fn train_split<M: Manifold>(
    m: &M,
    model: &ModelSpec<M::Point>,
    tcfg: &TrainConfig,
    data: &Dataset<M::Point>,
    metrics: Option<&mut dyn Write>,
) -> Result<(FitOutcome, Splits<M::Point>)> {
    let splits = split(data, tcfg.seed)?;
    let out = fit(m, model, tcfg, &splits.train.points, &splits.valid.points, metrics)?;
    Ok((out, splits))
}

/// Validation NLL of the best state after training on the split for
/// `tcfg.seed`, scored on up to `tcfg.val_points` validation points.
pub fn train_and_validate<M: Manifold>(
    m: &M,
    model: &ModelSpec<M::Point>,
    tcfg: &TrainConfig,
    data: &Dataset<M::Point>,
) -> Result<f64> {
    let (out, splits) = train_split(m, model, tcfg, data, None)?;
    if let FitStatus::Diverged { iter } = out.status {
        return Err(Error::Diverged { iter });
    }
    let n = splits.valid.points.len().min(tcfg.val_points);
    validation_nll(m, model, &out.best, &splits.valid.points[..n], tcfg.val_steps)
}

pub fn make_checkpoint<P>(
    pair: &TrainedPair,
    model: &ModelSpec<P>,
    kind: ManifoldKind,
    prior: PriorSpec,
    val_nll: Option<f64>,
    prov: &Provenance,
) -> Checkpoint {
    let f = &pair.forward;
    Checkpoint {
        header: CheckpointHeader {
            format: CHECKPOINT_FORMAT.into(),
            architecture: Architecture {
                widths: f.net.mlp.widths.clone(),
                activation: f.net.mlp.activation,
            },
            manifold: kind,
            schedule: model.schedule,
            family: model.family,
            prior,
            ode_method: model.ode_method,
            iteration: pair.iteration as u64,
            seed: prov.seed,
            adam: f.adam.cfg,
            adam_steps: f.adam.t,
            ema_decay: f.ema.decay,
            val_nll,
            config_hash: Some(prov.config_hash.clone()),
            git: Some(prov.git.clone()),
        },
        forward: pair.forward.clone(),
        backward: pair.backward.clone(),
    }
}

pub fn pair_from_checkpoint(ck: &Checkpoint) -> TrainedPair {
    TrainedPair {
        forward: ck.forward.clone(),
        backward: ck.backward.clone(),
        iteration: ck.header.iteration as usize,
    }
}

pub fn checkpoint_model<P>(ck: &Checkpoint, prior: Prior<P>) -> ModelSpec<P> {
    ModelSpec {
        family: ck.header.family,
        schedule: ck.header.schedule,
        prior,
        net: Default::default(),
        ode_method: ck.header.ode_method,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    Sde,
    Ode,
}

/// Samples from a trained pair: the SDE with the forward drift, or the
/// probability-flow ODE, both started from the same prior draws.
pub fn draw_samples<M: Manifold>(
    m: &M,
    model: &ModelSpec<M::Point>,
    pair: &TrainedPair,
    n: usize,
    steps: usize,
    mode: SampleMode,
    seed: u64,
) -> Result<Vec<M::Point>> {
    let (f, b) = pair.eval_nets()?;
    let seed = derive_seed(seed, TAG_SAMPLES);
    match mode {
        SampleMode::Sde => Ok(sample_sde(m, &f, &model.schedule, &model.prior, n, steps, seed, false)?
            .states
            .pop()
            .unwrap_or_default()),
        SampleMode::Ode => {
            let starts = prior_draws(m, &model.prior, n, seed)?;
            let flow = ProbabilityFlow::new(&f, &b, model.schedule.horizon());
            solve_ode(m, &flow, &starts, 0.0, model.schedule.horizon(), steps, model.ode_method)
        }
    }
}

/// Test-set scores written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub task: String,
    pub seed: u64,
    pub nll_mean: f64,
    pub nll_std: f64,
    pub mmd: Option<f64>,
    pub nll_steps: usize,
    pub nll_mean_doubled: Option<f64>,
    pub val_nll: Option<f64>,
    pub iterations: usize,
    pub status: String,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Test NLL (and at doubled steps when configured) plus the MMD between
/// SDE samples and the test set.
pub fn score_run<M: Manifold>(
    m: &M,
    cfg: &RunConfig,
    model: &ModelSpec<M::Point>,
    out: &FitOutcome,
    test: &[M::Point],
    seed: u64,
) -> Result<RunSummary> {
    let pair = &out.best;
    let steps = cfg.eval.nll_steps;
    let v = model_nll(m, model, pair, test, steps)?;
    let (nll_mean, nll_std) = mean_std(&v);
    let nll_mean_doubled = if cfg.eval.check_doubling {
        Some(mean_std(&model_nll(m, model, pair, test, 2 * steps)?).0)
    } else {
        None
    };
    let mmd_val = if test.len() >= 2 && cfg.eval.n_samples >= 2 {
        let samples = draw_samples(m, model, pair, cfg.eval.n_samples, cfg.eval.sample_steps, SampleMode::Sde, seed)?;
        Some(mmd(m, &samples, test, &MmdConfig { ..cfg.eval.mmd })?.unbiased)
    } else {
        None
    };
    Ok(RunSummary {
        task: cfg.task.clone(),
        seed,
        nll_mean,
        nll_std,
        mmd: mmd_val,
        nll_steps: steps,
        nll_mean_doubled,
        val_nll: out.best_val_nll,
        iterations: out.best.iteration,
        status: format!("{:?}", out.status),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stamped_lines_append_fields() {
        let prov = Provenance {
            git: "g".into(),
            config_hash: "h".into(),
            seed: 3,
        };
        let mut buf = Vec::new();
        {
            let mut w = StampedLines::new(&mut buf, &prov);
            w.write_all(b"{\"a\":1}\n{\"b\":").unwrap();
            w.write_all(b"2}\n").unwrap();
            w.flush().unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1]["b"], 2);
        assert_eq!(lines[1]["seed"], 3);
        assert_eq!(lines[0]["config_hash"], "h");
    }

    #[test]
    fn square_mesh_source() {
        let m = load_mesh_source("square:4").unwrap();
        assert_eq!(m.n_faces(), 32);
        assert!(matches!(load_mesh_source("/no/such.off"), Err(Error::Config(_))));
        assert!(load_mesh_source("square:x").is_err());
    }
}
