//! Command-line front end: `train`, `sample`, `nll`, `diagnose`, `data-gen`
//! and `mesh-basis`.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 for
//! failures during a run. Every file written carries the git description,
//! the config hash and the seed.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::bridges::{BridgeFamily, NoiseSchedule};
use crate::config::{env_seed, RunConfig};
use crate::data::{gen_vmf_mixture, Dataset, Manifest, PointCsv, VmfComponent};
use crate::error::{Error, Result};
use crate::eval::{
    convergence_curve, curves_to_csv, model_nll, prediction_paths, step_ablation, SimulationMode,
};
use crate::manifold::{Manifold, ManifoldKind, Point, Space};
use crate::mesh::{EigenMethod, MeshManifold, MeshPoint, SpectralBasis, WeightKind};
use crate::net::Checkpoint;
use crate::pipeline::{
    checkpoint_model, draw_samples, load_mesh_source, make_checkpoint, mesh_dataset, mesh_manifold, mesh_prior,
    model_spec, pair_from_checkpoint, score_run, space_dataset, space_prior, train_and_validate, train_config, train_split,
    Provenance,
    SampleMode, StampedLines,
};
use crate::prior::{Prior, PriorSpec};
use crate::rng::{derive_seed, substream};
use crate::sim::{prior_draws, sample_sde};
use crate::train::{FitStatus, TimeMode};

#[derive(Debug, Parser)]
#[command(name = "rdmix", version, about = "Diffusion mixtures on manifolds")]
pub struct Cli {
    /// Worker cap (computation is single-threaded; values above 1 are accepted).
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a forward/backward drift pair from a config.
    Train(TrainArgs),
    /// Draw samples from a checkpoint.
    Sample(SampleArgs),
    /// Per-point NLL of a dataset under a checkpoint.
    Nll(NllArgs),
    /// Diagnostic curves and ablations.
    Diagnose(DiagnoseArgs),
    /// Write the dataset described by a config as CSV plus a manifest.
    DataGen(DataGenArgs),
    /// Compute and save the spectral basis of a mesh.
    MeshBasis(MeshBasisArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Dotted override, e.g. `train.iterations=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// Output directory (default: `output.dir` from the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Sde,
    Ode,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Sde)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Expected manifold name; fails when the checkpoint differs.
    #[arg(long)]
    pub manifold: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NllArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Summary JSON path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write per-point NLLs to this CSV.
    #[arg(long)]
    pub per_point: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DiagnoseTask {
    TwoWaySteps,
    Convergence,
    TimeAblation,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long, value_enum)]
    pub task: DiagnoseTask,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of bridge pairs or trajectories.
    #[arg(long)]
    pub n: Option<usize>,
    /// Step counts for two-way-steps.
    #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 15, 25, 50, 100, 500])]
    pub steps: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub reference_steps: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75, 0.9, 0.95, 0.98])]
    pub times: Vec<f64>,
    /// Skip the one-way rows of two-way-steps.
    #[arg(long)]
    pub two_way_only: bool,
    /// Sampler steps for the convergence task.
    #[arg(long, default_value_t = 200)]
    pub sample_steps: usize,
    /// Training seeds for time-ablation.
    #[arg(long, value_delimiter = ',', default_values_t = [0, 1, 2])]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataGenArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightArg {
    Diffusion,
    Biharmonic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Auto,
    Dense,
    Sparse,
}

#[derive(Debug, Args)]
pub struct MeshBasisArgs {
    /// Mesh file (OFF/OBJ) or `square:N`.
    #[arg(long)]
    pub mesh: String,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = WeightArg::Diffusion)]
    pub weight: WeightArg,
    /// Diffusion time (default 1/λ_k).
    #[arg(long)]
    pub diffusion_t: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Nll(a) => cmd_nll(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::DataGen(a) => cmd_data_gen(a),
        Command::MeshBasis(a) => cmd_mesh_basis(a),
    }
}

/// A manifold with its prior, closed-form or mesh.
enum World {
    Space(Space, PriorSpec, Prior<Point>),
    Mesh(MeshManifold, PriorSpec, Prior<MeshPoint>),
}

macro_rules! on_world {
    ($w:expr, |$m:ident, $ps:ident, $p:ident| $body:expr) => {
        match $w {
            World::Space($m, $ps, $p) => $body,
            World::Mesh($m, $ps, $p) => $body,
        }
    };
}

impl World {
    /// The spectral basis is built only when `basis` is set.
    fn from_config(cfg: &RunConfig, basis: bool) -> Result<Self> {
        match &cfg.manifold {
            ManifoldKind::Mesh { path } => {
                let m = mesh_manifold(path, basis.then_some(&cfg.mesh))?;
                let (spec, prior) = mesh_prior(cfg.prior.as_ref())?;
                Ok(World::Mesh(m, spec, prior))
            }
            kind => {
                let space = Space::from_kind(kind)?;
                let (spec, prior) = space_prior(&space, cfg.prior.as_ref())?;
                Ok(World::Space(space, spec, prior))
            }
        }
    }

    fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let h = &ck.header;
        match &h.manifold {
            ManifoldKind::Mesh { path } => {
                let m = mesh_manifold(path, None)?;
                let (spec, prior) = mesh_prior(Some(&h.prior))?;
                Ok(World::Mesh(m, spec, prior))
            }
            kind => {
                let space = Space::from_kind(kind)?;
                let (spec, prior) = space_prior(&space, Some(&h.prior))?;
                Ok(World::Space(space, spec, prior))
            }
        }
    }
}

/// Dataset construction per manifold type.
trait Target: PointCsv + Sized {
    fn dataset(&self, cfg: &RunConfig) -> Result<Dataset<Self::Point>>;
}

impl Target for Space {
    fn dataset(&self, cfg: &RunConfig) -> Result<Dataset<Point>> {
        space_dataset(cfg, self)
    }
}

impl Target for MeshManifold {
    fn dataset(&self, cfg: &RunConfig) -> Result<Dataset<MeshPoint>> {
        Ok(mesh_dataset(cfg, self)?.0)
    }
}

fn hash_of(v: &serde_json::Value) -> String {
    let digest = Sha256::digest(v.to_string().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_json(path: &Path, mut v: serde_json::Value, prov: &Provenance) -> Result<()> {
    prov.stamp(&mut v);
    write_file(path, &(serde_json::to_string_pretty(&v)? + "\n"))
}

fn load_config(a: &ConfigArgs) -> Result<(RunConfig, u64, Provenance)> {
    let cfg = RunConfig::load(&a.config, &a.set)?;
    let seed = cfg.resolve_seed(a.seed)?;
    let prov = Provenance::new(cfg.hash(), seed);
    Ok((cfg, seed, prov))
}

fn checkpoint_prov(ck: &Checkpoint, seed: u64) -> Provenance {
    let mut p = Provenance::new(ck.header.config_hash.clone().unwrap_or_else(|| "none".into()), seed);
    if let Some(g) = &ck.header.git {
        p.git = g.clone();
    }
    p
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let (cfg, seed, prov) = load_config(&a.cfg)?;
    let dir = a.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    fs::create_dir_all(&dir)?;
    let world = World::from_config(&cfg, true)?;
    on_world!(&world, |m, spec, prior| train_on(m, spec, prior, &cfg, seed, &prov, &dir))
}

fn train_on<M: Target>(
    m: &M,
    prior_spec: &PriorSpec,
    prior: &Prior<M::Point>,
    cfg: &RunConfig,
    seed: u64,
    prov: &Provenance,
    dir: &Path,
) -> Result<()> {
    let data = m.dataset(cfg)?;
    let model = model_spec(cfg, prior.clone());
    let tcfg = train_config(cfg, seed);
    let mut metrics = StampedLines::new(BufWriter::new(fs::File::create(dir.join("metrics.jsonl"))?), prov);
    let (out, splits) = train_split(m, &model, &tcfg, &data, Some(&mut metrics))?;
    metrics.flush()?;
    drop(metrics);

    let ck = make_checkpoint(&out.best, &model, m.kind(), prior_spec.clone(), out.best_val_nll, prov);
    ck.save(&dir.join("checkpoint.ckpt"))?;
    write_json(&dir.join("config.json"), serde_json::to_value(cfg)?, prov)?;
    let header = prov.comment(&[("split", "test".into())]);
    write_file(&dir.join("test.csv"), &(header + &m.to_csv(&splits.test.points)))?;
    if let FitStatus::Diverged { iter } = out.status {
        return Err(Error::Diverged { iter });
    }
    let summary = score_run(m, cfg, &model, &out, &splits.test.points, seed)?;
    write_json(&dir.join("summary.json"), serde_json::to_value(&summary)?, prov)
}

fn cmd_sample(a: &SampleArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    if let Some(name) = &a.manifold {
        if name != ck.header.manifold.name() {
            return Err(Error::Usage(format!(
                "checkpoint is for manifold `{}`, not `{name}`",
                ck.header.manifold.name()
            )));
        }
    }
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(ck.header.seed),
    };
    let prov = checkpoint_prov(&ck, seed);
    let mode = match a.mode {
        ModeArg::Sde => SampleMode::Sde,
        ModeArg::Ode => SampleMode::Ode,
    };
    let header = prov.comment(&[
        ("mode", format!("{mode:?}").to_lowercase()),
        ("steps", a.steps.to_string()),
        ("n", a.n.to_string()),
    ]);
    let world = World::from_checkpoint(&ck)?;
    let body = on_world!(&world, |m, _spec, prior| {
        let model = checkpoint_model(&ck, prior.clone());
        let pts = if a.n == 0 {
            Vec::new()
        } else {
            draw_samples(m, &model, &pair_from_checkpoint(&ck), a.n, a.steps, mode, seed)?
        };
        m.to_sample_csv(&pts)
    });
    write_file(&a.out, &(header + &body))
}

fn cmd_nll(a: &NllArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    if a.steps == 0 {
        return Err(Error::Usage("--steps must be positive".into()));
    }
    let prov = checkpoint_prov(&ck, ck.header.seed);
    let text = fs::read_to_string(&a.data).map_err(|e| Error::Data(format!("{}: {e}", a.data.display())))?;
    let world = World::from_checkpoint(&ck)?;
    let (v, v2) = on_world!(&world, |m, _spec, prior| {
        let pts = m.from_csv(&text)?;
        if pts.is_empty() {
            return Err(Error::Data(format!("{} has no points", a.data.display())));
        }
        let model = checkpoint_model(&ck, prior.clone());
        let pair = pair_from_checkpoint(&ck);
        (model_nll(m, &model, &pair, &pts, a.steps)?, model_nll(m, &model, &pair, &pts, 2 * a.steps)?)
    });
    let (mean, std) = mean_std(&v);
    let (mean2, _) = mean_std(&v2);
    let summary = json!({
        "task": "nll",
        "data": a.data.display().to_string(),
        "n_points": v.len(),
        "nll_steps": a.steps,
        "nll_mean": mean,
        "nll_std": std,
        "nll_steps_doubled": 2 * a.steps,
        "nll_mean_doubled": mean2,
        "step_gap": (mean2 - mean).abs(),
    });
    if let Some(p) = &a.per_point {
        let mut s = prov.comment(&[("steps", a.steps.to_string())]);
        s.push_str("index,nll,nll_doubled\n");
        for (i, (x, y)) in v.iter().zip(&v2).enumerate() {
            s.push_str(&format!("{i},{x},{y}\n"));
        }
        write_file(p, &s)?;
    }
    match &a.out {
        Some(p) => write_json(p, summary, &prov),
        None => {
            let mut s = summary;
            prov.stamp(&mut s);
            println!("{}", serde_json::to_string_pretty(&s)?);
            Ok(())
        }
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

fn cmd_diagnose(a: &DiagnoseArgs) -> Result<()> {
    match a.task {
        DiagnoseTask::TwoWaySteps => diagnose_steps(a),
        DiagnoseTask::Convergence => diagnose_convergence(a),
        DiagnoseTask::TimeAblation => diagnose_time(a),
    }
}

fn diagnose_config(a: &DiagnoseArgs) -> Result<Option<(RunConfig, u64, Provenance)>> {
    match &a.config {
        Some(path) => load_config(&ConfigArgs {
            config: path.clone(),
            set: a.set.clone(),
            seed: a.seed,
        })
        .map(Some),
        None => Ok(None),
    }
}

fn diagnose_steps(a: &DiagnoseArgs) -> Result<()> {
    let n = a.n.unwrap_or(1000);
    let mut modes = vec![SimulationMode::TwoWay];
    if !a.two_way_only {
        modes.push(SimulationMode::OneWay);
    }
    let (body, prov) = match diagnose_config(a)? {
        Some((cfg, seed, prov)) => {
            let world = World::from_config(&cfg, true)?;
            let body = on_world!(&world, |m, _spec, prior| {
                let data = m.dataset(&cfg)?;
                let schedule = cfg.schedule();
                let family = cfg.family();
                ablation_rows(m, &data.points, prior, family, &schedule, n, &modes, a, seed)?
            });
            (body, prov)
        }
        None => {
            let seed = match a.seed {
                Some(s) => s,
                None => env_seed()?.unwrap_or(0),
            };
            let setup = json!({"task": "two-way-steps", "target": "vmf", "kappa": 20.0, "n": n});
            let prov = Provenance::new(hash_of(&setup), seed);
            let m = Space::Sphere(2);
            let comp = VmfComponent {
                mean: [0.0, 0.0, 1.0],
                kappa: 20.0,
                weight: 1.0,
            };
            let data = gen_vmf_mixture(&[comp], n, derive_seed(seed, 0xDA7A))?;
            let schedule = NoiseSchedule::constant(1.0);
            let body = ablation_rows(
                &m,
                &data.points,
                &Prior::Uniform,
                BridgeFamily::Logarithm,
                &schedule,
                n,
                &modes,
                a,
                seed,
            )?;
            (body, prov)
        }
    };
    let header = prov.comment(&[("reference_steps", a.reference_steps.to_string())]);
    write_file(&a.out, &(header + &body))
}

#[allow(clippy::too_many_arguments)]
fn ablation_rows<M: Manifold>(
    m: &M,
    points: &[M::Point],
    prior: &Prior<M::Point>,
    family: BridgeFamily,
    schedule: &NoiseSchedule,
    n: usize,
    modes: &[SimulationMode],
    a: &DiagnoseArgs,
    seed: u64,
) -> Result<String> {
    if points.is_empty() {
        return Err(Error::Data("dataset is empty".into()));
    }
    let mut rng = substream(derive_seed(seed, 0xD1), 0);
    let data: Vec<M::Point> = (0..n).map(|_| points[rng.random_range(0..points.len())].clone()).collect();
    let starts = prior_draws(m, prior, n, derive_seed(seed, 0xD2))?;
    let times: Vec<f64> = a.times.iter().map(|t| t * schedule.horizon()).collect();
    let mut s = String::from("mode,n_steps,mmd\n");
    for &mode in modes {
        let rows = step_ablation(m, &data, &starts, family, schedule, &a.steps, a.reference_steps, mode, &times, seed)?;
        for r in rows {
            s.push_str(&format!("{},{},{}\n", r.mode.name(), r.n_steps, r.mmd));
        }
    }
    Ok(s)
}

fn diagnose_convergence(a: &DiagnoseArgs) -> Result<()> {
    let path = a
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::Usage("convergence needs --checkpoint".into()))?;
    let ck = Checkpoint::load(path)?;
    let seed = match a.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(ck.header.seed),
    };
    let prov = checkpoint_prov(&ck, seed);
    let n = a.n.unwrap_or(64);
    let world = World::from_checkpoint(&ck)?;
    let body = on_world!(&world, |m, _spec, prior| {
        let model = checkpoint_model(&ck, prior.clone());
        let (f, _) = pair_from_checkpoint(&ck).eval_nets()?;
        let batch = sample_sde(m, &f, &model.schedule, &model.prior, n, a.sample_steps, seed, true)?;
        let finals = batch.finals().to_vec();
        let traj = convergence_curve(m, &batch.states, &finals)?;
        let preds = prediction_paths(m, &f, &model.schedule, &batch.times, &batch.states)?;
        let pred = convergence_curve(m, &preds, &finals)?;
        curves_to_csv(&batch.times, &[("trajectory", &traj), ("prediction", &pred)])
    });
    let header = prov.comment(&[("n", n.to_string()), ("steps", a.sample_steps.to_string())]);
    write_file(&a.out, &(header + &body))
}

fn diagnose_time(a: &DiagnoseArgs) -> Result<()> {
    let (cfg, _, prov) = diagnose_config(a)?.ok_or_else(|| Error::Usage("time-ablation needs --config".into()))?;
    if a.seeds.is_empty() {
        return Err(Error::Usage("time-ablation needs at least one seed".into()));
    }
    let world = World::from_config(&cfg, true)?;
    let mut s = String::from("seed,uniform,time_scaled\n");
    let mut sums = [0.0; 2];
    for &seed in &a.seeds {
        let mut row = [0.0; 2];
        for (j, mode) in [TimeMode::Uniform, TimeMode::TimeScaled].into_iter().enumerate() {
            let mut c = cfg.clone();
            c.train.time_mode = mode;
            row[j] = on_world!(&world, |m, _spec, prior| time_ablation_nll(m, prior, &c, seed)?);
            sums[j] += row[j];
        }
        s.push_str(&format!("{seed},{},{}\n", row[0], row[1]));
    }
    let k = a.seeds.len() as f64;
    s.push_str(&format!("mean,{},{}\n", sums[0] / k, sums[1] / k));
    let seeds: Vec<String> = a.seeds.iter().map(u64::to_string).collect();
    let header = prov.comment(&[("seeds", seeds.join(";"))]);
    write_file(&a.out, &(header + &s))
}

fn time_ablation_nll<M: Target>(m: &M, prior: &Prior<M::Point>, cfg: &RunConfig, seed: u64) -> Result<f64> {
    let data = m.dataset(cfg)?;
    train_and_validate(m, &model_spec(cfg, prior.clone()), &train_config(cfg, seed), &data)
}

fn cmd_data_gen(a: &DataGenArgs) -> Result<()> {
    let (cfg, _, prov) = load_config(&a.cfg)?;
    let world = World::from_config(&cfg, false)?;
    let (csv, data_name, n) = on_world!(&world, |m, _spec, _prior| {
        let d = m.dataset(&cfg)?;
        (m.to_csv(&d.points), d.name.clone(), d.len())
    });
    let header = prov.comment(&[("dataset", data_name.clone())]);
    write_file(&a.out, &(header + &csv))?;
    let manifest = Manifest {
        name: data_name,
        manifold: cfg.manifold.clone(),
        n,
        source: format!("rdmix data-gen {}", serde_json::to_string(&cfg.data)?),
    };
    manifest.save(&Manifest::path_for(&a.out))
}

fn cmd_mesh_basis(a: &MeshBasisArgs) -> Result<()> {
    let weight = match a.weight {
        WeightArg::Diffusion => WeightKind::Diffusion { t: a.diffusion_t },
        WeightArg::Biharmonic => WeightKind::Biharmonic,
    };
    let method = match a.method {
        MethodArg::Auto => EigenMethod::Auto,
        MethodArg::Dense => EigenMethod::Dense,
        MethodArg::Sparse => EigenMethod::Sparse,
    };
    let setup = json!({
        "mesh": a.mesh,
        "k": a.k,
        "weight": serde_json::to_value(weight)?,
        "method": serde_json::to_value(method)?,
    });
    let seed = env_seed()?.unwrap_or(0);
    let prov = Provenance::new(hash_of(&setup), seed);
    let mesh = load_mesh_source(&a.mesh)?;
    let basis = SpectralBasis::compute(&mesh, a.k, weight, method)?;
    basis.save(&a.out)?;
    let mut info = setup;
    info["n_vertices"] = mesh.n_vertices().into();
    info["eigenvalues"] = serde_json::to_value(&basis.eigenvalues)?;
    write_json(&a.out.with_extension("json"), info, &prov)
}
