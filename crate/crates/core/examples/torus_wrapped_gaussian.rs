//! Learn a wrapped Gaussian on the flat 2-torus and compare the test NLL per
//! dimension with the analytic entropy and the uniform baseline log 2π.
//!
//! ```text
//! cargo run --release --example torus_wrapped_gaussian -- [iterations] [seeds]
//! ```

use std::time::Instant;

use rdmix::config::RunConfig;
use rdmix::data::{split, wrapped_normal_entropy};
use rdmix::eval::{model_nll, nll_suite};
use rdmix::manifold::Space;
use rdmix::pipeline::{model_spec, space_dataset, space_prior, train_config};
use rdmix::train::fit;

const CONFIG: &str = r#"
task = "torus-wrapped-gaussian"

[manifold]
kind = "flat_torus"
dim = 2

[data]
source = "wrapped_gaussian"
n = 4000
scale = 0.2
seed = 7

[net]
hidden = 64
layers = 3

[train]
batch_size = 64
lr = 2e-3
ema_decay = 0.995
val_interval = 0
"#;

#[derive(Debug, Clone)]
pub struct TorusReport {
    /// Pooled test NLL per dimension over the seeds.
    pub nll_per_dim: f64,
    /// Largest change of a seed's mean NLL (total nats) when the ODE steps double.
    pub step_gap: f64,
    pub entropy_per_dim: f64,
    pub uniform_per_dim: f64,
    pub secs: f64,
}

pub fn run_torus(iterations: usize, seeds: &[u64]) -> rdmix::Result<TorusReport> {
    let start = Instant::now();
    let overrides = [format!("train.iterations={iterations}")];
    let cfg = RunConfig::from_toml(CONFIG, &overrides, std::path::Path::new("."))?;
    let space = Space::FlatTorus(2);
    let (_, prior) = space_prior(&space, cfg.prior.as_ref())?;
    let data = space_dataset(&cfg, &space)?;
    let model = model_spec(&cfg, prior);
    let mut trained = Vec::new();
    for &seed in seeds {
        let splits = split(&data, seed)?;
        let out = fit(&space, &model, &train_config(&cfg, seed), &splits.train.points, &[], None)?;
        trained.push((seed, out.best, splits.test.points));
    }
    let suite = nll_suite(seeds, 100, true, |seed, steps| {
        let (_, pair, test) = trained.iter().find(|(s, _, _)| *s == seed).expect("trained seed");
        model_nll(&space, &model, pair, test, steps)
    })?;
    Ok(TorusReport {
        nll_per_dim: suite.mean / 2.0,
        step_gap: suite.step_gap.unwrap_or(f64::NAN),
        entropy_per_dim: wrapped_normal_entropy(0.2),
        uniform_per_dim: (2.0 * std::f64::consts::PI).ln(),
        secs: start.elapsed().as_secs_f64(),
    })
}

#[allow(dead_code)]
fn main() -> rdmix::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let iterations = args.first().copied().unwrap_or(4000);
    let seeds: Vec<u64> = (0..args.get(1).copied().unwrap_or(1) as u64).collect();
    let r = run_torus(iterations, &seeds)?;
    println!("test NLL / dim   {:.4} (step-doubling gap {:.2e})", r.nll_per_dim, r.step_gap);
    println!("entropy / dim    {:.4}", r.entropy_per_dim);
    println!("uniform / dim    {:.4}", r.uniform_per_dim);
    println!("elapsed          {:.1} s", r.secs);
    Ok(())
}
