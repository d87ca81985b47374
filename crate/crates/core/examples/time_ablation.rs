//! Time-scaled versus uniform loss-time sampling under a linear noise
//! schedule, on a vMF mixture on S². Prints the validation NLL of both
//! variants for each training seed.
//!
//! ```text
//! cargo run --release --example time_ablation -- [iterations] [seeds]
//! ```

use std::time::Instant;

use rdmix::config::RunConfig;
use rdmix::manifold::Space;
use rdmix::pipeline::{model_spec, space_dataset, space_prior, train_and_validate, train_config};
use rdmix::train::TimeMode;

const CONFIG: &str = r#"
task = "time-ablation"

[manifold]
kind = "sphere"
dim = 2

[schedule]
kind = "linear"
sigma0 = 1.0
sigma1 = 0.1

[data]
source = "vmf"
n = 3000
components = [
  { mean = [0.0, 0.0, 1.0], kappa = 20.0 },
  { mean = [1.0, 0.0, 0.0], kappa = 20.0, weight = 0.5 },
]

[net]
hidden = 64
layers = 3

[train]
batch_size = 64
lr = 2e-3
ema_decay = 0.995
val_interval = 0
val_steps = 100
val_points = 300
"#;

#[derive(Debug, Clone)]
pub struct TimeAblation {
    /// `(seed, uniform, time_scaled)` validation NLLs.
    pub rows: Vec<(u64, f64, f64)>,
    pub secs: f64,
}

impl TimeAblation {
    pub fn means(&self) -> (f64, f64) {
        let k = self.rows.len() as f64;
        let u = self.rows.iter().map(|r| r.1).sum::<f64>() / k;
        let s = self.rows.iter().map(|r| r.2).sum::<f64>() / k;
        (u, s)
    }
}

pub fn run_time_ablation(iterations: usize, seeds: &[u64]) -> rdmix::Result<TimeAblation> {
    let start = Instant::now();
    let overrides = [format!("train.iterations={iterations}")];
    let cfg = RunConfig::from_toml(CONFIG, &overrides, std::path::Path::new("."))?;
    let space = Space::Sphere(2);
    let (_, prior) = space_prior(&space, cfg.prior.as_ref())?;
    let data = space_dataset(&cfg, &space)?;
    let model = model_spec(&cfg, prior);
    let mut rows = Vec::new();
    for &seed in seeds {
        let mut v = [0.0; 2];
        for (j, mode) in [TimeMode::Uniform, TimeMode::TimeScaled].into_iter().enumerate() {
            let mut tcfg = train_config(&cfg, seed);
            tcfg.time_mode = mode;
            v[j] = train_and_validate(&space, &model, &tcfg, &data)?;
        }
        rows.push((seed, v[0], v[1]));
    }
    Ok(TimeAblation {
        rows,
        secs: start.elapsed().as_secs_f64(),
    })
}

#[allow(dead_code)]
fn main() -> rdmix::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let seeds: Vec<u64> = (0..args.get(1).copied().unwrap_or(3) as u64).collect();
    let r = run_time_ablation(args.first().copied().unwrap_or(3000), &seeds)?;
    println!("seed  uniform  time_scaled");
    for (s, u, t) in &r.rows {
        println!("{s:>4}  {u:.4}   {t:.4}");
    }
    let (u, t) = r.means();
    println!("mean  {u:.4}   {t:.4}");
    println!("elapsed {:.1} s", r.secs);
    Ok(())
}
