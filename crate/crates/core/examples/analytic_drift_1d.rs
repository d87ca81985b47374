//! Two-way bridge matching in one dimension with data {−1, +1} and a
//! standard normal prior, where the mixture drift has a closed form.
//! Trains the forward network and reports its L² distance to that drift.
//!
//! ```text
//! cargo run --release --example analytic_drift_1d -- [iterations]
//! ```

use std::time::Instant;

use rdmix::bridges::{BridgeFamily, NoiseSchedule};
use rdmix::manifold::{Point, Space};
use rdmix::net::{DriftNet, NetConfig};
use rdmix::prior::Prior;
use rdmix::sim::OdeMethod;
use rdmix::train::{fit, ModelSpec, TrainConfig};

/// Forward mixture drift for `X_0 ~ N(0, 1)`, data `±1`, σ = 1, T = 1.
///
/// The marginal is `½N(±t, 1 − t)` and the posterior of the endpoint `z`
/// given `X_t = x` is `sigmoid(2zxt / (1 − t))`, so
/// `f(x, t) = (tanh(xt / (1 − t)) − x) / (1 − t)`.
pub fn exact_drift(x: f64, t: f64) -> f64 {
    ((x * t / (1.0 - t)).tanh() - x) / (1.0 - t)
}

/// Marginal density of the mixture at `(x, t)`.
pub fn marginal_density(x: f64, t: f64) -> f64 {
    let v = 1.0 - t;
    let g = |m: f64| (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
    0.5 * (g(t) + g(-t))
}

/// Root of the `p_t`-weighted mean squared error between `net` and the exact
/// drift on the grid t ∈ [0.1, 0.9] (17 points) × x ∈ [−2, 2] (41 points).
pub fn weighted_l2(net: &DriftNet) -> rdmix::Result<f64> {
    let e = Space::Euclidean(1);
    let (mut se, mut w) = (0.0, 0.0);
    for i in 0..=16 {
        let t = 0.1 + 0.8 * i as f64 / 16.0;
        for j in 0..=40 {
            let x = -2.0 + 4.0 * j as f64 / 40.0;
            let got = net.forward(&e, &Point::new([x]), t)?[0];
            let p = marginal_density(x, t);
            se += p * (got - exact_drift(x, t)).powi(2);
            w += p;
        }
    }
    Ok((se / w).sqrt())
}

pub fn model() -> ModelSpec<Point> {
    ModelSpec {
        family: BridgeFamily::Logarithm,
        schedule: NoiseSchedule::constant(1.0),
        prior: Prior::WrappedGaussian {
            mean: Point::new([0.0]),
            scale: 1.0,
        },
        net: NetConfig::small(32, 4),
        ode_method: OdeMethod::Rk4,
    }
}

pub fn train_config(iterations: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        iterations,
        batch_size: 64,
        lr: 3e-3,
        n_steps: 61,
        ema_decay: 0.9995,
        val_interval: 0,
        seed,
        ..TrainConfig::default()
    }
}

/// Train and return the weighted L² error of the EMA forward network.
pub fn run_analytic(iterations: usize, seed: u64) -> rdmix::Result<f64> {
    let e = Space::Euclidean(1);
    let data: Vec<Point> = (0..1000).map(|i| Point::new([if i % 2 == 0 { 1.0 } else { -1.0 }])).collect();
    let out = fit(&e, &model(), &train_config(iterations, seed), &data, &[], None)?;
    let (f, _) = out.best.eval_nets()?;
    weighted_l2(&f)
}

#[allow(dead_code)]
fn main() -> rdmix::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(40_000);
    let start = Instant::now();
    let l2 = run_analytic(iterations, 0)?;
    println!("weighted L² to the exact drift: {l2:.4} ({:.1} s)", start.elapsed().as_secs_f64());
    Ok(())
}
