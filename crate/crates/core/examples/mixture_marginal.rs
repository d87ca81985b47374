//! A diffusion mixture in one dimension with two endpoints ±1, simulated
//! with its closed-form drift, against the exact 50/50 mixture of Brownian
//! bridge marginals.
//!
//! ```text
//! cargo run --release --example mixture_marginal -- [paths]
//! ```

use std::time::Instant;

use rand_distr::{Distribution, Normal};
use rdmix::bridges::NoiseSchedule;
use rdmix::eval::{mmd, MmdConfig};
use rdmix::manifold::{Point, Space};
use rdmix::rng::substream;
use rdmix::sim::geodesic_random_walk;

/// Mixture drift for bridges from 0 to z ∈ {−1, +1} with σ = 1, T = 1:
/// the bridge drifts `(z − x)/(1 − t)` weighted by the posterior of `z`
/// under the bridge marginals `N(zt, t(1 − t))`.
pub fn mixture_drift(x: f64, t: f64) -> f64 {
    let v = t * (1.0 - t);
    // posterior weight of z = +1 is sigmoid(2xt / v)
    let w = if v > 0.0 { 1.0 / (1.0 + (-2.0 * x * t / v).exp()) } else { 0.5 };
    (w * (1.0 - x) + (1.0 - w) * (-1.0 - x)) / (1.0 - t)
}

/// Simulated marginal at `t` (from the walk over `[0, 1]` with `n_steps`)
/// and exact draws from `½N(−t, t(1−t)) + ½N(t, t(1−t))`.
pub fn marginals(n: usize, n_steps: usize, t: f64, seed: u64) -> rdmix::Result<(Vec<Point>, Vec<Point>)> {
    let e = Space::Euclidean(1);
    let schedule = NoiseSchedule::constant(1.0);
    let k = (t * n_steps as f64).round() as usize;
    let mut sim = Vec::with_capacity(n);
    let mut exact = Vec::with_capacity(n);
    let normal = Normal::new(0.0, (t * (1.0 - t)).sqrt()).expect("positive variance");
    for i in 0..n {
        let mut rng = substream(seed, i as u64);
        let tr = geodesic_random_walk(&e, |p: &Point, s| Ok(vec![mixture_drift(p.0[0], s)]), &schedule, &Point::new([0.0]), n_steps, &mut rng)?;
        sim.push(tr.states[k].clone());
        let mut rng = substream(seed ^ 0x5eed, i as u64);
        let z = if i % 2 == 0 { 1.0 } else { -1.0 };
        exact.push(Point::new([z * t + normal.sample(&mut rng)]));
    }
    Ok((sim, exact))
}

/// Unbiased MMD² between the simulated and exact marginals at `t`.
pub fn marginal_mmd(n: usize, n_steps: usize, t: f64, seed: u64) -> rdmix::Result<f64> {
    let (sim, exact) = marginals(n, n_steps, t, seed)?;
    let cfg = MmdConfig {
        bandwidth: None,
        max_points: n,
    };
    Ok(mmd(&Space::Euclidean(1), &sim, &exact, &cfg)?.unbiased)
}

#[allow(dead_code)]
fn main() -> rdmix::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10_000);
    let start = Instant::now();
    let d = marginal_mmd(n, 200, 0.5, 0)?;
    println!("MMD² at t = 0.5 over {n} paths: {d:.2e} ({:.1} s)", start.elapsed().as_secs_f64());
    Ok(())
}
