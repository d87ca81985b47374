//! Logarithm bridges on S²: simulate many bridges toward a fixed endpoint
//! and watch the terminal distance shrink as the step count grows.
//!
//! ```text
//! cargo run --release --example bridge_sphere -- [trajectories]
//! ```

use std::time::Instant;

use rdmix::bridges::{BridgeFamily, BridgeSpec, NoiseSchedule};
use rdmix::manifold::{Manifold, Point, Space};
use rdmix::rng::substream;
use rdmix::sim::{simulate_bridge, FinalStep};

/// Mean geodesic distance between the last walk state and the endpoint,
/// over `n` bridges started from uniform points. The last state is the
/// result of an ordinary walk step, not snapped to the endpoint.
pub fn terminal_distance(n: usize, n_steps: usize, seed: u64) -> rdmix::Result<f64> {
    let s = Space::Sphere(2);
    let z = Point::new([0.0, 0.0, 1.0]);
    let spec = BridgeSpec::new(BridgeFamily::Logarithm, z.clone(), NoiseSchedule::constant(1.0));
    let mut total = 0.0;
    for i in 0..n {
        let mut rng = substream(seed, i as u64);
        let x0 = s.sample_uniform(&mut rng, 1)?.remove(0);
        let tr = simulate_bridge(&s, &spec, &x0, n_steps, FinalStep::Walk, &mut rng)?;
        total += s.dist(tr.last(), &z);
    }
    Ok(total / n as f64)
}

#[allow(dead_code)]
fn main() -> rdmix::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1000);
    println!("steps  mean d(X_T, z)");
    for steps in [50, 100, 250, 500, 1000] {
        let start = Instant::now();
        let d = terminal_distance(n, steps, 0)?;
        println!("{steps:>5}  {d:.5}   ({:.2} s)", start.elapsed().as_secs_f64());
    }
    Ok(())
}
