//! How many in-training simulation steps do bridges need? Compares two-way
//! and one-way simulation of Logarithm bridges on S² (uniform prior to a
//! vMF target) against a 500-step two-way reference, by MMD of the bridge
//! marginals averaged over several times.
//!
//! ```text
//! cargo run --release --example two_way_ablation -- [pairs]
//! ```

use std::time::Instant;

use rdmix::bridges::{BridgeFamily, NoiseSchedule};
use rdmix::data::{gen_vmf, VmfComponent};
use rdmix::eval::{step_ablation, AblationRow, SimulationMode};
use rdmix::manifold::Space;
use rdmix::prior::Prior;
use rdmix::sim::prior_draws;

pub const TIMES: [f64; 6] = [0.25, 0.5, 0.75, 0.9, 0.95, 0.98];

/// Rows for both simulation modes at each step count.
pub fn ablation(n_pairs: usize, steps: &[usize], seed: u64) -> rdmix::Result<Vec<AblationRow>> {
    let s = Space::Sphere(2);
    let target = VmfComponent {
        mean: [0.0, 0.0, 1.0],
        kappa: 20.0,
        weight: 1.0,
    };
    let data = gen_vmf(&target, n_pairs, seed)?.points;
    let prior = prior_draws(&s, &Prior::Uniform, n_pairs, seed.wrapping_add(1))?;
    let schedule = NoiseSchedule::constant(1.0);
    let mut rows = Vec::new();
    for mode in [SimulationMode::TwoWay, SimulationMode::OneWay] {
        rows.extend(step_ablation(&s, &data, &prior, BridgeFamily::Logarithm, &schedule, steps, 500, mode, &TIMES, seed)?);
    }
    Ok(rows)
}

/// MMD of the row with `mode` and `n_steps`.
pub fn lookup(rows: &[AblationRow], mode: SimulationMode, n_steps: usize) -> Option<f64> {
    rows.iter().find(|r| r.mode == mode && r.n_steps == n_steps).map(|r| r.mmd)
}

#[allow(dead_code)]
fn main() -> rdmix::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let start = Instant::now();
    let rows = ablation(n, &[5, 10, 15, 25, 50, 100, 500], 0)?;
    println!("mode      steps  MMD²");
    for r in &rows {
        println!("{:<8}  {:>5}  {:.3e}", r.mode.name(), r.n_steps, r.mmd);
    }
    println!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
