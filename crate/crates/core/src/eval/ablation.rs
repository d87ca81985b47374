//! Accuracy of in-training bridge simulation against the step count.

use serde::{Deserialize, Serialize};

use super::{median_bandwidth, mmd, MmdConfig};
use crate::bridges::{bridge_drift, BridgeFamily, BridgeSpec, NoiseSchedule};
use crate::error::{Error, Result};
use crate::manifold::Manifold;
use crate::rng::{derive_seed, substream};
use crate::sim::{partial_step, simulate_bridge, simulate_two_way, FinalStep, TwoWayConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMode {
    /// Forward leg from the prior point and backward leg from the data point.
    TwoWay,
    /// One forward bridge from the prior point to the data point.
    OneWay,
}

impl SimulationMode {
    pub fn name(&self) -> &'static str {
        match self {
            SimulationMode::TwoWay => "two_way",
            SimulationMode::OneWay => "one_way",
        }
    }
}

/// Bridge states at each time in `times` for every `(data, prior)` pair;
/// `out[j][i]` is pair `i` at `times[j]`. Pair `i` draws from substream
/// `(seed, i)`.
pub fn bridge_marginals<M: Manifold>(
    m: &M,
    data: &[M::Point],
    prior: &[M::Point],
    family: BridgeFamily,
    schedule: &NoiseSchedule,
    n_steps: usize,
    mode: SimulationMode,
    times: &[f64],
    seed: u64,
) -> Result<Vec<Vec<M::Point>>> {
    if data.len() != prior.len() {
        return Err(Error::Usage("data and prior batches differ in size".into()));
    }
    let horizon = schedule.horizon();
    if times.iter().any(|&t| !(t > 0.0 && t < horizon)) {
        return Err(Error::Usage("evaluation times must lie strictly inside (0, T)".into()));
    }
    let mut out = vec![Vec::with_capacity(data.len()); times.len()];
    for (i, (x, y)) in data.iter().zip(prior).enumerate() {
        let mut rng = substream(seed, i as u64);
        match mode {
            SimulationMode::TwoWay => {
                let cfg = TwoWayConfig { n_steps, t_star: None };
                let path = simulate_two_way(m, x, y, family, schedule, &cfg, &mut rng)?;
                for (j, &t) in times.iter().enumerate() {
                    out[j].push(path.state_at(m, t, &mut rng)?);
                }
            }
            SimulationMode::OneWay => {
                let spec = BridgeSpec::new(family, x.clone(), *schedule);
                let tr = simulate_bridge(m, &spec, y, n_steps, FinalStep::Snap, &mut rng)?;
                let tol = 1e-12 * horizon;
                for (j, &t) in times.iter().enumerate() {
                    let k = tr.times.iter().rposition(|&g| g <= t + tol).unwrap_or(0);
                    let dt = (t - tr.times[k]).max(0.0);
                    let drift = |p: &M::Point, s: f64| bridge_drift(m, &spec, p, s);
                    out[j].push(partial_step(m, &tr.states[k], tr.times[k], dt, tol, schedule, drift, &mut rng)?);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub mode: SimulationMode,
    pub n_steps: usize,
    /// MMD² against the reference, averaged over the evaluation times.
    pub mmd: f64,
}

/// MMD between `mode` simulations with each step count and a two-way
/// reference with `reference_steps`, averaged over `times`. Kernel bandwidths
/// are fixed per time from the reference sample so every row shares one
/// kernel. Uses the biased estimator, which is nonnegative.
pub fn step_ablation<M: Manifold>(
    m: &M,
    data: &[M::Point],
    prior: &[M::Point],
    family: BridgeFamily,
    schedule: &NoiseSchedule,
    steps: &[usize],
    reference_steps: usize,
    mode: SimulationMode,
    times: &[f64],
    seed: u64,
) -> Result<Vec<AblationRow>> {
    let reference = bridge_marginals(
        m,
        data,
        prior,
        family,
        schedule,
        reference_steps,
        SimulationMode::TwoWay,
        times,
        derive_seed(seed, 0xAB),
    )?;
    let bandwidths = reference
        .iter()
        .map(|r| median_bandwidth(m, r))
        .collect::<Result<Vec<_>>>()?;
    steps
        .iter()
        .map(|&n| {
            let got = bridge_marginals(m, data, prior, family, schedule, n, mode, times, derive_seed(seed, n as u64))?;
            let mut total = 0.0;
            for ((r, g), h) in reference.iter().zip(&got).zip(&bandwidths) {
                let cfg = MmdConfig {
                    bandwidth: Some(*h),
                    max_points: usize::MAX,
                };
                total += mmd(m, r, g, &cfg)?.biased;
            }
            Ok(AblationRow {
                mode,
                n_steps: n,
                mmd: total / times.len() as f64,
            })
        })
        .collect()
}
