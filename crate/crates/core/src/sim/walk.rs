use rand::Rng;

use crate::bridges::{bridge_drift, BridgeSpec, NoiseSchedule};
use crate::error::{Error, Result};
use crate::manifold::Manifold;

/// Maximum noise redraws when a proposed state lands on the cut locus of the
/// bridge endpoint.
pub const MAX_RESAMPLES: usize = 8;

#[derive(Debug, Clone)]
pub struct Trajectory<P> {
    pub times: Vec<f64>,
    pub states: Vec<P>,
}

impl<P> Trajectory<P> {
    pub fn last(&self) -> &P {
        self.states.last().expect("trajectory has at least one state")
    }
}

/// Uniform grid `0, T/n, ..., T`.
pub fn uniform_grid(horizon: f64, n_steps: usize) -> Vec<f64> {
    (0..=n_steps)
        .map(|k| if k == n_steps { horizon } else { horizon * k as f64 / n_steps as f64 })
        .collect()
}

/// Geodesic random walk over `times`: each step moves along
/// `exp_x(h·drift + σ_t √h ξ)` with `ξ` an isotropic tangent Gaussian.
///
/// The drift is never evaluated at the last time. When a freshly proposed
/// state makes the next drift evaluation fail on a cut locus (or at a
/// vanishing spectral gradient), the step's noise is redrawn up to
/// [`MAX_RESAMPLES`] times.
pub(crate) fn walk<M, D, R>(
    m: &M,
    x0: &M::Point,
    times: &[f64],
    sigma: impl Fn(f64) -> f64,
    drift: D,
    rng: &mut R,
) -> Result<Vec<M::Point>>
where
    M: Manifold,
    D: Fn(&M::Point, f64) -> Result<Vec<f64>>,
    R: Rng + ?Sized,
{
    let mut states = Vec::with_capacity(times.len());
    states.push(x0.clone());
    if times.len() < 2 {
        return Ok(states);
    }
    let mut d = drift(x0, times[0]).map_err(|e| e.at_step(0))?;
    for k in 0..times.len() - 1 {
        let h = times[k + 1] - times[k];
        let x = &states[k];
        let noise_scale = sigma(times[k]) * h.sqrt();
        let last = k + 2 == times.len();
        let mut attempt = 0;
        let (next, next_drift) = loop {
            let xi = m.tangent_gaussian(x, rng, noise_scale);
            let v: Vec<f64> = d.iter().zip(&xi).map(|(a, b)| h * a + b).collect();
            let y = m.exp_map(x, &v).map_err(|e| e.at_step(k))?;
            if last {
                break (y, Vec::new());
            }
            match drift(&y, times[k + 1]) {
                Ok(nd) => break (y, nd),
                Err(Error::CutLocus { .. } | Error::DegenerateDirection(_)) if attempt < MAX_RESAMPLES => attempt += 1,
                Err(e) => return Err(e.at_step(k + 1)),
            }
        };
        states.push(next);
        d = next_drift;
    }
    Ok(states)
}

/// Simulate `dX = drift(X, t) dt + σ_t dB` on `[0, T]` with `n_steps`
/// Euler–Maruyama steps on the tangent space.
pub fn geodesic_random_walk<M, D, R>(
    m: &M,
    drift: D,
    schedule: &NoiseSchedule,
    x0: &M::Point,
    n_steps: usize,
    rng: &mut R,
) -> Result<Trajectory<M::Point>>
where
    M: Manifold,
    D: Fn(&M::Point, f64) -> Result<Vec<f64>>,
    R: Rng + ?Sized,
{
    if n_steps == 0 {
        return Err(Error::Usage("geodesic random walk needs at least one step".into()));
    }
    let times = uniform_grid(schedule.horizon(), n_steps);
    let states = walk(m, x0, &times, |t| schedule.sigma(t), drift, rng)?;
    Ok(Trajectory { times, states })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalStep {
    /// The terminal state is set to the bridge endpoint.
    Snap,
    /// The terminal state is an ordinary noisy walk step.
    Walk,
}

/// One-way simulation of a bridge from `x0` (in the bridge's own clock).
pub fn simulate_bridge<M, R>(
    m: &M,
    spec: &BridgeSpec<M::Point>,
    x0: &M::Point,
    n_steps: usize,
    final_step: FinalStep,
    rng: &mut R,
) -> Result<Trajectory<M::Point>>
where
    M: Manifold,
    R: Rng + ?Sized,
{
    if n_steps == 0 {
        return Err(Error::Usage("bridge simulation needs at least one step".into()));
    }
    let sched = spec.clock_schedule();
    let times = uniform_grid(sched.horizon(), n_steps);
    let drift = |x: &M::Point, t: f64| bridge_drift(m, spec, x, t);
    let mut states = match final_step {
        FinalStep::Walk => walk(m, x0, &times, |t| sched.sigma(t), drift, rng)?,
        FinalStep::Snap => {
            let mut s = walk(m, x0, &times[..n_steps], |t| sched.sigma(t), drift, rng)?;
            s.push(spec.endpoint.clone());
            s
        }
    };
    states.truncate(times.len());
    Ok(Trajectory { times, states })
}
