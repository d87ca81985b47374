use rand::Rng;
use serde::{Deserialize, Serialize};

use super::walk::{uniform_grid, walk, MAX_RESAMPLES};
use crate::bridges::{bridge_drift, BridgeFamily, BridgeSpec, NoiseSchedule};
use crate::error::{Error, Result};
use crate::manifold::Manifold;
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoWayConfig {
    pub n_steps: usize,
    /// Split time; `None` means `T/2`.
    #[serde(default)]
    pub t_star: Option<f64>,
}

impl Default for TwoWayConfig {
    fn default() -> Self {
        TwoWayConfig {
            n_steps: 15,
            t_star: None,
        }
    }
}

impl TwoWayConfig {
    pub fn split(&self, horizon: f64) -> f64 {
        self.t_star.unwrap_or(horizon / 2.0)
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        let ts = self.split(horizon);
        if self.n_steps < 2 || !(ts > 0.0 && ts < horizon) {
            return Err(Error::Config(format!(
                "two-way config needs n_steps >= 2 and 0 < t_star < T, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    Forward,
    Backward,
}

/// A single bridge trajectory pinned at `y` (t = 0) and `x` (t = T), simulated
/// forward from `y` on grid times `t < t*` and backward from `x` on `t ≥ t*`.
#[derive(Debug, Clone)]
pub struct TwoWayPath<P> {
    pub times: Vec<f64>,
    pub states: Vec<P>,
    pub legs: Vec<Leg>,
    pub data: P,
    pub prior: P,
    pub family: BridgeFamily,
    pub schedule: NoiseSchedule,
    pub t_star: f64,
}

/// Batch of two-way trajectories sharing one time grid.
#[derive(Debug, Clone)]
pub struct TrajectoryBatch<P> {
    pub times: Vec<f64>,
    pub legs: Vec<Leg>,
    pub paths: Vec<TwoWayPath<P>>,
}

impl<P: Clone> TrajectoryBatch<P> {
    /// States of every sample at grid index `k`.
    pub fn states_at(&self, k: usize) -> Vec<P> {
        self.paths.iter().map(|p| p.states[k].clone()).collect()
    }
}

pub fn simulate_two_way<M, R>(
    m: &M,
    x: &M::Point,
    y: &M::Point,
    family: BridgeFamily,
    schedule: &NoiseSchedule,
    cfg: &TwoWayConfig,
    rng: &mut R,
) -> Result<TwoWayPath<M::Point>>
where
    M: Manifold,
    R: Rng + ?Sized,
{
    let horizon = schedule.horizon();
    cfg.validate(horizon)?;
    let t_star = cfg.split(horizon);
    let grid = uniform_grid(horizon, cfg.n_steps);
    let n_fwd = grid.iter().filter(|&&t| t < t_star).count();

    let fwd_spec = BridgeSpec::new(family, x.clone(), *schedule);
    let fwd_times = &grid[..n_fwd];
    let fwd = walk(
        m,
        y,
        fwd_times,
        |t| schedule.sigma(t),
        |p: &M::Point, t| bridge_drift(m, &fwd_spec, p, t),
        rng,
    )?;

    let bwd_spec = BridgeSpec::new(family, y.clone(), *schedule).reversed();
    let rev_sched = bwd_spec.clock_schedule();
    let bwd_times: Vec<f64> = grid[n_fwd..].iter().rev().map(|t| horizon - t).collect();
    let bwd = walk(
        m,
        x,
        &bwd_times,
        |s| rev_sched.sigma(s),
        |p: &M::Point, s| bridge_drift(m, &bwd_spec, p, s),
        rng,
    )?;

    let mut states = fwd;
    states.extend(bwd.into_iter().rev());
    let legs = grid
        .iter()
        .map(|&t| if t < t_star { Leg::Forward } else { Leg::Backward })
        .collect();
    Ok(TwoWayPath {
        times: grid,
        states,
        legs,
        data: x.clone(),
        prior: y.clone(),
        family,
        schedule: *schedule,
        t_star,
    })
}

impl<P: Clone + std::fmt::Debug> TwoWayPath<P> {
    /// State at an arbitrary time `t`: one partial walk step from the nearest
    /// grid state of the leg that covers `t`.
    pub fn state_at<M, R>(&self, m: &M, t: f64, rng: &mut R) -> Result<P>
    where
        M: Manifold<Point = P>,
        R: Rng + ?Sized,
    {
        let horizon = self.schedule.horizon();
        let tol = 1e-12 * horizon;
        if t < self.t_star {
            let k = self.times.iter().rposition(|&g| g <= t + tol).unwrap_or(0);
            let dt = (t - self.times[k]).max(0.0);
            let spec = BridgeSpec::new(self.family, self.data.clone(), self.schedule);
            partial_step(m, &self.states[k], self.times[k], dt, tol, &self.schedule, |p, tt| {
                bridge_drift(m, &spec, p, tt)
            }, rng)
        } else {
            // Backward leg runs in the reversed clock s = T − t, starting at x.
            let k = self
                .times
                .iter()
                .position(|&g| g >= t - tol)
                .unwrap_or(self.times.len() - 1);
            let s_k = horizon - self.times[k];
            let ds = (self.times[k] - t).max(0.0);
            let spec = BridgeSpec::new(self.family, self.prior.clone(), self.schedule).reversed();
            let rev = spec.clock_schedule();
            partial_step(m, &self.states[k], s_k, ds, tol, &rev, |p, ss| bridge_drift(m, &spec, p, ss), rng)
        }
    }
}

pub(crate) fn partial_step<M, D, R>(
    m: &M,
    x: &M::Point,
    t: f64,
    dt: f64,
    tol: f64,
    schedule: &NoiseSchedule,
    drift: D,
    rng: &mut R,
) -> Result<M::Point>
where
    M: Manifold,
    D: Fn(&M::Point, f64) -> Result<Vec<f64>>,
    R: Rng + ?Sized,
{
    if dt <= tol {
        return Ok(x.clone());
    }
    let d = drift(x, t)?;
    let scale = schedule.sigma(t) * dt.sqrt();
    let mut attempt = 0;
    loop {
        let xi = m.tangent_gaussian(x, rng, scale);
        let v: Vec<f64> = d.iter().zip(&xi).map(|(a, b)| dt * a + b).collect();
        let y = m.exp_map(x, &v);
        match y {
            Ok(y) => return Ok(y),
            Err(Error::CutLocus { .. } | Error::DegenerateDirection(_)) if attempt < MAX_RESAMPLES => attempt += 1,
            Err(e) => return Err(e),
        }
    }
}

/// Simulate one two-way path per `(data, prior)` pair; pair `i` uses the
/// random substream `(seed, i)`.
pub fn simulate_two_way_batch<M: Manifold>(
    m: &M,
    data: &[M::Point],
    prior: &[M::Point],
    family: BridgeFamily,
    schedule: &NoiseSchedule,
    cfg: &TwoWayConfig,
    seed: u64,
) -> Result<TrajectoryBatch<M::Point>> {
    if data.len() != prior.len() {
        return Err(Error::Usage(format!(
            "{} data points but {} prior points",
            data.len(),
            prior.len()
        )));
    }
    let paths = data
        .iter()
        .zip(prior)
        .enumerate()
        .map(|(i, (x, y))| simulate_two_way(m, x, y, family, schedule, cfg, &mut substream(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let grid = uniform_grid(schedule.horizon(), cfg.n_steps);
    let t_star = cfg.split(schedule.horizon());
    let legs = grid
        .iter()
        .map(|&t| if t < t_star { Leg::Forward } else { Leg::Backward })
        .collect();
    Ok(TrajectoryBatch {
        times: grid,
        legs,
        paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Point, Space};

    #[test]
    fn two_steps_pin_both_ends() {
        let e = Space::Euclidean(1);
        let (x, y) = (Point::new([1.0]), Point::new([-1.0]));
        let cfg = TwoWayConfig {
            n_steps: 2,
            t_star: None,
        };
        let p = simulate_two_way(&e, &x, &y, BridgeFamily::Logarithm, &NoiseSchedule::constant(1.0), &cfg, &mut substream(0, 0)).unwrap();
        assert_eq!(p.times, vec![0.0, 0.5, 1.0]);
        assert_eq!(p.legs, vec![Leg::Forward, Leg::Backward, Leg::Backward]);
        assert_eq!(p.legs.iter().filter(|l| **l == Leg::Forward).count(), 1);
        assert_eq!(p.states[0], y);
        assert_eq!(p.states[2], x);
    }

    #[test]
    fn endpoints_pinned_by_construction() {
        let s = Space::Sphere(2);
        let x = Point::new([1.0, 0.0, 0.0]);
        let y = Point::new([0.0, 0.6, 0.8]);
        let p = simulate_two_way(&s, &x, &y, BridgeFamily::Logarithm, &NoiseSchedule::constant(1.0), &TwoWayConfig::default(), &mut substream(3, 1)).unwrap();
        assert_eq!(p.states.len(), 16);
        assert_eq!(p.states[0], y);
        assert_eq!(p.states[15], x);
        for st in &p.states {
            s.check_point(st).unwrap();
        }
    }

    #[test]
    fn state_at_grid_time_is_grid_state() {
        let s = Space::Sphere(2);
        let x = Point::new([1.0, 0.0, 0.0]);
        let y = Point::new([0.0, 0.6, 0.8]);
        let p = simulate_two_way(&s, &x, &y, BridgeFamily::Logarithm, &NoiseSchedule::constant(1.0), &TwoWayConfig::default(), &mut substream(3, 1)).unwrap();
        let mut rng = substream(9, 9);
        for k in [0usize, 3, 7, 8, 12, 15] {
            let st = p.state_at(&s, p.times[k], &mut rng).unwrap();
            assert_eq!(st, p.states[k], "k = {k}");
        }
        let mid = p.state_at(&s, 0.51, &mut rng).unwrap();
        s.check_point(&mid).unwrap();
    }

    #[test]
    fn batch_is_deterministic() {
        let s = Space::Sphere(2);
        let xs = vec![Point::new([1.0, 0.0, 0.0]); 4];
        let ys = vec![Point::new([0.0, 0.0, 1.0]); 4];
        let a = simulate_two_way_batch(&s, &xs, &ys, BridgeFamily::Logarithm, &NoiseSchedule::constant(1.0), &TwoWayConfig::default(), 11).unwrap();
        let b = simulate_two_way_batch(&s, &xs, &ys, BridgeFamily::Logarithm, &NoiseSchedule::constant(1.0), &TwoWayConfig::default(), 11).unwrap();
        for (pa, pb) in a.paths.iter().zip(&b.paths) {
            assert_eq!(pa.states, pb.states);
        }
        assert_ne!(a.paths[0].states[5], a.paths[1].states[5]);
    }
}
