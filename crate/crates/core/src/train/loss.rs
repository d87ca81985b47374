use rand::Rng;

use super::time::TimeSampler;
use crate::bridges::{bridge_drift, BridgeSpec};
use crate::error::{Error, Result};
use crate::manifold::Manifold;
use crate::net::DriftNet;
use crate::sim::TwoWayPath;

/// Regression rows for both networks, gathered from a batch of two-way paths.
#[derive(Debug, Clone)]
pub struct LossBatch<P> {
    pub fwd_points: Vec<P>,
    pub fwd_times: Vec<f64>,
    pub fwd_targets: Vec<f64>,
    pub fwd_weights: Vec<f64>,
    pub bwd_points: Vec<P>,
    /// Reversed times `T − t` at which the backward network is queried.
    pub bwd_times: Vec<f64>,
    pub bwd_targets: Vec<f64>,
    pub bwd_weights: Vec<f64>,
    /// Rows dropped because a bridge target was undefined (cut locus or a
    /// vanishing spectral gradient).
    pub skipped: usize,
}

fn skippable(e: &Error) -> bool {
    matches!(e, Error::CutLocus { .. } | Error::DegenerateDirection(_))
}

/// Forward target toward the data point `x` at `t` and backward target toward
/// the prior point `y` at reversed time `T − t`, both at the state `z`.
pub fn targets<M: Manifold>(m: &M, path: &TwoWayPath<M::Point>, z: &M::Point, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let fwd = BridgeSpec::new(path.family, path.data.clone(), path.schedule);
    let bwd = BridgeSpec::new(path.family, path.prior.clone(), path.schedule).reversed();
    let f = bridge_drift(m, &fwd, z, t)?;
    let b = bridge_drift(m, &bwd, z, path.schedule.horizon() - t)?;
    Ok((f, b))
}

/// Draw `per_leg` stratified loss times on each leg of every path and collect
/// the regression rows. Leg `[lo, t*)` and leg `[t*, hi]` are weighted by
/// their share of the sampler's mass, so the weighted mean estimates
/// `E_{t∼q}` of the per-time loss.
pub fn build_loss_batch<M, R>(
    m: &M,
    paths: &[TwoWayPath<M::Point>],
    sampler: &TimeSampler,
    per_leg: usize,
    rng: &mut R,
) -> Result<LossBatch<M::Point>>
where
    M: Manifold,
    R: Rng + ?Sized,
{
    if per_leg == 0 {
        return Err(Error::Config("need at least one loss time per leg".into()));
    }
    let mut lb = LossBatch {
        fwd_points: Vec::new(),
        fwd_times: Vec::new(),
        fwd_targets: Vec::new(),
        fwd_weights: Vec::new(),
        bwd_points: Vec::new(),
        bwd_times: Vec::new(),
        bwd_targets: Vec::new(),
        bwd_weights: Vec::new(),
        skipped: 0,
    };
    let total = sampler.total_mass();
    let n_paths = paths.len() as f64;
    for path in paths {
        let t_star = path.t_star.clamp(sampler.lo, sampler.hi);
        for (a, b) in [(sampler.lo, t_star), (t_star, sampler.hi)] {
            let share = sampler.mass(a, b) / total;
            if share <= 0.0 {
                continue;
            }
            let w = share / (per_leg as f64 * n_paths);
            for j in 0..per_leg {
                let u = (j as f64 + rng.random::<f64>()) / per_leg as f64;
                let t = sampler.quantile_in(a, b, u);
                let row = path
                    .state_at(m, t, rng)
                    .and_then(|z| targets(m, path, &z, t).map(|tg| (z, tg)));
                match row {
                    Ok((z, (f, bt))) => {
                        lb.fwd_points.push(z.clone());
                        lb.fwd_times.push(t);
                        lb.fwd_targets.extend(f);
                        lb.fwd_weights.push(w);
                        lb.bwd_points.push(z);
                        lb.bwd_times.push(path.schedule.horizon() - t);
                        lb.bwd_targets.extend(bt);
                        lb.bwd_weights.push(w);
                    }
                    Err(e) if skippable(&e) => lb.skipped += 1,
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(lb)
}

#[derive(Debug, Clone)]
pub struct LossValue {
    pub loss: f64,
    pub fwd_loss: f64,
    pub bwd_loss: f64,
    pub fwd_grad: Vec<f64>,
    pub bwd_grad: Vec<f64>,
}

/// Weighted two-way bridge-matching loss and gradients for both networks.
pub fn two_way_loss<M: Manifold>(m: &M, fwd: &DriftNet, bwd: &DriftNet, lb: &LossBatch<M::Point>) -> Result<LossValue> {
    let (fl, fg) = fwd.weighted_sq_loss(m, &lb.fwd_points, &lb.fwd_times, &lb.fwd_targets, &lb.fwd_weights)?;
    let (bl, bg) = bwd.weighted_sq_loss(m, &lb.bwd_points, &lb.bwd_times, &lb.bwd_targets, &lb.bwd_weights)?;
    Ok(LossValue {
        loss: fl + bl,
        fwd_loss: fl,
        bwd_loss: bl,
        fwd_grad: fg,
        bwd_grad: bg,
    })
}

/// Per-time integrand `‖s_f(Z_t, t) − η_f‖² + ‖s_b(Z_t, T − t) − η_b‖²` for
/// path `i` at time `ts[i]`; no gradients.
pub fn pointwise_objective<M, R>(
    m: &M,
    fwd: &DriftNet,
    bwd: &DriftNet,
    paths: &[TwoWayPath<M::Point>],
    ts: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>>
where
    M: Manifold,
    R: Rng + ?Sized,
{
    let n = m.tangent_len();
    let mut zs = Vec::with_capacity(paths.len());
    let mut ft = Vec::new();
    let mut bt = Vec::new();
    for (p, &t) in paths.iter().zip(ts) {
        let z = p.state_at(m, t, rng)?;
        let (f, b) = targets(m, p, &z, t)?;
        ft.extend(f);
        bt.extend(b);
        zs.push(z);
    }
    let horizon: Vec<f64> = paths.iter().zip(ts).map(|(p, t)| p.schedule.horizon() - t).collect();
    let fo = fwd.forward_batch(m, &zs, ts)?;
    let bo = bwd.forward_batch(m, &zs, &horizon)?;
    Ok(zs
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let rf: Vec<f64> = (0..n).map(|j| fo[i * n + j] - ft[i * n + j]).collect();
            let rb: Vec<f64> = (0..n).map(|j| bo[i * n + j] - bt[i * n + j]).collect();
            m.inner(z, &rf, &rf) + m.inner(z, &rb, &rb)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridges::{BridgeFamily, NoiseSchedule};
    use crate::manifold::{Point, Space};
    use crate::net::NetConfig;
    use crate::rng::substream;
    use crate::sim::{simulate_two_way_batch, TwoWayConfig};
    use crate::train::TimeMode;

    #[test]
    fn weights_sum_to_one() {
        let s = Space::Sphere(2);
        let sched = NoiseSchedule::linear(0.5, 1.5);
        let mut rng = substream(0, 0);
        let xs = s.sample_uniform(&mut rng, 8).unwrap();
        let ys = s.sample_uniform(&mut rng, 8).unwrap();
        let b = simulate_two_way_batch(&s, &xs, &ys, BridgeFamily::Logarithm, &sched, &TwoWayConfig::default(), 1).unwrap();
        let sampler = TimeSampler::new(sched, TimeMode::TimeScaled);
        let lb = build_loss_batch(&s, &b.paths, &sampler, 4, &mut rng).unwrap();
        assert_eq!(lb.fwd_points.len() + lb.skipped, 64);
        let w: f64 = lb.fwd_weights.iter().sum();
        assert!((w - 1.0).abs() < 1e-12 || lb.skipped > 0);
    }

    #[test]
    fn exact_targets_give_zero_loss() {
        // Nets replaced by the targets themselves: evaluate the objective with
        // a single-endpoint batch where the target is a deterministic function.
        let e = Space::Euclidean(1);
        let sched = NoiseSchedule::constant(1.0);
        let x = Point::new([1.0]);
        let y = Point::new([-1.0]);
        let b = simulate_two_way_batch(&e, &[x], &[y], BridgeFamily::Logarithm, &sched, &TwoWayConfig::default(), 0).unwrap();
        let sampler = TimeSampler::new(sched, TimeMode::TimeScaled);
        let lb = build_loss_batch(&e, &b.paths, &sampler, 4, &mut substream(1, 0)).unwrap();
        // A net that fits every row exactly is emulated by regressing the
        // targets against themselves.
        let net = DriftNet::new(&e, &NetConfig::small(4, 1), &mut substream(2, 0)).unwrap();
        let out = net.forward_batch(&e, &lb.fwd_points, &lb.fwd_times).unwrap();
        let (loss, _) = net
            .weighted_sq_loss(&e, &lb.fwd_points, &lb.fwd_times, &out, &lb.fwd_weights)
            .unwrap();
        assert_eq!(loss, 0.0);
    }
}
