//! Evaluation: MMD, endpoint prediction, convergence curves, NLL suites.

mod ablation;
mod suite;

pub use ablation::{bridge_marginals, step_ablation, AblationRow, SimulationMode};
pub use suite::{bits_per_dim, model_nll, nll_suite, NllSuite, SeedNll, Summary};

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bridges::NoiseSchedule;
use crate::error::{Error, Result};
use crate::manifold::Manifold;
use crate::sim::DriftField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmdConfig {
    /// Kernel bandwidth; `None` uses the median pairwise geodesic distance of
    /// the pooled sample (see [`BANDWIDTH_POINTS`]).
    #[serde(default)]
    pub bandwidth: Option<f64>,
    /// Each set is truncated to this many points.
    #[serde(default = "d_max_points")]
    pub max_points: usize,
}

fn d_max_points() -> usize {
    2000
}

impl Default for MmdConfig {
    fn default() -> Self {
        MmdConfig {
            bandwidth: None,
            max_points: d_max_points(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mmd {
    /// Unbiased U-statistic estimate of MMD².
    pub unbiased: f64,
    /// Biased V-statistic estimate of MMD² (always ≥ 0).
    pub biased: f64,
    pub bandwidth: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median pairwise geodesic distance within one sample.
pub fn median_bandwidth<M: Manifold>(m: &M, pts: &[M::Point]) -> Result<f64> {
    if pts.len() < 2 {
        return Err(Error::Estimator("bandwidth needs at least two points".into()));
    }
    let mut d = Vec::with_capacity(pts.len() * (pts.len() - 1) / 2);
    for (i, x) in pts.iter().enumerate() {
        d.extend(pts[i + 1..].iter().map(|y| m.dist(x, y)));
    }
    Ok(median(d))
}

/// Points per set used for the median-heuristic bandwidth.
pub const BANDWIDTH_POINTS: usize = 2000;

/// Squared MMD between two samples with the Gaussian kernel
/// `exp(−d(x, y)² / 2h²)` on geodesic distance. Kernel sums are streamed, so
/// memory stays constant in the set sizes; the default bandwidth is the
/// pooled median distance over the first [`BANDWIDTH_POINTS`] of each set.
pub fn mmd<M: Manifold>(m: &M, a: &[M::Point], b: &[M::Point], cfg: &MmdConfig) -> Result<Mmd> {
    let a = &a[..a.len().min(cfg.max_points)];
    let b = &b[..b.len().min(cfg.max_points)];
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Estimator("MMD needs at least two points per set".into()));
    }
    let h = match cfg.bandwidth {
        Some(h) => h,
        None => {
            let pooled: Vec<M::Point> = a[..a.len().min(BANDWIDTH_POINTS)]
                .iter()
                .chain(&b[..b.len().min(BANDWIDTH_POINTS)])
                .cloned()
                .collect();
            median_bandwidth(m, &pooled)?
        }
    };
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Estimator(format!("MMD bandwidth must be positive, got {h}")));
    }
    let k = |x: &M::Point, y: &M::Point| (-m.dist(x, y).powi(2) / (2.0 * h * h)).exp();
    // (U-statistic, V-statistic) of the within-set kernel mean.
    let within = |s: &[M::Point]| -> (f64, f64) {
        let n = s.len() as f64;
        let mut off = 0.0;
        for (i, x) in s.iter().enumerate() {
            off += s[i + 1..].iter().map(|y| k(x, y)).sum::<f64>();
        }
        (2.0 * off / (n * (n - 1.0)), (2.0 * off + n) / (n * n))
    };
    let (ua, va) = within(a);
    let (ub, vb) = within(b);
    let cross = a.iter().map(|x| b.iter().map(|y| k(x, y)).sum::<f64>()).sum::<f64>() / (a.len() * b.len()) as f64;
    Ok(Mmd {
        unbiased: ua + ub - 2.0 * cross,
        biased: (va + vb - 2.0 * cross).max(0.0),
        bandwidth: h,
    })
}

/// Most probable endpoint given the state at `t`: the forward drift undone
/// by the bridge factor σ_t² / (τ_T − τ_t), then mapped through `exp_x`.
pub fn predict_endpoint<M, D>(m: &M, drift: &D, x: &M::Point, t: f64, schedule: &NoiseSchedule) -> Result<M::Point>
where
    M: Manifold,
    D: DriftField<M>,
{
    let c = schedule.drift_scale(t)?;
    let v: Vec<f64> = drift.eval(m, x, t)?.iter().map(|d| d / c).collect();
    m.exp_map(x, &v)
}

/// Mean geodesic distance to `finals` at every time; `states[k][i]` is
/// sample `i` at grid time `k`.
pub fn convergence_curve<M: Manifold>(m: &M, states: &[Vec<M::Point>], finals: &[M::Point]) -> Result<Vec<f64>> {
    if finals.is_empty() {
        return Err(Error::Usage("convergence curve needs at least one trajectory".into()));
    }
    states
        .iter()
        .map(|row| {
            if row.len() != finals.len() {
                return Err(Error::Usage(format!(
                    "trajectory batch has {} states, expected {}",
                    row.len(),
                    finals.len()
                )));
            }
            Ok(row.iter().zip(finals).map(|(x, y)| m.dist(x, y)).sum::<f64>() / finals.len() as f64)
        })
        .collect()
}

/// Endpoint predictions along every trajectory (the last grid time, where
/// the prediction is undefined, reuses the state itself).
pub fn prediction_paths<M, D>(
    m: &M,
    drift: &D,
    schedule: &NoiseSchedule,
    times: &[f64],
    states: &[Vec<M::Point>],
) -> Result<Vec<Vec<M::Point>>>
where
    M: Manifold,
    D: DriftField<M>,
{
    let limit = schedule.horizon() - schedule.eps_clip();
    times
        .iter()
        .zip(states)
        .map(|(&t, row)| {
            if t >= limit {
                return Ok(row.clone());
            }
            let c = schedule.drift_scale(t)?;
            let d = drift.eval_batch(m, row, &vec![t; row.len()])?;
            let n = m.tangent_len();
            row.iter()
                .enumerate()
                .map(|(i, x)| {
                    let v: Vec<f64> = d[i * n..(i + 1) * n].iter().map(|c2| c2 / c).collect();
                    m.exp_map(x, &v)
                })
                .collect()
        })
        .collect()
}

/// `t,<name>,...` CSV for curves sharing a time grid.
pub fn curves_to_csv(times: &[f64], curves: &[(&str, &[f64])]) -> String {
    let mut s = String::from("t");
    for (name, _) in curves {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (k, t) in times.iter().enumerate() {
        let _ = write!(s, "{t}");
        for (_, c) in curves {
            let _ = write!(s, ",{}", c.get(k).copied().unwrap_or(f64::NAN));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridges::{bridge_drift, BridgeFamily, BridgeSpec};
    use crate::manifold::{Point, Space};
    use crate::rng::substream;
    use crate::sim::FnDrift;
    use rand::Rng;

    fn cap(s: &Space, center: [f64; 3], n: usize, seed: u64) -> Vec<Point> {
        let c = Point::new(center);
        let mut rng = substream(seed, 0);
        (0..n).map(|_| s.wrapped_gaussian_sample(&c, 0.1, &mut rng).unwrap()).collect()
    }

    #[test]
    fn mmd_identical_sets() {
        let s = Space::Sphere(2);
        let a = cap(&s, [0.0, 0.0, 1.0], 50, 0);
        let r = mmd(&s, &a, &a, &MmdConfig::default()).unwrap();
        assert!(r.biased.abs() < 1e-12);
        assert!(r.unbiased <= 1e-12);
        assert!(mmd(&s, &a[..1], &a, &MmdConfig::default()).is_err());
    }

    #[test]
    fn mmd_brute_force_and_symmetry() {
        let s = Space::Sphere(2);
        let a = cap(&s, [0.0, 0.0, 1.0], 7, 1);
        let b = cap(&s, [0.0, 0.0, -1.0], 5, 2);
        let cfg = MmdConfig { bandwidth: Some(0.7), ..Default::default() };
        let r = mmd(&s, &a, &b, &cfg).unwrap();
        let k = |x: &Point, y: &Point| (-s.dist(x, y).powi(2) / (2.0 * 0.49)).exp();
        let mut kaa = 0.0;
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    kaa += k(&a[i], &a[j]);
                }
            }
        }
        let mut kbb = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    kbb += k(&b[i], &b[j]);
                }
            }
        }
        let mut kab = 0.0;
        for x in &a {
            for y in &b {
                kab += k(x, y);
            }
        }
        let expect = kaa / 42.0 + kbb / 20.0 - 2.0 * kab / 35.0;
        assert!((r.unbiased - expect).abs() < 1e-12);
        let rev = mmd(&s, &b, &a, &cfg).unwrap();
        assert!((rev.unbiased - r.unbiased).abs() < 1e-12 && (rev.biased - r.biased).abs() < 1e-12);
        // far clusters: near the 2·k(0) ceiling with a fixed small bandwidth
        assert!(r.unbiased > 1.9);
        let same = mmd(&s, &a, &cap(&s, [0.0, 0.0, 1.0], 5, 3), &cfg).unwrap();
        assert!(r.unbiased > same.unbiased);
    }

    #[test]
    fn mmd_same_distribution_is_small() {
        let s = Space::Sphere(2);
        let mut rng = substream(4, 0);
        let a = s.sample_uniform(&mut rng, 1000).unwrap();
        let b = s.sample_uniform(&mut rng, 1000).unwrap();
        let r = mmd(&s, &a, &b, &MmdConfig::default()).unwrap();
        assert!(r.unbiased.abs() < 0.02, "{r:?}");
    }

    #[test]
    fn exact_bridge_drift_predicts_endpoint() {
        let s = Space::Sphere(2);
        let z = Point::new([0.0, 0.6, 0.8]);
        let mut rng = substream(5, 0);
        for sched in [NoiseSchedule::constant(0.7), NoiseSchedule::linear(0.1, 1.0)] {
            let spec = BridgeSpec::new(BridgeFamily::Logarithm, z.clone(), sched);
            let f = FnDrift(|x: &Point, t: f64| bridge_drift(&s, &spec, x, t));
            for _ in 0..20 {
                let x = s.sample_uniform(&mut rng, 1).unwrap().remove(0);
                let t = rng.random_range(0.0..0.99);
                let p = predict_endpoint(&s, &f, &x, t, &sched).unwrap();
                assert!(s.dist(&p, &z) < 1e-7);
            }
        }
        // rescaling σ by c leaves the composition unchanged
        let x = Point::new([1.0, 0.0, 0.0]);
        for c in [0.5, 3.0] {
            let sched = NoiseSchedule::linear(0.2 * c, 0.9 * c);
            let spec = BridgeSpec::new(BridgeFamily::Logarithm, z.clone(), sched);
            let f = FnDrift(|x: &Point, t: f64| bridge_drift(&s, &spec, x, t));
            assert!(s.dist(&predict_endpoint(&s, &f, &x, 0.4, &sched).unwrap(), &z) < 1e-9);
        }
        let bounded = FnDrift(|x: &Point, _t: f64| Ok(Space::Sphere(2).project(x, &[1.0, 1.0, 1.0])));
        let sched = NoiseSchedule::constant(1.0);
        let near = predict_endpoint(&s, &bounded, &z, 1.0 - 2e-4, &sched).unwrap();
        assert!(s.dist(&near, &z) < 1e-3);
        assert!(matches!(
            predict_endpoint(&s, &bounded, &z, 1.0, &sched),
            Err(Error::Horizon { .. })
        ));
    }

    #[test]
    fn curve_terminal_is_zero() {
        let s = Space::Sphere(2);
        let a = cap(&s, [0.0, 0.0, 1.0], 10, 6);
        let b = cap(&s, [1.0, 0.0, 0.0], 10, 7);
        let c = convergence_curve(&s, &[b.clone(), a.clone()], &a).unwrap();
        assert!(c[0] > 1.0 && c[1] == 0.0);
        assert!(convergence_curve(&s, &[a[..3].to_vec()], &a).is_err());
        let csv = curves_to_csv(&[0.0, 1.0], &[("traj", &c)]);
        assert!(csv.starts_with("t,traj\n0,"));
    }
}
