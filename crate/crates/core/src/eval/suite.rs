use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::Manifold;
use crate::sim::{nll, ProbabilityFlow};
use crate::train::{ModelSpec, TrainedPair};

/// Per-point NLL (nats) of a trained pair under its probability flow.
pub fn model_nll<M: Manifold>(
    m: &M,
    model: &ModelSpec<M::Point>,
    pair: &TrainedPair,
    points: &[M::Point],
    n_steps: usize,
) -> Result<Vec<f64>> {
    let (f, b) = pair.eval_nets()?;
    let flow = ProbabilityFlow::new(&f, &b, model.schedule.horizon());
    nll(m, &flow, &model.prior, points, model.schedule.horizon(), n_steps, model.ode_method)
}

/// NLL in nats converted to bits per dimension.
pub fn bits_per_dim(nats: f64, dim: usize) -> f64 {
    nats / (dim as f64 * std::f64::consts::LN_2)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedNll {
    pub seed: u64,
    pub n_points: usize,
    pub mean: f64,
    /// Standard deviation over test points.
    pub std: f64,
    /// Mean NLL with twice the ODE steps, when the convergence check ran.
    pub mean_doubled: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NllSuite {
    pub n_steps: usize,
    pub per_seed: Vec<SeedNll>,
    /// Mean over seeds of the per-seed means.
    pub mean: f64,
    /// Standard deviation over seeds of the per-seed means.
    pub std: f64,
    /// Largest `|mean − mean_doubled|` over seeds.
    pub step_gap: Option<f64>,
}

impl NllSuite {
    /// Whether doubling the ODE steps moved every seed's mean by less than
    /// `tol` nats.
    pub fn converged(&self, tol: f64) -> Option<bool> {
        self.step_gap.map(|g| g < tol)
    }
}

/// Run `score(seed, n_steps)` (per-point NLLs for the model trained on that
/// seed's split) for every seed, optionally again at `2·n_steps`, and pool.
pub fn nll_suite<F>(seeds: &[u64], n_steps: usize, check_doubling: bool, mut score: F) -> Result<NllSuite>
where
    F: FnMut(u64, usize) -> Result<Vec<f64>>,
{
    if seeds.is_empty() {
        return Err(Error::Usage("NLL suite needs at least one seed".into()));
    }
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let v = score(seed, n_steps)?;
        if v.is_empty() {
            return Err(Error::Data(format!("seed {seed}: empty test set")));
        }
        let (mean, std) = mean_std(&v);
        let mean_doubled = if check_doubling {
            let w = score(seed, 2 * n_steps)?;
            Some(mean_std(&w).0)
        } else {
            None
        };
        per_seed.push(SeedNll {
            seed,
            n_points: v.len(),
            mean,
            std,
            mean_doubled,
        });
    }
    let means: Vec<f64> = per_seed.iter().map(|s| s.mean).collect();
    let (mean, std) = mean_std(&means);
    let step_gap = check_doubling.then(|| {
        per_seed
            .iter()
            .map(|s| (s.mean - s.mean_doubled.unwrap_or(s.mean)).abs())
            .fold(0.0, f64::max)
    });
    Ok(NllSuite {
        n_steps,
        per_seed,
        mean,
        std,
        step_gap,
    })
}

/// One-line JSON run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub task: String,
    pub seed: u64,
    pub nll_mean: f64,
    pub nll_std: f64,
    pub mmd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits_per_dim: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Point, Space};
    use crate::prior::Prior;
    use crate::rng::substream;
    use crate::sim::{OdeMethod, ZeroDrift};
    use std::f64::consts::PI;

    #[test]
    fn uniform_model_sphere_nll() {
        let s = Space::Sphere(2);
        let pts = s.sample_uniform(&mut substream(0, 0), 20).unwrap();
        let suite = nll_suite(&[0, 1, 2], 10, true, |_, steps| {
            nll(&s, &ZeroDrift, &Prior::<Point>::Uniform, &pts, 1.0, steps, OdeMethod::Rk4)
        })
        .unwrap();
        assert!((suite.mean - (4.0 * PI).ln()).abs() < 1e-12);
        assert_eq!(suite.std, 0.0);
        assert!(suite.converged(0.01).unwrap());
        assert!(suite.per_seed.iter().all(|p| p.std < 1e-12));
    }

    #[test]
    fn pooled_stats() {
        let suite = nll_suite(&[1, 2], 5, false, |seed, _| Ok(vec![seed as f64, seed as f64 + 2.0])).unwrap();
        assert_eq!(suite.per_seed[0].mean, 2.0);
        assert!((suite.per_seed[0].std - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(suite.mean, 2.5);
        assert!((suite.std - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(suite.step_gap.is_none());
        assert!((bits_per_dim(2.0 * 2f64.ln(), 2) - 1.0).abs() < 1e-15);
    }
}
