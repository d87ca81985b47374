use super::field::DriftField;
use super::walk::uniform_grid;
use crate::bridges::NoiseSchedule;
use crate::error::{Error, Result};
use crate::manifold::Manifold;
use crate::prior::Prior;
use crate::rng::{derive_seed, substream};

const TAG_PRIOR: u64 = 0x5A;
const TAG_NOISE: u64 = 0x5B;

/// States of a batch of generative trajectories on a shared time grid.
#[derive(Debug, Clone)]
pub struct SampleBatch<P> {
    pub times: Vec<f64>,
    /// `states[k][i]` is sample `i` at `times[k]`; only the last row is kept
    /// unless paths were requested.
    pub states: Vec<Vec<P>>,
}

impl<P> SampleBatch<P> {
    pub fn finals(&self) -> &[P] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Geodesic random walk from `starts` under `drift` with noise `σ_t`,
/// evaluating the drift on the whole batch at once. Sample `i` draws its
/// noise from its own substream, so results do not depend on batching.
pub fn walk_batch<M, D>(
    m: &M,
    drift: &D,
    schedule: &NoiseSchedule,
    starts: Vec<M::Point>,
    n_steps: usize,
    seed: u64,
    keep_path: bool,
) -> Result<SampleBatch<M::Point>>
where
    M: Manifold,
    D: DriftField<M>,
{
    if n_steps == 0 {
        return Err(Error::Usage("sampler needs at least one step".into()));
    }
    let times = uniform_grid(schedule.horizon(), n_steps);
    let n = m.tangent_len();
    let mut rngs: Vec<_> = (0..starts.len()).map(|i| substream(seed, i as u64)).collect();
    let mut cur = starts;
    let mut path = Vec::new();
    for k in 0..n_steps {
        if keep_path {
            path.push(cur.clone());
        }
        let (t, h) = (times[k], times[k + 1] - times[k]);
        let d = drift.eval_batch(m, &cur, &vec![t; cur.len()])?;
        let scale = schedule.sigma(t) * h.sqrt();
        cur = cur
            .iter()
            .zip(rngs.iter_mut())
            .enumerate()
            .map(|(i, (x, rng))| {
                let xi = m.tangent_gaussian(x, rng, scale);
                let v: Vec<f64> = d[i * n..(i + 1) * n].iter().zip(&xi).map(|(a, b)| h * a + b).collect();
                m.exp_map(x, &v).map_err(|e| e.at_step(k))
            })
            .collect::<Result<_>>()?;
    }
    path.push(cur);
    Ok(SampleBatch { times, states: path })
}

/// Draw `n` samples from the generative SDE: prior draws at t = 0 pushed
/// through the forward drift to t = T.
pub fn sample_sde<M, D>(
    m: &M,
    drift: &D,
    schedule: &NoiseSchedule,
    prior: &Prior<M::Point>,
    n: usize,
    n_steps: usize,
    seed: u64,
    keep_path: bool,
) -> Result<SampleBatch<M::Point>>
where
    M: Manifold,
    D: DriftField<M>,
{
    let starts = prior_draws(m, prior, n, seed)?;
    walk_batch(m, drift, schedule, starts, n_steps, derive_seed(seed, TAG_NOISE), keep_path)
}

/// Prior draws used by [`sample_sde`] for the same seed, for pairing SDE and
/// ODE samples.
pub fn prior_draws<M: Manifold>(m: &M, prior: &Prior<M::Point>, n: usize, seed: u64) -> Result<Vec<M::Point>> {
    (0..n)
        .map(|i| {
            let mut rng = substream(derive_seed(seed, TAG_PRIOR), i as u64);
            Ok(prior.sample(m, &mut rng, 1)?.remove(0))
        })
        .collect()
}
