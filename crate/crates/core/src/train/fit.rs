use std::io::Write;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{build_loss_batch, two_way_loss};
use super::time::{TimeMode, TimeSampler};
use crate::bridges::{BridgeFamily, NoiseSchedule};
use crate::error::{Error, Result};
use crate::manifold::Manifold;
use crate::net::{AdamConfig, DriftNet, NetConfig, NetState};
use crate::prior::Prior;
use crate::rng::{derive_seed, substream};
use crate::sim::{nll, simulate_two_way_batch, OdeMethod, ProbabilityFlow, TwoWayConfig};

const TAG_INIT: u64 = 1;
const TAG_DATA: u64 = 2;
const TAG_PRIOR: u64 = 3;
const TAG_SIM: u64 = 4;
const TAG_TIMES: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_iterations")]
    pub iterations: usize,
    #[serde(default = "d_lr")]
    pub lr: f64,
    /// Two-way simulation steps during training.
    #[serde(default = "d_n_steps")]
    pub n_steps: usize,
    /// Loss times drawn per trajectory leg.
    #[serde(default = "d_times_per_leg")]
    pub times_per_leg: usize,
    #[serde(default = "d_time_mode")]
    pub time_mode: TimeMode,
    /// Loss times are drawn from `[c·T, (1 − c)·T]`.
    #[serde(default = "d_loss_clip")]
    pub loss_clip: f64,
    /// Iterations between validation NLL evaluations; 0 disables validation.
    #[serde(default = "d_val_interval")]
    pub val_interval: usize,
    /// Validations without improvement before stopping; `None` never stops early.
    #[serde(default)]
    pub patience: Option<usize>,
    /// ODE steps for validation NLL.
    #[serde(default = "d_val_steps")]
    pub val_steps: usize,
    /// At most this many validation points are scored.
    #[serde(default = "d_val_points")]
    pub val_points: usize,
    #[serde(default = "d_ema")]
    pub ema_decay: f64,
    #[serde(default)]
    pub seed: u64,
    /// Record wall-clock milliseconds in the metrics stream (makes the stream
    /// non-reproducible).
    #[serde(default)]
    pub timing: bool,
}

fn d_batch() -> usize {
    256
}
fn d_iterations() -> usize {
    20_000
}
fn d_lr() -> f64 {
    2e-4
}
fn d_n_steps() -> usize {
    15
}
fn d_times_per_leg() -> usize {
    4
}
fn d_time_mode() -> TimeMode {
    TimeMode::TimeScaled
}
fn d_loss_clip() -> f64 {
    0.01
}
fn d_val_interval() -> usize {
    1000
}
fn d_val_steps() -> usize {
    200
}
fn d_val_points() -> usize {
    512
}
fn d_ema() -> f64 {
    0.999
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: d_batch(),
            iterations: d_iterations(),
            lr: d_lr(),
            n_steps: d_n_steps(),
            times_per_leg: d_times_per_leg(),
            time_mode: d_time_mode(),
            loss_clip: d_loss_clip(),
            val_interval: d_val_interval(),
            patience: None,
            val_steps: d_val_steps(),
            val_points: d_val_points(),
            ema_decay: d_ema(),
            seed: 0,
            timing: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.n_steps < 2 || self.times_per_leg == 0 || !(self.lr > 0.0) || self.val_steps == 0
            || !(self.loss_clip > 0.0 && self.loss_clip < 0.5)
        {
            return Err(Error::Config(format!("invalid training config {self:?}")));
        }
        Ok(())
    }
}

/// Everything that defines the generative model besides its weights.
#[derive(Debug, Clone)]
pub struct ModelSpec<P> {
    pub family: BridgeFamily,
    pub schedule: NoiseSchedule,
    pub prior: Prior<P>,
    pub net: NetConfig,
    pub ode_method: OdeMethod,
}

/// A forward/backward network pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPair {
    pub forward: NetState,
    pub backward: NetState,
    pub iteration: usize,
}

impl TrainedPair {
    /// EMA networks used for evaluation.
    pub fn eval_nets(&self) -> Result<(DriftNet, DriftNet)> {
        Ok((self.forward.ema_net()?, self.backward.ema_net()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub iter: usize,
    pub loss: f64,
    pub val_nll: Option<f64>,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub loss: Vec<f64>,
    /// `(iteration, validation NLL)` pairs.
    pub val_nll: Vec<(usize, f64)>,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitStatus {
    Completed,
    EarlyStopped { iter: usize },
    /// Loss became non-finite; the best (or last finite) state is returned.
    Diverged { iter: usize },
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// State with the best validation NLL (the final state when validation is
    /// off).
    pub best: TrainedPair,
    pub best_val_nll: Option<f64>,
    pub history: History,
    pub status: FitStatus,
}

/// Validation NLL of the EMA networks.
pub fn validation_nll<M: Manifold>(
    m: &M,
    model: &ModelSpec<M::Point>,
    pair: &TrainedPair,
    points: &[M::Point],
    steps: usize,
) -> Result<f64> {
    let (f, b) = pair.eval_nets()?;
    let flow = ProbabilityFlow::new(&f, &b, model.schedule.horizon());
    let v = nll(m, &flow, &model.prior, points, model.schedule.horizon(), steps, model.ode_method)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Fresh networks for `m`, seeded from `seed`.
pub fn init_pair<M: Manifold>(m: &M, net: &NetConfig, cfg: &TrainConfig) -> Result<TrainedPair> {
    let mut rng = substream(derive_seed(cfg.seed, TAG_INIT), 0);
    let f = DriftNet::new(m, net, &mut rng)?;
    let b = DriftNet::new(m, net, &mut rng)?;
    let adam = AdamConfig::with_lr(cfg.lr);
    Ok(TrainedPair {
        forward: NetState::new(f, adam, cfg.ema_decay)?,
        backward: NetState::new(b, adam, cfg.ema_decay)?,
        iteration: 0,
    })
}

/// Two-way bridge matching: sample a batch, simulate pinned trajectories,
/// regress both networks, step Adam and the EMA, and periodically score the
/// validation set with the EMA weights.
pub fn fit<M: Manifold>(
    m: &M,
    model: &ModelSpec<M::Point>,
    cfg: &TrainConfig,
    train: &[M::Point],
    valid: &[M::Point],
    metrics: Option<&mut dyn Write>,
) -> Result<FitOutcome> {
    let pair = init_pair(m, &model.net, cfg)?;
    fit_from(m, model, cfg, train, valid, pair, metrics)
}

/// [`fit`] starting from an existing state.
pub fn fit_from<M: Manifold>(
    m: &M,
    model: &ModelSpec<M::Point>,
    cfg: &TrainConfig,
    train: &[M::Point],
    valid: &[M::Point],
    mut state: TrainedPair,
    mut metrics: Option<&mut dyn Write>,
) -> Result<FitOutcome> {
    cfg.validate()?;
    model.schedule.validate()?;
    if train.is_empty() && cfg.iterations > 0 {
        return Err(Error::Data("empty training set".into()));
    }
    let sampler = TimeSampler::clipped(model.schedule, cfg.time_mode, cfg.loss_clip);
    sampler.validate()?;
    let two_way = TwoWayConfig {
        n_steps: cfg.n_steps,
        t_star: None,
    };
    let val_set = &valid[..valid.len().min(cfg.val_points)];
    let validate = cfg.val_interval > 0 && !val_set.is_empty();

    let mut history = History::default();
    let mut best = state.clone();
    let mut best_val: Option<f64> = None;
    let mut since_best = 0usize;
    let mut status = FitStatus::Completed;
    let start = Instant::now();

    for k in 0..cfg.iterations {
        let iter = state.iteration + 1;
        let mut data_rng = substream(derive_seed(cfg.seed, TAG_DATA), iter as u64);
        let xs: Vec<M::Point> = (0..cfg.batch_size)
            .map(|_| train[data_rng.random_range(0..train.len())].clone())
            .collect();
        let mut prior_rng = substream(derive_seed(cfg.seed, TAG_PRIOR), iter as u64);
        let ys = model.prior.sample(m, &mut prior_rng, cfg.batch_size)?;
        let sim_seed = derive_seed(derive_seed(cfg.seed, TAG_SIM), iter as u64);
        let batch = simulate_two_way_batch(m, &xs, &ys, model.family, &model.schedule, &two_way, sim_seed)?;
        let mut time_rng = substream(derive_seed(cfg.seed, TAG_TIMES), iter as u64);
        let lb = build_loss_batch(m, &batch.paths, &sampler, cfg.times_per_leg, &mut time_rng)?;
        history.skipped += lb.skipped;
        let lv = two_way_loss(m, &state.forward.net, &state.backward.net, &lb)?;
        let finite = lv.loss.is_finite()
            && lv.fwd_grad.iter().chain(&lv.bwd_grad).all(|g| g.is_finite());
        if !finite {
            status = FitStatus::Diverged { iter };
            if best_val.is_none() {
                best = state.clone();
            }
            break;
        }
        state.forward.step(&lv.fwd_grad)?;
        state.backward.step(&lv.bwd_grad)?;
        state.iteration = iter;
        history.loss.push(lv.loss);

        let mut val = None;
        if validate && (k + 1) % cfg.val_interval == 0 {
            let v = validation_nll(m, model, &state, val_set, cfg.val_steps)?;
            history.val_nll.push((iter, v));
            val = Some(v);
            if best_val.is_none_or(|b| v < b) {
                best_val = Some(v);
                best = state.clone();
                since_best = 0;
            } else {
                since_best += 1;
            }
        }
        if let Some(w) = metrics.as_deref_mut() {
            let rec = MetricRecord {
                iter,
                loss: lv.loss,
                val_nll: val,
                wall_ms: cfg.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
            };
            serde_json::to_writer(&mut *w, &rec)?;
            w.write_all(b"\n")?;
        }
        if let Some(p) = cfg.patience {
            if validate && since_best > p {
                status = FitStatus::EarlyStopped { iter };
                break;
            }
        }
    }
    if best_val.is_none() && status == FitStatus::Completed {
        best = state;
    }
    Ok(FitOutcome {
        best,
        best_val_nll: best_val,
        history,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Space;

    fn small_model(s: &Space) -> ModelSpec<crate::manifold::Point> {
        let _ = s;
        ModelSpec {
            family: BridgeFamily::Logarithm,
            schedule: NoiseSchedule::constant(1.0),
            prior: Prior::Uniform,
            net: NetConfig::small(16, 2),
            ode_method: OdeMethod::Rk4,
        }
    }

    #[test]
    fn zero_iterations_returns_initial_state() {
        let s = Space::Sphere(2);
        let cfg = TrainConfig {
            iterations: 0,
            ..TrainConfig::default()
        };
        let data = s.sample_uniform(&mut substream(0, 0), 10).unwrap();
        let out = fit(&s, &small_model(&s), &cfg, &data, &data, None).unwrap();
        assert!(out.history.loss.is_empty());
        assert_eq!(out.best, init_pair(&s, &small_model(&s).net, &cfg).unwrap());
    }

    #[test]
    fn seeded_runs_are_identical() {
        let s = Space::Sphere(2);
        let cfg = TrainConfig {
            iterations: 6,
            batch_size: 8,
            val_interval: 3,
            val_steps: 4,
            val_points: 4,
            lr: 1e-3,
            ..TrainConfig::default()
        };
        let data = s.sample_uniform(&mut substream(0, 0), 20).unwrap();
        let run = || {
            let mut buf = Vec::new();
            let out = fit(&s, &small_model(&s), &cfg, &data, &data[..5], Some(&mut buf)).unwrap();
            (out.history, buf)
        };
        let (h1, b1) = run();
        let (h2, b2) = run();
        assert_eq!(h1, h2);
        assert_eq!(b1, b2);
        assert_eq!(String::from_utf8(b1).unwrap().lines().count(), 6);
    }

    #[test]
    fn best_checkpoint_has_minimal_validation_nll() {
        let s = Space::Sphere(2);
        let cfg = TrainConfig {
            iterations: 12,
            batch_size: 8,
            val_interval: 2,
            val_steps: 4,
            val_points: 6,
            lr: 5e-3,
            ema_decay: 0.5,
            ..TrainConfig::default()
        };
        let data = s.sample_uniform(&mut substream(0, 0), 20).unwrap();
        let model = small_model(&s);
        let out = fit(&s, &model, &cfg, &data, &data[..6], None).unwrap();
        let min = out.history.val_nll.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        assert_eq!(out.best_val_nll, Some(min));
        let again = validation_nll(&s, &model, &out.best, &data[..6], 4).unwrap();
        assert_eq!(again, min);
        let at = out.history.val_nll.iter().find(|v| v.1 == min).unwrap().0;
        assert_eq!(out.best.iteration, at);
    }
}
