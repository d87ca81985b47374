use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

/// Adam with bias-corrected moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub cfg: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(cfg: AdamConfig, n_params: usize) -> Self {
        Adam {
            cfg,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Config(format!(
                "optimizer holds {} moments but got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        let AdamConfig { lr, beta1, beta2, eps } = self.cfg;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= lr * mh / (vh.sqrt() + eps);
        }
        Ok(())
    }
}

/// Exponential moving average of parameters; evaluation uses the shadow.
#[derive(Debug, Clone, PartialEq)]
pub struct Ema {
    pub decay: f64,
    pub shadow: Vec<f64>,
}

impl Ema {
    pub fn new(decay: f64, params: &[f64]) -> Result<Self> {
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::Config(format!("EMA decay must lie in (0, 1), got {decay}")));
        }
        Ok(Ema {
            decay,
            shadow: params.to_vec(),
        })
    }

    pub fn update(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.shadow.len() {
            return Err(Error::Config(format!(
                "EMA holds {} values, got {}",
                self.shadow.len(),
                params.len()
            )));
        }
        let d = self.decay;
        self.shadow
            .iter_mut()
            .zip(params)
            .for_each(|(s, p)| *s = d * *s + (1.0 - d) * p);
        Ok(())
    }
}
