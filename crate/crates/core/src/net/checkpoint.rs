//! Checkpoint file: one line of JSON header, then a little-endian f64 blob.
//!
//! Blob order: forward parameters, backward parameters, then the Adam first
//! moments (forward, backward), second moments (forward, backward), and the
//! EMA shadows (forward, backward). Each vector is layer-major as in
//! [`super::Mlp`].

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig, Ema};
use super::drift::DriftNet;
use super::mlp::{param_count, Activation, Mlp};
use crate::bridges::{BridgeFamily, NoiseSchedule};
use crate::error::{Error, Result};
use crate::manifold::ManifoldKind;
use crate::prior::PriorSpec;
use crate::sim::OdeMethod;

pub const CHECKPOINT_FORMAT: &str = "rdmix-checkpoint/1";

/// Parameters, optimizer moments and EMA shadow of one drift network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetState {
    pub net: DriftNet,
    pub adam: Adam,
    pub ema: Ema,
}

impl NetState {
    pub fn new(net: DriftNet, adam: AdamConfig, ema_decay: f64) -> Result<Self> {
        let n = net.mlp.n_params();
        let ema = Ema::new(ema_decay, net.params())?;
        Ok(NetState {
            net,
            adam: Adam::new(adam, n),
            ema,
        })
    }

    pub fn step(&mut self, grad: &[f64]) -> Result<()> {
        self.adam.step(&mut self.net.mlp.params, grad)?;
        self.ema.update(&self.net.mlp.params)
    }

    /// Network carrying the EMA weights, used for evaluation.
    pub fn ema_net(&self) -> Result<DriftNet> {
        self.net.with_params(self.ema.shadow.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub widths: Vec<usize>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub architecture: Architecture,
    pub manifold: ManifoldKind,
    pub schedule: NoiseSchedule,
    pub family: BridgeFamily,
    pub prior: PriorSpec,
    #[serde(default = "d_ode_method")]
    pub ode_method: OdeMethod,
    pub iteration: u64,
    pub seed: u64,
    pub adam: AdamConfig,
    pub adam_steps: u64,
    pub ema_decay: f64,
    #[serde(default)]
    pub val_nll: Option<f64>,
    #[serde(default)]
    pub config_hash: Option<String>,
    #[serde(default)]
    pub git: Option<String>,
}

fn d_ode_method() -> OdeMethod {
    OdeMethod::Rk4
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub forward: NetState,
    pub backward: NetState,
}

fn write_f64s<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("checkpoint blob truncated: {e}")))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = self.header.clone();
        header.architecture = Architecture {
            widths: self.forward.net.mlp.widths.clone(),
            activation: self.forward.net.mlp.activation,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        let (f, b) = (&self.forward, &self.backward);
        for v in [
            f.net.params(),
            b.net.params(),
            &f.adam.m,
            &b.adam.m,
            &f.adam.v,
            &b.adam.v,
            &f.ema.shadow,
            &b.ema.shadow,
        ] {
            write_f64s(&mut w, v)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line)?;
        let header: CheckpointHeader = serde_json::from_str(line.trim_end())
            .map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!("unknown checkpoint format {:?}", header.format)));
        }
        let arch = &header.architecture;
        let n = param_count(&arch.widths);
        let mut vs: Vec<Vec<f64>> = (0..8).map(|_| read_f64s(&mut r, n)).collect::<Result<_>>()?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes after checkpoint blob", rest.len())));
        }
        let mut take = |i: usize| std::mem::take(&mut vs[i]);
        let mk = |params: Vec<f64>, m: Vec<f64>, v: Vec<f64>, shadow: Vec<f64>| -> Result<NetState> {
            let net = DriftNet {
                mlp: Mlp {
                    widths: arch.widths.clone(),
                    activation: arch.activation,
                    params,
                },
                kind: header.manifold.clone(),
            };
            net.mlp.check_params()?;
            Ok(NetState {
                net,
                adam: Adam {
                    cfg: header.adam,
                    m,
                    v,
                    t: header.adam_steps,
                },
                ema: Ema {
                    decay: header.ema_decay,
                    shadow,
                },
            })
        };
        let (pf, pb, mf, mb, vf, vb, ef, eb) = (take(0), take(1), take(2), take(3), take(4), take(5), take(6), take(7));
        let forward = mk(pf, mf, vf, ef)?;
        let backward = mk(pb, mb, vb, eb)?;
        Ok(Checkpoint {
            header,
            forward,
            backward,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(f)
    }
}
