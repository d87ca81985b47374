use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sin,
    Swish,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sin => z.sin(),
            Activation::Swish => z / (1.0 + (-z).exp()),
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Sin => z.cos(),
            Activation::Swish => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 + z * (1.0 - s))
            }
        }
    }
}

/// Fully connected network with a linear output layer.
///
/// Parameters are stored flat, layer by layer: the `out × in` row-major
/// weight matrix followed by the `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub widths: Vec<usize>,
    pub activation: Activation,
    #[serde(skip)]
    pub params: Vec<f64>,
}

/// Record of a batched forward pass, consumed by [`Mlp::backward`].
#[derive(Debug, Clone, Default)]
pub struct Tape {
    batch: usize,
    /// Input to every layer (`inputs[0]` is the network input).
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of the hidden layers.
    pre: Vec<Vec<f64>>,
}

impl Tape {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

pub fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl Mlp {
    /// Xavier-uniform hidden layers and biases at zero. With `zero_last` the
    /// output layer starts at exactly zero.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], activation: Activation, zero_last: bool, rng: &mut R) -> Result<Self> {
        if widths.len() < 2 || widths.iter().any(|&w| w == 0) {
            return Err(Error::Config(format!("invalid layer widths {widths:?}")));
        }
        let mut params = Vec::with_capacity(param_count(widths));
        let n_layers = widths.len() - 1;
        for (l, w) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                let v = if zero_last && l + 1 == n_layers {
                    0.0
                } else {
                    rng.random_range(-limit..limit)
                };
                params.push(v);
            }
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(Mlp {
            widths: widths.to_vec(),
            activation,
            params,
        })
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn input_len(&self) -> usize {
        self.widths[0]
    }

    pub fn output_len(&self) -> usize {
        *self.widths.last().unwrap()
    }

    fn layer_offsets(&self) -> Vec<(usize, usize, usize)> {
        // (weight offset, bias offset, next offset)
        let mut off = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let wo = off;
                let bo = off + w[0] * w[1];
                off = bo + w[1];
                (wo, bo, off)
            })
            .collect()
    }

    pub fn check_params(&self) -> Result<()> {
        if self.params.len() != param_count(&self.widths) {
            return Err(Error::ModelState(format!(
                "{} parameters for widths {:?}",
                self.params.len(),
                self.widths
            )));
        }
        if !self.params.iter().all(|p| p.is_finite()) {
            return Err(Error::ModelState("non-finite parameters".into()));
        }
        Ok(())
    }

    /// Batched forward pass over `batch` row-major inputs.
    pub fn forward(&self, input: &[f64], batch: usize) -> Result<(Vec<f64>, Tape)> {
        self.run(input, batch, true)
    }

    /// Forward pass without recording.
    pub fn predict(&self, input: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.run(input, batch, false).map(|r| r.0)
    }

    fn run(&self, input: &[f64], batch: usize, record: bool) -> Result<(Vec<f64>, Tape)> {
        if input.len() != batch * self.input_len() {
            return Err(Error::Usage(format!(
                "input has {} values, expected {batch} × {}",
                input.len(),
                self.input_len()
            )));
        }
        let mut tape = Tape {
            batch,
            ..Tape::default()
        };
        let offs = self.layer_offsets();
        let n_layers = offs.len();
        let mut x = input.to_vec();
        for (l, &(wo, bo, _)) in offs.iter().enumerate() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let w = &self.params[wo..bo];
            let b = &self.params[bo..bo + n_out];
            let mut z = Vec::with_capacity(batch * n_out);
            for _ in 0..batch {
                z.extend_from_slice(b);
            }
            // z (batch × out) += x (batch × in) · wᵀ (in × out)
            unsafe {
                matrixmultiply::dgemm(
                    batch,
                    n_in,
                    n_out,
                    1.0,
                    x.as_ptr(),
                    n_in as isize,
                    1,
                    w.as_ptr(),
                    1,
                    n_in as isize,
                    1.0,
                    z.as_mut_ptr(),
                    n_out as isize,
                    1,
                );
            }
            let last = l + 1 == n_layers;
            if record {
                tape.inputs.push(std::mem::take(&mut x));
            }
            if last {
                x = z;
            } else {
                let act = self.activation;
                x = z.iter().map(|&v| act.apply(v)).collect();
                if record {
                    tape.pre.push(z);
                }
            }
        }
        Ok((x, tape))
    }

    /// Parameter gradient of `Σ d_out · output` for the recorded pass.
    pub fn backward(&self, tape: &Tape, d_out: &[f64]) -> Result<Vec<f64>> {
        let n_layers = self.widths.len() - 1;
        if tape.inputs.len() != n_layers || tape.pre.len() + 1 != n_layers {
            return Err(Error::Usage("backward called without a recorded forward pass".into()));
        }
        let batch = tape.batch;
        if d_out.len() != batch * self.output_len() {
            return Err(Error::Usage(format!(
                "output adjoint has {} values, expected {batch} × {}",
                d_out.len(),
                self.output_len()
            )));
        }
        let offs = self.layer_offsets();
        let mut grad = vec![0.0; self.params.len()];
        let mut dz = d_out.to_vec();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let (wo, bo, _) = offs[l];
            let x = &tape.inputs[l];
            if x.len() != batch * n_in {
                return Err(Error::Usage("tape does not match this network".into()));
            }
            {
                let (gw, gb) = grad[wo..bo + n_out].split_at_mut(n_in * n_out);
                // gw (out × in) = dzᵀ (out × batch) · x (batch × in)
                unsafe {
                    matrixmultiply::dgemm(
                        n_out,
                        batch,
                        n_in,
                        1.0,
                        dz.as_ptr(),
                        1,
                        n_out as isize,
                        x.as_ptr(),
                        n_in as isize,
                        1,
                        0.0,
                        gw.as_mut_ptr(),
                        n_in as isize,
                        1,
                    );
                }
                for row in dz.chunks_exact(n_out) {
                    gb.iter_mut().zip(row).for_each(|(g, d)| *g += d);
                }
            }
            if l == 0 {
                break;
            }
            // dx (batch × in) = dz (batch × out) · w (out × in)
            let w = &self.params[wo..bo];
            let mut dx = vec![0.0; batch * n_in];
            unsafe {
                matrixmultiply::dgemm(
                    batch,
                    n_out,
                    n_in,
                    1.0,
                    dz.as_ptr(),
                    n_out as isize,
                    1,
                    w.as_ptr(),
                    n_in as isize,
                    1,
                    0.0,
                    dx.as_mut_ptr(),
                    n_in as isize,
                    1,
                );
            }
            let act = self.activation;
            dx.iter_mut()
                .zip(&tape.pre[l - 1])
                .for_each(|(d, &z)| *d *= act.derivative(z));
            dz = dx;
        }
        Ok(grad)
    }
}
