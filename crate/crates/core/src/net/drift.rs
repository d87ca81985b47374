use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Mlp, Tape};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, ManifoldKind};
use crate::sim::DriftField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    /// Number of hidden layers.
    #[serde(default = "default_layers")]
    pub layers: usize,
    /// `None` picks sin for closed-form manifolds and swish for meshes.
    #[serde(default)]
    pub activation: Option<Activation>,
}

fn default_hidden() -> usize {
    512
}
fn default_layers() -> usize {
    6
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            hidden: default_hidden(),
            layers: default_layers(),
            activation: None,
        }
    }
}

impl NetConfig {
    pub fn small(hidden: usize, layers: usize) -> Self {
        NetConfig {
            hidden,
            layers,
            activation: None,
        }
    }

    pub fn activation_for(&self, kind: &ManifoldKind) -> Activation {
        self.activation.unwrap_or(match kind {
            ManifoldKind::Mesh { .. } => Activation::Swish,
            _ => Activation::Sin,
        })
    }
}

/// Drift network `s(x, t) = proj_x(mlp([features(x) ‖ t]))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftNet {
    pub mlp: Mlp,
    pub kind: ManifoldKind,
}

impl DriftNet {
    pub fn new<M: Manifold, R: Rng + ?Sized>(m: &M, cfg: &NetConfig, rng: &mut R) -> Result<Self> {
        if cfg.layers == 0 || cfg.hidden == 0 {
            return Err(Error::Config(format!("network needs hidden layers, got {cfg:?}")));
        }
        let mut widths = vec![m.feature_len() + 1];
        widths.extend(std::iter::repeat_n(cfg.hidden, cfg.layers));
        widths.push(m.tangent_len());
        let mlp = Mlp::new(&widths, cfg.activation_for(&m.kind()), true, rng)?;
        Ok(DriftNet { mlp, kind: m.kind() })
    }

    /// Same architecture with different parameters (e.g. EMA weights).
    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        let mut out = self.clone();
        out.mlp.params = params;
        out.mlp.check_params()?;
        Ok(out)
    }

    pub fn params(&self) -> &[f64] {
        &self.mlp.params
    }

    pub fn params_mut(&mut self) -> &mut Vec<f64> {
        &mut self.mlp.params
    }

    fn check_manifold<M: Manifold>(&self, m: &M) -> Result<()> {
        if self.mlp.input_len() != m.feature_len() + 1 || self.mlp.output_len() != m.tangent_len() {
            return Err(Error::ModelState(format!(
                "network built for {} cannot run on {}",
                self.kind.name(),
                m.kind().name()
            )));
        }
        Ok(())
    }

    fn inputs<M: Manifold>(&self, m: &M, xs: &[M::Point], ts: &[f64]) -> Result<Vec<f64>> {
        self.check_manifold(m)?;
        if xs.len() != ts.len() {
            return Err(Error::Usage(format!("{} points but {} times", xs.len(), ts.len())));
        }
        let f = m.feature_len();
        let mut input = vec![0.0; xs.len() * (f + 1)];
        for (i, (x, &t)) in xs.iter().zip(ts).enumerate() {
            let row = &mut input[i * (f + 1)..(i + 1) * (f + 1)];
            m.features(x, &mut row[..f]);
            row[f] = t;
        }
        Ok(input)
    }

    fn project_rows<M: Manifold>(m: &M, xs: &[M::Point], raw: &mut [f64]) {
        let n = m.tangent_len();
        for (x, row) in xs.iter().zip(raw.chunks_exact_mut(n)) {
            let p = m.project(x, row);
            row.copy_from_slice(&p);
        }
    }

    /// Projected outputs at `(x, t)` pairs, row-major.
    pub fn forward_batch<M: Manifold>(&self, m: &M, xs: &[M::Point], ts: &[f64]) -> Result<Vec<f64>> {
        self.mlp.check_params()?;
        let input = self.inputs(m, xs, ts)?;
        let mut out = self.mlp.predict(&input, xs.len())?;
        Self::project_rows(m, xs, &mut out);
        Ok(out)
    }

    pub fn forward<M: Manifold>(&self, m: &M, x: &M::Point, t: f64) -> Result<Vec<f64>> {
        self.forward_batch(m, std::slice::from_ref(x), &[t])
    }

    /// Projected outputs together with the tape needed by [`DriftNet::backward`].
    pub fn forward_recorded<M: Manifold>(
        &self,
        m: &M,
        xs: &[M::Point],
        ts: &[f64],
    ) -> Result<(Vec<f64>, Tape)> {
        self.mlp.check_params()?;
        let input = self.inputs(m, xs, ts)?;
        let (mut out, tape) = self.mlp.forward(&input, xs.len())?;
        Self::project_rows(m, xs, &mut out);
        Ok((out, tape))
    }

    /// Parameter gradient given the adjoint with respect to the projected
    /// outputs; the projection is differentiated through its adjoint.
    pub fn backward<M: Manifold>(&self, m: &M, xs: &[M::Point], tape: &Tape, d_out: &[f64]) -> Result<Vec<f64>> {
        let n = m.tangent_len();
        if tape.batch() != xs.len() || d_out.len() != xs.len() * n {
            return Err(Error::Usage("adjoint does not match the recorded batch".into()));
        }
        let mut d_raw = Vec::with_capacity(d_out.len());
        for (x, row) in xs.iter().zip(d_out.chunks_exact(n)) {
            d_raw.extend(m.project_adjoint(x, row));
        }
        self.mlp.backward(tape, &d_raw)
    }

    /// `Σᵢ wᵢ ‖s(xᵢ, tᵢ) − targetᵢ‖²` under the Riemannian metric, with its
    /// parameter gradient.
    pub fn weighted_sq_loss<M: Manifold>(
        &self,
        m: &M,
        xs: &[M::Point],
        ts: &[f64],
        targets: &[f64],
        weights: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        let n = m.tangent_len();
        let (out, tape) = self.forward_recorded(m, xs, ts)?;
        if targets.len() != out.len() || weights.len() != xs.len() {
            return Err(Error::Usage("targets or weights do not match the batch".into()));
        }
        let mut loss = 0.0;
        let mut d_out = Vec::with_capacity(out.len());
        for (i, x) in xs.iter().enumerate() {
            let r: Vec<f64> = out[i * n..(i + 1) * n]
                .iter()
                .zip(&targets[i * n..(i + 1) * n])
                .map(|(a, b)| a - b)
                .collect();
            loss += weights[i] * m.inner(x, &r, &r);
            let g = m.metric_grad(x, &r);
            d_out.extend(g.iter().map(|v| 2.0 * weights[i] * v));
        }
        let grad = self.backward(m, xs, &tape, &d_out)?;
        Ok((loss, grad))
    }
}

impl<M: Manifold> DriftField<M> for DriftNet {
    fn eval_batch(&self, m: &M, xs: &[M::Point], ts: &[f64]) -> Result<Vec<f64>> {
        self.forward_batch(m, xs, ts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Point, Space};
    use crate::rng::substream;

    fn perturbed(m: &Space, seed: u64) -> DriftNet {
        let mut rng = substream(seed, 0);
        let mut net = DriftNet::new(m, &NetConfig::small(6, 2), &mut rng).unwrap();
        for p in net.params_mut().iter_mut() {
            *p += rng.random_range(-0.5..0.5);
        }
        net
    }

    #[test]
    fn outputs_are_tangent() {
        let s = Space::Sphere(2);
        let net = perturbed(&s, 1);
        let mut rng = substream(2, 0);
        for x in s.sample_uniform(&mut rng, 50).unwrap() {
            let v = net.forward(&s, &x, rng.random()).unwrap();
            assert!(crate::manifold::dot(&v, &x.0).abs() < 1e-9);
        }
        let h = Space::Hyperboloid;
        let net = perturbed(&h, 3);
        let x = h.exp_map(&h.origin(), &[0.0, 0.7, -0.4]).unwrap();
        let v = net.forward(&h, &x, 0.4).unwrap();
        assert!(crate::manifold::lorentz(&v, &x.0).abs() < 1e-9);
    }

    #[test]
    fn fresh_net_is_zero() {
        let s = Space::Sphere(2);
        let net = DriftNet::new(&s, &NetConfig::small(8, 2), &mut substream(0, 0)).unwrap();
        let v = net.forward(&s, &Point::new([0.0, 0.0, 1.0]), 0.5).unwrap();
        assert_eq!(v, vec![0.0; 3]);
    }

    #[test]
    fn projected_loss_gradient_matches_finite_differences() {
        for m in [Space::Sphere(2), Space::Hyperboloid, Space::FlatTorus(2)] {
            let mut net = perturbed(&m, 7);
            let mut rng = substream(8, 0);
            let xs: Vec<Point> = (0..3)
                .map(|_| {
                    let v = m.tangent_gaussian(&m.origin(), &mut rng, 0.8);
                    m.exp_map(&m.origin(), &v).unwrap()
                })
                .collect();
            let ts = [0.1, 0.5, 0.9];
            let mut targets = Vec::new();
            for x in &xs {
                targets.extend(m.tangent_gaussian(x, &mut rng, 1.0));
            }
            let w = [1.0, 0.5, 2.0];
            let (_, g) = net.weighted_sq_loss(&m, &xs, &ts, &targets, &w).unwrap();
            let h = 1e-6;
            for i in 0..net.mlp.n_params() {
                let orig = net.mlp.params[i];
                net.mlp.params[i] = orig + h;
                let lp = net.weighted_sq_loss(&m, &xs, &ts, &targets, &w).unwrap().0;
                net.mlp.params[i] = orig - h;
                let lm = net.weighted_sq_loss(&m, &xs, &ts, &targets, &w).unwrap().0;
                net.mlp.params[i] = orig;
                let fd = (lp - lm) / (2.0 * h);
                let scale = fd.abs().max(g[i].abs()).max(1e-6);
                assert!((fd - g[i]).abs() / scale < 1e-4, "{m:?} param {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn non_finite_params_rejected() {
        let s = Space::Sphere(2);
        let mut net = perturbed(&s, 1);
        net.params_mut()[0] = f64::NAN;
        let err = net.forward(&s, &Point::new([0.0, 0.0, 1.0]), 0.5).unwrap_err();
        assert!(matches!(err, Error::ModelState(_)));
    }
}
