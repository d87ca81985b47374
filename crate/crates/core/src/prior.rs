//! Prior distributions Γ for the state at t = 0.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point, Space};

/// Serializable prior description used in configs and checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    Uniform,
    /// `mean` defaults to the manifold's base point.
    WrappedGaussian {
        #[serde(default)]
        mean: Option<Vec<f64>>,
        scale: f64,
    },
}

impl PriorSpec {
    /// Uniform on compact spaces; wrapped Gaussian at the base point with unit
    /// scale on ℍ² and ℝᵈ.
    pub fn default_for(space: &Space) -> Self {
        match space {
            Space::Sphere(_) | Space::FlatTorus(_) => PriorSpec::Uniform,
            Space::Hyperboloid | Space::Euclidean(_) => PriorSpec::WrappedGaussian { mean: None, scale: 1.0 },
        }
    }

    pub fn build(&self, space: &Space) -> Result<Prior<Point>> {
        match self {
            PriorSpec::Uniform => {
                if space.volume().is_none() {
                    return Err(Error::Unsupported(format!(
                        "no uniform prior on non-compact {}",
                        space.kind().name()
                    )));
                }
                Ok(Prior::Uniform)
            }
            PriorSpec::WrappedGaussian { mean, scale } => {
                let mean = match mean {
                    Some(c) => Point(space.normalize(c.clone())),
                    None => space.origin(),
                };
                space.check_point(&mean)?;
                if !(*scale > 0.0) {
                    return Err(Error::Config(format!("prior scale must be positive, got {scale}")));
                }
                Ok(Prior::WrappedGaussian { mean, scale: *scale })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prior<P> {
    /// Normalized Riemannian volume; compact manifolds only.
    Uniform,
    WrappedGaussian { mean: P, scale: f64 },
}

impl<P: Clone + Send + Sync + std::fmt::Debug> Prior<P> {
    pub fn sample<M, R>(&self, m: &M, rng: &mut R, n: usize) -> Result<Vec<P>>
    where
        M: Manifold<Point = P>,
        R: Rng + ?Sized,
    {
        match self {
            Prior::Uniform => m.sample_uniform(rng, n),
            Prior::WrappedGaussian { mean, scale } => {
                (0..n).map(|_| m.wrapped_gaussian_sample(mean, *scale, rng)).collect()
            }
        }
    }

    pub fn log_density<M: Manifold<Point = P>>(&self, m: &M, x: &P) -> Result<f64> {
        match self {
            Prior::Uniform => m.volume().map(|v| -v.ln()).ok_or_else(|| {
                Error::Unsupported(format!("no uniform prior on non-compact {}", m.kind().name()))
            }),
            Prior::WrappedGaussian { mean, scale } => m.wrapped_gaussian_log_density(mean, *scale, x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Prior::Uniform => "uniform",
            Prior::WrappedGaussian { .. } => "wrapped_gaussian",
        }
    }
}
