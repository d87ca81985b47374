//! Geometry kernel.
//!
//! Every model state lives on a [`Manifold`]. Tangent vectors are plain
//! component slices expressed in the ambient chart of their base point
//! (sphere and hyperboloid: embedding coordinates; torus: angle coordinates;
//! mesh: 3D vectors lying in the face plane).

mod space;
mod wrapped;

pub use space::{lorentz, sphere_area, wrap_angle, wrap_diff, Point, Space, ANTIPODAL_TOL};
pub use wrapped::{log_sum_exp, wrapped_normal_log_pdf, WRAPS};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tag naming a manifold family, used in configs and checkpoint headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldKind {
    Euclidean { dim: usize },
    Sphere { dim: usize },
    FlatTorus { dim: usize },
    Hyperboloid,
    Mesh { path: String },
}

impl ManifoldKind {
    pub fn dim(&self) -> usize {
        match self {
            ManifoldKind::Euclidean { dim }
            | ManifoldKind::Sphere { dim }
            | ManifoldKind::FlatTorus { dim } => *dim,
            ManifoldKind::Hyperboloid | ManifoldKind::Mesh { .. } => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ManifoldKind::Euclidean { .. } => "euclidean",
            ManifoldKind::Sphere { .. } => "sphere",
            ManifoldKind::FlatTorus { .. } => "flat_torus",
            ManifoldKind::Hyperboloid => "hyperboloid",
            ManifoldKind::Mesh { .. } => "mesh",
        }
    }
}

/// Operations shared by every state space.
///
/// All methods are pure; randomness is always drawn from a caller-provided
/// stream.
pub trait Manifold: Send + Sync {
    type Point: Clone + Send + Sync + std::fmt::Debug;

    fn kind(&self) -> ManifoldKind;

    /// Intrinsic dimension.
    fn dim(&self) -> usize;

    /// Number of components of a tangent vector.
    fn tangent_len(&self) -> usize;

    /// Length of the network feature vector produced by [`Manifold::features`].
    fn feature_len(&self) -> usize;

    fn features(&self, x: &Self::Point, out: &mut [f64]);

    /// Coordinates used for reporting (ambient coordinates, angles, or the 3D
    /// position of a mesh point).
    fn coords<'a>(&self, x: &'a Self::Point) -> &'a [f64];

    fn check_point(&self, x: &Self::Point) -> Result<()>;

    fn exp_map(&self, x: &Self::Point, v: &[f64]) -> Result<Self::Point>;

    fn log_map(&self, x: &Self::Point, y: &Self::Point) -> Result<Vec<f64>>;

    /// Geodesic distance (mesh: straight-line distance between positions).
    fn dist(&self, x: &Self::Point, y: &Self::Point) -> f64;

    /// Orthogonal projection of an ambient vector onto the tangent space at `x`.
    fn project(&self, x: &Self::Point, w: &[f64]) -> Vec<f64>;

    /// Euclidean adjoint of [`Manifold::project`], used when back-propagating
    /// through a projected network output.
    fn project_adjoint(&self, x: &Self::Point, g: &[f64]) -> Vec<f64> {
        self.project(x, g)
    }

    /// Riemannian inner product of two tangent vectors at `x`.
    fn inner(&self, _x: &Self::Point, u: &[f64], v: &[f64]) -> f64 {
        dot(u, v)
    }

    /// Gradient of `½‖r‖²` with respect to the components of `r`.
    fn metric_grad(&self, _x: &Self::Point, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }

    /// Orthonormal basis of the tangent space at `x`.
    fn tangent_basis(&self, x: &Self::Point) -> Vec<Vec<f64>>;

    /// Isotropic Gaussian in the tangent space with standard deviation `scale`.
    fn tangent_gaussian<R: Rng + ?Sized>(&self, x: &Self::Point, rng: &mut R, scale: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.tangent_len()];
        for e in self.tangent_basis(x) {
            let g: f64 = rng.sample(rand_distr::StandardNormal);
            for (o, ei) in out.iter_mut().zip(&e) {
                *o += scale * g * ei;
            }
        }
        out
    }

    /// Step along an ambient vector and return to the manifold. Used by the ODE
    /// integrator; the default is the exponential map.
    fn retract(&self, x: &Self::Point, v: &[f64]) -> Result<Self::Point> {
        self.exp_map(x, v)
    }

    /// Draw `n` points from the uniform (normalized volume) distribution.
    fn sample_uniform<R: Rng + ?Sized>(&self, _rng: &mut R, _n: usize) -> Result<Vec<Self::Point>> {
        Err(Error::Unsupported(format!(
            "no uniform prior on non-compact {}",
            self.kind().name()
        )))
    }

    /// One draw of `exp_μ(ξ)` with `ξ` an isotropic tangent Gaussian of
    /// standard deviation `scale` (on the torus: coordinate-wise wrapping).
    fn wrapped_gaussian_sample<R: Rng + ?Sized>(
        &self,
        mean: &Self::Point,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self::Point> {
        let v = self.tangent_gaussian(mean, rng, scale);
        self.exp_map(mean, &v)
    }

    /// Log density of [`Manifold::wrapped_gaussian_sample`] with respect to the
    /// Riemannian volume.
    fn wrapped_gaussian_log_density(&self, _mean: &Self::Point, _scale: f64, _x: &Self::Point) -> Result<f64> {
        Err(Error::Unsupported(format!(
            "wrapped Gaussian density on {}",
            self.kind().name()
        )))
    }

    /// Total volume, when finite.
    fn volume(&self) -> Option<f64> {
        None
    }

    /// Spectral-distance descent direction toward `z` (only meshes carry a
    /// spectral basis).
    fn spectral_log(&self, _x: &Self::Point, _z: &Self::Point) -> Result<Vec<f64>> {
        Err(Error::Unsupported(format!(
            "spectral bridge requires a mesh with a spectral basis, got {}",
            self.kind().name()
        )))
    }

    fn is_euclidean(&self) -> bool {
        false
    }
}

pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

pub(crate) fn check_finite(what: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{what}: {v:?}")))
    }
}
