//! Synthetic targets with known densities.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::manifold::{wrapped_normal_log_pdf, Manifold, Point, Space};
use crate::mesh::{
    eigenfunction_density, loop_subdivide, EigenMethod, FaceDensity, MeshPoint, SpectralBasis, TriMesh, WeightKind,
};
use crate::rng::substream;

/// Wrapped Gaussian on 𝕋ⁿ around `mean` (radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WrappedGaussianSpec {
    pub mean: Vec<f64>,
    #[serde(default = "d_scale")]
    pub scale: f64,
}

fn d_scale() -> f64 {
    0.2
}

impl WrappedGaussianSpec {
    /// Mean at π in every coordinate.
    pub fn centered(dim: usize, scale: f64) -> Self {
        WrappedGaussianSpec {
            mean: vec![PI; dim],
            scale,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_density(&self, x: &Point) -> f64 {
        x.coords()
            .iter()
            .zip(&self.mean)
            .map(|(a, m)| wrapped_normal_log_pdf(*a, *m, self.scale))
            .sum()
    }

    /// Differential entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.dim() as f64 * wrapped_normal_entropy(self.scale)
    }
}

/// Entropy of a wrapped normal on the circle by midpoint quadrature.
pub fn wrapped_normal_entropy(scale: f64) -> f64 {
    let n = 8192;
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|i| {
            let lp = wrapped_normal_log_pdf((i as f64 + 0.5) * h, PI, scale);
            -lp.exp() * lp * h
        })
        .sum()
}

pub fn gen_wrapped_gaussian(spec: &WrappedGaussianSpec, n: usize, seed: u64) -> Result<Dataset<Point>> {
    if !(spec.scale > 0.0) || spec.mean.is_empty() {
        return Err(Error::Config("wrapped Gaussian needs a positive scale and a mean".into()));
    }
    let space = Space::FlatTorus(spec.dim());
    let mean = Point::new(spec.mean.clone());
    space.check_point(&mean)?;
    let mut rng = substream(seed, 0);
    let points = (0..n)
        .map(|_| space.wrapped_gaussian_sample(&mean, spec.scale, &mut rng))
        .collect::<Result<_>>()?;
    Ok(Dataset::new(format!("wrapped-gaussian-t{}", spec.dim()), space.kind(), points))
}

/// One von Mises–Fisher component on S².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmfComponent {
    pub mean: [f64; 3],
    pub kappa: f64,
    #[serde(default = "d_weight")]
    pub weight: f64,
}

fn d_weight() -> f64 {
    1.0
}

impl VmfComponent {
    fn unit_mean(&self) -> Result<[f64; 3]> {
        let n = self.mean.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(n > 0.0) || !(self.kappa > 0.0) || !(self.weight > 0.0) {
            return Err(Error::Config("vMF needs a nonzero mean and positive kappa and weight".into()));
        }
        Ok(self.mean.map(|c| c / n))
    }
}

/// `log(κ / (4π sinh κ))`, stable for large κ.
fn vmf_log_norm(kappa: f64) -> f64 {
    kappa.ln() - (2.0 * PI).ln() - kappa - (-(-2.0 * kappa).exp()).ln_1p()
}

pub fn vmf_log_density(c: &VmfComponent, x: &Point) -> Result<f64> {
    let mu = c.unit_mean()?;
    let d: f64 = mu.iter().zip(x.coords()).map(|(a, b)| a * b).sum();
    Ok(vmf_log_norm(c.kappa) + c.kappa * d)
}

/// Entropy of a vMF on S² in nats.
pub fn vmf_entropy(kappa: f64) -> f64 {
    let mean_cos = 1.0 / kappa.tanh() - 1.0 / kappa;
    -vmf_log_norm(kappa) - kappa * mean_cos
}

fn vmf_draw<R: Rng + ?Sized>(mu: [f64; 3], kappa: f64, rng: &mut R) -> Point {
    // inverse CDF of the cosine to the mean (exact on S²)
    let u: f64 = rng.random();
    let w = (1.0 + (u + (1.0 - u) * (-2.0 * kappa).exp()).ln() / kappa).clamp(-1.0, 1.0);
    let g: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
    let gd: f64 = g.iter().zip(&mu).map(|(a, b)| a * b).sum();
    let mut v = [g[0] - gd * mu[0], g[1] - gd * mu[1], g[2] - gd * mu[2]];
    let vn = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    v = v.map(|c| c / vn);
    let s = (1.0 - w * w).max(0.0).sqrt();
    Point(Space::Sphere(2).normalize((0..3).map(|i| w * mu[i] + s * v[i]).collect()))
}

pub fn gen_vmf(c: &VmfComponent, n: usize, seed: u64) -> Result<Dataset<Point>> {
    gen_vmf_mixture(std::slice::from_ref(c), n, seed)
}

/// Draws from a vMF mixture on S² (weights normalized).
pub fn gen_vmf_mixture(comps: &[VmfComponent], n: usize, seed: u64) -> Result<Dataset<Point>> {
    if comps.is_empty() {
        return Err(Error::Config("vMF mixture needs at least one component".into()));
    }
    let mus = comps.iter().map(VmfComponent::unit_mean).collect::<Result<Vec<_>>>()?;
    let total: f64 = comps.iter().map(|c| c.weight).sum();
    let mut rng = substream(seed, 0);
    let points = (0..n)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            let mut j = 0;
            while j + 1 < comps.len() && u >= comps[j].weight {
                u -= comps[j].weight;
                j += 1;
            }
            vmf_draw(mus[j], comps[j].kappa, &mut rng)
        })
        .collect();
    let name = if comps.len() == 1 { "vmf" } else { "vmf-mixture" };
    Ok(Dataset::new(name, Space::Sphere(2).kind(), points))
}

/// Log density of a vMF mixture on S².
pub fn vmf_mixture_log_density(comps: &[VmfComponent], x: &Point) -> Result<f64> {
    let total: f64 = comps.iter().map(|c| c.weight).sum();
    let terms = comps
        .iter()
        .map(|c| Ok((c.weight / total).ln() + vmf_log_density(c, x)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::manifold::log_sum_exp(&terms))
}

/// Density ∝ `max(φ_k, 0)` computed on a Loop-subdivided copy of a base
/// mesh; samples are projected back onto the base mesh.
#[derive(Debug, Clone)]
pub struct MeshTarget {
    pub upsampled: TriMesh,
    pub density: FaceDensity,
    pub k: usize,
}

impl MeshTarget {
    pub fn new(base: &TriMesh, k: usize, subdivisions: usize, method: EigenMethod) -> Result<Self> {
        let mut up = base.clone();
        for _ in 0..subdivisions {
            up = loop_subdivide(&up)?;
        }
        let basis = SpectralBasis::compute(&up, k, WeightKind::default(), method)?;
        let density = eigenfunction_density(&up, &basis, k)?;
        Ok(MeshTarget {
            upsampled: up,
            density,
            k,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, base: &TriMesh, n: usize, rng: &mut R) -> Vec<MeshPoint> {
        (0..n)
            .map(|_| base.closest_point(self.density.sample(&self.upsampled, rng).pos))
            .collect()
    }

    /// Target log density at a surface position (looked up on the
    /// upsampled mesh).
    pub fn log_density(&self, pos: [f64; 3]) -> f64 {
        self.density.log_density(&self.upsampled.closest_point(pos))
    }

    pub fn entropy(&self) -> f64 {
        self.density.entropy()
    }
}
