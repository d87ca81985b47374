//! Target densities built from thresholded eigenfunctions.

use rand::Rng;

use super::basis::SpectralBasis;
use super::trimesh::{pick_cumulative, uniform_bary, MeshPoint, TriMesh};
use crate::error::{Error, Result};

/// Piecewise-constant density: each face carries the mean of
/// `max(φ_k, 0)` over its vertices.
#[derive(Debug, Clone)]
pub struct FaceDensity {
    /// Probability of each face; sums to 1.
    pub face_prob: Vec<f64>,
    /// Density value on each face (probability / area).
    pub density: Vec<f64>,
}

impl FaceDensity {
    pub fn from_vertex_values(mesh: &TriMesh, values: &[f64]) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::Mesh("vertex value count does not match the mesh".into()));
        }
        let mass: Vec<f64> = mesh
            .faces
            .iter()
            .zip(&mesh.areas)
            .map(|(tri, a)| a * tri.iter().map(|&v| values[v].max(0.0)).sum::<f64>() / 3.0)
            .collect();
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Data("eigenfunction is nowhere positive".into()));
        }
        let face_prob: Vec<f64> = mass.iter().map(|m| m / total).collect();
        let density = face_prob.iter().zip(&mesh.areas).map(|(p, a)| p / a).collect();
        Ok(FaceDensity { face_prob, density })
    }

    pub fn sample<R: Rng + ?Sized>(&self, mesh: &TriMesh, rng: &mut R) -> MeshPoint {
        let face = pick_cumulative(&self.face_prob, rng.random::<f64>());
        MeshPoint::new(mesh, face, uniform_bary(rng))
    }

    pub fn log_density(&self, x: &MeshPoint) -> f64 {
        self.density[x.face].ln()
    }

    /// `−∫ p log p` over the surface.
    pub fn entropy(&self) -> f64 {
        self.face_prob
            .iter()
            .zip(&self.density)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, d)| -p * d.ln())
            .sum()
    }
}

/// Density ∝ `max(φ_k, 0)` for the `k`-th nonconstant eigenfunction
/// (1-based).
pub fn eigenfunction_density(mesh: &TriMesh, basis: &SpectralBasis, k: usize) -> Result<FaceDensity> {
    if k == 0 || k > basis.k() {
        return Err(Error::Config(format!(
            "eigenfunction index {k} outside 1..={}",
            basis.k()
        )));
    }
    if basis.n_vertices() != mesh.n_vertices() {
        return Err(Error::Mesh("basis and mesh disagree on vertex count".into()));
    }
    FaceDensity::from_vertex_values(mesh, &basis.eigenfunction(k - 1))
}
