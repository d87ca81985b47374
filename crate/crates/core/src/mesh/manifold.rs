use std::sync::Arc;

use rand::Rng;

use super::basis::SpectralBasis;
use super::step::{mesh_step, project_to_face};
use super::trimesh::{cross, norm3, scale, sub, MeshPoint, TriMesh};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, ManifoldKind};

/// A triangle mesh as a state space. Tangent vectors are 3D vectors in the
/// face plane of their base point; the exponential map walks straight lines
/// by edge unfolding and stops at open boundaries.
#[derive(Debug, Clone)]
pub struct MeshManifold {
    pub mesh: Arc<TriMesh>,
    pub basis: Option<Arc<SpectralBasis>>,
    /// Mesh file the manifold was loaded from, recorded in checkpoints.
    pub source: String,
}

impl MeshManifold {
    pub fn new(mesh: TriMesh, source: impl Into<String>) -> Self {
        MeshManifold {
            mesh: Arc::new(mesh),
            basis: None,
            source: source.into(),
        }
    }

    pub fn with_basis(mut self, basis: SpectralBasis) -> Result<Self> {
        if basis.n_vertices() != self.mesh.n_vertices() {
            return Err(Error::Mesh("basis and mesh disagree on vertex count".into()));
        }
        self.basis = Some(Arc::new(basis));
        Ok(self)
    }

    pub fn basis(&self) -> Result<&SpectralBasis> {
        self.basis
            .as_deref()
            .ok_or_else(|| Error::Unsupported("mesh has no spectral basis".into()))
    }
}

impl Manifold for MeshManifold {
    type Point = MeshPoint;

    fn kind(&self) -> ManifoldKind {
        ManifoldKind::Mesh {
            path: self.source.clone(),
        }
    }

    fn dim(&self) -> usize {
        2
    }

    fn tangent_len(&self) -> usize {
        3
    }

    fn feature_len(&self) -> usize {
        3
    }

    fn features(&self, x: &MeshPoint, out: &mut [f64]) {
        out.copy_from_slice(&x.pos);
    }

    fn coords<'a>(&self, x: &'a MeshPoint) -> &'a [f64] {
        &x.pos
    }

    fn check_point(&self, x: &MeshPoint) -> Result<()> {
        x.validate(&self.mesh)
    }

    fn exp_map(&self, x: &MeshPoint, v: &[f64]) -> Result<MeshPoint> {
        Ok(mesh_step(&self.mesh, x, v)?.point)
    }

    fn log_map(&self, _x: &MeshPoint, _y: &MeshPoint) -> Result<Vec<f64>> {
        Err(Error::Unsupported(
            "meshes have no closed-form logarithm map; use the spectral bridge".into(),
        ))
    }

    fn dist(&self, x: &MeshPoint, y: &MeshPoint) -> f64 {
        norm3(sub(x.pos, y.pos))
    }

    fn project(&self, x: &MeshPoint, w: &[f64]) -> Vec<f64> {
        project_to_face(&self.mesh, x.face, w).to_vec()
    }

    fn tangent_basis(&self, x: &MeshPoint) -> Vec<Vec<f64>> {
        let [a, b, _] = self.mesh.corners(x.face);
        let e = sub(b, a);
        let e1 = scale(e, 1.0 / norm3(e));
        let e2 = cross(self.mesh.normals[x.face], e1);
        vec![e1.to_vec(), e2.to_vec()]
    }

    fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<MeshPoint>> {
        Ok((0..n).map(|_| self.mesh.sample_uniform(rng)).collect())
    }

    fn volume(&self) -> Option<f64> {
        Some(self.mesh.total_area)
    }

    fn spectral_log(&self, x: &MeshPoint, z: &MeshPoint) -> Result<Vec<f64>> {
        self.basis()?.log(&self.mesh, x, z)
    }
}
