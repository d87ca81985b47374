//! Truncated Laplace–Beltrami eigenbasis and spectral distances.
//!
//! Cache file layout (`mesh.spec`): the 4-byte magic `SPB1`, then
//! little-endian `u64` K, `u64` vertex count, `u8` weight kind (0 diffusion,
//! 1 biharmonic), `f64` diffusion time (0 for biharmonic), followed by the K
//! eigenvalues and the eigenfunctions stored vertex-major (`n × K`).

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eigen::{smallest_eigenpairs, EigenMethod};
use super::laplacian::build_laplacian;
use super::trimesh::{cross, norm3, scale, sub, MeshPoint, TriMesh, Vec3};
use crate::error::{Error, Result};

pub const BASIS_MAGIC: &[u8; 4] = b"SPB1";

/// Eigenvalues below this are treated as the constant mode and dropped.
const NULL_EIGENVALUE: f64 = 1e-8;

/// Below this norm of `∇d_w` the spectral direction is undefined.
pub const MIN_GRAD_NORM: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// `w(λ) = exp(−2λt)`; `t` defaults to `1/λ_K`.
    Diffusion {
        #[serde(default)]
        t: Option<f64>,
    },
    /// `w(λ) = λ⁻²`.
    Biharmonic,
}

impl Default for WeightKind {
    fn default() -> Self {
        WeightKind::Diffusion { t: None }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    /// Ascending nonzero eigenvalues λ₁..λ_K.
    pub eigenvalues: Vec<f64>,
    /// Vertex-major: `phi[v * K + i]` is φᵢ at vertex `v`.
    pub phi: Vec<f64>,
    pub weight_kind: WeightKind,
    /// Resolved diffusion time (0 for biharmonic).
    pub t_diff: f64,
    pub weights: Vec<f64>,
    /// Per face, the gradients of the three hat functions.
    hat_grads: Vec<[Vec3; 3]>,
}

fn hat_gradients(mesh: &TriMesh) -> Vec<[Vec3; 3]> {
    (0..mesh.n_faces())
        .map(|f| {
            let p = mesh.corners(f);
            let n = mesh.normals[f];
            let s = 1.0 / (2.0 * mesh.areas[f]);
            [0, 1, 2].map(|k| scale(cross(n, sub(p[(k + 2) % 3], p[(k + 1) % 3])), s))
        })
        .collect()
}

impl SpectralBasis {
    /// The `k` smallest nonzero eigenpairs of the cotangent Laplacian.
    pub fn compute(mesh: &TriMesh, k: usize, weight_kind: WeightKind, method: EigenMethod) -> Result<Self> {
        let n = mesh.n_vertices();
        if k == 0 || k >= n {
            return Err(Error::Config(format!("basis size {k} must be in 1..{n}")));
        }
        let lap = build_laplacian(mesh)?;
        // One extra pair for the constant mode.
        let pairs = smallest_eigenpairs(&lap, k + 1, method)?;
        let keep: Vec<usize> = (0..=k).filter(|&j| pairs.values[j] > NULL_EIGENVALUE).collect();
        if keep.len() < k {
            return Err(Error::Mesh(format!(
                "Laplacian has {} null eigenvalues; the mesh is disconnected",
                k + 1 - keep.len()
            )));
        }
        let eigenvalues: Vec<f64> = keep.iter().take(k).map(|&j| pairs.values[j]).collect();
        let mut phi = vec![0.0; n * k];
        for (i, &j) in keep.iter().take(k).enumerate() {
            for v in 0..n {
                phi[v * k + i] = pairs.vectors[j][v];
            }
        }
        Self::from_parts(mesh, eigenvalues, phi, weight_kind)
    }

    pub fn from_parts(mesh: &TriMesh, eigenvalues: Vec<f64>, phi: Vec<f64>, weight_kind: WeightKind) -> Result<Self> {
        let k = eigenvalues.len();
        if k == 0 || phi.len() != k * mesh.n_vertices() {
            return Err(Error::Mesh(format!(
                "basis with {k} eigenvalues and {} values does not fit a mesh with {} vertices",
                phi.len(),
                mesh.n_vertices()
            )));
        }
        if eigenvalues.iter().any(|&l| !(l > 0.0)) || eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Mesh("eigenvalues must be positive and ascending".into()));
        }
        let t_diff = match weight_kind {
            WeightKind::Diffusion { t: Some(t) } if t > 0.0 => t,
            WeightKind::Diffusion { t: Some(t) } => {
                return Err(Error::Config(format!("diffusion time must be positive, got {t}")))
            }
            WeightKind::Diffusion { t: None } => 1.0 / eigenvalues[k - 1],
            WeightKind::Biharmonic => 0.0,
        };
        let weights = eigenvalues
            .iter()
            .map(|&l| match weight_kind {
                WeightKind::Diffusion { .. } => (-2.0 * l * t_diff).exp(),
                WeightKind::Biharmonic => l.powi(-2),
            })
            .collect();
        Ok(SpectralBasis {
            eigenvalues,
            phi,
            weight_kind,
            t_diff,
            weights,
            hat_grads: hat_gradients(mesh),
        })
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.phi.len() / self.k()
    }

    /// φᵢ at vertex `v`.
    pub fn vertex_values(&self, v: usize) -> &[f64] {
        let k = self.k();
        &self.phi[v * k..(v + 1) * k]
    }

    /// Eigenfunction `i` (0-based) at every vertex.
    pub fn eigenfunction(&self, i: usize) -> Vec<f64> {
        (0..self.n_vertices()).map(|v| self.vertex_values(v)[i]).collect()
    }

    /// All φᵢ at `x` by barycentric interpolation.
    pub fn eval(&self, mesh: &TriMesh, x: &MeshPoint) -> Vec<f64> {
        let mut out = vec![0.0; self.k()];
        for (c, &v) in mesh.faces[x.face].iter().enumerate() {
            let b = x.bary[c];
            for (o, p) in out.iter_mut().zip(self.vertex_values(v)) {
                *o += b * p;
            }
        }
        out
    }

    fn dist_sq_values(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * (x - y).powi(2)).sum()
    }

    /// `d_w(x, y)² = Σ w(λᵢ)(φᵢ(x) − φᵢ(y))²`.
    pub fn dist_sq(&self, mesh: &TriMesh, x: &MeshPoint, y: &MeshPoint) -> f64 {
        self.dist_sq_values(&self.eval(mesh, x), &self.eval(mesh, y))
    }

    /// Gradient of `d_w(·, z)²` at `x`, in the face plane of `x`.
    pub fn grad_dist_sq(&self, mesh: &TriMesh, x: &MeshPoint, z: &MeshPoint) -> (f64, Vec3) {
        let (fx, fz) = (self.eval(mesh, x), self.eval(mesh, z));
        let c: Vec<f64> = self
            .weights
            .iter()
            .zip(fx.iter().zip(&fz))
            .map(|(w, (a, b))| 2.0 * w * (a - b))
            .collect();
        let mut g = [0.0; 3];
        for (corner, &v) in mesh.faces[x.face].iter().enumerate() {
            let s: f64 = c.iter().zip(self.vertex_values(v)).map(|(a, b)| a * b).sum();
            let h = self.hat_grads[x.face][corner];
            for k in 0..3 {
                g[k] += s * h[k];
            }
        }
        (self.dist_sq_values(&fx, &fz), g)
    }

    /// Spectral descent direction `−½ ∇d_w² / ‖∇d_w‖²` from `x` toward `z`.
    ///
    /// On flat space with exact eigenfunctions this is `z − x`.
    pub fn log(&self, mesh: &TriMesh, x: &MeshPoint, z: &MeshPoint) -> Result<Vec<f64>> {
        let (d2, g) = self.grad_dist_sq(mesh, x, z);
        let gn = norm3(g);
        // ∇d_w = ∇d_w² / (2 d_w)
        let grad_d = if d2 > 0.0 { gn / (2.0 * d2.sqrt()) } else { 0.0 };
        if !(grad_d > MIN_GRAD_NORM) {
            return Err(Error::DegenerateDirection(format!(
                "spectral gradient norm {grad_d:e} at face {} toward face {}",
                x.face, z.face
            )));
        }
        let s = -2.0 * d2 / (gn * gn);
        Ok(g.iter().map(|c| s * c).collect())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BASIS_MAGIC)?;
        w.write_all(&(self.k() as u64).to_le_bytes())?;
        w.write_all(&(self.n_vertices() as u64).to_le_bytes())?;
        let (tag, t) = match self.weight_kind {
            WeightKind::Diffusion { .. } => (0u8, self.t_diff),
            WeightKind::Biharmonic => (1u8, 0.0),
        };
        w.write_all(&[tag])?;
        w.write_all(&t.to_le_bytes())?;
        for v in self.eigenvalues.iter().chain(&self.phi) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a cached basis and attach it to `mesh`.
    pub fn read_from<R: Read>(mut r: R, mesh: &TriMesh) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("basis file too short".into()))?;
        if &magic != BASIS_MAGIC {
            return Err(Error::Format(format!("bad basis magic {magic:?}")));
        }
        let mut u = [0u8; 8];
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut u)
                .map_err(|_| Error::Format("basis header truncated".into()))?;
            Ok(u64::from_le_bytes(u))
        };
        let k = read_u64(&mut r)? as usize;
        let n = read_u64(&mut r)? as usize;
        if n != mesh.n_vertices() {
            return Err(Error::Mesh(format!(
                "basis was computed for {n} vertices, mesh has {}",
                mesh.n_vertices()
            )));
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)
            .map_err(|_| Error::Format("basis header truncated".into()))?;
        let mut tb = [0u8; 8];
        r.read_exact(&mut tb)
            .map_err(|_| Error::Format("basis header truncated".into()))?;
        let t = f64::from_le_bytes(tb);
        let kind = match tag[0] {
            0 => WeightKind::Diffusion { t: Some(t) },
            1 => WeightKind::Biharmonic,
            other => return Err(Error::Format(format!("unknown weight kind {other}"))),
        };
        let total = k
            .checked_add(k.checked_mul(n).ok_or_else(|| Error::Format("basis size overflows".into()))?)
            .ok_or_else(|| Error::Format("basis size overflows".into()))?;
        let mut buf = vec![0u8; total * 8];
        r.read_exact(&mut buf)
            .map_err(|_| Error::Format("basis data truncated".into()))?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes after basis data", rest.len())));
        }
        let vals: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let (ev, phi) = vals.split_at(k);
        Self::from_parts(mesh, ev.to_vec(), phi.to_vec(), kind)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path, mesh: &TriMesh) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f), mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_laplacian;
    use crate::rng::substream;
    use std::f64::consts::PI;

    #[test]
    fn square_spectrum_matches_neumann_rectangle() {
        let mesh = TriMesh::square_grid(32).unwrap();
        let b = SpectralBasis::compute(&mesh, 12, WeightKind::default(), EigenMethod::Dense).unwrap();
        // π²(m² + n²) for (m, n) ≠ (0, 0), sorted with multiplicity.
        let mut want: Vec<f64> = (0..5)
            .flat_map(|m| (0..5).map(move |n| (m, n)))
            .filter(|&(m, n)| m + n > 0)
            .map(|(m, n)| PI * PI * (m * m + n * n) as f64)
            .collect();
        want.sort_by(f64::total_cmp);
        for (got, want) in b.eigenvalues.iter().zip(&want) {
            assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
        }
        let lap = build_laplacian(&mesh).unwrap();
        for i in 0..b.k() {
            for j in 0..b.k() {
                let (fi, fj) = (b.eigenfunction(i), b.eigenfunction(j));
                let ip: f64 = (0..mesh.n_vertices()).map(|v| fi[v] * lap.mass[v] * fj[v]).sum();
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn distance_is_a_metric_on_samples() {
        let mesh = TriMesh::square_grid(8).unwrap();
        let b = SpectralBasis::compute(&mesh, 30, WeightKind::Biharmonic, EigenMethod::Dense).unwrap();
        let mut rng = substream(3, 0);
        for _ in 0..1000 {
            let (x, y, z) = (mesh.sample_uniform(&mut rng), mesh.sample_uniform(&mut rng), mesh.sample_uniform(&mut rng));
            assert_eq!(b.dist_sq(&mesh, &x, &x), 0.0);
            assert_eq!(b.dist_sq(&mesh, &x, &y), b.dist_sq(&mesh, &y, &x));
            let d = |p: &MeshPoint, q: &MeshPoint| b.dist_sq(&mesh, p, q).sqrt();
            assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
        }
    }

    #[test]
    fn log_at_target_is_degenerate() {
        let mesh = TriMesh::square_grid(6).unwrap();
        let b = SpectralBasis::compute(&mesh, 10, WeightKind::default(), EigenMethod::Dense).unwrap();
        let x = mesh.point(5, [0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(b.log(&mesh, &x, &x), Err(Error::DegenerateDirection(_))));
    }

    #[test]
    fn cache_round_trip() {
        let mesh = TriMesh::square_grid(5).unwrap();
        let b = SpectralBasis::compute(&mesh, 7, WeightKind::Biharmonic, EigenMethod::Dense).unwrap();
        let mut buf = Vec::new();
        b.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"SPB1");
        let back = SpectralBasis::read_from(buf.as_slice(), &mesh).unwrap();
        assert_eq!(back.eigenvalues, b.eigenvalues);
        assert_eq!(back.phi, b.phi);
        assert!(SpectralBasis::read_from(&buf[..buf.len() - 1], &mesh).is_err());
        let other = TriMesh::square_grid(4).unwrap();
        assert!(SpectralBasis::read_from(buf.as_slice(), &other).is_err());
    }
}
