use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

/// Faces smaller than this fraction of the total area are rejected.
pub const MIN_FACE_AREA_FRACTION: f64 = 1e-12;

/// Triangle mesh with per-face geometry and edge adjacency.
///
/// Edge `i` of a face is the edge opposite its vertex `i`, i.e. between
/// vertices `(i+1) % 3` and `(i+2) % 3`.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub normals: Vec<Vec3>,
    pub areas: Vec<f64>,
    pub total_area: f64,
    /// Face across each edge, `None` on the boundary.
    pub neighbors: Vec<[Option<usize>; 3]>,
}

impl TriMesh {
    /// Build and validate a mesh. Open boundaries are allowed; edges shared
    /// by more than two faces and inconsistently oriented neighbours are not.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::Mesh("mesh has no faces".into()));
        }
        let nv = vertices.len();
        for (i, v) in vertices.iter().enumerate() {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::Mesh(format!("vertex {i} has non-finite coordinates")));
            }
        }
        for (f, tri) in faces.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Mesh(format!("face {f} references a missing vertex ({tri:?}, {nv} vertices)")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Mesh(format!("face {f} repeats a vertex: {tri:?}")));
            }
        }
        let mut normals = Vec::with_capacity(faces.len());
        let mut areas = Vec::with_capacity(faces.len());
        for tri in &faces {
            let [a, b, c] = tri.map(|i| vertices[i]);
            let n = cross(sub(b, a), sub(c, a));
            let len = norm3(n);
            areas.push(0.5 * len);
            normals.push(if len > 0.0 { scale(n, 1.0 / len) } else { [0.0; 3] });
        }
        let total_area: f64 = areas.iter().sum();
        let bad: Vec<usize> = areas
            .iter()
            .enumerate()
            .filter(|(_, &a)| !(a > MIN_FACE_AREA_FRACTION * total_area))
            .map(|(i, _)| i)
            .collect();
        if !bad.is_empty() {
            return Err(Error::MeshQuality { faces: bad });
        }

        let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (f, tri) in faces.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (tri[(e + 1) % 3], tri[(e + 2) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push((f, e));
            }
        }
        let mut neighbors = vec![[None; 3]; faces.len()];
        for (&(a, b), users) in &edges {
            match users.as_slice() {
                [_] => {}
                [(f, e), (g, d)] => {
                    let dir = |f: usize, e: usize| faces[f][(e + 1) % 3] == a;
                    if dir(*f, *e) == dir(*g, *d) {
                        return Err(Error::Mesh(format!(
                            "faces {f} and {g} have inconsistent orientation across edge ({a}, {b})"
                        )));
                    }
                    neighbors[*f][*e] = Some(*g);
                    neighbors[*g][*d] = Some(*f);
                }
                _ => {
                    return Err(Error::Mesh(format!(
                        "non-manifold edge ({a}, {b}) shared by {} faces",
                        users.len()
                    )))
                }
            }
        }
        Ok(TriMesh {
            vertices,
            faces,
            normals,
            areas,
            total_area,
            neighbors,
        })
    }

    /// Uniformly rescale and translate so the bounding box starts at the
    /// origin and its longest side has unit length.
    pub fn normalized(self) -> Result<Self> {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        if !(extent > 0.0) {
            return Err(Error::Mesh("mesh has zero extent".into()));
        }
        let vertices = self.vertices.iter().map(|v| scale(sub(*v, lo), 1.0 / extent)).collect();
        TriMesh::new(vertices, self.faces)
    }

    /// Flat triangulated unit square in the `z = 0` plane with `n × n` cells.
    pub fn square_grid(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Mesh("grid needs at least one cell".into()));
        }
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64, 0.0]);
            }
        }
        let mut faces = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            }
        }
        TriMesh::new(vertices, faces)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn corners(&self, face: usize) -> [Vec3; 3] {
        self.faces[face].map(|i| self.vertices[i])
    }

    pub fn is_closed(&self) -> bool {
        self.neighbors.iter().all(|n| n.iter().all(Option::is_some))
    }

    pub fn point(&self, face: usize, bary: [f64; 3]) -> Result<MeshPoint> {
        if face >= self.n_faces() {
            return Err(Error::InvalidPoint(format!("face {face} out of range")));
        }
        let raw = MeshPoint { face, bary, pos: [0.0; 3] };
        raw.validate(self)?;
        Ok(MeshPoint::new(self, face, bary))
    }

    /// Nearest surface point to `p` (brute force over faces).
    pub fn closest_point(&self, p: Vec3) -> MeshPoint {
        let mut best = (f64::INFINITY, 0, [1.0, 0.0, 0.0]);
        for f in 0..self.n_faces() {
            let [a, b, c] = self.corners(f);
            let bary = closest_on_triangle(p, a, b, c);
            let q = add(add(scale(a, bary[0]), scale(b, bary[1])), scale(c, bary[2]));
            let d = norm3(sub(p, q));
            if d < best.0 {
                best = (d, f, bary);
            }
        }
        MeshPoint::new(self, best.1, best.2)
    }

    /// Area-weighted face, then a uniform point inside it.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> MeshPoint {
        let u = rng.random::<f64>() * self.total_area;
        let face = pick_cumulative(&self.areas, u);
        MeshPoint::new(self, face, uniform_bary(rng))
    }
}

/// Barycentric coordinates of the point of triangle `abc` closest to `p`.
fn closest_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> [f64; 3] {
    let (ab, ac, ap) = (sub(b, a), sub(c, a), sub(p, a));
    let (d1, d2) = (dot3(ab, ap), dot3(ac, ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let bp = sub(p, b);
    let (d3, d4) = (dot3(ab, bp), dot3(ac, bp));
    if d3 >= 0.0 && d4 <= d3 {
        return [0.0, 1.0, 0.0];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return [1.0 - v, v, 0.0];
    }
    let cp = sub(p, c);
    let (d5, d6) = (dot3(ab, cp), dot3(ac, cp));
    if d6 >= 0.0 && d5 <= d6 {
        return [0.0, 0.0, 1.0];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return [1.0 - w, 0.0, w];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [0.0, 1.0 - w, w];
    }
    let denom = 1.0 / (va + vb + vc);
    let (v, w) = (vb * denom, vc * denom);
    [1.0 - v - w, v, w]
}

/// First index whose cumulative weight exceeds `u`.
pub(crate) fn pick_cumulative(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

pub(crate) fn uniform_bary<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let (mut r1, mut r2) = (rng.random::<f64>(), rng.random::<f64>());
    if r1 + r2 > 1.0 {
        r1 = 1.0 - r1;
        r2 = 1.0 - r2;
    }
    [1.0 - r1 - r2, r1, r2]
}

/// A point on a face, in barycentric coordinates, with its cached position.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshPoint {
    pub face: usize,
    pub bary: [f64; 3],
    pub pos: [f64; 3],
}

impl MeshPoint {
    /// Clamps tiny negative weights and renormalizes.
    pub fn new(mesh: &TriMesh, face: usize, bary: [f64; 3]) -> Self {
        let mut b = bary.map(|w| w.max(0.0));
        let s: f64 = b.iter().sum();
        if s > 0.0 {
            b = b.map(|w| w / s);
        }
        let [p0, p1, p2] = mesh.corners(face);
        let pos = add(add(scale(p0, b[0]), scale(p1, b[1])), scale(p2, b[2]));
        MeshPoint { face, bary: b, pos }
    }

    pub fn validate(&self, mesh: &TriMesh) -> Result<()> {
        if self.face >= mesh.n_faces() {
            return Err(Error::InvalidPoint(format!("face {} out of range", self.face)));
        }
        let s: f64 = self.bary.iter().sum();
        if self.bary.iter().any(|&w| !(w >= -1e-12)) || (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPoint(format!("barycentric {:?} not on the simplex", self.bary)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn square_grid_geometry() {
        let m = TriMesh::square_grid(4).unwrap();
        assert_eq!(m.n_vertices(), 25);
        assert_eq!(m.n_faces(), 32);
        assert!((m.total_area - 1.0).abs() < 1e-14);
        assert!(!m.is_closed());
        assert!(m.normals.iter().all(|n| (n[2] - 1.0).abs() < 1e-15));
    }

    #[test]
    fn rejects_degenerate_and_flipped_faces() {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(matches!(TriMesh::new(v.clone(), vec![[0, 1, 2], [0, 1, 3]]), Err(Error::MeshQuality { faces }) if faces == vec![0]));
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(TriMesh::new(v.clone(), vec![[0, 1, 2], [0, 2, 3]]).is_ok());
        assert!(TriMesh::new(v, vec![[0, 1, 2], [0, 3, 2]]).is_err());
    }

    #[test]
    fn closest_point_recovers_surface_points() {
        let m = TriMesh::square_grid(5).unwrap();
        let mut rng = substream(4, 0);
        for _ in 0..100 {
            let p = m.sample_uniform(&mut rng);
            let q = m.closest_point([p.pos[0], p.pos[1], 0.3]);
            assert!((q.pos[0] - p.pos[0]).abs() < 1e-12 && (q.pos[1] - p.pos[1]).abs() < 1e-12);
        }
        let q = m.closest_point([-1.0, 0.5, 0.0]);
        assert!(q.pos[0].abs() < 1e-12 && (q.pos[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn uniform_samples_lie_on_faces() {
        let m = TriMesh::square_grid(3).unwrap();
        let mut rng = substream(0, 0);
        for _ in 0..200 {
            let p = m.sample_uniform(&mut rng);
            p.validate(&m).unwrap();
            assert!(p.pos[2].abs() < 1e-15);
        }
    }
}
