use std::collections::BTreeMap;

use super::trimesh::{cross, dot3, norm3, sub, TriMesh};
use crate::error::Result;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    fn from_rows(rows: Vec<BTreeMap<usize, f64>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in rows {
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(i) {
                row[c] = v;
            }
        }
        d
    }
}

/// Cotangent stiffness `S` (positive semi-definite, zero row sums) and lumped
/// mass `M` (one third of the incident face areas per vertex).
#[derive(Debug, Clone)]
pub struct Laplacian {
    pub stiffness: Csr,
    pub mass: Vec<f64>,
}

/// Cotangent of the angle at `a` in triangle `(a, b, c)`.
fn cot_at(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let (u, v) = (sub(b, a), sub(c, a));
    dot3(u, v) / norm3(cross(u, v))
}

pub fn build_laplacian(mesh: &TriMesh) -> Result<Laplacian> {
    let n = mesh.n_vertices();
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut mass = vec![0.0; n];
    for (f, tri) in mesh.faces.iter().enumerate() {
        let p = mesh.corners(f);
        for k in 0..3 {
            // The angle at corner k weights the opposite edge (i, j).
            let (i, j) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let w = 0.5 * cot_at(p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            *rows[i].entry(j).or_default() -= w;
            *rows[j].entry(i).or_default() -= w;
            *rows[i].entry(i).or_default() += w;
            *rows[j].entry(j).or_default() += w;
            mass[tri[k]] += mesh.areas[f] / 3.0;
        }
    }
    Ok(Laplacian {
        stiffness: Csr::from_rows(rows),
        mass,
    })
}
