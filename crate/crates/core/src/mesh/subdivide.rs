use std::collections::HashMap;
use std::f64::consts::PI;

use super::trimesh::{add, dot3, norm3, scale, sub, TriMesh, Vec3};
use crate::error::Result;

/// One round of Loop subdivision (4× the faces).
///
/// Boundary edges use the cubic B-spline boundary masks; boundary vertices
/// where the boundary turns by more than a degree are kept fixed so the
/// outline of open meshes keeps its corners.
pub fn loop_subdivide(mesh: &TriMesh) -> Result<TriMesh> {
    let nv = mesh.n_vertices();
    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (f, tri) in mesh.faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(f);
        }
    }
    let opposite = |f: usize, a: usize, b: usize| -> usize {
        *mesh.faces[f].iter().find(|&&v| v != a && v != b).expect("triangle has a third vertex")
    };

    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut boundary_nbrs: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (&(a, b), fs) in &edge_faces {
        neighbors[a].push(b);
        neighbors[b].push(a);
        if fs.len() == 1 {
            boundary_nbrs[a].push(b);
            boundary_nbrs[b].push(a);
        }
    }

    let v = &mesh.vertices;
    let mut out: Vec<Vec3> = Vec::with_capacity(nv + edge_faces.len());
    for i in 0..nv {
        let p = if boundary_nbrs[i].len() == 2 {
            let (a, b) = (v[boundary_nbrs[i][0]], v[boundary_nbrs[i][1]]);
            let (da, db) = (sub(a, v[i]), sub(b, v[i]));
            let cos = dot3(da, db) / (norm3(da) * norm3(db));
            if cos > -(1.0f64.to_radians().cos()) {
                v[i]
            } else {
                add(scale(v[i], 0.75), scale(add(a, b), 0.125))
            }
        } else if !boundary_nbrs[i].is_empty() {
            v[i]
        } else {
            let n = neighbors[i].len() as f64;
            let c = 0.375 + 0.25 * (2.0 * PI / n).cos();
            let beta = (0.625 - c * c) / n;
            let mut s = scale(v[i], 1.0 - n * beta);
            for &j in &neighbors[i] {
                s = add(s, scale(v[j], beta));
            }
            s
        };
        out.push(p);
    }

    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::new();
    let mut keys: Vec<&(usize, usize)> = edge_faces.keys().collect();
    keys.sort();
    for &(a, b) in keys {
        let fs = &edge_faces[&(a, b)];
        let p = if fs.len() == 2 {
            let (c, d) = (opposite(fs[0], a, b), opposite(fs[1], a, b));
            add(scale(add(v[a], v[b]), 0.375), scale(add(v[c], v[d]), 0.125))
        } else {
            scale(add(v[a], v[b]), 0.5)
        };
        edge_vertex.insert((a, b), out.len());
        out.push(p);
    }

    let mid = |a: usize, b: usize| edge_vertex[&(a.min(b), a.max(b))];
    let mut faces = Vec::with_capacity(4 * mesh.n_faces());
    for tri in &mesh.faces {
        let [a, b, c] = *tri;
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        faces.push([a, ab, ca]);
        faces.push([ab, b, bc]);
        faces.push([ca, bc, c]);
        faces.push([ab, bc, ca]);
    }
    TriMesh::new(out, faces)
}
